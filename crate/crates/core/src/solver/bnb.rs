use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{Basis, LpOutcome, LpTableau};
use super::{
    duality_residual, relative_gap, MilpLimits, Problem, Solution, Status, DEFAULT_GAP,
    INTEGRALITY_TOL,
};

/// Open subproblem: the binaries fixed on the path from the root, the LP
/// bound of its parent, and the parent's optimal basis for a warm start.
struct OpenNode {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
    basis: Rc<Basis>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // Max-heap order: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    problem: &'a Problem,
    tab: LpTableau,
    int_cols: Vec<usize>,
    gap: f64,
    incumbent: Option<(f64, Vec<f64>)>,
    /// Smallest bound among subtrees discarded by the cutoff test.
    pruned_bound: f64,
    residual: f64,
    nodes: usize,
    next_id: u64,
}

impl Search<'_> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((ub, _)) => ub - self.gap * ub.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn prune_by_bound(&mut self, bound: f64) -> bool {
        if bound >= self.cutoff() {
            self.pruned_bound = self.pruned_bound.min(bound);
            true
        } else {
            false
        }
    }

    fn apply_fixings(&mut self, fixings: &[(usize, f64)]) {
        for &j in &self.int_cols {
            let c = &self.problem.columns[j];
            self.tab.set_bounds(j, c.lower, c.upper);
        }
        for &(j, v) in fixings {
            self.tab.set_bounds(j, v, v);
        }
    }

    fn solve_node(&mut self) -> LpOutcome {
        self.nodes += 1;
        let outcome = self.tab.solve();
        if outcome == LpOutcome::Optimal {
            self.residual = self.residual.max(duality_residual(&mut self.tab));
        }
        outcome
    }

    /// Fractional binary with the smallest column index.
    fn branching_column(&self) -> Option<usize> {
        let x = self.tab.values();
        self.int_cols.iter().copied().find(|&j| {
            let frac = x[j] - x[j].floor();
            frac > INTEGRALITY_TOL && frac < 1.0 - INTEGRALITY_TOL
        })
    }

    /// Fix every binary at its rounded value and re-solve so the incumbent is
    /// feasible at LP tolerance with exact integers.
    fn polish(&mut self) {
        let rounded: Vec<(usize, f64)> =
            self.int_cols.iter().map(|&j| (j, self.tab.values()[j].round())).collect();
        self.polish_at(&rounded);
    }

    fn polish_at(&mut self, rounded: &[(usize, f64)]) {
        for &(j, v) in rounded {
            self.tab.set_bounds(j, v, v);
        }
        if self.tab.solve() != LpOutcome::Optimal {
            return;
        }
        self.residual = self.residual.max(duality_residual(&mut self.tab));
        let obj = self.tab.objective();
        if self.incumbent.as_ref().map_or(true, |(ub, _)| obj < *ub) {
            let mut values = self.tab.values().to_vec();
            for &(j, v) in rounded {
                values[j] = v;
            }
            self.incumbent = Some((obj, values));
        }
    }
}

/// Solve `problem` to optimality (within `limits.gap`) by branch-and-bound on
/// its binary columns.
pub fn solve_milp(problem: &Problem, limits: &MilpLimits) -> Solution {
    solve_milp_from(problem, limits, None)
}

/// Like [`solve_milp`], but first evaluates `start`: its binaries are rounded
/// and fixed, and if the remaining LP is feasible the result becomes the
/// first incumbent. Only the binary entries of `start` are read.
pub fn solve_milp_from(problem: &Problem, limits: &MilpLimits, initial: Option<&[f64]>) -> Solution {
    if let Err(e) = problem.validate() {
        debug_assert!(false, "invalid problem: {e}");
        return Solution::without_point(Status::NumericalFailure, 0, 0);
    }
    let start = Instant::now();
    let mut s = Search {
        problem,
        tab: LpTableau::new(problem),
        int_cols: problem.integer_columns().collect(),
        gap: limits.gap.max(0.0),
        incumbent: None,
        pruned_bound: f64::INFINITY,
        residual: 0.0,
        nodes: 0,
        next_id: 0,
    };

    let root = s.solve_node();
    match root {
        LpOutcome::Optimal => {}
        LpOutcome::Infeasible => {
            return Solution::without_point(Status::Infeasible, s.nodes, s.tab.iterations)
        }
        LpOutcome::Unbounded => {
            return Solution::without_point(Status::Unbounded, s.nodes, s.tab.iterations)
        }
        LpOutcome::NumericalFailure => {
            return Solution::without_point(Status::NumericalFailure, s.nodes, s.tab.iterations)
        }
    }

    if let Some(x) = initial.filter(|x| x.len() == problem.num_columns()) {
        let saved = s.tab.snapshot();
        let rounded: Vec<(usize, f64)> = s.int_cols.iter().map(|&j| (j, x[j].round().clamp(0.0, 1.0))).collect();
        s.polish_at(&rounded);
        s.apply_fixings(&[]);
        s.tab.restore(&saved);
        // Reload the root optimum.
        let _ = s.tab.solve();
    }
    let mut heap: BinaryHeap<OpenNode> = BinaryHeap::new();
    let mut stack: Vec<OpenNode> = Vec::new();
    let mut fixings: Vec<(usize, f64)> = Vec::new();
    let mut outcome = root;
    let mut node_bound = s.tab.objective();
    let mut stopped: Option<Status> = None;

    loop {
        // Process the node currently loaded in the tableau.
        let mut plunge = false;
        if outcome == LpOutcome::Optimal {
            let bound = s.tab.objective();
            if !s.prune_by_bound(bound) {
                match s.branching_column() {
                    None => s.polish(),
                    Some(j) => {
                        // Explore the up branch first; the other waits in the queue.
                        let (near, far) = (1.0, 0.0);
                        let mut other = fixings.clone();
                        other.push((j, far));
                        s.next_id += 1;
                        let node = OpenNode {
                            bound,
                            id: s.next_id,
                            fixings: other,
                            basis: Rc::new(s.tab.snapshot()),
                        };
                        if s.incumbent.is_none() {
                            stack.push(node);
                        } else {
                            heap.push(node);
                        }
                        fixings.push((j, near));
                        node_bound = bound;
                        s.tab.set_bounds(j, near, near);
                        plunge = true;
                    }
                }
            }
        }

        if !plunge {
            // Discard dominated nodes, then check termination.
            while heap.peek().is_some_and(|n| n.bound >= s.cutoff()) {
                let n = heap.pop().unwrap();
                s.pruned_bound = s.pruned_bound.min(n.bound);
            }
            // Until an incumbent exists, backtrack depth-first so dives reach leaves.
            let next = if s.incumbent.is_none() && !stack.is_empty() { stack.pop() } else { None };
            if s.incumbent.is_some() && !stack.is_empty() {
                heap.extend(stack.drain(..));
            }
            let Some(node) = next.or_else(|| heap.pop()) else { break };
            if let Some((ub, _)) = &s.incumbent {
                if relative_gap(*ub, node.bound) <= s.gap {
                    heap.push(node);
                    break;
                }
            }
            fixings = node.fixings;
            node_bound = node.bound;
            s.apply_fixings(&fixings);
            s.tab.restore(&node.basis);
        }

        let limit = if s.nodes >= limits.max_nodes {
            Some(Status::NodeLimit)
        } else if limits.time_limit.is_some_and(|t| start.elapsed() >= t) {
            Some(Status::TimeLimit)
        } else {
            None
        };
        if limit.is_some() {
            // Keep the unsolved node so the reported bound stays valid.
            stopped = limit;
            s.next_id += 1;
            heap.push(OpenNode {
                bound: node_bound,
                id: s.next_id,
                fixings,
                basis: Rc::new(s.tab.snapshot()),
            });
            break;
        }
        outcome = s.solve_node();
        // An unsolvable node is dropped, but its parent bound stays in the gap.
        if outcome == LpOutcome::NumericalFailure {
            s.pruned_bound = s.pruned_bound.min(node_bound);
        }
    }

    let Some((ub, values)) = s.incumbent.take() else {
        let status = stopped.unwrap_or(Status::Infeasible);
        let mut sol = Solution::without_point(status, s.nodes, s.tab.iterations);
        sol.max_duality_residual = s.residual;
        return sol;
    };
    let open_bound = heap.iter().chain(&stack).map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let bound = open_bound.min(s.pruned_bound).min(ub);
    let gap = relative_gap(ub, bound);
    let status = match stopped {
        Some(st) => st,
        None if gap > DEFAULT_GAP && gap <= s.gap => Status::GapLimit,
        None => Status::Optimal,
    };
    Solution {
        status,
        values,
        objective: ub,
        bound,
        gap,
        nodes: s.nodes,
        lp_iterations: s.tab.iterations,
        max_duality_residual: s.residual,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve_lp, Sense, VarKind};
    use super::*;

    fn knapsack() -> Problem {
        let mut p = Problem::new();
        let values = [60.0, 100.0, 120.0];
        let weights = [10.0, 20.0, 30.0];
        let cols: Vec<usize> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| p.add_column(format!("item{}", i + 1), 0.0, 1.0, -v, VarKind::Binary))
            .collect();
        p.add_row("cap", cols.iter().zip(weights).map(|(&c, w)| (c, w)).collect(), Sense::Le, 50.0);
        p
    }

    #[test]
    fn knapsack_matches_subset_enumeration() {
        let p = knapsack();
        // Oracle: all 8 subsets.
        let mut best = (0.0f64, 0u32);
        for mask in 0u32..8 {
            let x: Vec<f64> = (0..3).map(|i| f64::from((mask >> i) & 1)).collect();
            if p.max_violation(&x) <= 1e-9 {
                let obj = p.objective(&x);
                if obj < best.0 {
                    best = (obj, mask);
                }
            }
        }
        assert_eq!(best, (-220.0, 0b110));

        let s = solve_milp(&p, &MilpLimits::default());
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective - best.0).abs() < 1e-9);
        assert_eq!(s.values, vec![0.0, 1.0, 1.0]);
        assert!(s.gap <= 1e-6);
        assert!(s.max_duality_residual <= 1e-6);
    }

    #[test]
    fn all_binaries_fixed_reduces_to_lp() {
        let mut p = knapsack();
        for (j, v) in [(0, 1.0), (1, 0.0), (2, 1.0)] {
            p.columns[j].lower = v;
            p.columns[j].upper = v;
        }
        let milp = solve_milp(&p, &MilpLimits::default());
        let lp = solve_lp(&p);
        assert_eq!(milp.status, Status::Optimal);
        assert_eq!(milp.objective, lp.objective);
        assert_eq!(milp.values, lp.values);
        assert_eq!(milp.nodes, 1);
    }

    #[test]
    fn node_limit_keeps_incumbent_and_valid_bound() {
        let p = knapsack();
        let s = solve_milp(&p, &MilpLimits { max_nodes: 2, ..MilpLimits::default() });
        assert!(matches!(s.status, Status::NodeLimit | Status::Optimal | Status::Infeasible));
        if s.has_point() {
            assert!(s.bound <= -220.0 + 1e-9);
            assert!(s.objective >= -220.0 - 1e-9);
        }
    }

    #[test]
    fn start_point_becomes_first_incumbent() {
        let p = knapsack();
        // Items 1 and 2: feasible, value 160.
        let s = solve_milp_from(&p, &MilpLimits { max_nodes: 1, ..MilpLimits::default() }, Some(&[1.0, 1.0, 0.0]));
        assert_eq!(s.status, Status::NodeLimit);
        assert_eq!(s.objective, -160.0);
        // An infeasible start is ignored and the search still finds the optimum.
        let s = solve_milp_from(&p, &MilpLimits::default(), Some(&[1.0, 1.0, 1.0]));
        assert_eq!((s.status, s.objective), (Status::Optimal, -220.0));
        // A start of the wrong length is ignored.
        let s = solve_milp_from(&p, &MilpLimits::default(), Some(&[1.0]));
        assert_eq!(s.objective, -220.0);
    }

    #[test]
    fn infeasible_integer_program() {
        let mut p = Problem::new();
        let x = p.add_column("x", 0.0, 1.0, 1.0, VarKind::Binary);
        p.add_row("half", vec![(x, 2.0)], Sense::Eq, 1.0);
        assert_eq!(solve_milp(&p, &MilpLimits::default()).status, Status::Infeasible);
    }
}
