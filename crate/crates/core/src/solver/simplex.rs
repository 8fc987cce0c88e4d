//! Bounded-variable revised primal simplex.
//!
//! Every row `i` gets a logical column `s_i` so that the constraint system is
//! `A x - s = 0` with bounds on both `x` and `s`. The all-logical basis is
//! always a valid (possibly infeasible) starting point; infeasibility is driven
//! out by a composite phase 1 that minimizes the sum of bound violations of
//! the basic variables. Degenerate stalls switch pricing and the ratio test to
//! Bland's smallest-index rule until progress resumes.

use super::lu::{BasisFactor, LuFactor};
use super::problem::{Problem, Sense};

pub(crate) const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const STALL_BEFORE_BLAND: usize = 50;
const REFACTOR_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable parked at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

/// Saved basis, used to warm start branch-and-bound nodes.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    basis: Vec<usize>,
    state: Vec<VarState>,
}

/// Working state of the simplex method: standard-form matrix, basis, bound
/// state of every column, and the current primal point.
#[derive(Debug, Clone)]
pub(crate) struct LpTableau {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    slot_of: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    factor: BasisFactor,
    /// Whether `factor` describes the current basis.
    factored: bool,
    pub iterations: usize,
    iteration_limit: usize,
    // scratch
    y: Vec<f64>,
    alpha: Vec<f64>,
}

impl LpTableau {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.num_columns();
        let m = problem.num_rows();
        let mut cols = vec![Vec::new(); n];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    cols[j].push((i, a));
                }
            }
        }
        let mut cost = Vec::with_capacity(n + m);
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for c in &problem.columns {
            cost.push(c.cost);
            lower.push(c.lower);
            upper.push(c.upper);
        }
        for row in &problem.rows {
            cost.push(0.0);
            let (l, u) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            lower.push(l);
            upper.push(u);
        }
        let mut tab = LpTableau {
            n,
            m,
            cols,
            cost,
            lower,
            upper,
            basis: (n..n + m).collect(),
            slot_of: vec![usize::MAX; n + m],
            state: vec![VarState::Lower; n + m],
            x: vec![0.0; n + m],
            factor: BasisFactor::default(),
            factored: false,
            iterations: 0,
            iteration_limit: 50 * (n + m) + 10_000,
            y: vec![0.0; m],
            alpha: vec![0.0; m],
        };
        for j in 0..n {
            tab.state[j] = tab.resting_state(j);
        }
        for (p, &v) in tab.basis.iter().enumerate() {
            tab.slot_of[v] = p;
            tab.state[v] = VarState::Basic;
        }
        tab
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    /// Change the bounds of structural column `j`; the basis is kept.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
        if self.state[j] != VarState::Basic {
            self.state[j] = self.resting_state(j);
        }
    }

    pub fn snapshot(&self) -> Basis {
        Basis { basis: self.basis.clone(), state: self.state.clone() }
    }

    pub fn restore(&mut self, saved: &Basis) {
        if self.basis != saved.basis {
            self.factored = false;
        }
        self.basis.clone_from(&saved.basis);
        self.state.clone_from(&saved.state);
        for j in 0..self.n + self.m {
            if self.state[j] != VarState::Basic {
                self.state[j] = self.nonbasic_state_for(j, self.state[j]);
            }
        }
    }

    fn resting_state(&self, j: usize) -> VarState {
        if self.lower[j].is_finite() {
            VarState::Lower
        } else if self.upper[j].is_finite() {
            VarState::Upper
        } else {
            VarState::Free
        }
    }

    /// Keep a preferred nonbasic side if that bound still exists.
    fn nonbasic_state_for(&self, j: usize, preferred: VarState) -> VarState {
        match preferred {
            VarState::Upper if self.upper[j].is_finite() => VarState::Upper,
            VarState::Lower if self.lower[j].is_finite() => VarState::Lower,
            _ => self.resting_state(j),
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Lower => self.lower[j],
            VarState::Upper => self.upper[j],
            VarState::Free => 0.0,
            VarState::Basic => self.x[j],
        }
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.fill(0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * y[i]).sum()
        } else {
            -y[j - self.n]
        }
    }

    fn basis_columns(&self) -> Vec<Vec<(usize, f64)>> {
        self.basis
            .iter()
            .map(|&v| {
                if v < self.n {
                    self.cols[v].clone()
                } else {
                    vec![(v - self.n, -1.0)]
                }
            })
            .collect()
    }

    /// Factor the current basis, swapping in logicals for dependent columns.
    fn refactor(&mut self) {
        loop {
            match LuFactor::factor(self.m, &self.basis_columns()) {
                Ok(lu) => {
                    self.factor = BasisFactor::new(lu);
                    self.factored = true;
                    break;
                }
                Err(singular) => {
                    for (&slot, &row) in singular.slots.iter().zip(&singular.rows) {
                        let out = self.basis[slot];
                        self.state[out] = self.resting_state(out);
                        let logical = self.n + row;
                        self.basis[slot] = logical;
                        self.state[logical] = VarState::Basic;
                    }
                }
            }
        }
        self.slot_of.fill(usize::MAX);
        for (p, &v) in self.basis.iter().enumerate() {
            self.slot_of[v] = p;
        }
        self.compute_primal();
    }

    fn compute_primal(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let v = self.nonbasic_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        self.factor.ftran(&mut rhs);
        for (p, &v) in self.basis.iter().enumerate() {
            self.x[v] = rhs[p];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lower[j] - PRIMAL_TOL {
            self.lower[j] - v
        } else if v > self.upper[j] + PRIMAL_TOL {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    /// Run the simplex method from the current basis.
    pub fn solve(&mut self) -> LpOutcome {
        if self.factored {
            self.compute_primal();
        } else {
            self.refactor();
        }
        let start = self.iterations;
        let mut stalled = 0usize;
        let mut bland = false;
        let mut recoveries = 0;
        let mut d = vec![0.0; self.n + self.m];
        loop {
            if self.iterations - start > self.iteration_limit {
                return LpOutcome::NumericalFailure;
            }
            if self.factor.num_updates() >= REFACTOR_EVERY
                || self.factor.eta_nnz() > 4 * self.factor.lu_nnz() + 10 * self.m
            {
                self.refactor();
            }

            // Phase costs on the basic variables.
            let phase_one = self.basis.iter().any(|&v| self.infeasibility(v) > 0.0);
            let mut cb = vec![0.0; self.m];
            for (p, &v) in self.basis.iter().enumerate() {
                cb[p] = if phase_one {
                    if self.x[v] < self.lower[v] - PRIMAL_TOL {
                        -1.0
                    } else if self.x[v] > self.upper[v] + PRIMAL_TOL {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.cost[v]
                };
            }
            self.factor.btran(&mut cb);
            self.y.copy_from_slice(&cb);

            // Pricing.
            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.n + self.m {
                if self.state[j] == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { self.cost[j] };
                let dj = c - self.dot_column(j, &self.y);
                d[j] = dj;
                let dir = match self.state[j] {
                    VarState::Lower if dj < -DUAL_TOL => 1.0,
                    VarState::Upper if dj > DUAL_TOL => -1.0,
                    VarState::Free if dj.abs() > DUAL_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some((j, dir));
                }
            }

            let Some((q, dir)) = entering else {
                if phase_one {
                    return LpOutcome::Infeasible;
                }
                // Confirm optimality on a fresh factorization.
                if self.factor.num_updates() > 0 {
                    self.refactor();
                }
                if self.basis.iter().any(|&v| self.infeasibility(v) > 0.0) && recoveries < 3 {
                    recoveries += 1;
                    continue;
                }
                return LpOutcome::Optimal;
            };

            let mut alpha = std::mem::take(&mut self.alpha);
            self.column(q, &mut alpha);
            self.factor.ftran(&mut alpha);

            let step = self.ratio_test(q, dir, &alpha, phase_one, bland);
            self.iterations += 1;
            let outcome = match step {
                Step::Unbounded => {
                    self.alpha = alpha;
                    if phase_one {
                        // Phase-one objective is bounded below; this is numerical trouble.
                        if recoveries < 3 {
                            recoveries += 1;
                            self.refactor();
                            continue;
                        }
                        return LpOutcome::NumericalFailure;
                    }
                    return LpOutcome::Unbounded;
                }
                Step::Flip(theta) => {
                    self.advance(q, dir, theta, &alpha);
                    self.state[q] = if dir > 0.0 { VarState::Upper } else { VarState::Lower };
                    self.x[q] = self.nonbasic_value(q);
                    theta
                }
                Step::Pivot { slot, theta, to_upper } => {
                    self.advance(q, dir, theta, &alpha);
                    let out = self.basis[slot];
                    self.state[out] = if to_upper { VarState::Upper } else { VarState::Lower };
                    if !self.lower[out].is_finite() && !self.upper[out].is_finite() {
                        self.state[out] = VarState::Free;
                    }
                    self.x[out] = self.nonbasic_value(out);
                    self.slot_of[out] = usize::MAX;
                    self.basis[slot] = q;
                    self.slot_of[q] = slot;
                    self.state[q] = VarState::Basic;
                    self.factor.update(slot, &alpha);
                    theta
                }
            };
            self.alpha = alpha;

            if outcome <= DEGENERATE_STEP {
                stalled += 1;
                if stalled > STALL_BEFORE_BLAND {
                    bland = true;
                }
            } else {
                stalled = 0;
                bland = false;
            }
        }
    }

    fn advance(&mut self, q: usize, dir: f64, theta: f64, alpha: &[f64]) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for (p, &v) in self.basis.iter().enumerate() {
            if alpha[p] != 0.0 {
                self.x[v] -= dir * theta * alpha[p];
            }
        }
    }

    fn ratio_test(&self, q: usize, dir: f64, alpha: &[f64], phase_one: bool, bland: bool) -> Step {
        let range = self.upper[q] - self.lower[q];
        // Pass 1: largest step with bounds relaxed by the tolerance.
        let mut relaxed = f64::INFINITY;
        for (p, &v) in self.basis.iter().enumerate() {
            let a = alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            if let Some((limit, _)) = self.limit(v, rate, phase_one, PRIMAL_TOL) {
                relaxed = relaxed.min(limit);
            }
        }
        if range.is_finite() && range <= relaxed {
            return Step::Flip(range);
        }
        if relaxed == f64::INFINITY {
            return Step::Unbounded;
        }
        // Pass 2: among the blocking candidates pick the most stable pivot.
        let mut chosen: Option<(usize, f64, bool, f64)> = None; // slot, theta, to_upper, |alpha|
        for (p, &v) in self.basis.iter().enumerate() {
            let a = alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let rate = -dir * a;
            let Some((limit, to_upper)) = self.limit(v, rate, phase_one, 0.0) else {
                continue;
            };
            if limit > relaxed {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((cp, ct, _, ca)) => {
                    if bland {
                        limit < ct - DEGENERATE_STEP
                            || (limit <= ct + DEGENERATE_STEP && v < self.basis[cp])
                    } else {
                        a.abs() > ca || (a.abs() == ca && v < self.basis[cp])
                    }
                }
            };
            if better {
                chosen = Some((p, limit, to_upper, a.abs()));
            }
        }
        match chosen {
            Some((slot, theta, to_upper, _)) => {
                Step::Pivot { slot, theta: theta.max(0.0), to_upper }
            }
            None => Step::Unbounded,
        }
    }

    /// Step length at which basic variable `v`, moving at `rate`, hits the
    /// bound it leaves at. Returns the bound side as well.
    fn limit(&self, v: usize, rate: f64, phase_one: bool, tol: f64) -> Option<(f64, bool)> {
        let x = self.x[v];
        let (l, u) = (self.lower[v], self.upper[v]);
        if phase_one && x < l - PRIMAL_TOL {
            // Below its lower bound: may rise until it becomes feasible.
            return (rate > 0.0).then(|| ((l - x) / rate, false));
        }
        if phase_one && x > u + PRIMAL_TOL {
            return (rate < 0.0).then(|| ((x - u) / -rate, true));
        }
        if rate > 0.0 {
            u.is_finite().then(|| (((u + tol - x) / rate).max(0.0), true))
        } else {
            l.is_finite().then(|| (((x - (l - tol)) / -rate).max(0.0), false))
        }
    }

    /// Row duals of the current basis for the true objective.
    pub fn duals(&mut self) -> Vec<f64> {
        let mut cb: Vec<f64> = self.basis.iter().map(|&v| self.cost[v]).collect();
        self.factor.btran(&mut cb);
        cb
    }

    /// Lagrangian lower bound `sum_j min_{l_j <= z_j <= u_j} d_j z_j` taken
    /// with the duals of the current basis.
    pub fn dual_bound(&mut self) -> f64 {
        let y = self.duals();
        let mut bound = 0.0;
        for j in 0..self.n + self.m {
            let dj = self.cost[j] - self.dot_column(j, &y);
            let term = if dj.abs() <= DUAL_TOL {
                dj * self.x[j]
            } else if dj > 0.0 {
                dj * self.lower[j]
            } else {
                dj * self.upper[j]
            };
            bound += term;
        }
        bound
    }
}

enum Step {
    Unbounded,
    Flip(f64),
    Pivot { slot: usize, theta: f64, to_upper: bool },
}
