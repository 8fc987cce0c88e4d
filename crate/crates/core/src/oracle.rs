//! Brute-force reference solver for tiny instances.
//!
//! Enumerates repair orders and NBS energization steps, solves the LP that
//! remains once those are fixed, and keeps the cheapest. The search shares
//! only the LP engine with the MILP path.
//!
//! Two reductions keep the enumeration small without losing the optimum:
//!
//! * Only *compact* repair schedules are visited: steps are filled to the
//!   budget in order until every damaged line is repaired. Putting a line in
//!   service earlier never shrinks the feasible set (its flow may stay at
//!   zero), and every schedule is dominated step by step by the compact
//!   schedule that repairs lines in the same order.
//! * With repairs and energization steps fixed, the steps decouple, so each
//!   distinct `(step, lines in service, NBS states)` LP is solved once.
//!
//! An NBS unit energized at step `e` draws its cranking power at every
//! step up to and including `e`, must import exactly that power at `e`, and
//! is dispatchable within `[p_min, p_max]` from `e + 1` on. Before `e` its
//! bus imports nothing.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::grid::{cranking_power, validate, BusId, DamageScenario, GenId, GenKind, GridCase, LineId, ValidationReport};
use crate::model::{self, decode, RestorationPlan};
use crate::solver::{solve_lp, solve_milp, MilpLimits, Problem, Sense, Status, VarKind};

/// Tolerance for the energization-ratio check on LP solutions.
const BETA_TOL: f64 = 1e-6;

/// Largest instance the oracle accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeGuard {
    pub max_damaged_lines: usize,
    pub max_steps: u32,
    pub max_nbs: usize,
}

impl Default for SizeGuard {
    fn default() -> Self {
        SizeGuard { max_damaged_lines: 6, max_steps: 4, max_nbs: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {what} is {value}, limit {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },
    #[error("inputs are not admissible: {0}")]
    Invalid(ValidationReport),
    #[error("no schedule is feasible")]
    NoSchedule,
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error("MILP solve ended with {0}")]
    Milp(Status),
}

/// A fixed choice of all binary decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleAtom {
    /// `repairs[t - 1]` lists the lines repaired at step `t`.
    pub repairs: Vec<Vec<LineId>>,
    pub energization: Vec<(GenId, Option<u32>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub atom: ScheduleAtom,
    /// Unserved load per step under `atom`.
    pub trajectory: Vec<f64>,
    /// Atoms whose LPs were all feasible and consistent.
    pub admissible_atoms: usize,
    pub atoms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum NbsState {
    Waiting,
    Energizing,
    Online,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct StepKey {
    step: u32,
    /// One flag per damaged line, in scenario order.
    in_service: Vec<bool>,
    nbs: Vec<NbsState>,
}

struct Unit {
    gen: GenId,
    bus: BusId,
    crank: f64,
    p_min: f64,
    p_max: f64,
}

struct Instance<'a> {
    case: &'a GridCase,
    scenario: &'a DamageScenario,
    damaged: Vec<LineId>,
    units: Vec<Unit>,
}

impl Instance<'_> {
    /// Minimum unserved load of one step, or `None` if the step LP is
    /// infeasible or its solution contradicts the declared NBS states.
    fn step_cost(&self, key: &StepKey) -> Option<f64> {
        let case = self.case;
        let mut p = Problem::new();
        let crank_at = |bus: BusId| self.units.iter().find(|u| u.bus == bus).map_or(0.0, |u| u.crank);
        let ls: Vec<usize> = case
            .buses
            .iter()
            .map(|b| {
                let cap = self.scenario.demand(case, b.id, key.step) + crank_at(b.id);
                p.add_column(format!("ls{}", b.id.0), 0.0, cap, 1.0, VarKind::Continuous)
            })
            .collect();
        let flow: Vec<usize> = case
            .lines
            .iter()
            .map(|l| {
                let open = self
                    .damaged
                    .iter()
                    .position(|&d| d == l.id)
                    .is_some_and(|i| !key.in_service[i]);
                let (lo, hi) = if open { (0.0, 0.0) } else { (l.f_min, l.f_max) };
                p.add_column(format!("f{}", l.id.0), lo, hi, 0.0, VarKind::Continuous)
            })
            .collect();
        let gen: Vec<usize> = case
            .generators
            .iter()
            .map(|g| {
                let (lo, hi) = match g.kind {
                    GenKind::BS => (g.p_min, g.p_max),
                    GenKind::NBS => {
                        let i = self.units.iter().position(|u| u.gen == g.id).expect("unit");
                        let u = &self.units[i];
                        match key.nbs[i] {
                            NbsState::Online => (u.p_min, u.p_max),
                            _ => (-u.crank, -u.crank),
                        }
                    }
                };
                p.add_column(format!("p{}", g.id.0), lo, hi, 0.0, VarKind::Continuous)
            })
            .collect();

        let inflow = |bus: BusId| -> Vec<(usize, f64)> {
            case.lines
                .iter()
                .zip(&flow)
                .filter_map(|(l, &f)| {
                    if l.to_bus == bus {
                        Some((f, 1.0))
                    } else if l.from_bus == bus {
                        Some((f, -1.0))
                    } else {
                        None
                    }
                })
                .collect()
        };
        for (b, &ls_col) in case.buses.iter().zip(&ls) {
            let mut coeffs = vec![(ls_col, 1.0)];
            for (g, &col) in case.generators.iter().zip(&gen) {
                if g.bus == b.id {
                    coeffs.push((col, 1.0));
                }
            }
            coeffs.extend(inflow(b.id));
            p.add_row(format!("bal{}", b.id.0), coeffs, Sense::Eq, self.scenario.demand(case, b.id, key.step));
        }
        for (u, state) in self.units.iter().zip(&key.nbs) {
            let (sense, rhs) = match state {
                NbsState::Waiting => (Sense::Le, 0.0),
                NbsState::Energizing => (Sense::Eq, u.crank),
                NbsState::Online => (Sense::Le, u.crank),
            };
            p.add_row(format!("in{}", u.bus.0), inflow(u.bus), sense, rhs);
        }

        let sol = solve_lp(&p);
        if sol.status != Status::Optimal {
            return None;
        }
        // The declared state must match the energization ratio the LP found.
        for (u, state) in self.units.iter().zip(&key.nbs) {
            let net: f64 = inflow(u.bus).iter().map(|&(j, s)| s * sol.values[j]).sum();
            let beta = net / u.crank;
            let consistent = match state {
                NbsState::Waiting => beta <= BETA_TOL,
                NbsState::Energizing => (beta - 1.0).abs() <= BETA_TOL,
                NbsState::Online => beta <= 1.0 + BETA_TOL,
            };
            if !consistent {
                return None;
            }
        }
        Some(sol.objective)
    }
}

/// Compact repair schedules: `result[k][i]` is the repair step of damaged
/// line `i` (0 for never).
fn compact_schedules(lines: usize, budget: usize, horizon: u32) -> Vec<Vec<u32>> {
    fn recurse(step: u32, horizon: u32, budget: usize, left: &[usize], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left.is_empty() || step > horizon {
            out.push(cur.clone());
            return;
        }
        let k = budget.min(left.len());
        for pick in combinations(left.len(), k) {
            let mut rest = Vec::with_capacity(left.len() - k);
            for (pos, &line) in left.iter().enumerate() {
                if pick.contains(&pos) {
                    cur[line] = step;
                } else {
                    rest.push(line);
                }
            }
            recurse(step + 1, horizon, budget, &rest, cur, out);
            for &pos in &pick {
                cur[left[pos]] = 0;
            }
        }
    }
    let mut out = Vec::new();
    let all: Vec<usize> = (0..lines).collect();
    recurse(1, horizon, budget.max(1), &all, &mut vec![0; lines], &mut out);
    out
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else { return out };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn nbs_state(energized: u32, step: u32) -> NbsState {
    match energized {
        0 => NbsState::Waiting,
        e if step < e => NbsState::Waiting,
        e if step == e => NbsState::Energizing,
        _ => NbsState::Online,
    }
}

fn check_guard(case: &GridCase, scenario: &DamageScenario, guard: &SizeGuard) -> Result<(), OracleError> {
    let checks = [
        ("damaged line count", scenario.damaged_line_ids.len(), guard.max_damaged_lines),
        ("horizon", scenario.horizon as usize, guard.max_steps as usize),
        ("NBS unit count", case.nbs_units().count(), guard.max_nbs),
    ];
    for (what, value, limit) in checks {
        if value > limit {
            return Err(OracleError::TooLarge { what, value, limit });
        }
    }
    Ok(())
}

/// Exact optimum by enumeration.
pub fn enumerate_optimal(
    case: &GridCase,
    scenario: &DamageScenario,
    guard: &SizeGuard,
) -> Result<OracleResult, OracleError> {
    check_guard(case, scenario, guard)?;
    let report = validate(case, scenario);
    if !report.is_empty() {
        return Err(OracleError::Invalid(report));
    }
    let inst = Instance {
        case,
        scenario,
        damaged: case.lines.iter().map(|l| l.id).filter(|&id| scenario.is_damaged(id)).collect(),
        units: case
            .nbs_units()
            .map(|g| Unit {
                gen: g.id,
                bus: g.bus,
                crank: cranking_power(g).expect("NBS unit"),
                p_min: g.p_min,
                p_max: g.p_max,
            })
            .collect(),
    };
    let horizon = scenario.horizon;

    let repairs = compact_schedules(inst.damaged.len(), scenario.budget as usize, horizon);
    // Energization step per unit, 0 meaning never.
    let mut energizations: Vec<Vec<u32>> = vec![vec![]];
    for _ in &inst.units {
        energizations = energizations
            .into_iter()
            .flat_map(|prefix| {
                (0..=horizon).map(move |e| {
                    let mut v = prefix.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }

    let key = |repair: &[u32], energy: &[u32], step: u32| StepKey {
        step,
        in_service: repair.iter().map(|&r| r != 0 && r <= step).collect(),
        nbs: energy.iter().map(|&e| nbs_state(e, step)).collect(),
    };
    let mut keys = BTreeSet::new();
    for r in &repairs {
        for e in &energizations {
            for t in 1..=horizon {
                keys.insert(key(r, e, t));
            }
        }
    }
    let keys: Vec<StepKey> = keys.into_iter().collect();
    let costs: HashMap<&StepKey, Option<f64>> =
        keys.par_iter().map(|k| (k, inst.step_cost(k))).collect::<Vec<_>>().into_iter().collect();

    let atoms = repairs.len() * energizations.len();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut admissible = 0;
    for (ri, r) in repairs.iter().enumerate() {
        for (ei, e) in energizations.iter().enumerate() {
            let traj: Option<Vec<f64>> = (1..=horizon).map(|t| costs[&key(r, e, t)]).collect();
            let Some(traj) = traj else { continue };
            admissible += 1;
            let total: f64 = traj.iter().sum();
            let index = ri * energizations.len() + ei;
            if best.as_ref().map_or(true, |(b, _, _)| total < *b) {
                best = Some((total, index, traj));
            }
        }
    }
    let (objective, index, trajectory) = best.ok_or(OracleError::NoSchedule)?;
    let (r, e) = (&repairs[index / energizations.len()], &energizations[index % energizations.len()]);
    let atom = ScheduleAtom {
        repairs: (1..=horizon)
            .map(|t| inst.damaged.iter().zip(r).filter(|&(_, &s)| s == t).map(|(&l, _)| l).collect())
            .collect(),
        energization: inst.units.iter().zip(e).map(|(u, &s)| (u.gen, (s > 0).then_some(s))).collect(),
    };
    Ok(OracleResult { objective, atom, trajectory, admissible_atoms: admissible, atoms })
}

/// Outcome of comparing the MILP optimum against enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct CertResult {
    pub certified: bool,
    pub milp_objective: f64,
    pub oracle_objective: f64,
    pub tolerance: f64,
    pub plan: RestorationPlan,
    pub oracle: OracleResult,
}

impl CertResult {
    /// Both schedules side by side, for diagnosing a mismatch.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "MILP objective {}  oracle objective {}  tolerance {:.3e}\n",
            self.milp_objective, self.oracle_objective, self.tolerance
        );
        for s in &self.plan.steps {
            let milp: Vec<String> = s.lines_repaired.iter().map(|l| l.to_string()).collect();
            let oracle: Vec<String> =
                self.oracle.atom.repairs[s.step as usize - 1].iter().map(|l| l.to_string()).collect();
            out.push_str(&format!(
                "step {}: MILP repairs [{}] unserved {}; oracle repairs [{}] unserved {}\n",
                s.step,
                milp.join(" "),
                s.total_unserved,
                oracle.join(" "),
                self.oracle.trajectory[s.step as usize - 1]
            ));
        }
        for n in &self.plan.nbs {
            let o = self.oracle.atom.energization.iter().find(|(g, _)| *g == n.gen).and_then(|(_, s)| *s);
            out.push_str(&format!("{}: MILP energizes at {:?}, oracle at {:?}\n", n.gen, n.energized_step, o));
        }
        out
    }
}

/// Solve with the MILP and by enumeration and compare the optima.
pub fn cross_check(
    case: &GridCase,
    scenario: &DamageScenario,
    guard: &SizeGuard,
    limits: &MilpLimits,
) -> Result<CertResult, OracleError> {
    check_guard(case, scenario, guard)?;
    let instance = model::build(case, scenario)?;
    let solution = solve_milp(&instance.problem, limits);
    if !solution.has_point() {
        return Err(OracleError::Milp(solution.status));
    }
    let plan = decode(&instance, case, scenario, &solution).map_err(|_| OracleError::Milp(solution.status))?;
    let oracle = enumerate_optimal(case, scenario, guard)?;
    let tolerance = 1e-6 * (1.0 + oracle.objective.abs());
    Ok(CertResult {
        certified: (solution.objective - oracle.objective).abs() <= tolerance,
        milp_objective: solution.objective,
        oracle_objective: oracle.objective,
        tolerance,
        plan,
        oracle,
    })
}
