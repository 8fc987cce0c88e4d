//! End-to-end restoration solve: build, optimize, decode.

use std::collections::BTreeSet;

use crate::grid::{BusId, DamageScenario, DemandOverride, GenKind, GridCase, LineId};
use crate::model::{self, build_with, complete_repairs, decode, BuildOptions, MilpInstance, RestorationPlan, VarRef};
use crate::solver::{solve_milp, solve_milp_from, MilpLimits, Solution, Status, FEASIBILITY_TOL};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub limits: MilpLimits,
    pub build: BuildOptions,
    /// Seed branch-and-bound with the schedule from [`stepwise_schedule`].
    pub stepwise_start: bool,
    /// Node limit for each single-step problem of the stepwise schedule.
    pub step_nodes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            limits: MilpLimits::default(),
            build: BuildOptions::default(),
            stepwise_start: true,
            step_nodes: 50_000,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RestoreError {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error("no schedule found: solver ended with {0}")]
    NoSchedule(Status),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub plan: RestorationPlan,
    pub solution: Solution,
    pub instance: MilpInstance,
    /// Repairs of lines the optimizer had no use for, added at the earliest
    /// step with spare budget.
    pub idle_repairs: usize,
}

pub fn solve(case: &GridCase, scenario: &DamageScenario, options: &SolveOptions) -> Result<Outcome, RestoreError> {
    let instance = build_with(case, scenario, &options.build)?;
    let start = if options.stepwise_start {
        stepwise_schedule(case, scenario, &options.build, options.step_nodes)
            .map(|s| s.binaries(&instance))
    } else {
        None
    };
    let mut solution = solve_milp_from(&instance.problem, &options.limits, start.as_deref());
    if !solution.has_point() {
        return Err(RestoreError::NoSchedule(solution.status));
    }
    let idle_repairs = complete_repairs(&instance, &mut solution.values, scenario.budget, FEASIBILITY_TOL * 100.0);
    let plan = decode(&instance, case, scenario, &solution).expect("solution has a point of the right size");
    Ok(Outcome { plan, solution, instance, idle_repairs })
}

/// Repair step of each damaged line and energization step of each NBS unit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Schedule {
    pub repairs: Vec<(LineId, u32)>,
    pub energized: Vec<(BusId, u32)>,
}

impl Schedule {
    /// Binary part of a solution vector for `instance` realizing this schedule;
    /// continuous entries are zero.
    pub fn binaries(&self, instance: &MilpInstance) -> Vec<f64> {
        let mut x = vec![0.0; instance.problem.num_columns()];
        let mut set = |var: VarRef| {
            if let Some(j) = instance.column(var) {
                x[j] = 1.0;
            }
        };
        for &(line, step) in &self.repairs {
            set(VarRef::LineRepair { line, step });
        }
        for unit in &instance.nbs {
            let e = self.energized.iter().find(|(b, _)| *b == unit.bus).map(|&(_, e)| e);
            for step in 1..=instance.horizon {
                match e {
                    Some(e) if e <= step => {
                        set(VarRef::Mu { bus: unit.bus, step });
                        set(VarRef::Eps { bus: unit.bus, step, candidate: e });
                    }
                    _ => set(VarRef::Eps { bus: unit.bus, step, candidate: 0 }),
                }
            }
        }
        x
    }
}

/// Build a schedule one step at a time. Each step is a one-step restoration
/// problem in which earlier repairs are intact and units energized earlier
/// act as black-start units. Energizing a unit earns a reward for the load
/// it could serve over the remaining steps, so the single-step problems do
/// not postpone start-up indefinitely. Returns `None` if a step problem has
/// no solution within `step_nodes`.
pub fn stepwise_schedule(
    case: &GridCase,
    scenario: &DamageScenario,
    build: &BuildOptions,
    step_nodes: usize,
) -> Option<Schedule> {
    let horizon = scenario.horizon;
    let mut damaged: BTreeSet<LineId> = scenario.damaged_line_ids.iter().copied().collect();
    let mut schedule = Schedule::default();
    let mut sub_case = case.clone();
    let limits = MilpLimits { gap: 1e-4, max_nodes: step_nodes, time_limit: None };

    for step in 1..=horizon {
        let sub_scenario = DamageScenario {
            damaged_line_ids: damaged.iter().copied().collect(),
            budget: scenario.budget,
            horizon: 1,
            demand_profile: scenario
                .demand_profile
                .iter()
                .filter(|o| o.step == step)
                .map(|o| DemandOverride { step: 1, ..o.clone() })
                .collect(),
        };
        let mut instance = build_with(&sub_case, &sub_scenario, build).ok()?;

        let demand: f64 = case.buses.iter().map(|b| scenario.demand(case, b.id, step)).sum();
        let online: f64 = sub_case.generators.iter().filter(|g| g.kind == GenKind::BS).map(|g| g.p_max).sum();
        let shortfall = (demand - online).max(0.0);
        let remaining = f64::from(horizon - step);
        for unit in &instance.nbs {
            if let Some(j) = instance.column(VarRef::Mu { bus: unit.bus, step: 1 }) {
                instance.problem.columns[j].cost = -remaining * unit.p_max.min(shortfall);
            }
        }

        let sol = solve_milp(&instance.problem, &limits);
        if !sol.has_point() {
            return None;
        }
        for line in sub_scenario.damaged_line_ids {
            if instance.value(&sol.values, VarRef::LineRepair { line, step: 1 }).is_some_and(|v| v > 0.5) {
                schedule.repairs.push((line, step));
                damaged.remove(&line);
            }
        }
        for unit in &instance.nbs {
            if instance.value(&sol.values, VarRef::Mu { bus: unit.bus, step: 1 }).is_some_and(|v| v > 0.5) {
                schedule.energized.push((unit.bus, step));
                if let Some(g) = sub_case.generators.iter_mut().find(|g| g.id == unit.gen) {
                    g.kind = GenKind::BS;
                }
            }
        }
    }
    Some(schedule)
}
