use serde::{Deserialize, Serialize};

use super::{MilpInstance, VarRef};
use crate::grid::{BusId, DamageScenario, GenId, GridCase, LineId};
use crate::solver::{Solution, Status};

/// Values closer to zero than this are written as exactly zero.
const ZERO_SNAP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("solver returned {0} without a usable point")]
    NoPoint(Status),
    #[error("solution has {got} values but the model has {expected} columns")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusValue {
    pub bus: BusId,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenValue {
    pub gen: GenId,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineValue {
    pub line: LineId,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    pub step: u32,
    /// Damaged lines whose repair completes at this step.
    pub lines_repaired: Vec<LineId>,
    /// NBS units that absorb their cranking power at this step.
    pub nbs_energized: Vec<GenId>,
    /// NBS units energized at or before this step.
    pub nbs_energized_total: usize,
    pub total_demand: f64,
    pub total_unserved: f64,
    pub unserved: Vec<BusValue>,
    pub dispatch: Vec<GenValue>,
    pub flows: Vec<LineValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbsSchedule {
    pub gen: GenId,
    pub bus: BusId,
    pub crank_mw: f64,
    pub energized_step: Option<u32>,
}

/// A restoration schedule decoded from a MILP solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestorationPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_name: Option<String>,
    pub status: Status,
    /// Total unserved energy over the horizon (MW-steps).
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub horizon: u32,
    pub budget: u32,
    pub nbs: Vec<NbsSchedule>,
    pub steps: Vec<StepPlan>,
}

impl RestorationPlan {
    /// Step at which `line` is repaired, if any.
    pub fn repair_step(&self, line: LineId) -> Option<u32> {
        self.steps.iter().find(|s| s.lines_repaired.contains(&line)).map(|s| s.step)
    }

    pub fn unserved_trajectory(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.total_unserved).collect()
    }
}

pub(crate) fn snap(v: f64) -> f64 {
    if v.abs() < ZERO_SNAP {
        0.0
    } else {
        v
    }
}

/// Decode `solution` into a plan. Binary columns are read by rounding.
pub fn decode(
    instance: &MilpInstance,
    case: &GridCase,
    scenario: &DamageScenario,
    solution: &Solution,
) -> Result<RestorationPlan, DecodeError> {
    if !solution.has_point() {
        return Err(DecodeError::NoPoint(solution.status));
    }
    let x = &solution.values;
    if x.len() != instance.vars.len() {
        return Err(DecodeError::Length { expected: instance.vars.len(), got: x.len() });
    }
    let val = |v: VarRef| instance.value(x, v).expect("column exists");
    let on = |v: VarRef| instance.value(x, v).is_some_and(|x| x > 0.5);

    let nbs: Vec<NbsSchedule> = instance
        .nbs
        .iter()
        .map(|u| NbsSchedule {
            gen: u.gen,
            bus: u.bus,
            crank_mw: u.crank,
            energized_step: (1..=instance.horizon).find(|&t| on(VarRef::Mu { bus: u.bus, step: t })),
        })
        .collect();

    let steps = (1..=instance.horizon)
        .map(|t| {
            let unserved: Vec<BusValue> = case
                .buses
                .iter()
                .map(|b| BusValue { bus: b.id, mw: snap(val(VarRef::LoadShed { bus: b.id, step: t })) })
                .collect();
            StepPlan {
                step: t,
                lines_repaired: instance
                    .damaged
                    .iter()
                    .copied()
                    .filter(|&line| on(VarRef::LineRepair { line, step: t }))
                    .collect(),
                nbs_energized: nbs
                    .iter()
                    .filter(|n| n.energized_step == Some(t))
                    .map(|n| n.gen)
                    .collect(),
                nbs_energized_total: nbs
                    .iter()
                    .filter(|n| n.energized_step.is_some_and(|e| e <= t))
                    .count(),
                total_demand: case.buses.iter().map(|b| scenario.demand(case, b.id, t)).sum(),
                total_unserved: snap(unserved.iter().map(|u| u.mw).sum()),
                unserved,
                dispatch: case
                    .generators
                    .iter()
                    .map(|g| GenValue { gen: g.id, mw: snap(val(VarRef::Gen { gen: g.id, step: t })) })
                    .collect(),
                flows: case
                    .lines
                    .iter()
                    .map(|l| LineValue { line: l.id, mw: snap(val(VarRef::Flow { line: l.id, step: t })) })
                    .collect(),
            }
        })
        .collect();

    Ok(RestorationPlan {
        case_name: case.name.clone(),
        status: solution.status,
        objective: snap(solution.objective),
        bound: snap(solution.bound),
        gap: solution.gap,
        horizon: instance.horizon,
        budget: scenario.budget,
        nbs,
        steps,
    })
}

/// Give every damaged line the optimizer left unrepaired a repair at the
/// earliest step with spare crew capacity. Such a line carries no flow, so
/// the objective is unchanged. The change is kept only if `values` stays
/// feasible within `tol`. Returns the number of repairs added.
pub fn complete_repairs(instance: &MilpInstance, values: &mut [f64], budget: u32, tol: f64) -> usize {
    let horizon = instance.horizon;
    let col = |v: VarRef| instance.column(v).expect("column exists");
    let mut used: Vec<u32> = (1..=horizon)
        .map(|t| {
            instance
                .damaged
                .iter()
                .filter(|&&line| values[col(VarRef::LineRepair { line, step: t })] > 0.5)
                .count() as u32
        })
        .collect();
    let mut trial = values.to_vec();
    let mut added = 0;
    for &line in &instance.damaged {
        let repaired = (1..=horizon).any(|t| trial[col(VarRef::LineRepair { line, step: t })] > 0.5);
        if repaired {
            continue;
        }
        let Some(t) = (1..=horizon).find(|&t| used[t as usize - 1] < budget) else { break };
        used[t as usize - 1] += 1;
        trial[col(VarRef::LineRepair { line, step: t })] = 1.0;
        for tp in t..=horizon {
            trial[col(VarRef::LineStatus { line, step: tp })] = 1.0;
        }
        added += 1;
    }
    if added > 0 && instance.problem.max_violation(&trial) <= tol {
        values.copy_from_slice(&trial);
        added
    } else {
        0
    }
}
