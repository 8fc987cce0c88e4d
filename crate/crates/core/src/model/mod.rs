//! Restoration MILP: translates a [`GridCase`] and [`DamageScenario`] into a
//! [`Problem`] and decodes solutions back into a [`RestorationPlan`].
//!
//! Columns and rows are emitted step-major. With `|B|` buses, `|A|` lines,
//! `|A_d|` damaged lines, `|G|` generators, `|N|` NBS units and `T` steps:
//!
//! ```text
//! columns  = T (|B| + |A| + |G| + 2|A_d| + 2|N|) + |N| T (T + 3) / 2
//! rows     = T (|B| + 3|A_d| + [A_d nonempty]) + |N| T (T + 6)
//! binaries = T |A_d| + |N| T + |N| T (T + 3) / 2
//! ```
//!
//! The angle mode adds `T |B|` angle columns and `T (|A| + |A_d|)` rows.
//!
//! Per step `t` the rows are, in order: bus balance; flow gating of damaged
//! lines by their cumulative status `S`; the definition `S_t = sum B_{<=t}`;
//! the repair budget; and, per NBS bus, the energization ratio `beta`, the
//! status-coupled generation bounds, and the linearized
//! `mu_t = max(0, beta_1, ..., beta_t)` with one selector `eps` per candidate
//! (candidate 0 is the constant 0).
//!
//! Generation coupling uses the status of the *previous* step: an NBS unit
//! that absorbs its cranking power at step `t` (`beta_t = 1`, `mu_t = 1`)
//! still draws `P = -P_crank` at `t` and becomes dispatchable from `t + 1`.
//! Coupling on `mu_t` itself would demand generation in the very step the bus
//! imports exactly its cranking power, which no zero-demand NBS bus can
//! balance.

mod decode;

use std::collections::HashMap;
use std::fmt;

pub use decode::{
    complete_repairs, decode, BusValue, DecodeError, GenValue, LineValue, NbsSchedule, RestorationPlan, StepPlan,
};

use crate::grid::{
    cranking_power, validate, BusId, DamageScenario, GenId, GenKind, GridCase, LineId,
    ValidationReport,
};
use crate::solver::{Problem, Sense, VarKind};

/// Identifies one MILP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    /// Unserved load `LS_{b,t}`.
    LoadShed { bus: BusId, step: u32 },
    /// Line flow `f_{a,t}`, positive from `from_bus` to `to_bus`.
    Flow { line: LineId, step: u32 },
    /// Generator output `P_{g,t}`.
    Gen { gen: GenId, step: u32 },
    /// Repair decision `B_{a,t}` of a damaged line.
    LineRepair { line: LineId, step: u32 },
    /// Cumulative status `S_{a,t}` of a damaged line.
    LineStatus { line: LineId, step: u32 },
    /// Net inflow at an NBS bus relative to its cranking power.
    Beta { bus: BusId, step: u32 },
    /// Energization status of the NBS unit at `bus`.
    Mu { bus: BusId, step: u32 },
    /// Selects which candidate attains the running maximum; candidate 0 is
    /// the constant zero, candidate `i >= 1` is `beta_{b,i}`.
    Eps { bus: BusId, step: u32, candidate: u32 },
    /// Bus voltage angle (angle mode only).
    Angle { bus: BusId, step: u32 },
}

impl VarRef {
    pub fn step(&self) -> u32 {
        match *self {
            VarRef::LoadShed { step, .. }
            | VarRef::Flow { step, .. }
            | VarRef::Gen { step, .. }
            | VarRef::LineRepair { step, .. }
            | VarRef::LineStatus { step, .. }
            | VarRef::Beta { step, .. }
            | VarRef::Mu { step, .. }
            | VarRef::Eps { step, .. }
            | VarRef::Angle { step, .. } => step,
        }
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::LoadShed { bus, step } => write!(f, "LS_{bus}_t{step}"),
            VarRef::Flow { line, step } => write!(f, "F_{line}_t{step}"),
            VarRef::Gen { gen, step } => write!(f, "P_{gen}_t{step}"),
            VarRef::LineRepair { line, step } => write!(f, "B_{line}_t{step}"),
            VarRef::LineStatus { line, step } => write!(f, "S_{line}_t{step}"),
            VarRef::Beta { bus, step } => write!(f, "BETA_{bus}_t{step}"),
            VarRef::Mu { bus, step } => write!(f, "MU_{bus}_t{step}"),
            VarRef::Eps { bus, step, candidate } => write!(f, "EPS_{bus}_t{step}_c{candidate}"),
            VarRef::Angle { bus, step } => write!(f, "TH_{bus}_t{step}"),
        }
    }
}

/// Options for [`build_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    /// Add voltage angles and `f = (θ_from - θ_to) · 100 / x` on in-service
    /// lines. This goes beyond the transport model and needs line reactances.
    pub angle_mode: bool,
    /// Angle bound in radians for the angle mode.
    pub max_angle: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { angle_mode: false, max_angle: std::f64::consts::FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("inputs are not admissible: {0}")]
    Invalid(ValidationReport),
    #[error("angle mode needs a reactance for {0}")]
    MissingReactance(LineId),
}

/// Data of one NBS unit as used by the formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct NbsUnit {
    pub gen: GenId,
    pub bus: BusId,
    pub crank: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Big-M for the max linearization: one more than the largest `|beta|`
    /// the incident line capacities allow.
    pub big_m: f64,
}

/// A restoration MILP and the map between its columns and model entities.
#[derive(Debug, Clone)]
pub struct MilpInstance {
    pub problem: Problem,
    pub vars: Vec<VarRef>,
    index: HashMap<VarRef, usize>,
    pub horizon: u32,
    pub nbs: Vec<NbsUnit>,
    pub damaged: Vec<LineId>,
    pub options: BuildOptions,
}

impl MilpInstance {
    pub fn column(&self, var: VarRef) -> Option<usize> {
        self.index.get(&var).copied()
    }

    /// Value of `var` in `values`, if the instance has such a column.
    pub fn value(&self, values: &[f64], var: VarRef) -> Option<f64> {
        self.column(var).map(|j| values[j])
    }

    pub fn num_binaries(&self) -> usize {
        self.problem.integer_columns().count()
    }
}

impl AsRef<Problem> for MilpInstance {
    fn as_ref(&self) -> &Problem {
        &self.problem
    }
}

struct Builder {
    problem: Problem,
    vars: Vec<VarRef>,
    index: HashMap<VarRef, usize>,
}

impl Builder {
    fn col(&mut self, var: VarRef, lower: f64, upper: f64, cost: f64, kind: VarKind) -> usize {
        let j = self.problem.add_column(var.to_string(), lower, upper, cost, kind);
        self.vars.push(var);
        self.index.insert(var, j);
        j
    }

    fn idx(&self, var: VarRef) -> usize {
        self.index[&var]
    }

    fn row(&mut self, name: String, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.problem.add_row(name, coeffs, sense, rhs);
    }
}

/// Build the restoration MILP with default options.
pub fn build(case: &GridCase, scenario: &DamageScenario) -> Result<MilpInstance, ModelError> {
    build_with(case, scenario, &BuildOptions::default())
}

pub fn build_with(
    case: &GridCase,
    scenario: &DamageScenario,
    options: &BuildOptions,
) -> Result<MilpInstance, ModelError> {
    let report = validate(case, scenario);
    if !report.is_empty() {
        return Err(ModelError::Invalid(report));
    }
    if options.angle_mode {
        if let Some(l) = case.lines.iter().find(|l| l.reactance.is_none()) {
            return Err(ModelError::MissingReactance(l.id));
        }
    }

    let horizon = scenario.horizon;
    let damaged: Vec<LineId> =
        case.lines.iter().map(|l| l.id).filter(|&id| scenario.is_damaged(id)).collect();
    let nbs: Vec<NbsUnit> = case
        .nbs_units()
        .map(|g| {
            let crank = cranking_power(g).expect("NBS unit");
            let reach: f64 = case
                .lines
                .iter()
                .filter(|l| l.from_bus == g.bus || l.to_bus == g.bus)
                .map(|l| l.f_max + l.f_min.abs())
                .sum();
            NbsUnit {
                gen: g.id,
                bus: g.bus,
                crank,
                p_min: g.p_min,
                p_max: g.p_max,
                big_m: 1.0 + reach / crank,
            }
        })
        .collect();
    let crank_at: HashMap<BusId, f64> = nbs.iter().map(|u| (u.bus, u.crank)).collect();

    let mut b = Builder { problem: Problem::new(), vars: Vec::new(), index: HashMap::new() };

    for t in 1..=horizon {
        for bus in &case.buses {
            let cap = scenario.demand(case, bus.id, t) + crank_at.get(&bus.id).copied().unwrap_or(0.0);
            b.col(VarRef::LoadShed { bus: bus.id, step: t }, 0.0, cap, 1.0, VarKind::Continuous);
        }
        for line in &case.lines {
            b.col(VarRef::Flow { line: line.id, step: t }, line.f_min, line.f_max, 0.0, VarKind::Continuous);
        }
        for g in &case.generators {
            let (lo, hi) = match g.kind {
                GenKind::BS => (g.p_min, g.p_max),
                GenKind::NBS => (-crank_at[&g.bus], g.p_max),
            };
            b.col(VarRef::Gen { gen: g.id, step: t }, lo, hi, 0.0, VarKind::Continuous);
        }
        for &line in &damaged {
            b.col(VarRef::LineRepair { line, step: t }, 0.0, 1.0, 0.0, VarKind::Binary);
        }
        for &line in &damaged {
            b.col(VarRef::LineStatus { line, step: t }, 0.0, 1.0, 0.0, VarKind::Continuous);
        }
        if options.angle_mode {
            for bus in &case.buses {
                let a = options.max_angle;
                b.col(VarRef::Angle { bus: bus.id, step: t }, -a, a, 0.0, VarKind::Continuous);
            }
        }
        for u in &nbs {
            let r = u.big_m - 1.0;
            b.col(VarRef::Beta { bus: u.bus, step: t }, -r, r, 0.0, VarKind::Continuous);
        }
        for u in &nbs {
            b.col(VarRef::Mu { bus: u.bus, step: t }, 0.0, 1.0, 0.0, VarKind::Binary);
        }
        for u in &nbs {
            for c in 0..=t {
                b.col(VarRef::Eps { bus: u.bus, step: t, candidate: c }, 0.0, 1.0, 0.0, VarKind::Binary);
            }
        }
    }

    for t in 1..=horizon {
        // Bus balance: generation + shed + net inflow = demand.
        for bus in &case.buses {
            let mut coeffs = vec![(b.idx(VarRef::LoadShed { bus: bus.id, step: t }), 1.0)];
            for g in case.generators.iter().filter(|g| g.bus == bus.id) {
                coeffs.push((b.idx(VarRef::Gen { gen: g.id, step: t }), 1.0));
            }
            coeffs.extend(net_inflow(case, &b, bus.id, t, 1.0));
            let demand = scenario.demand(case, bus.id, t);
            b.row(format!("bal_{}_t{t}", bus.id), coeffs, Sense::Eq, demand);
        }

        // Damaged-line gating and cumulative status.
        for &line in &damaged {
            let l = case.line(line).expect("validated");
            let f = b.idx(VarRef::Flow { line, step: t });
            let s = b.idx(VarRef::LineStatus { line, step: t });
            b.row(format!("gate_hi_{line}_t{t}"), vec![(f, 1.0), (s, -l.f_max)], Sense::Le, 0.0);
            b.row(format!("gate_lo_{line}_t{t}"), vec![(f, 1.0), (s, -l.f_min)], Sense::Ge, 0.0);
        }
        for &line in &damaged {
            let mut coeffs = vec![(b.idx(VarRef::LineStatus { line, step: t }), 1.0)];
            for tp in 1..=t {
                coeffs.push((b.idx(VarRef::LineRepair { line, step: tp }), -1.0));
            }
            b.row(format!("status_{line}_t{t}"), coeffs, Sense::Eq, 0.0);
        }
        if !damaged.is_empty() {
            let coeffs = damaged.iter().map(|&line| (b.idx(VarRef::LineRepair { line, step: t }), 1.0)).collect();
            b.row(format!("budget_t{t}"), coeffs, Sense::Le, f64::from(scenario.budget));
        }

        if options.angle_mode {
            for l in &case.lines {
                let k = 100.0 / l.reactance.expect("checked");
                let f = b.idx(VarRef::Flow { line: l.id, step: t });
                let from = b.idx(VarRef::Angle { bus: l.from_bus, step: t });
                let to = b.idx(VarRef::Angle { bus: l.to_bus, step: t });
                let base = vec![(f, 1.0), (from, -k), (to, k)];
                if scenario.is_damaged(l.id) {
                    let m = 2.0 * options.max_angle * k.abs();
                    let s = b.idx(VarRef::LineStatus { line: l.id, step: t });
                    let mut hi = base.clone();
                    hi.push((s, m));
                    b.row(format!("ohm_hi_{}_t{t}", l.id), hi, Sense::Le, m);
                    let mut lo = base;
                    lo.push((s, -m));
                    b.row(format!("ohm_lo_{}_t{t}", l.id), lo, Sense::Ge, -m);
                } else {
                    b.row(format!("ohm_{}_t{t}", l.id), base, Sense::Eq, 0.0);
                }
            }
        }

        for u in &nbs {
            let bus = u.bus;
            // crank * beta = net inflow
            let beta_t = b.idx(VarRef::Beta { bus, step: t });
            let mut coeffs = vec![(beta_t, u.crank)];
            coeffs.extend(net_inflow(case, &b, bus, t, -1.0));
            b.row(format!("beta_{bus}_t{t}"), coeffs, Sense::Eq, 0.0);

            // -crank (1 - mu) + mu p_min <= P <= -crank (1 - mu) + mu p_max, mu of step t-1
            let p = b.idx(VarRef::Gen { gen: u.gen, step: t });
            let prev = (t > 1).then(|| b.idx(VarRef::Mu { bus, step: t - 1 }));
            let with_mu = |slope: f64| {
                let mut c = vec![(p, 1.0)];
                if let Some(m) = prev {
                    c.push((m, -slope));
                }
                c
            };
            b.row(format!("gen_lo_{bus}_t{t}"), with_mu(u.crank + u.p_min), Sense::Ge, -u.crank);
            b.row(format!("gen_hi_{bus}_t{t}"), with_mu(u.crank + u.p_max), Sense::Le, -u.crank);

            // mu_t = max(0, beta_1..beta_t)
            let mu = b.idx(VarRef::Mu { bus, step: t });
            for i in 1..=t {
                let beta_i = b.idx(VarRef::Beta { bus, step: i });
                b.row(format!("mu_ge_{bus}_t{t}_c{i}"), vec![(mu, 1.0), (beta_i, -1.0)], Sense::Ge, 0.0);
            }
            for c in 0..=t {
                let eps = b.idx(VarRef::Eps { bus, step: t, candidate: c });
                let mut coeffs = vec![(mu, 1.0), (eps, u.big_m)];
                if c > 0 {
                    coeffs.push((b.idx(VarRef::Beta { bus, step: c }), -1.0));
                }
                b.row(format!("mu_le_{bus}_t{t}_c{c}"), coeffs, Sense::Le, u.big_m);
            }
            let coeffs =
                (0..=t).map(|c| (b.idx(VarRef::Eps { bus, step: t, candidate: c }), 1.0)).collect();
            b.row(format!("eps_sum_{bus}_t{t}"), coeffs, Sense::Eq, 1.0);
        }
    }

    Ok(MilpInstance {
        problem: b.problem,
        vars: b.vars,
        index: b.index,
        horizon,
        nbs,
        damaged,
        options: options.clone(),
    })
}

/// Coefficients of `sign * (inflow - outflow)` at `bus` for step `t`.
fn net_inflow(case: &GridCase, b: &Builder, bus: BusId, t: u32, sign: f64) -> Vec<(usize, f64)> {
    let mut coeffs = Vec::new();
    for l in &case.lines {
        let f = b.idx(VarRef::Flow { line: l.id, step: t });
        if l.to_bus == bus {
            coeffs.push((f, sign));
        } else if l.from_bus == bus {
            coeffs.push((f, -sign));
        }
    }
    coeffs
}
