//! Network, generator, and damage-scenario data model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Cranking power as a fraction of an NBS unit's capacity, unless overridden.
pub const DEFAULT_CRANK_FRACTION: f64 = 0.1;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}

id_type!(BusId, "bus");
id_type!(LineId, "line");
id_type!(GenId, "gen");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: BusId,
    /// MW
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub f_min: f64,
    pub f_max: f64,
    /// Series reactance in per unit on a 100 MVA base. Only the angle-based
    /// network mode reads it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reactance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GenKind {
    /// Black-start: can start with no external supply.
    BS,
    /// Non-black-start: needs cranking power before it can be dispatched.
    NBS,
}

fn default_crank_fraction() -> f64 {
    DEFAULT_CRANK_FRACTION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    pub kind: GenKind,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default = "default_crank_fraction")]
    pub crank_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("{0} is a black-start unit; cranking power is only defined for NBS units")]
    NotNbs(GenId),
}

/// Cranking power (MW) an NBS unit must absorb before it can be dispatched.
pub fn cranking_power(g: &Generator) -> Result<f64, GridError> {
    match g.kind {
        GenKind::NBS => Ok(g.crank_fraction * g.p_max),
        GenKind::BS => Err(GridError::NotNbs(g.id)),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<Generator>,
}

impl GridCase {
    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.lines.iter().find(|l| l.id == id)
    }

    pub fn nbs_units(&self) -> impl Iterator<Item = &Generator> {
        self.generators.iter().filter(|g| g.kind == GenKind::NBS)
    }

    /// The NBS unit hosted at `bus`, if any.
    pub fn nbs_at(&self, bus: BusId) -> Option<&Generator> {
        self.nbs_units().find(|g| g.bus == bus)
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.demand).sum()
    }
}

/// Per-step override of a bus's demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandOverride {
    pub bus: BusId,
    pub step: u32,
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageScenario {
    pub damaged_line_ids: Vec<LineId>,
    /// Lines repairable per step.
    pub budget: u32,
    /// Number of restoration steps.
    pub horizon: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub demand_profile: Vec<DemandOverride>,
}

impl DamageScenario {
    /// `ceil(|damaged| / budget) + 2`.
    pub fn default_horizon(damaged: usize, budget: u32) -> u32 {
        let budget = budget.max(1) as usize;
        (damaged.div_ceil(budget) + 2) as u32
    }

    pub fn is_damaged(&self, line: LineId) -> bool {
        self.damaged_line_ids.contains(&line)
    }

    /// Demand of `bus` at `step` (1-based), honoring overrides.
    pub fn demand(&self, case: &GridCase, bus: BusId, step: u32) -> f64 {
        self.demand_profile
            .iter()
            .find(|o| o.bus == bus && o.step == step)
            .map(|o| o.demand)
            .or_else(|| case.bus(bus).map(|b| b.demand))
            .unwrap_or(0.0)
    }
}

/// Model entity a validation finding refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Bus(BusId),
    Line(LineId),
    Generator(GenId),
    Scenario,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Bus(id) => id.fmt(f),
            Entity::Line(id) => id.fmt(f),
            Entity::Generator(id) => id.fmt(f),
            Entity::Scenario => f.write_str("scenario"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: Entity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, entity: Entity, message: impl Into<String>) {
        self.violations.push(Violation { entity, message: message.into() });
    }

    pub fn about(&self, entity: Entity) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.entity == entity)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            v.fmt(f)?;
        }
        Ok(())
    }
}

/// Check the static network alone.
pub fn validate_case(case: &GridCase) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut bus_ids = BTreeSet::new();
    for b in &case.buses {
        if !bus_ids.insert(b.id) {
            report.push(Entity::Bus(b.id), "duplicate bus id");
        }
        if !(b.demand >= 0.0 && b.demand.is_finite()) {
            report.push(Entity::Bus(b.id), "demand must be finite and nonnegative");
        }
    }

    let mut line_ids = BTreeSet::new();
    for l in &case.lines {
        let e = Entity::Line(l.id);
        if !line_ids.insert(l.id) {
            report.push(e, "duplicate line id");
        }
        if l.from_bus == l.to_bus {
            report.push(e, "line connects a bus to itself");
        }
        for end in [l.from_bus, l.to_bus] {
            if !bus_ids.contains(&end) {
                report.push(e, format!("references unknown {end}"));
            }
        }
        if !(l.f_min <= 0.0 && l.f_max >= 0.0 && l.f_min.is_finite() && l.f_max.is_finite()) {
            report.push(e, "flow limits must satisfy f_min <= 0 <= f_max");
        }
        if let Some(x) = l.reactance {
            if !(x.is_finite() && x != 0.0) {
                report.push(e, "reactance must be finite and nonzero");
            }
        }
    }

    let mut gen_ids = BTreeSet::new();
    let mut per_bus: BTreeMap<BusId, (usize, usize)> = BTreeMap::new(); // (all, nbs)
    for g in &case.generators {
        let e = Entity::Generator(g.id);
        if !gen_ids.insert(g.id) {
            report.push(e, "duplicate generator id");
        }
        if !bus_ids.contains(&g.bus) {
            report.push(e, format!("references unknown {}", g.bus));
        }
        if !(g.p_min >= 0.0 && g.p_min <= g.p_max && g.p_max.is_finite()) {
            report.push(e, "dispatch bounds must satisfy 0 <= p_min <= p_max");
        }
        if g.kind == GenKind::NBS {
            if !(g.p_max > 0.0) {
                report.push(e, "cranking power must be positive");
            }
            if !(g.crank_fraction > 0.0 && g.crank_fraction <= 1.0) {
                report.push(e, "crank_fraction must lie in (0, 1]");
            }
        }
        let entry = per_bus.entry(g.bus).or_default();
        entry.0 += 1;
        if g.kind == GenKind::NBS {
            entry.1 += 1;
        }
    }
    for (bus, (all, nbs)) in per_bus {
        if nbs > 0 && all > 1 {
            report.push(Entity::Bus(bus), "a bus hosting an NBS unit cannot host other generators");
        }
    }
    report
}

/// Check a network together with a damage scenario. An empty report means
/// the pair can be formulated.
pub fn validate(case: &GridCase, scenario: &DamageScenario) -> ValidationReport {
    let mut report = validate_case(case);
    let lines: BTreeSet<LineId> = case.lines.iter().map(|l| l.id).collect();
    let buses: BTreeSet<BusId> = case.buses.iter().map(|b| b.id).collect();

    let mut seen = BTreeSet::new();
    for &id in &scenario.damaged_line_ids {
        if !lines.contains(&id) {
            report.push(Entity::Scenario, format!("damaged {id} is not in the case"));
        }
        if !seen.insert(id) {
            report.push(Entity::Scenario, format!("damaged {id} listed twice"));
        }
    }
    if scenario.budget < 1 {
        report.push(Entity::Scenario, "budget must be at least 1");
    }
    if scenario.horizon < 1 {
        report.push(Entity::Scenario, "horizon must be at least 1");
    }
    let mut overrides = HashMap::new();
    for o in &scenario.demand_profile {
        if !buses.contains(&o.bus) {
            report.push(Entity::Scenario, format!("demand override for unknown {}", o.bus));
        }
        if o.step < 1 || o.step > scenario.horizon {
            report.push(
                Entity::Scenario,
                format!("demand override for {} at step {} outside 1..={}", o.bus, o.step, scenario.horizon),
            );
        }
        if !(o.demand >= 0.0 && o.demand.is_finite()) {
            report.push(Entity::Scenario, format!("demand override for {} must be nonnegative", o.bus));
        }
        if overrides.insert((o.bus, o.step), o.demand).is_some() {
            report.push(
                Entity::Scenario,
                format!("demand override for {} at step {} given twice", o.bus, o.step),
            );
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nbs(id: u32, bus: u32, p_max: f64) -> Generator {
        Generator {
            id: GenId(id),
            bus: BusId(bus),
            kind: GenKind::NBS,
            p_min: 0.0,
            p_max,
            crank_fraction: DEFAULT_CRANK_FRACTION,
        }
    }

    fn line(id: u32, from: u32, to: u32) -> Line {
        Line {
            id: LineId(id),
            from_bus: BusId(from),
            to_bus: BusId(to),
            f_min: -100.0,
            f_max: 100.0,
            reactance: None,
        }
    }

    fn small_case() -> GridCase {
        GridCase {
            name: None,
            buses: (1..=3).map(|i| Bus { id: BusId(i), demand: if i == 2 { 20.0 } else { 0.0 } }).collect(),
            lines: vec![line(1, 1, 2), line(2, 2, 3)],
            generators: vec![
                Generator {
                    id: GenId(1),
                    bus: BusId(1),
                    kind: GenKind::BS,
                    p_min: 0.0,
                    p_max: 40.0,
                    crank_fraction: DEFAULT_CRANK_FRACTION,
                },
                nbs(2, 3, 100.0),
            ],
        }
    }

    fn scenario() -> DamageScenario {
        DamageScenario {
            damaged_line_ids: vec![LineId(1), LineId(2)],
            budget: 1,
            horizon: 3,
            demand_profile: vec![],
        }
    }

    #[test]
    fn cranking_power_examples() {
        assert_eq!(cranking_power(&nbs(1, 1, 100.0)).unwrap(), 10.0);
        let mut g = nbs(1, 1, 250.0);
        g.crank_fraction = 0.08;
        assert_eq!(cranking_power(&g).unwrap(), 20.0);
        let bs = Generator { kind: GenKind::BS, ..nbs(7, 1, 100.0) };
        assert_eq!(cranking_power(&bs), Err(GridError::NotNbs(GenId(7))));
    }

    #[test]
    fn admissible_case_has_empty_report() {
        assert!(validate(&small_case(), &scenario()).is_empty());
    }

    #[test]
    fn self_loop_is_one_violation() {
        let mut case = small_case();
        case.lines[1].to_bus = BusId(2);
        let report = validate(&case, &scenario());
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].entity, Entity::Line(LineId(2)));
    }

    #[test]
    fn zero_capacity_nbs_is_one_violation() {
        let mut case = small_case();
        case.generators[1].p_max = 0.0;
        let report = validate(&case, &scenario());
        assert_eq!(report.violations.len(), 1, "{report}");
        assert_eq!(report.violations[0].message, "cranking power must be positive");
    }

    #[test]
    fn nbs_bus_must_host_a_single_unit() {
        let mut case = small_case();
        case.generators.push(Generator { id: GenId(3), ..case.generators[0].clone() });
        case.generators[2].bus = BusId(3);
        let report = validate(&case, &scenario());
        assert_eq!(report.about(Entity::Bus(BusId(3))).count(), 1, "{report}");
    }

    #[test]
    fn scenario_findings() {
        let case = small_case();
        let mut s = scenario();
        s.budget = 0;
        s.damaged_line_ids.push(LineId(9));
        s.demand_profile.push(DemandOverride { bus: BusId(2), step: 5, demand: 1.0 });
        let report = validate(&case, &s);
        assert_eq!(report.about(Entity::Scenario).count(), 3, "{report}");
    }

    #[test]
    fn dangling_and_duplicate_references() {
        let mut case = small_case();
        case.generators[0].bus = BusId(42);
        case.buses.push(Bus { id: BusId(1), demand: 0.0 });
        let report = validate_case(&case);
        assert_eq!(report.about(Entity::Generator(GenId(1))).count(), 1);
        assert_eq!(report.about(Entity::Bus(BusId(1))).count(), 1);
    }

    #[test]
    fn demand_profile_overrides_base_demand() {
        let case = small_case();
        let mut s = scenario();
        s.demand_profile.push(DemandOverride { bus: BusId(2), step: 2, demand: 5.0 });
        assert_eq!(s.demand(&case, BusId(2), 1), 20.0);
        assert_eq!(s.demand(&case, BusId(2), 2), 5.0);
    }

    #[test]
    fn default_horizon_rule() {
        assert_eq!(DamageScenario::default_horizon(46, 10), 7);
        assert_eq!(DamageScenario::default_horizon(9, 3), 5);
        assert_eq!(DamageScenario::default_horizon(0, 3), 2);
    }

    proptest! {
        #[test]
        fn cranking_power_is_homogeneous(p in 0.1f64..5000.0, k in 0.01f64..100.0, frac in 0.01f64..1.0) {
            let mut g = nbs(1, 1, p);
            g.crank_fraction = frac;
            let base = cranking_power(&g).unwrap();
            g.p_max = p * k;
            let scaled = cranking_power(&g).unwrap();
            prop_assert!((scaled - k * base).abs() <= 1e-12 * scaled.abs().max(1.0));
        }

        #[test]
        fn validate_is_idempotent(demand in -5.0f64..50.0, fmin in -50.0f64..10.0, pmax in -1.0f64..10.0) {
            let mut case = small_case();
            case.buses[1].demand = demand;
            case.lines[0].f_min = fmin;
            case.generators[1].p_max = pmax;
            let s = scenario();
            prop_assert_eq!(validate(&case, &s), validate(&case, &s));
        }
    }
}
