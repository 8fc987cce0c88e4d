//! Independent re-check of a solved restoration point. Every constraint
//! family is re-derived from the case data; the solver's rows are not read.

use gridrestore::grid::{cranking_power, DamageScenario, GenKind, GridCase};
use gridrestore::model::VarRef;
use gridrestore::restore::Outcome;

pub const TOL: f64 = 1e-6;

/// Panics on the first violated constraint; returns the number checked.
pub fn check_constraints(case: &GridCase, scenario: &DamageScenario, out: &Outcome) -> usize {
    let m = &out.instance;
    let x = &out.solution.values;
    let v = |var: VarRef| m.value(x, var).unwrap_or_else(|| panic!("missing column {var}"));
    let horizon = scenario.horizon;
    let mut checks = 0;
    let mut ok = |cond: bool, what: String| {
        assert!(cond, "{what}");
        checks += 1;
    };

    for t in 1..=horizon {
        // Balance at every bus.
        for b in &case.buses {
            let gen: f64 =
                case.generators.iter().filter(|g| g.bus == b.id).map(|g| v(VarRef::Gen { gen: g.id, step: t })).sum();
            let inflow: f64 = case
                .lines
                .iter()
                .map(|l| {
                    let f = v(VarRef::Flow { line: l.id, step: t });
                    if l.to_bus == b.id {
                        f
                    } else if l.from_bus == b.id {
                        -f
                    } else {
                        0.0
                    }
                })
                .sum();
            let ls = v(VarRef::LoadShed { bus: b.id, step: t });
            let demand = scenario.demand(case, b.id, t);
            ok((gen + ls + inflow - demand).abs() <= TOL, format!("balance {} t{t}", b.id));
            let cap = demand + case.nbs_at(b.id).map_or(0.0, |g| cranking_power(g).unwrap());
            ok(ls >= -TOL && ls <= cap + TOL, format!("shed bounds {} t{t}: {ls}", b.id));

            // Energization ratio at NBS buses.
            if let Some(g) = case.nbs_at(b.id) {
                let beta = v(VarRef::Beta { bus: b.id, step: t });
                ok((beta * cranking_power(g).unwrap() - inflow).abs() <= TOL, format!("beta {} t{t}", b.id));
            }
        }

        // Flow limits, gated by status for damaged lines.
        for l in &case.lines {
            let f = v(VarRef::Flow { line: l.id, step: t });
            let s = if scenario.is_damaged(l.id) {
                let s = v(VarRef::LineStatus { line: l.id, step: t });
                let cumulative: f64 = (1..=t).map(|k| v(VarRef::LineRepair { line: l.id, step: k })).sum();
                ok((s - cumulative).abs() <= TOL, format!("status {} t{t}", l.id));
                s
            } else {
                1.0
            };
            ok(f >= s * l.f_min - TOL && f <= s * l.f_max + TOL, format!("flow {} t{t}: {f}", l.id));
        }

        let repaired: f64 =
            scenario.damaged_line_ids.iter().map(|&line| v(VarRef::LineRepair { line, step: t })).sum();
        ok(repaired <= f64::from(scenario.budget) + TOL, format!("budget t{t}"));

        // Generation bounds; an NBS unit follows its status at the previous step.
        for g in &case.generators {
            let p = v(VarRef::Gen { gen: g.id, step: t });
            let (lo, hi) = match g.kind {
                GenKind::BS => (g.p_min, g.p_max),
                GenKind::NBS => {
                    let crank = cranking_power(g).unwrap();
                    let on = if t == 1 { 0.0 } else { v(VarRef::Mu { bus: g.bus, step: t - 1 }) };
                    ((crank + g.p_min) * on - crank, (crank + g.p_max) * on - crank)
                }
            };
            ok(p >= lo - TOL && p <= hi + TOL, format!("gen {} t{t}: {p} not in [{lo}, {hi}]", g.id));
        }

        // Running maximum of the energization ratio.
        for g in case.nbs_units() {
            let mu = v(VarRef::Mu { bus: g.bus, step: t });
            ok(mu.abs() <= TOL || (mu - 1.0).abs() <= TOL, format!("mu binary {} t{t}", g.bus));
            if t > 1 {
                ok(mu >= v(VarRef::Mu { bus: g.bus, step: t - 1 }) - TOL, format!("mu monotone {} t{t}", g.bus));
            }
            let eps: Vec<f64> = (0..=t).map(|c| v(VarRef::Eps { bus: g.bus, step: t, candidate: c })).collect();
            ok((eps.iter().sum::<f64>() - 1.0).abs() <= TOL, format!("eps sum {} t{t}", g.bus));
            let candidates: Vec<f64> = std::iter::once(0.0)
                .chain((1..=t).map(|c| v(VarRef::Beta { bus: g.bus, step: c })))
                .collect();
            for &c in &candidates {
                ok(mu >= c - TOL, format!("mu >= candidate {} t{t}", g.bus));
            }
            let selected = eps.iter().position(|&e| e > 0.5).expect("one candidate selected");
            ok(mu <= candidates[selected] + TOL, format!("mu <= selected {} t{t}", g.bus));
        }
    }

    for &line in &scenario.damaged_line_ids {
        let total: f64 = (1..=horizon).map(|t| v(VarRef::LineRepair { line, step: t })).sum();
        ok(total <= 1.0 + TOL, format!("{line} repaired more than once"));
    }

    // The plan reports the same numbers.
    for (step, plan) in out.plan.steps.iter().enumerate() {
        let t = step as u32 + 1;
        let ls: f64 = case.buses.iter().map(|b| v(VarRef::LoadShed { bus: b.id, step: t })).sum();
        ok((plan.total_unserved - ls).abs() <= TOL, format!("plan total t{t}"));
    }
    checks
}

