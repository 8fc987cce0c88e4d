mod common;

use gridrestore::grid::{cranking_power, BusId, DamageScenario, GenKind, GridCase};
use gridrestore::io;
use gridrestore::oracle::{cross_check, enumerate_optimal, SizeGuard};
use gridrestore::solver::MilpLimits;

fn guard() -> SizeGuard {
    SizeGuard::default()
}

fn oracle_objective(case: &GridCase, scenario: &DamageScenario) -> f64 {
    enumerate_optimal(case, scenario, &guard()).unwrap().objective
}

#[test]
fn committed_fixtures_match_generator() {
    let dir = common::data_dir();
    for seed in common::FIXTURE_SEEDS {
        let (case, scenario) = common::random_instance(seed);
        let (c, s) = common::fixture_paths(seed);
        let stored_case = io::load_case(&dir.join(c)).unwrap();
        let stored_scenario = io::load_scenario(&dir.join(s), &stored_case).unwrap();
        assert_eq!(stored_case, case, "seed {seed}: rerun the gen_data example");
        assert_eq!(stored_scenario, scenario, "seed {seed}");
    }
}

#[test]
fn milp_matches_enumeration_on_random_fixtures() {
    let mut checked = 0;
    for seed in common::FIXTURE_SEEDS {
        let (c, s) = common::fixture_paths(seed);
        let (case, scenario) = common::load(&c, &s);
        let cert = cross_check(&case, &scenario, &guard(), &MilpLimits::default()).unwrap();
        assert!(cert.certified, "seed {seed}\n{}", cert.describe());
        let rel = (cert.milp_objective - cert.oracle_objective).abs() / cert.oracle_objective.abs().max(1.0);
        assert!(rel <= 1e-6, "seed {seed}: {rel:e}");
        checked += 1;
    }
    assert!(checked >= 10);
}

#[test]
fn milp_matches_enumeration_on_chain_fixtures() {
    for scenario in ["fixtures/chain3_budget1.json", "fixtures/chain3_budget2.json"] {
        let (case, scenario) = common::load("fixtures/chain3.json", scenario);
        let cert = cross_check(&case, &scenario, &guard(), &MilpLimits::default()).unwrap();
        assert!(cert.certified, "{}", cert.describe());
    }
}

#[test]
fn chain_optimum_by_hand() {
    // Budget 1: line 1 at step 1, line 2 at step 2; the NBS unit waits through
    // step 1 (shedding its 10 MW cranking power) and starts at step 2.
    let (case, scenario) = common::load("fixtures/chain3.json", "fixtures/chain3_budget1.json");
    let r = enumerate_optimal(&case, &scenario, &guard()).unwrap();
    assert!((r.objective - 10.0).abs() < 1e-9);
    assert_eq!(r.trajectory.len(), 3);
    // Budget 2: both lines at step 1, cranking power delivered at once.
    let (case, scenario) = common::load("fixtures/chain3.json", "fixtures/chain3_budget2.json");
    let r = enumerate_optimal(&case, &scenario, &guard()).unwrap();
    assert!(r.objective.abs() < 1e-9, "{}", r.objective);
}

#[test]
fn objective_grows_with_horizon_and_falls_with_budget() {
    for seed in common::FIXTURE_SEEDS.take(6) {
        let (case, mut scenario) = common::random_instance(seed);
        scenario.budget = 1;
        scenario.horizon = 2;
        let mut previous = oracle_objective(&case, &scenario);
        // Each extra step adds a nonnegative term; earlier steps cannot get worse.
        for horizon in 3..=4 {
            scenario.horizon = horizon;
            let r = enumerate_optimal(&case, &scenario, &guard()).unwrap();
            assert!(r.objective >= previous - 1e-9, "seed {seed} T={horizon}");
            let prefix: f64 = r.trajectory[..horizon as usize - 1].iter().sum();
            assert!(prefix >= previous - 1e-9);
            previous = r.objective;
        }
        let mut last = f64::INFINITY;
        for budget in 1..=3 {
            scenario.budget = budget;
            let obj = oracle_objective(&case, &scenario);
            assert!(obj <= last + 1e-9, "seed {seed} budget {budget}");
            last = obj;
        }
    }
}

#[test]
fn network_without_black_start_sheds_everything() {
    let (mut case, scenario) = common::load("fixtures/chain3.json", "fixtures/chain3_budget1.json");
    case.generators.retain(|g| g.kind == GenKind::NBS);
    case.buses[0].demand = 7.0;
    let crank: f64 = case.nbs_units().map(|g| cranking_power(g).unwrap()).sum();
    let expected = f64::from(scenario.horizon) * (case.total_demand() + crank);
    assert_eq!(expected, 3.0 * (27.0 + 10.0));
    let cert = cross_check(&case, &scenario, &guard(), &MilpLimits::default()).unwrap();
    assert!(cert.certified, "{}", cert.describe());
    assert!((cert.oracle_objective - expected).abs() < 1e-9);
}

#[test]
fn full_budget_leaves_only_a_first_step_shortfall() {
    // 25 MW of black-start capacity cannot cover 20 MW of load plus the
    // 10 MW cranking power in step 1; from step 2 the NBS unit is online.
    let (mut case, mut scenario) = common::load("fixtures/chain3.json", "fixtures/chain3_budget2.json");
    case.generators[0].p_max = 25.0;
    scenario.budget = scenario.damaged_line_ids.len() as u32;
    let cert = cross_check(&case, &scenario, &guard(), &MilpLimits::default()).unwrap();
    assert!(cert.certified, "{}", cert.describe());
    let t = &cert.oracle.trajectory;
    assert!((t[0] - 5.0).abs() < 1e-9, "{t:?}");
    assert!(t[1..].iter().all(|&v| v.abs() < 1e-9), "{t:?}");
    assert!((cert.milp_objective - 5.0).abs() < 1e-9);
    assert_eq!(cert.plan.nbs[0].energized_step, Some(1));
    assert_eq!(cert.plan.nbs[0].bus, BusId(3));
}

#[test]
fn guard_rejects_large_instances() {
    let (case, scenario) = common::load("cases/ieee9.json", "scenarios/ieee9_all.json");
    assert!(enumerate_optimal(&case, &scenario, &guard()).is_err());
}

#[test]
fn ieee9_matches_enumeration_with_widened_guard() {
    let (case, scenario) = common::load("cases/ieee9.json", "scenarios/ieee9_all.json");
    let wide = SizeGuard { max_damaged_lines: 9, ..SizeGuard::default() };
    let cert = cross_check(&case, &scenario, &wide, &MilpLimits::default()).unwrap();
    assert!(cert.certified, "{}", cert.describe());
    assert_eq!(cert.oracle.atoms, 1680 * 25);
    assert!(cert.plan.gap <= 1e-6);
}
