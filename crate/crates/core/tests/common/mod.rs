//! Seeded instance generators shared by the integration tests and the
//! `gen_data` example, which writes their output under `data/`.

#![allow(dead_code)]

pub mod check;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use gridrestore::grid::{
    Bus, BusId, DamageScenario, GenId, GenKind, Generator, GridCase, Line, LineId, DEFAULT_CRANK_FRACTION,
};
use gridrestore::io;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeds of the committed random fixtures.
pub const FIXTURE_SEEDS: std::ops::RangeInclusive<u64> = 1..=12;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn load(case: &str, scenario: &str) -> (GridCase, DamageScenario) {
    let dir = data_dir();
    let case = io::load_case(&dir.join(case)).unwrap();
    let scenario = io::load_scenario(&dir.join(scenario), &case).unwrap();
    (case, scenario)
}

pub fn fixture_paths(seed: u64) -> (String, String) {
    (format!("fixtures/random_{seed:02}.case.json"), format!("fixtures/random_{seed:02}.scenario.json"))
}

fn line(id: u32, from: u32, to: u32, cap: f64, reactance: Option<f64>) -> Line {
    Line { id: LineId(id), from_bus: BusId(from), to_bus: BusId(to), f_min: -cap, f_max: cap, reactance }
}

fn generator(id: u32, bus: u32, kind: GenKind, p_max: f64) -> Generator {
    Generator { id: GenId(id), bus: BusId(bus), kind, p_min: 0.0, p_max, crank_fraction: DEFAULT_CRANK_FRACTION }
}

/// Random tree plus extra edges over buses `1..=n`; returns endpoint pairs.
fn random_edges(rng: &mut ChaCha8Rng, n: u32, extra: usize, locality: u32) -> Vec<(u32, u32)> {
    let mut edges: Vec<(u32, u32)> = (2..=n).map(|i| (rng.gen_range(i.saturating_sub(locality).max(1)..i), i)).collect();
    let mut seen: BTreeSet<(u32, u32)> = edges.iter().copied().collect();
    while edges.len() < (n as usize - 1) + extra {
        let a = rng.gen_range(1..=n);
        let b = rng.gen_range(1..=n);
        let key = (a.min(b), a.max(b));
        if a != b && seen.insert(key) {
            edges.push(key);
        }
    }
    edges
}

/// Small instance within the oracle's default size guard: 3 to 5 buses, one
/// black-start unit at bus 1, up to two NBS units, 2 to 5 damaged lines.
pub fn random_instance(seed: u64) -> (GridCase, DamageScenario) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: u32 = rng.gen_range(3..=5);
    let buses = (1..=n)
        .map(|i| Bus { id: BusId(i), demand: if i == 1 { 0.0 } else { 5.0 * f64::from(rng.gen_range(0..=8u32)) } })
        .collect();
    let extra = rng.gen_range(0..=1);
    let lines: Vec<Line> = random_edges(&mut rng, n, extra, n)
        .into_iter()
        .zip(1..)
        .map(|((a, b), id)| line(id, a, b, 10.0 * f64::from(rng.gen_range(2..=8u32)), None))
        .collect();

    let mut generators = vec![generator(1, 1, GenKind::BS, 10.0 * f64::from(rng.gen_range(3..=10u32)))];
    let mut hosts: Vec<u32> = (2..=n).collect();
    hosts.shuffle(&mut rng);
    let nbs = rng.gen_range(0..=2usize).min(hosts.len());
    for (k, &bus) in hosts[..nbs].iter().enumerate() {
        generators.push(generator(k as u32 + 2, bus, GenKind::NBS, 20.0 * f64::from(rng.gen_range(1..=5u32))));
    }

    let mut ids: Vec<LineId> = lines.iter().map(|l| l.id).collect();
    ids.shuffle(&mut rng);
    let count = rng.gen_range(2..=5usize).min(ids.len());
    let mut damaged = ids[..count].to_vec();
    damaged.sort();
    let scenario = DamageScenario {
        damaged_line_ids: damaged,
        budget: rng.gen_range(1..=2),
        horizon: rng.gen_range(2..=4),
        demand_profile: Vec::new(),
    };
    let case = GridCase { name: Some(format!("random-{seed:02}")), buses, lines, generators };
    (case, scenario)
}

/// Synthetic 113-bus network: 149 lines, 29 generators of which 10 are NBS,
/// 69 load buses. Built from a fixed seed; no real system is represented.
pub fn synthetic_113() -> (GridCase, DamageScenario) {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    let n = 113u32;
    let edges = random_edges(&mut rng, n, 149 - 112, 8);
    let lines: Vec<Line> = edges
        .into_iter()
        .zip(1..)
        .map(|((a, b), id)| {
            let cap = 50.0 * f64::from(rng.gen_range(4..=10u32));
            let x = f64::from(rng.gen_range(10..=120u32)) / 1000.0;
            line(id, a, b, cap, Some(x))
        })
        .collect();

    let mut order: Vec<u32> = (1..=n).collect();
    order.shuffle(&mut rng);
    let (gen_buses, rest) = order.split_at(29);
    let load_buses: BTreeSet<u32> = rest[..69].iter().copied().collect();
    let buses: Vec<Bus> = (1..=n)
        .map(|i| {
            let demand = if load_buses.contains(&i) { 10.0 * f64::from(rng.gen_range(3..=15u32)) } else { 0.0 };
            Bus { id: BusId(i), demand }
        })
        .collect();
    let generators = gen_buses
        .iter()
        .zip(1..)
        .map(|(&bus, id)| {
            let kind = if id <= 10 { GenKind::NBS } else { GenKind::BS };
            generator(id, bus, kind, 50.0 * f64::from(rng.gen_range(4..=12u32)))
        })
        .collect();

    let scenario = DamageScenario {
        damaged_line_ids: lines.iter().map(|l| l.id).collect(),
        budget: 30,
        horizon: 10,
        demand_profile: Vec::new(),
    };
    (GridCase { name: Some("synthetic-113".into()), buses, lines, generators }, scenario)
}
