//! Human- and machine-readable renderings of a [`RestorationPlan`].

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::model::RestorationPlan;

pub const TRAJECTORY_HEADER: [&str; 4] = ["step", "total_unserved_MW", "lines_repaired", "nbs_energized"];

/// Fixed-point rendering with at least six significant digits. Noise below
/// `1e-7` prints as `0`.
pub fn format_mw(v: f64) -> String {
    if v.abs() < 1e-7 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(6) as usize;
    format!("{v:.decimals$}")
}

/// One row per step: unserved load, lines repaired at that step, and NBS
/// units energized so far.
pub fn trajectory_csv(plan: &RestorationPlan) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER).expect("in-memory write");
    for s in &plan.steps {
        w.write_record([
            s.step.to_string(),
            format_mw(s.total_unserved),
            s.lines_repaired.len().to_string(),
            s.nbs_energized_total.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_trajectory(path: &Path, plan: &RestorationPlan) -> io::Result<()> {
    crate::io::write_atomic(path, trajectory_csv(plan).as_bytes())
}

/// Parse a trajectory written by [`trajectory_csv`] back into
/// `(step, unserved, repaired, energized)` rows.
pub fn read_trajectory(text: &str) -> Result<Vec<(u32, f64, usize, usize)>, csv::Error> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize().collect()
}

/// Short multi-line description of the schedule.
pub fn summary(plan: &RestorationPlan) -> String {
    let mut out = String::new();
    if let Some(name) = &plan.case_name {
        let _ = writeln!(out, "case: {name}");
    }
    let _ = writeln!(out, "status: {}", plan.status);
    let _ = writeln!(out, "unserved energy: {} MW-steps", format_mw(plan.objective));
    let _ = writeln!(out, "bound: {}  gap: {:.2e}", format_mw(plan.bound), plan.gap);
    for s in &plan.steps {
        let lines: Vec<String> = s.lines_repaired.iter().map(|l| l.to_string()).collect();
        let gens: Vec<String> = s.nbs_energized.iter().map(|g| g.to_string()).collect();
        let _ = write!(out, "step {}: unserved {} MW", s.step, format_mw(s.total_unserved));
        if !lines.is_empty() {
            let _ = write!(out, "; repair {}", lines.join(" "));
        }
        if !gens.is_empty() {
            let _ = write!(out, "; energize {}", gens.join(" "));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_mw(0.0), "0");
        assert_eq!(format_mw(3e-9), "0");
        assert_eq!(format_mw(-2e-8), "0");
        assert_eq!(format_mw(315.0), "315.000000");
        assert_eq!(format_mw(0.000123456789), "0.000123457");
        assert_eq!(format_mw(1234567.0), "1234567.000000");
        for v in [0.5f64, 12.345678, 98765.4321, 0.0031415926] {
            let s = format_mw(v);
            let digits = s.trim_start_matches(['0', '.']).chars().filter(char::is_ascii_digit).count();
            assert!(digits >= 6, "{s}");
        }
    }
}
