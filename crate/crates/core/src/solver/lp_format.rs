//! Writer for the CPLEX-style LP text format.
//!
//! Output is a pure function of the problem: the same problem always renders
//! to the same bytes. Every column gets exactly one line in `Bounds`.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use super::{Problem, VarKind};

const MAX_LINE: usize = 240;

fn number(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn push_terms(out: &mut String, label: &str, terms: &[(f64, &str)]) {
    let mut line = format!(" {label}:");
    if terms.is_empty() {
        line.push_str(" 0");
    }
    for &(a, name) in terms {
        let sign = if a < 0.0 { '-' } else { '+' };
        let term = format!(" {sign} {} {name}", number(a.abs()));
        if line.len() + term.len() > MAX_LINE {
            out.push_str(&line);
            out.push('\n');
            line = String::from("  ");
        }
        line.push_str(&term);
    }
    out.push_str(&line);
}

/// Render `problem` as an LP document.
pub fn write_lp(problem: &Problem, w: &mut impl Write) -> io::Result<()> {
    let names: Vec<&str> = problem.columns.iter().map(|c| c.name.as_str()).collect();
    let mut out = String::new();
    out.push_str("\\ generated by gridrestore\n");
    out.push_str("Minimize\n");
    let objective: Vec<(f64, &str)> = problem
        .columns
        .iter()
        .filter(|c| c.cost != 0.0)
        .map(|c| (c.cost, c.name.as_str()))
        .collect();
    push_terms(&mut out, "obj", &objective);
    out.push_str("\nSubject To\n");
    for (i, row) in problem.rows.iter().enumerate() {
        let label = if row.name.is_empty() { format!("r{i}") } else { row.name.clone() };
        let terms: Vec<(f64, &str)> = row.coeffs.iter().map(|&(j, a)| (a, names[j])).collect();
        push_terms(&mut out, &label, &terms);
        let _ = writeln!(out, " {} {}", row.sense, number(row.rhs));
    }
    out.push_str("Bounds\n");
    for c in &problem.columns {
        let _ = match (c.lower.is_finite(), c.upper.is_finite()) {
            _ if c.lower == c.upper => writeln!(out, " {} = {}", c.name, number(c.lower)),
            (false, false) => writeln!(out, " {} free", c.name),
            (true, true) => {
                writeln!(out, " {} <= {} <= {}", number(c.lower), c.name, number(c.upper))
            }
            (true, false) => writeln!(out, " {} >= {}", c.name, number(c.lower)),
            (false, true) => writeln!(out, " -inf <= {} <= {}", c.name, number(c.upper)),
        };
    }
    let binaries: Vec<&str> = problem
        .columns
        .iter()
        .filter(|c| c.kind == VarKind::Binary)
        .map(|c| c.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for name in binaries {
            let _ = writeln!(out, " {name}");
        }
    }
    out.push_str("End\n");
    w.write_all(out.as_bytes())
}

/// Write `problem` to `path` atomically.
pub fn export_lp(problem: &Problem, path: &Path) -> io::Result<()> {
    let mut buf = Vec::new();
    write_lp(problem, &mut buf)?;
    crate::io::write_atomic(path, &buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::Sense;

    fn render(p: &Problem) -> String {
        let mut buf = Vec::new();
        write_lp(p, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn section<'a>(doc: &'a str, start: &str, end: &str) -> Vec<&'a str> {
        let body = doc.split(start).nth(1).unwrap().split(end).next().unwrap();
        body.lines().filter(|l| !l.trim().is_empty()).collect()
    }

    #[test]
    fn single_variable_document() {
        let mut p = Problem::new();
        p.add_column("x", 0.0, 4.0, 2.5, VarKind::Continuous);
        let doc = render(&p);
        assert_eq!(section(&doc, "Bounds\n", "End"), vec![" 0 <= x <= 4"]);
        let obj = section(&doc, "Minimize\n", "Subject To");
        assert_eq!(obj, vec![" obj: + 2.5 x"]);
    }

    #[test]
    fn rows_bounds_and_binaries() {
        let mut p = Problem::new();
        let x = p.add_column("x", f64::NEG_INFINITY, f64::INFINITY, -1.0, VarKind::Continuous);
        let b = p.add_column("b", 0.0, 1.0, 0.0, VarKind::Binary);
        let s = p.add_column("s", 1.0, 1.0, 0.0, VarKind::Continuous);
        p.add_row("cap", vec![(x, 1.0), (b, -3.0)], Sense::Le, 0.0);
        p.add_row("link", vec![(s, 2.0), (b, 1.0)], Sense::Ge, -1.5);
        let doc = render(&p);
        assert!(doc.contains(" cap: + 1 x - 3 b <= 0\n"));
        assert!(doc.contains(" link: + 2 s + 1 b >= -1.5\n"));
        assert!(doc.contains(" x free\n"));
        assert!(doc.contains(" s = 1\n"));
        assert_eq!(section(&doc, "Binary\n", "End"), vec![" b"]);
        assert_eq!(doc, render(&p));
    }

    #[test]
    fn long_rows_wrap() {
        let mut p = Problem::new();
        let cols: Vec<usize> = (0..200)
            .map(|i| p.add_column(format!("LS_bus{i}_t1"), 0.0, 1.0, 1.0, VarKind::Continuous))
            .collect();
        p.add_row("big", cols.iter().map(|&c| (c, 1.0)).collect(), Sense::Le, 5.0);
        let doc = render(&p);
        assert!(doc.lines().all(|l| l.len() <= MAX_LINE + 40));
    }
}
