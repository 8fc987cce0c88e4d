//! Generic mixed-integer linear program in row/column form.

use std::fmt;

/// Integrality of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

/// Sense of a linear row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    /// `(column index, coefficient)`; each column appears at most once.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Amount by which `values` violate this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Minimization problem `min c'x  s.t.  rows, lower <= x <= upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Problem {
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
}

/// Structural defect in a [`Problem`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("row {row} references column {column}, but only {len} columns exist")]
    DanglingColumn { row: String, column: usize, len: usize },
    #[error("row {row} lists column {column} twice")]
    DuplicateEntry { row: String, column: usize },
    #[error("binary column {0} must have bounds within [0, 1]")]
    BinaryBounds(String),
    #[error("column {0} has lower bound above upper bound")]
    CrossedBounds(String),
    #[error("non-finite coefficient or rhs in row {0}")]
    NonFinite(String),
}

impl Problem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_column(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        cost: f64,
        kind: VarKind,
    ) -> usize {
        self.columns.push(Column { name: name.into(), lower, upper, cost, kind });
        self.columns.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row { name: name.into(), coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn integer_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    pub fn has_integers(&self) -> bool {
        self.columns.iter().any(|c| c.kind == VarKind::Binary)
    }

    pub fn objective(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.cost * v).sum()
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        for c in &self.columns {
            if c.lower > c.upper || c.lower.is_nan() || c.upper.is_nan() {
                return Err(ProblemError::CrossedBounds(c.name.clone()));
            }
            if c.kind == VarKind::Binary && (c.lower < 0.0 || c.upper > 1.0) {
                return Err(ProblemError::BinaryBounds(c.name.clone()));
            }
        }
        let mut seen = vec![usize::MAX; self.columns.len()];
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ProblemError::NonFinite(row.name.clone()));
            }
            for &(j, a) in &row.coeffs {
                if j >= self.columns.len() {
                    return Err(ProblemError::DanglingColumn {
                        row: row.name.clone(),
                        column: j,
                        len: self.columns.len(),
                    });
                }
                if !a.is_finite() {
                    return Err(ProblemError::NonFinite(row.name.clone()));
                }
                if seen[j] == i {
                    return Err(ProblemError::DuplicateEntry { row: row.name.clone(), column: j });
                }
                seen[j] = i;
            }
        }
        Ok(())
    }

    /// Largest bound, row, or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let bounds = self.columns.iter().zip(values).map(|(c, &v)| {
            let b = (c.lower - v).max(v - c.upper).max(0.0);
            if c.kind == VarKind::Binary {
                b.max((v - v.round()).abs())
            } else {
                b
            }
        });
        let rows = self.rows.iter().map(|r| r.violation(values));
        bounds.chain(rows).fold(0.0, f64::max)
    }
}
