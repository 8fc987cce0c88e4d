//! Sparse LU factorization of a simplex basis with Markowitz pivoting, plus
//! product-form eta updates between refactorizations.

use std::collections::BTreeSet;

/// Entries below this magnitude are never accepted as pivots.
const ABS_PIVOT_TOL: f64 = 1e-11;
/// Threshold partial pivoting: a pivot must be at least this fraction of the
/// largest entry in its column.
const REL_PIVOT_TOL: f64 = 0.01;
/// Columns of minimal count examined per pivot search.
const SEARCH_COLUMNS: usize = 4;

/// Basis could not be factored: the listed slots are dependent and the listed
/// rows are left uncovered. Both lists have equal length.
#[derive(Debug, Clone)]
pub(crate) struct Singular {
    pub slots: Vec<usize>,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    l_cols: Vec<Vec<(usize, f64)>>,
    u_rows: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
}

impl LuFactor {
    /// Factor the `m x m` matrix whose column `k` is `columns[k]` (row, value).
    pub fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut col_count = vec![0usize; m];
        for (c, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                rows[r].push((c, v));
                col_rows[c].push(r);
                col_count[c] += 1;
            }
        }
        let mut row_active = vec![true; m];
        let mut col_active = vec![true; m];
        // Active columns ordered by count, for the Markowitz search.
        let mut queue: BTreeSet<(usize, usize)> = (0..m).map(|c| (col_count[c], c)).collect();
        let mut pos = vec![usize::MAX; m];

        let mut f = LuFactor {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_col: Vec::with_capacity(m),
            l_cols: Vec::with_capacity(m),
            u_rows: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
        };

        for _ in 0..m {
            let Some((r, c)) = select_pivot(&rows, &col_rows, &col_count, &row_active, &col_active, &queue)
            else {
                let slots: Vec<usize> = (0..m).filter(|&c| col_active[c]).collect();
                let left: Vec<usize> = (0..m).filter(|&r| row_active[r]).collect();
                return Err(Singular { slots, rows: left });
            };

            let pivot_row = std::mem::take(&mut rows[r]);
            let p = pivot_row.iter().find(|e| e.0 == c).map(|e| e.1).unwrap_or(0.0);
            row_active[r] = false;
            col_active[c] = false;
            queue.remove(&(col_count[c], c));
            for &(j, _) in &pivot_row {
                if col_active[j] {
                    queue.remove(&(col_count[j], j));
                    queue.insert((col_count[j] - 1, j));
                }
                col_count[j] -= 1;
            }

            let mut lcol = Vec::new();
            let candidates = std::mem::take(&mut col_rows[c]);
            for &i in &candidates {
                if !row_active[i] {
                    continue;
                }
                let row = &mut rows[i];
                let Some(k) = row.iter().position(|e| e.0 == c) else {
                    continue;
                };
                let a = row.swap_remove(k).1;
                col_count[c] = col_count[c].saturating_sub(1);
                if a == 0.0 {
                    continue;
                }
                let l = a / p;
                lcol.push((i, l));
                for (k, &(j, _)) in row.iter().enumerate() {
                    pos[j] = k;
                }
                for &(j, u) in &pivot_row {
                    if j == c {
                        continue;
                    }
                    if pos[j] != usize::MAX {
                        row[pos[j]].1 -= l * u;
                    } else {
                        row.push((j, -l * u));
                        col_rows[j].push(i);
                        queue.remove(&(col_count[j], j));
                        col_count[j] += 1;
                        queue.insert((col_count[j], j));
                    }
                }
                for &(j, _) in row.iter() {
                    pos[j] = usize::MAX;
                }
            }

            f.pivot_row.push(r);
            f.pivot_col.push(c);
            f.l_cols.push(lcol);
            f.u_rows.push(pivot_row.into_iter().filter(|e| e.0 != c).collect());
            f.u_diag.push(p);
        }
        Ok(f)
    }

    /// Solve `B x = b` in place: `b` is row-indexed on entry and slot-indexed
    /// on exit.
    pub fn solve(&self, b: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            let v = b[self.pivot_row[k]];
            if v != 0.0 {
                for &(i, l) in &self.l_cols[k] {
                    b[i] -= l * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let mut v = b[self.pivot_row[k]];
            for &(j, u) in &self.u_rows[k] {
                v -= u * work[j];
            }
            work[self.pivot_col[k]] = v / self.u_diag[k];
        }
        b.copy_from_slice(work);
    }

    /// Solve `B' y = d` in place: `d` is slot-indexed on entry and row-indexed
    /// on exit.
    pub fn solve_transpose(&self, d: &mut [f64], work: &mut [f64]) {
        for k in 0..self.m {
            let r = self.pivot_row[k];
            let z = d[self.pivot_col[k]] / self.u_diag[k];
            work[r] = z;
            if z != 0.0 {
                for &(j, u) in &self.u_rows[k] {
                    d[j] -= u * z;
                }
            }
        }
        for k in (0..self.m).rev() {
            let r = self.pivot_row[k];
            let mut z = work[r];
            for &(i, l) in &self.l_cols[k] {
                z -= l * work[i];
            }
            work[r] = z;
        }
        d.copy_from_slice(work);
    }

    pub fn nnz(&self) -> usize {
        self.m
            + self.l_cols.iter().map(Vec::len).sum::<usize>()
            + self.u_rows.iter().map(Vec::len).sum::<usize>()
    }
}

fn select_pivot(
    rows: &[Vec<(usize, f64)>],
    col_rows: &[Vec<usize>],
    col_count: &[usize],
    row_active: &[bool],
    col_active: &[bool],
    queue: &BTreeSet<(usize, usize)>,
) -> Option<(usize, usize)> {
    if queue.is_empty() {
        return None;
    }

    let mut best: Option<(usize, f64, usize, usize)> = None; // (markowitz, |v|, r, c)
    let scan = |c: usize, best: &mut Option<(usize, f64, usize, usize)>| {
        let entries: Vec<(usize, f64)> = col_rows[c]
            .iter()
            .filter(|&&r| row_active[r])
            .filter_map(|&r| rows[r].iter().find(|e| e.0 == c).map(|e| (r, e.1)))
            .collect();
        let colmax = entries.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));
        if colmax < ABS_PIVOT_TOL {
            return;
        }
        for (r, v) in entries {
            let a = v.abs();
            if a < ABS_PIVOT_TOL || a < REL_PIVOT_TOL * colmax {
                continue;
            }
            let mk = (rows[r].len() - 1) * (col_count[c].max(1) - 1);
            let better = match &*best {
                None => true,
                Some((bm, ba, br, bc)) => {
                    let (bm, ba, br, bc) = (*bm, *ba, *br, *bc);
                    mk < bm || (mk == bm && (a > ba || (a == ba && (c, r) < (bc, br))))
                }
            };
            if better {
                *best = Some((mk, a, r, c));
            }
        }
    };
    for &(_, c) in queue.iter().take(SEARCH_COLUMNS) {
        scan(c, &mut best);
    }
    if best.is_none() {
        // Every short column is numerically empty; fall back to a full scan.
        for c in (0..col_active.len()).filter(|&c| col_active[c]) {
            scan(c, &mut best);
        }
    }
    best.map(|(_, _, r, c)| (r, c))
}

/// One product-form update: the basis column at `slot` was replaced and
/// `alpha` is the entering column expressed in the old basis.
#[derive(Debug, Clone)]
struct Eta {
    slot: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// LU factor of a reference basis followed by a file of eta updates.
#[derive(Debug, Clone, Default)]
pub(crate) struct BasisFactor {
    lu: LuFactor,
    etas: Vec<Eta>,
    work: Vec<f64>,
}

impl BasisFactor {
    pub fn new(lu: LuFactor) -> Self {
        let m = lu.m;
        Self { lu, etas: Vec::new(), work: vec![0.0; m] }
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.etas.iter().map(|e| e.entries.len() + 1).sum()
    }

    pub fn lu_nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// `B^{-1} b`: row-indexed in, slot-indexed out.
    pub fn ftran(&mut self, b: &mut [f64]) {
        self.lu.solve(b, &mut self.work);
        for eta in &self.etas {
            let v = b[eta.slot] / eta.pivot;
            b[eta.slot] = v;
            if v != 0.0 {
                for &(i, a) in &eta.entries {
                    b[i] -= a * v;
                }
            }
        }
    }

    /// `B^{-T} d`: slot-indexed in, row-indexed out.
    pub fn btran(&mut self, d: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = d[eta.slot];
            for &(i, a) in &eta.entries {
                v -= a * d[i];
            }
            d[eta.slot] = v / eta.pivot;
        }
        self.lu.solve_transpose(d, &mut self.work);
    }

    /// Record that slot `slot` now holds the column whose FTRAN is `alpha`.
    pub fn update(&mut self, slot: usize, alpha: &[f64]) {
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != slot && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta { slot, pivot: alpha[slot], entries });
    }
}
