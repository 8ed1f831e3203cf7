//! Standard-form conic programs.
//!
//! ```text
//! minimize    c^T x
//! subject to  A x = b
//!             x ∈ K = K_1 × ... × K_p
//! ```
//!
//! with dual `maximize b^T y  s.t.  A^T y + z = c,  z ∈ K`.

use crate::cone::{self, Cone};
use crate::error::SolverError;
use std::fmt::Write as _;

/// Compressed-row sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SolverError> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(SolverError::InvalidProblem(format!("triplet ({r}, {c}) outside {nrows}x{ncols}")));
            }
            if !v.is_finite() {
                return Err(SolverError::InvalidProblem(format!("non-finite entry at ({r}, {c})")));
            }
            sorted.push((r, c, v));
        }
        sorted.sort_by_key(|t| (t.0, t.1));

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = SparseMatrix { nrows, ncols, row_ptr, col_idx, values };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| *v != 0.0) {
            return;
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = values.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of one row as `(col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate().take(self.nrows) {
            *o = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    /// `out = A^T y`
    pub fn mul_transpose_vec(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, &yr) in y.iter().enumerate().take(self.nrows) {
            if yr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut row_ptr = vec![0usize; rows.len() + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (k, &r) in rows.iter().enumerate() {
            for (c, v) in self.row(r) {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr[k + 1] = values.len();
        }
        SparseMatrix { nrows: rows.len(), ncols: self.ncols, row_ptr, col_idx, values }
    }
}

/// A conic program in standard form.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub objective: Vec<f64>,
    pub equality: SparseMatrix,
    pub rhs: Vec<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    pub fn new(
        objective: Vec<f64>,
        equality: SparseMatrix,
        rhs: Vec<f64>,
        cones: Vec<Cone>,
    ) -> Result<Self, SolverError> {
        let p = ConicProblem { objective, equality, rhs, cones };
        p.validate()?;
        Ok(p)
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    /// Sum of the barrier degrees of all blocks.
    pub fn degree(&self) -> usize {
        self.cones.iter().map(Cone::degree).sum()
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n: usize = self.cones.iter().map(Cone::dim).sum();
        if n != self.objective.len() {
            return Err(SolverError::InvalidProblem(format!(
                "cone dimensions sum to {n} but objective has {} entries",
                self.objective.len()
            )));
        }
        if self.equality.ncols() != n {
            return Err(SolverError::InvalidProblem(format!(
                "equality matrix has {} columns, expected {n}",
                self.equality.ncols()
            )));
        }
        if self.equality.nrows() != self.rhs.len() {
            return Err(SolverError::InvalidProblem(format!(
                "equality matrix has {} rows but rhs has {} entries",
                self.equality.nrows(),
                self.rhs.len()
            )));
        }
        if self.objective.iter().chain(&self.rhs).any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidProblem("non-finite data".into()));
        }
        Ok(())
    }

    /// Writes the plain-text dump format.
    ///
    /// ```text
    /// conic-problem v1
    /// dims <constraints> <variables>
    /// cones <count>
    /// nonneg <n> | psd <side>        (one line per block, in order)
    /// a <nnz>
    /// <row> <col> <value>            (0-based, row-major order)
    /// b
    /// <value>                        (one per constraint)
    /// c
    /// <value>                        (one per variable)
    /// ```
    ///
    /// PSD blocks use the scaled upper-triangle vectorization documented in
    /// [`crate::cone`]. Values are written in shortest round-trip form.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "conic-problem v1");
        let _ = writeln!(s, "dims {} {}", self.num_constraints(), self.num_variables());
        let _ = writeln!(s, "cones {}", self.cones.len());
        for c in &self.cones {
            match c {
                Cone::NonNeg(n) => {
                    let _ = writeln!(s, "nonneg {n}");
                }
                Cone::Psd(m) => {
                    let _ = writeln!(s, "psd {m}");
                }
            }
        }
        let _ = writeln!(s, "a {}", self.equality.nnz());
        for (r, c, v) in self.equality.triplets() {
            let _ = writeln!(s, "{r} {c} {v:e}");
        }
        let _ = writeln!(s, "b");
        for v in &self.rhs {
            let _ = writeln!(s, "{v:e}");
        }
        let _ = writeln!(s, "c");
        for v in &self.objective {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    /// Parses the format written by [`ConicProblem::to_dump`].
    pub fn from_dump(text: &str) -> Result<Self, SolverError> {
        let bad = |msg: &str| SolverError::InvalidProblem(format!("dump parse error: {msg}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let mut next = || lines.next().ok_or_else(|| bad("unexpected end of input"));

        if next()? != "conic-problem v1" {
            return Err(bad("missing header"));
        }
        let parse_usize = |t: Option<&str>| -> Result<usize, SolverError> {
            t.and_then(|v| v.parse().ok()).ok_or_else(|| bad("expected integer"))
        };
        let parse_f64 = |t: Option<&str>| -> Result<f64, SolverError> {
            t.and_then(|v| v.parse().ok()).ok_or_else(|| bad("expected number"))
        };

        let dims = next()?;
        let mut it = dims.split_whitespace();
        if it.next() != Some("dims") {
            return Err(bad("expected dims"));
        }
        let m = parse_usize(it.next())?;
        let n = parse_usize(it.next())?;

        let line = next()?;
        let mut it = line.split_whitespace();
        if it.next() != Some("cones") {
            return Err(bad("expected cones"));
        }
        let ncones = parse_usize(it.next())?;
        let mut cones = Vec::with_capacity(ncones);
        for _ in 0..ncones {
            let line = next()?;
            let mut it = line.split_whitespace();
            let kind = it.next();
            let size = parse_usize(it.next())?;
            cones.push(match kind {
                Some("nonneg") => Cone::NonNeg(size),
                Some("psd") => Cone::Psd(size),
                _ => return Err(bad("unknown cone kind")),
            });
        }

        let line = next()?;
        let mut it = line.split_whitespace();
        if it.next() != Some("a") {
            return Err(bad("expected a"));
        }
        let nnz = parse_usize(it.next())?;
        let mut triplets = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let line = next()?;
            let mut it = line.split_whitespace();
            let r = parse_usize(it.next())?;
            let c = parse_usize(it.next())?;
            let v = parse_f64(it.next())?;
            triplets.push((r, c, v));
        }
        if next()? != "b" {
            return Err(bad("expected b"));
        }
        let mut rhs = Vec::with_capacity(m);
        for _ in 0..m {
            rhs.push(parse_f64(Some(next()?))?);
        }
        if next()? != "c" {
            return Err(bad("expected c"));
        }
        let mut objective = Vec::with_capacity(n);
        for _ in 0..n {
            objective.push(parse_f64(Some(next()?))?);
        }
        let equality = SparseMatrix::from_triplets(m, n, &triplets)?;
        ConicProblem::new(objective, equality, rhs, cones)
    }

    /// Primal, dual and gap residuals of a candidate point, all relative:
    ///
    /// * primal `‖Ax − b‖ / (1 + ‖b‖ + ‖x‖)`
    /// * dual `‖A^T y + z − c‖ / (1 + ‖c‖ + ‖z‖)`
    /// * gap `|c^T x − b^T y| / (1 + |c^T x| + |b^T y|)`
    pub fn residuals(&self, x: &[f64], y: &[f64], z: &[f64]) -> Residuals {
        let mut ax = vec![0.0; self.num_constraints()];
        self.equality.mul_vec(x, &mut ax);
        let primal = norm(ax.iter().zip(&self.rhs).map(|(a, b)| a - b))
            / (1.0 + norm(self.rhs.iter().copied()) + norm(x.iter().copied()));

        let mut aty = vec![0.0; self.num_variables()];
        self.equality.mul_transpose_vec(y, &mut aty);
        let dual = norm(aty.iter().zip(z).zip(&self.objective).map(|((a, z), c)| a + z - c))
            / (1.0 + norm(self.objective.iter().copied()) + norm(z.iter().copied()));

        let cx = dot(&self.objective, x);
        let by = dot(&self.rhs, y);
        let gap = (cx - by).abs() / (1.0 + cx.abs() + by.abs());
        Residuals { primal, dual, gap }
    }

    /// Offsets of each cone block in the variable vector.
    pub fn block_offsets(&self) -> Vec<(usize, Cone)> {
        cone::offsets(&self.cones).collect()
    }
}

/// Relative residuals of a candidate point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(it: impl Iterator<Item = f64>) -> f64 {
    it.map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ConicProblem {
        let a = SparseMatrix::from_triplets(2, 4, &[(0, 0, 1.0), (0, 1, 2.0), (1, 2, -1.5), (1, 3, 0.25), (1, 2, 0.5)])
            .unwrap();
        ConicProblem::new(vec![1.0, 0.0, 0.0, 1.0], a, vec![1.0, -2.0], vec![Cone::NonNeg(1), Cone::Psd(2)]).unwrap()
    }

    #[test]
    fn duplicates_are_summed() {
        let p = small();
        let row: Vec<_> = p.equality.row(1).collect();
        assert_eq!(row, vec![(2, -1.0), (3, 0.25)]);
    }

    #[test]
    fn dump_round_trips() {
        let p = small();
        let text = p.to_dump();
        let q = ConicProblem::from_dump(&text).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn zero_point_primal_residual() {
        let p = small();
        let r = p.residuals(&[0.0; 4], &[0.0; 2], &p.objective.clone());
        let nb = 5.0f64.sqrt();
        assert!((r.primal - nb / (1.0 + nb)).abs() < 1e-15);
        assert_eq!(r.dual, 0.0);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let a = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0)]).unwrap();
        let err = ConicProblem::new(vec![0.0; 3], a, vec![1.0], vec![Cone::Psd(2), Cone::NonNeg(1)]);
        assert!(err.is_err());
    }
}
