//! Ruiz-style equilibration of `A`.
//!
//! Rows are scaled freely. Columns of an orthant are scaled individually;
//! a PSD block gets one scalar so the cone is mapped onto itself.

use crate::cone::{self, Cone};
use crate::problem::SparseMatrix;

const PASSES: usize = 10;

pub(crate) struct Equilibration {
    /// `D`: scaled `A' = D A E`, `b' = D b`, and `y = D y'`.
    pub row: Vec<f64>,
    /// `E`: `c' = E c`, `x = E x'`, `s = s' / E`.
    pub col: Vec<f64>,
}

impl Equilibration {
    pub fn compute(a: &SparseMatrix, cones: &[Cone]) -> Self {
        let m = a.nrows();
        let n = a.ncols();
        let triplets = a.triplets();
        let mut row = vec![1.0; m];
        let mut col = vec![1.0; n];
        let groups: Vec<(usize, usize, bool)> =
            cone::offsets(cones).map(|(off, c)| (off, c.dim(), matches!(c, Cone::Psd(_)))).collect();
        for _ in 0..PASSES {
            let mut rmax = vec![0.0f64; m];
            let mut cmax = vec![0.0f64; n];
            for &(r, c, v) in &triplets {
                let v = (v * row[r] * col[c]).abs();
                rmax[r] = rmax[r].max(v);
                cmax[c] = cmax[c].max(v);
            }
            for (d, mx) in row.iter_mut().zip(&rmax) {
                if *mx > 0.0 {
                    *d /= mx.sqrt();
                }
            }
            for &(off, len, shared) in &groups {
                if shared {
                    let mx = cmax[off..off + len].iter().copied().fold(0.0, f64::max);
                    if mx > 0.0 {
                        col[off..off + len].iter_mut().for_each(|e| *e /= mx.sqrt());
                    }
                } else {
                    for k in off..off + len {
                        if cmax[k] > 0.0 {
                            col[k] /= cmax[k].sqrt();
                        }
                    }
                }
            }
        }
        Self { row, col }
    }

    pub fn scale_matrix(&self, a: &SparseMatrix) -> SparseMatrix {
        let t: Vec<_> = a.triplets().into_iter().map(|(r, c, v)| (r, c, v * self.row[r] * self.col[c])).collect();
        SparseMatrix::from_triplets(a.nrows(), a.ncols(), &t).expect("same shape, finite entries")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balances_rows_and_keeps_psd_blocks_uniform() {
        let a = SparseMatrix::from_triplets(2, 4, &[(0, 0, 1e6), (0, 1, 1.0), (1, 2, 1e-3), (1, 3, 5.0)]).unwrap();
        let cones = [Cone::NonNeg(1), Cone::Psd(2)];
        let eq = Equilibration::compute(&a, &cones);
        assert_eq!(eq.col[1], eq.col[2]);
        assert_eq!(eq.col[2], eq.col[3]);
        let s = eq.scale_matrix(&a);
        for r in 0..2 {
            let mx = s.row(r).map(|(_, v)| v.abs()).fold(0.0, f64::max);
            assert!(mx > 0.1 && mx < 10.0, "row {r}: {mx}");
        }
    }
}
