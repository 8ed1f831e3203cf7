//! Removal of linearly dependent equality rows.
//!
//! Rows are normalized to unit length and a pivoted Cholesky factorization
//! of their Gram matrix picks a maximal independent subset. Each dropped row
//! is checked for consistency against the kept ones; an inconsistent row
//! yields a Farkas certificate `y` with `A^T y = 0` and `b^T y = 1`.

use crate::problem::{ConicProblem, SparseMatrix};
use nalgebra::DMatrix;

const PIVOT_TOL: f64 = 1e-12;
const CONSISTENCY_TOL: f64 = 1e-8;

pub(crate) enum Presolve {
    Reduced { kept: Vec<usize>, equality: SparseMatrix, rhs: Vec<f64> },
    Inconsistent { certificate: Vec<f64> },
}

fn gram(a: &SparseMatrix, scale: &[f64]) -> DMatrix<f64> {
    let m = a.nrows();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); a.ncols()];
    for (r, sr) in scale.iter().enumerate().take(m) {
        for (c, v) in a.row(r) {
            columns[c].push((r, v * sr));
        }
    }
    let mut g = DMatrix::zeros(m, m);
    for col in &columns {
        for (p, &(ri, vi)) in col.iter().enumerate() {
            for &(rj, vj) in &col[p..] {
                g[(ri, rj)] += vi * vj;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

pub(crate) fn presolve(problem: &ConicProblem) -> Presolve {
    let a = &problem.equality;
    let m = a.nrows();
    let row_norms: Vec<f64> = (0..m).map(|r| a.row(r).map(|(_, v)| v * v).sum::<f64>().sqrt()).collect();
    let scale: Vec<f64> = row_norms.iter().map(|&n| if n > 0.0 { 1.0 / n } else { 0.0 }).collect();
    let g = gram(a, &scale);

    // Pivoted Cholesky: greedily take the row with the largest remaining
    // diagonal until everything left is below tolerance.
    let mut work = g.clone();
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut kept = Vec::new();
    let mut l_cols: Vec<Vec<f64>> = Vec::new();
    loop {
        let best = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| work[(*a.1, *a.1)].total_cmp(&work[(*b.1, *b.1)]).then(b.1.cmp(a.1)));
        let Some((pos, &piv)) = best else { break };
        let d = work[(piv, piv)];
        if d <= PIVOT_TOL {
            break;
        }
        remaining.swap_remove(pos);
        let sd = d.sqrt();
        let mut col = vec![0.0; m];
        col[piv] = sd;
        for &r in &remaining {
            col[r] = work[(r, piv)] / sd;
        }
        for &r in &remaining {
            for &s in &remaining {
                work[(r, s)] -= col[r] * col[s];
            }
        }
        kept.push(piv);
        l_cols.push(col);
    }
    kept.sort_unstable();

    if kept.len() < m {
        let dropped: Vec<usize> = (0..m).filter(|r| !kept.contains(r)).collect();
        let bhat: Vec<f64> = (0..m).map(|r| problem.rhs[r] * scale[r]).collect();
        let bmax = bhat.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let g_kk = DMatrix::from_fn(kept.len(), kept.len(), |i, j| g[(kept[i], kept[j])]);
        let chol = g_kk.cholesky();
        for &r in &dropped {
            let rhs = nalgebra::DVector::from_fn(kept.len(), |i, _| g[(kept[i], r)]);
            let z = match &chol {
                Some(c) => c.solve(&rhs),
                None => nalgebra::DVector::zeros(kept.len()),
            };
            let predicted: f64 = kept.iter().enumerate().map(|(i, &k)| z[i] * bhat[k]).sum();
            let mismatch = bhat[r] - predicted;
            let zero_row = row_norms[r] == 0.0;
            let inconsistent = if zero_row {
                problem.rhs[r].abs() > CONSISTENCY_TOL * (1.0 + bmax)
            } else {
                mismatch.abs() > CONSISTENCY_TOL * (1.0 + bmax)
            };
            if inconsistent {
                let mut y = vec![0.0; m];
                let bty;
                if zero_row {
                    y[r] = 1.0;
                    bty = problem.rhs[r];
                } else {
                    y[r] = scale[r];
                    for (i, &k) in kept.iter().enumerate() {
                        y[k] = -z[i] * scale[k];
                    }
                    bty = mismatch;
                }
                y.iter_mut().for_each(|v| *v /= bty);
                return Presolve::Inconsistent { certificate: y };
            }
        }
    }

    Presolve::Reduced { equality: a.select_rows(&kept), rhs: kept.iter().map(|&r| problem.rhs[r]).collect(), kept }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::Cone;

    fn problem(rows: &[(usize, usize, f64)], m: usize, b: Vec<f64>) -> ConicProblem {
        let a = SparseMatrix::from_triplets(m, 3, rows).unwrap();
        ConicProblem::new(vec![1.0; 3], a, b, vec![Cone::NonNeg(3)]).unwrap()
    }

    #[test]
    fn keeps_independent_rows() {
        let p = problem(&[(0, 0, 1.0), (1, 1, 1.0)], 2, vec![1.0, 2.0]);
        match presolve(&p) {
            Presolve::Reduced { kept, .. } => assert_eq!(kept, vec![0, 1]),
            _ => panic!("unexpected inconsistency"),
        }
    }

    #[test]
    fn drops_consistent_duplicate() {
        let p = problem(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0), (2, 2, 1.0)], 3, vec![1.0, 2.0, 3.0]);
        match presolve(&p) {
            Presolve::Reduced { kept, rhs, .. } => {
                assert_eq!(kept.len(), 2);
                assert!(kept.contains(&2));
                assert_eq!(rhs.len(), 2);
            }
            _ => panic!("unexpected inconsistency"),
        }
    }

    #[test]
    fn inconsistent_duplicate_gives_certificate() {
        let p = problem(&[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0)], 2, vec![1.0, 3.0]);
        match presolve(&p) {
            Presolve::Inconsistent { certificate } => {
                let mut aty = vec![0.0; 3];
                p.equality.mul_transpose_vec(&certificate, &mut aty);
                assert!(aty.iter().all(|v| v.abs() < 1e-12));
                let bty: f64 = certificate.iter().zip(&p.rhs).map(|(a, b)| a * b).sum();
                assert!((bty - 1.0).abs() < 1e-12);
            }
            _ => panic!("expected inconsistency"),
        }
    }

    #[test]
    fn zero_row_with_nonzero_rhs_is_inconsistent() {
        let p = problem(&[(0, 0, 1.0)], 2, vec![1.0, -4.0]);
        assert!(matches!(presolve(&p), Presolve::Inconsistent { .. }));
    }
}
