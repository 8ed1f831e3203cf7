//! Cone blocks and the scaled-symmetric vectorization used for PSD blocks.
//!
//! A PSD block of side `m` occupies `m(m+1)/2` scalar coordinates. The
//! coordinates run over the upper triangle column by column, `(0,0), (0,1),
//! (1,1), (0,2), ...`, and off-diagonal entries carry a factor `√2`, so the
//! Euclidean inner product of two vectorized matrices equals their trace
//! inner product.

use nalgebra::DMatrix;
use std::f64::consts::SQRT_2;

/// One block of the cone product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    /// The nonnegative orthant of the given dimension.
    NonNeg(usize),
    /// Real symmetric positive semidefinite matrices of the given side.
    Psd(usize),
}

impl Cone {
    /// Number of scalar coordinates the block occupies.
    pub fn dim(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Psd(m) => svec_len(m),
        }
    }

    /// Barrier degree (the rank of the Jordan algebra).
    pub fn degree(&self) -> usize {
        match *self {
            Cone::NonNeg(n) => n,
            Cone::Psd(m) => m,
        }
    }
}

pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Position of entry `(i, j)` (either order) inside the vectorized block.
pub fn svec_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    c * (c + 1) / 2 + r
}

/// Side of a PSD block from its vectorized length, if the length is triangular.
pub fn side_from_len(len: usize) -> Option<usize> {
    let mut m = 0;
    while svec_len(m) < len {
        m += 1;
    }
    (svec_len(m) == len).then_some(m)
}

/// Expands a vectorized block into a dense symmetric matrix.
pub fn smat(v: &[f64], side: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(side));
    let mut out = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        for i in 0..=j {
            if i == j {
                out[(i, i)] = v[k];
            } else {
                let val = v[k] / SQRT_2;
                out[(i, j)] = val;
                out[(j, i)] = val;
            }
            k += 1;
        }
    }
    out
}

/// Vectorizes the symmetric part of `m` into `out`.
pub fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let side = m.nrows();
    debug_assert_eq!(out.len(), svec_len(side));
    let mut k = 0;
    for j in 0..side {
        for i in 0..=j {
            out[k] = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) * SQRT_2 };
            k += 1;
        }
    }
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; svec_len(m.nrows())];
    svec_into(m, &mut out);
    out
}

/// Identity element of a block, written into `out`.
pub fn identity_into(cone: Cone, out: &mut [f64]) {
    match cone {
        Cone::NonNeg(_) => out.fill(1.0),
        Cone::Psd(m) => {
            out.fill(0.0);
            for i in 0..m {
                out[svec_index(i, i)] = 1.0;
            }
        }
    }
}

/// Smallest "eigenvalue" of a block: the minimum coordinate for the orthant,
/// the minimum eigenvalue for a PSD block. Empty blocks report `+inf`.
pub fn min_eigenvalue(cone: Cone, v: &[f64]) -> f64 {
    match cone {
        Cone::NonNeg(_) => v.iter().copied().fold(f64::INFINITY, f64::min),
        Cone::Psd(0) => f64::INFINITY,
        Cone::Psd(m) => smat(v, m).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Yields `(offset, cone)` for each block in order.
pub fn offsets(cones: &[Cone]) -> impl Iterator<Item = (usize, Cone)> + '_ {
    cones.iter().scan(0usize, |off, &c| {
        let start = *off;
        *off += c.dim();
        Some((start, c))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn svec_preserves_inner_product() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 5.0, -1.0, 3.0, -1.0, 4.0]);
        let b = DMatrix::from_row_slice(3, 3, &[0.5, -1.0, 0.0, -1.0, 2.0, 7.0, 0.0, 7.0, 1.0]);
        let trace = (&a * &b).trace();
        let dot: f64 = svec(&a).iter().zip(svec(&b)).map(|(x, y)| x * y).sum();
        assert_relative_eq!(trace, dot, epsilon = 1e-12);
        assert_relative_eq!(smat(&svec(&a), 3), a, epsilon = 1e-14);
    }

    #[test]
    fn index_layout() {
        assert_eq!(svec_index(0, 0), 0);
        assert_eq!(svec_index(0, 1), 1);
        assert_eq!(svec_index(1, 1), 2);
        assert_eq!(svec_index(2, 0), 3);
        assert_eq!(side_from_len(10), Some(4));
        assert_eq!(side_from_len(7), None);
    }

    #[test]
    fn min_eig_of_identity() {
        let mut v = vec![0.0; Cone::Psd(4).dim()];
        identity_into(Cone::Psd(4), &mut v);
        assert_relative_eq!(min_eigenvalue(Cone::Psd(4), &v), 1.0, epsilon = 1e-14);
    }
}
