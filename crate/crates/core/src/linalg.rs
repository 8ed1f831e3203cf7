//! Small dense helpers for complex Hermitian matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Largest absolute entry deviation from Hermitian symmetry.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// `(M + M^H) / 2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order; columns of the returned matrix are the eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigen(m).0.last().copied().unwrap_or(0.0)
}

/// Hermitian inverse square root of a positive definite matrix.
pub fn inverse_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(1.0 / v.max(f64::MIN_POSITIVE).sqrt(), 0.0)),
    );
    &vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
}

/// `h^H M h`, real part (exact for Hermitian `M`).
pub fn quad_form(m: &CMatrix, h: &CVector) -> f64 {
    h.dotc(&(m * h)).re
}

/// Real symmetric embedding `[[Re M, -Im M], [Im M, Re M]]`.
pub fn embed(m: &CMatrix) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = m[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn cvec(entries: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| Complex64::new(re, im)))
}

/// Standard basis vector `e_index` of length `n`.
pub fn unit(n: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[index] = Complex64::new(1.0, 0.0);
    v
}

pub fn all_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (values, vectors) = hermitian_eigen(&m);
        assert!((values[0] - 3.0).abs() < 1e-12 && (values[1] - 1.0).abs() < 1e-12);
        let v = vectors.column(0).into_owned();
        let mv = &m * &v;
        assert!((mv - v * c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_sqrt_squares_to_inverse() {
        let m = CMatrix::from_row_slice(2, 2, &[c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]);
        let r = inverse_sqrt(&m);
        let prod = &r * &m * &r;
        assert!((prod - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn embedding_layout() {
        let m = CMatrix::from_row_slice(1, 1, &[c(2.0, 0.0)]);
        assert_eq!(embed(&m), DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]));
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 2.0), c(0.5, -2.0), c(3.0, 0.0)]);
        let e = embed(&m);
        assert_eq!(e[(0, 3)], -2.0);
        assert_eq!(e[(2, 1)], 2.0);
        assert_eq!(e.transpose(), e);
    }
}
