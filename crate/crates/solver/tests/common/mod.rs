//! Example problems with known answers, shared with the acceptance suite.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcbf_solver::cone::{self, svec, svec_index};
use rcbf_solver::{Cone, ConicProblem, SparseMatrix};

/// min tr(X)  s.t.  X − S = I,  X, S ⪰ 0  (2×2).
pub fn trace_above_identity() -> ConicProblem {
    let mut trip = Vec::new();
    for k in 0..3 {
        trip.push((k, k, 1.0));
        trip.push((k, 3 + k, -1.0));
    }
    let a = SparseMatrix::from_triplets(3, 6, &trip).unwrap();
    let id = svec(&DMatrix::identity(2, 2));
    let mut c = id.clone();
    c.extend([0.0; 3]);
    ConicProblem::new(c, a, id, vec![Cone::Psd(2), Cone::Psd(2)]).unwrap()
}

/// min x  s.t.  [[x, 1], [1, x]] ⪰ 0, written over Z = [[z11, z12], [z12, z22]].
pub fn two_by_two_lmi() -> ConicProblem {
    let i11 = svec_index(0, 0);
    let i12 = svec_index(0, 1);
    let i22 = svec_index(1, 1);
    let a = SparseMatrix::from_triplets(2, 3, &[(0, i12, 1.0), (1, i11, 1.0), (1, i22, -1.0)]).unwrap();
    let mut c = vec![0.0; 3];
    c[i11] = 1.0;
    ConicProblem::new(c, a, vec![std::f64::consts::SQRT_2, 0.0], vec![Cone::Psd(2)]).unwrap()
}

/// Why `(y, z)` fails to be a normalized Farkas certificate of primal
/// infeasibility, if it does.
pub fn farkas_error(p: &ConicProblem, y: &[f64], z: &[f64]) -> Option<String> {
    let by: f64 = y.iter().zip(&p.rhs).map(|(a, b)| a * b).sum();
    if by <= 0.0 {
        return Some(format!("b'y = {by} is not positive"));
    }
    let mut aty = vec![0.0; p.num_variables()];
    p.equality.mul_transpose_vec(y, &mut aty);
    let res: f64 = aty.iter().zip(z).map(|(a, z)| (a + z).powi(2)).sum::<f64>().sqrt();
    if res > 1e-7 * by {
        return Some(format!("certificate residual {res}"));
    }
    for (off, c) in p.block_offsets() {
        let ev = cone::min_eigenvalue(c, &z[off..off + c.dim()]);
        if ev < -1e-7 {
            return Some(format!("z leaves the cone (eigenvalue {ev})"));
        }
    }
    None
}

pub fn random_psd_pair(rng: &mut ChaCha8Rng, side: usize, rank_x: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = DMatrix::from_fn(side, side, |_, _| rng.random::<f64>() - 0.5);
    let q = g.qr().q();
    let mut dx = DMatrix::zeros(side, side);
    let mut ds = DMatrix::zeros(side, side);
    for i in 0..side {
        if i < rank_x {
            dx[(i, i)] = 0.5 + rng.random::<f64>();
        } else {
            ds[(i, i)] = 0.5 + rng.random::<f64>();
        }
    }
    (&q * dx * q.transpose(), &q * ds * q.transpose())
}

/// Builds an instance with a known strictly complementary optimal pair and
/// returns it with its optimal value.
pub fn constructed_instance(seed: u64) -> (ConicProblem, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cones = vec![Cone::NonNeg(3), Cone::Psd(4), Cone::Psd(3)];
    let n: usize = cones.iter().map(Cone::dim).sum();
    let m = 7;

    let mut x_star = Vec::with_capacity(n);
    let mut s_star = Vec::with_capacity(n);
    for k in 0..3 {
        let v = 0.5 + rng.random::<f64>();
        if k % 2 == 0 {
            x_star.push(v);
            s_star.push(0.0);
        } else {
            x_star.push(0.0);
            s_star.push(v);
        }
    }
    for (side, rank) in [(4, 2), (3, 1)] {
        let (x, s) = random_psd_pair(&mut rng, side, rank);
        x_star.extend(svec(&x));
        s_star.extend(svec(&s));
    }
    let y_star: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();

    let mut trip = Vec::new();
    for r in 0..m {
        for col in 0..n {
            if rng.random::<f64>() < 0.6 {
                trip.push((r, col, rng.random::<f64>() * 2.0 - 1.0));
            }
        }
    }
    let a = SparseMatrix::from_triplets(m, n, &trip).unwrap();
    let mut b = vec![0.0; m];
    a.mul_vec(&x_star, &mut b);
    let mut c = vec![0.0; n];
    a.mul_transpose_vec(&y_star, &mut c);
    for (ci, si) in c.iter_mut().zip(&s_star) {
        *ci += si;
    }
    let opt: f64 = c.iter().zip(&x_star).map(|(a, b)| a * b).sum();
    (ConicProblem::new(c, a, b, cones).unwrap(), opt)
}

/// min x  s.t.  x = −1,  x ≥ 0.
pub fn infeasible_lp() -> ConicProblem {
    let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]).unwrap();
    ConicProblem::new(vec![1.0], a, vec![-1.0], vec![Cone::NonNeg(1)]).unwrap()
}
