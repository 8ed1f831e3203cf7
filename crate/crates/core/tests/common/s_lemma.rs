//! Random robust quadratics in `C^2` and a sampling oracle for their
//! worst case over the ellipsoid. Shared with the acceptance suite.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rcbf_core::linalg::{inverse_sqrt, CMatrix, CVector};
use rcbf_core::lmi::{s_procedure, RobustQuadratic, VarId};
use rcbf_core::problems::lmi_margin;
use rcbf_solver::SolverOptions;

/// A disagreement closer than this to the boundary is not counted.
pub const BOUNDARY_BAND: f64 = 1e-6;

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_quadratic(seed: u64) -> RobustQuadratic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(2, 2, |_, _| cn(&mut rng));
    let a = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    let b = CVector::from_fn(2, |_, _| cn(&mut rng) * 0.5);
    let s = CMatrix::from_fn(2, 2, |_, _| cn(&mut rng));
    let shape = &s * s.adjoint() + CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
    let c = rng.random_range(-1.0..2.0);
    RobustQuadratic::new(a, b, c, shape).unwrap()
}

/// `(min over samples, min after local refinement)` of the quadratic over
/// `{e : e^H C e <= 1}`. Samples are drawn in whitened coordinates `u`
/// (`e = C^{-1/2} u`), half inside the unit ball and half on its surface.
pub fn sampled_minimum(rq: &RobustQuadratic, samples: usize, seed: u64) -> (f64, f64) {
    let root = inverse_sqrt(&rq.shape);
    let at = &root * &rq.a * &root;
    let bt = &root * &rq.b;
    let value = |u: &CVector| (u.dotc(&(&at * u)).re + 2.0 * bt.dotc(u).re) + rq.c;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    let mut best_u = CVector::zeros(2);
    for i in 0..samples {
        let mut u = CVector::from_fn(2, |_, _| cn(&mut rng));
        let r: f64 = if i % 2 == 0 { rng.random::<f64>().powf(0.25) } else { 1.0 };
        u *= Complex64::new(r / u.norm(), 0.0);
        let v = value(&u);
        if v < best {
            best = v;
            best_u = u;
        }
    }
    // Projected gradient descent from the best sample.
    let step = 0.5 / (DMatrix::from_fn(2, 2, |i, j| at[(i, j)].norm()).norm() + 1.0);
    let mut u = best_u;
    let mut refined = best;
    for _ in 0..2000 {
        let grad = (&at * &u + &bt) * Complex64::new(2.0, 0.0);
        let mut next = &u - grad * Complex64::new(step, 0.0);
        let n = next.norm();
        if n > 1.0 {
            next /= Complex64::new(n, 0.0);
        }
        u = next;
        refined = refined.min(value(&u));
    }
    (best, refined)
}

/// Whether some `λ >= 0` makes the S-procedure block PSD, decided by the
/// conic solver through the block's eigenvalue margin.
pub fn lmi_feasible(rq: &RobustQuadratic) -> bool {
    let block = s_procedure(rq, VarId(0)).unwrap();
    lmi_margin(&block, &SolverOptions::default()).unwrap() >= -BOUNDARY_BAND
}

pub struct Agreement {
    pub instances: usize,
    /// Instances the LMI declares feasible.
    pub feasible: usize,
    pub agree: usize,
    pub near_boundary: usize,
    pub hard: Vec<(u64, f64)>,
}

pub fn check_agreement(instances: usize, samples: usize) -> Agreement {
    let mut out = Agreement { instances, feasible: 0, agree: 0, near_boundary: 0, hard: Vec::new() };
    for seed in 0..instances as u64 {
        let rq = random_quadratic(seed);
        let (_, min) = sampled_minimum(&rq, samples, seed ^ 0x5eed);
        let feasible = lmi_feasible(&rq);
        out.feasible += feasible as usize;
        if feasible == (min >= 0.0) {
            out.agree += 1;
        } else if min.abs() <= BOUNDARY_BAND {
            out.near_boundary += 1;
        } else {
            out.hard.push((seed, min));
        }
    }
    out
}
