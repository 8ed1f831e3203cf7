//! Beamformers from relaxed solutions: principal eigenvectors when the
//! relaxation is tight, Gaussian randomization otherwise.

use super::{DesignStatus, SdrSolution, RANK_ONE_TOL};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::model::{error_sets, signal_and_interference, BeamformerSet, ChannelSet, Link, SystemConfig};
use crate::{rng, Stream};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_1_SQRT_2;

/// Error samples used to rescale randomized candidates of robust designs.
pub const RANDOMIZATION_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verification {
    /// Rank-one relaxation: the beamformers inherit the SDP's guarantee.
    Certified,
    /// Randomized candidate rescaled against sampled errors only.
    SampledFeasible,
}

impl Verification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verification::Certified => "certified",
            Verification::SampledFeasible => "sampled-feasible",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub beams: BeamformerSet,
    pub randomized: bool,
    pub verification: Verification,
    /// Weighted power of the beamformers over the relaxation objective.
    pub power_ratio: f64,
}

/// Principal eigenvector scaled by `√λ_max`, rotated so that its first
/// nonzero entry is real and nonnegative.
pub fn principal_beam(w: &CMatrix) -> CVector {
    let (values, vectors) = linalg::hermitian_eigen(w);
    let n = w.nrows();
    if values.is_empty() || values[0] <= 0.0 {
        return CVector::zeros(n);
    }
    let mut v = vectors.column(0).into_owned();
    let largest = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-12 * largest).copied() {
        let phase = first.conj() / first.norm();
        v *= phase;
    }
    for z in v.iter_mut() {
        // Clean the rounding residue left by the rotation.
        if z.im.abs() <= f64::EPSILON * z.norm() {
            z.im = 0.0;
        }
    }
    v * Complex64::new(values[0].sqrt(), 0.0)
}

/// Beamformers from an optimal relaxed solution. `seed` drives the
/// randomization fallback and its error samples.
pub fn extract_beamformers(
    sol: &SdrSolution,
    channels: &ChannelSet,
    cfg: &SystemConfig,
    randomization_trials: usize,
    seed: u64,
) -> Result<Extraction> {
    if sol.status != DesignStatus::Optimal {
        return Err(invalid(format!("cannot extract beamformers from a {} solution", sol.status)));
    }
    channels.check_config(cfg)?;
    if sol.covariances.len() != cfg.num_users() {
        return Err(invalid("solution does not match the configuration"));
    }
    let ratio = |beams: &BeamformerSet| {
        if sol.objective > 0.0 {
            beams.total_power(cfg) / sol.objective
        } else {
            1.0
        }
    };
    if sol.rank_one_gap.iter().all(|g| *g <= RANK_ONE_TOL) {
        let beams = BeamformerSet::new(sol.covariances.iter().map(principal_beam).collect())?;
        let power_ratio = ratio(&beams);
        return Ok(Extraction { beams, randomized: false, verification: Verification::Certified, power_ratio });
    }

    let samples = if sol.kind.is_robust() { RANDOMIZATION_SAMPLES } else { 1 };
    let sets = error_sets(channels, samples, seed);
    let realized: Vec<Vec<CVector>> =
        sets.iter().map(|errors| channels.nominal_all().iter().zip(errors).map(|(h, e)| h + e).collect()).collect();
    let factors: Vec<CMatrix> = sol.covariances.iter().map(psd_factor).collect();
    let mut r = rng(seed, Stream::Randomization);
    let mut best: Option<BeamformerSet> = None;
    let mut best_power = f64::INFINITY;
    for _ in 0..randomization_trials {
        let candidate = BeamformerSet {
            vectors: factors
                .iter()
                .map(|f| {
                    let z = CVector::from_fn(f.ncols(), |_, _| {
                        let re: f64 = r.sample(StandardNormal);
                        let im: f64 = r.sample(StandardNormal);
                        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
                    });
                    f * z
                })
                .collect(),
        };
        let Some(scale) = min_common_scale(&candidate, channels, cfg, &realized) else { continue };
        let scaled = candidate.scaled(scale);
        let power = scaled.total_power(cfg);
        if power < best_power {
            best_power = power;
            best = Some(scaled);
        }
    }
    let beams = best.ok_or(Error::ExtractionFailed(randomization_trials))?;
    let power_ratio = ratio(&beams);
    Ok(Extraction { beams, randomized: true, verification: Verification::SampledFeasible, power_ratio })
}

/// `F` with `F Fᴴ = W` (negative eigenvalues clipped).
fn psd_factor(w: &CMatrix) -> CMatrix {
    let (values, vectors) = linalg::hermitian_eigen(w);
    let d = CVector::from_iterator(values.len(), values.iter().map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0)));
    vectors * CMatrix::from_diagonal(&d)
}

/// Smallest `β` such that `β·w` meets every SINR target on every realized
/// channel set. SINR at scale `β` is `β²S/(β²I + σ²)`, so each constraint
/// gives `β² ≥ γσ²/(S − γI)` when `S > γI` and is unattainable otherwise.
fn min_common_scale(
    beams: &BeamformerSet,
    channels: &ChannelSet,
    cfg: &SystemConfig,
    realized: &[Vec<CVector>],
) -> Option<f64> {
    let mut beta2: f64 = 0.0;
    for links in realized {
        for i in 0..cfg.num_cells {
            for k in 0..cfg.users_per_cell {
                let start = channels.link_index(Link::new(0, i, k));
                let h = &links[start..start + cfg.num_cells];
                let (s, interf) = signal_and_interference(h, beams, cfg, i, k);
                let gamma = cfg.target(i, k);
                let margin = s - gamma * interf;
                if margin.is_nan() || margin <= 0.0 {
                    return None;
                }
                beta2 = beta2.max(gamma * cfg.noise(i, k) / margin);
            }
        }
    }
    // Guard against landing a rounding error below the target.
    Some(beta2.sqrt() * (1.0 + 1e-9))
}
