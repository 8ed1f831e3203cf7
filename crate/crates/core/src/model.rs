//! System model: configuration, channels with ellipsoidal CSI errors,
//! beamformers, SINR evaluation and the sampling-based worst-case oracle.

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Slack on `e^H C e <= 1` so that vectors constructed exactly on the
/// boundary are not rejected because of rounding.
const BOUNDARY_SLACK: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;

/// One (transmitting BS, served cell, user) triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub bs: usize,
    pub cell: usize,
    pub user: usize,
}

impl Link {
    pub fn new(bs: usize, cell: usize, user: usize) -> Self {
        Link { bs, cell, user }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub num_cells: usize,
    pub users_per_cell: usize,
    pub num_antennas: usize,
    /// `α_i`, one per cell.
    pub power_weights: Vec<f64>,
    /// Linear SINR targets, indexed `cell * K + user`.
    pub sinr_targets: Vec<f64>,
    /// Noise powers in watts, indexed like `sinr_targets`.
    pub noise_powers: Vec<f64>,
    /// `ξ_jiℓ` caps in watts, see [`SystemConfig::cap_index`]. Only the
    /// single-cell designs need them.
    pub interference_caps: Option<Vec<f64>>,
}

fn all_positive(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite() && *v > 0.0)
}

impl SystemConfig {
    pub fn new(
        num_cells: usize,
        users_per_cell: usize,
        num_antennas: usize,
        power_weights: Vec<f64>,
        sinr_targets: Vec<f64>,
        noise_powers: Vec<f64>,
        interference_caps: Option<Vec<f64>>,
    ) -> Result<Self> {
        let cfg = SystemConfig {
            num_cells,
            users_per_cell,
            num_antennas,
            power_weights,
            sinr_targets,
            noise_powers,
            interference_caps,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same target, noise power and cap everywhere; unit power weights.
    pub fn uniform(
        num_cells: usize,
        users_per_cell: usize,
        num_antennas: usize,
        sinr_target: f64,
        noise_power: f64,
        cap: Option<f64>,
    ) -> Result<Self> {
        let users = num_cells * users_per_cell;
        let caps = num_cells * num_cells.saturating_sub(1) * users_per_cell;
        Self::new(
            num_cells,
            users_per_cell,
            num_antennas,
            vec![1.0; num_cells],
            vec![sinr_target; users],
            vec![noise_power; users],
            cap.map(|c| vec![c; caps]),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_cells == 0 || self.users_per_cell == 0 || self.num_antennas == 0 {
            return Err(invalid("cell, user and antenna counts must be at least 1"));
        }
        let users = self.num_users();
        if self.power_weights.len() != self.num_cells || !all_positive(&self.power_weights) {
            return Err(invalid(format!("expected {} positive power weights", self.num_cells)));
        }
        if self.sinr_targets.len() != users || !all_positive(&self.sinr_targets) {
            return Err(invalid(format!("expected {users} positive SINR targets")));
        }
        if self.noise_powers.len() != users || !all_positive(&self.noise_powers) {
            return Err(invalid(format!("expected {users} positive noise powers")));
        }
        if let Some(caps) = &self.interference_caps {
            let n = self.num_cells * (self.num_cells - 1) * self.users_per_cell;
            if caps.len() != n || !all_positive(caps) {
                return Err(invalid(format!("expected {n} positive interference caps")));
            }
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.num_cells * self.users_per_cell
    }

    pub fn user_index(&self, cell: usize, user: usize) -> usize {
        cell * self.users_per_cell + user
    }

    pub fn target(&self, cell: usize, user: usize) -> f64 {
        self.sinr_targets[self.user_index(cell, user)]
    }

    pub fn noise(&self, cell: usize, user: usize) -> f64 {
        self.noise_powers[self.user_index(cell, user)]
    }

    pub fn weight(&self, cell: usize) -> f64 {
        self.power_weights[cell]
    }

    /// Position of `ξ_{bs,cell,user}` (bs ≠ cell): ordered by bs, then by
    /// cell with bs skipped, then by user.
    pub fn cap_index(&self, bs: usize, cell: usize, user: usize) -> usize {
        debug_assert_ne!(bs, cell);
        let c = if cell > bs { cell - 1 } else { cell };
        (bs * (self.num_cells - 1) + c) * self.users_per_cell + user
    }

    pub fn cap(&self, bs: usize, cell: usize, user: usize) -> Option<f64> {
        let caps = self.interference_caps.as_ref()?;
        Some(caps[self.cap_index(bs, cell, user)])
    }

    pub fn with_targets(&self, target: f64) -> Self {
        SystemConfig { sinr_targets: vec![target; self.num_users()], ..self.clone() }
    }
}

/// The admissible CSI-error set `{e : e^H C e <= 1}`.
#[derive(Clone, Debug, PartialEq)]
pub enum ErrorEllipsoid {
    /// `C = I / ε²`; `ε = 0` is the degenerate zero ball.
    Ball {
        radius: f64,
    },
    Shape {
        matrix: CMatrix,
        inv_sqrt: CMatrix,
    },
}

impl ErrorEllipsoid {
    pub fn spherical(radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(invalid(format!("ellipsoid radius must be finite and >= 0, got {radius}")));
        }
        Ok(ErrorEllipsoid::Ball { radius })
    }

    pub fn from_shape(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 || !linalg::all_finite(&matrix) {
            return Err(invalid("shape matrix must be square, nonempty and finite"));
        }
        if linalg::hermitian_deviation(&matrix) > HERMITIAN_TOL * (1.0 + linalg::max_abs(&matrix)) {
            return Err(invalid("shape matrix is not Hermitian"));
        }
        let matrix = linalg::symmetrize(&matrix);
        if linalg::min_eigenvalue(&matrix) <= 0.0 {
            return Err(invalid("shape matrix is not positive definite"));
        }
        let inv_sqrt = linalg::inverse_sqrt(&matrix);
        Ok(ErrorEllipsoid::Shape { matrix, inv_sqrt })
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            ErrorEllipsoid::Ball { radius } => Some(*radius),
            ErrorEllipsoid::Shape { .. } => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, ErrorEllipsoid::Ball { radius } if *radius == 0.0)
    }

    /// `C`, or `None` for the zero ball where it is undefined.
    pub fn shape_matrix(&self, n: usize) -> Option<CMatrix> {
        match self {
            ErrorEllipsoid::Ball { radius } if *radius == 0.0 => None,
            ErrorEllipsoid::Ball { radius } => {
                Some(CMatrix::identity(n, n) * Complex64::new(1.0 / (radius * radius), 0.0))
            }
            ErrorEllipsoid::Shape { matrix, .. } => Some(matrix.clone()),
        }
    }

    /// Largest `‖e‖` over the set.
    pub fn outer_radius(&self) -> f64 {
        match self {
            ErrorEllipsoid::Ball { radius } => *radius,
            ErrorEllipsoid::Shape { matrix, .. } => 1.0 / linalg::min_eigenvalue(matrix).sqrt(),
        }
    }

    /// `e^H C e`; for the zero ball this is 0 at `e = 0` and infinite elsewhere.
    pub fn measure(&self, e: &CVector) -> f64 {
        match self {
            ErrorEllipsoid::Ball { radius } => {
                if *radius == 0.0 {
                    if e.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    e.norm_squared() / (radius * radius)
                }
            }
            ErrorEllipsoid::Shape { matrix, .. } => linalg::quad_form(matrix, e),
        }
    }

    pub fn contains(&self, e: &CVector) -> bool {
        self.measure(e) <= 1.0 + BOUNDARY_SLACK
    }

    /// The set `{f·e}`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ErrorEllipsoid::Ball { radius } => ErrorEllipsoid::Ball { radius: radius * factor },
            ErrorEllipsoid::Shape { matrix, inv_sqrt } => ErrorEllipsoid::Shape {
                matrix: matrix * Complex64::new(1.0 / (factor * factor), 0.0),
                inv_sqrt: inv_sqrt * Complex64::new(factor, 0.0),
            },
        }
    }

    /// Map a point of the unit ball onto the ellipsoid (`C^{-1/2} u`).
    pub fn from_unit_ball(&self, u: &CVector) -> CVector {
        match self {
            ErrorEllipsoid::Ball { radius } => u * Complex64::new(*radius, 0.0),
            ErrorEllipsoid::Shape { inv_sqrt, .. } => inv_sqrt * u,
        }
    }
}

/// Nominal channels and error sets for every link. Links are stored
/// user-major so that one user's `N_c` incoming channels are contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    num_cells: usize,
    users_per_cell: usize,
    num_antennas: usize,
    nominal: Vec<CVector>,
    ellipsoids: Vec<ErrorEllipsoid>,
    large_scale_gains: Vec<f64>,
}

impl ChannelSet {
    /// `nominal`, `ellipsoids` and `large_scale_gains` are in link order
    /// (see [`ChannelSet::link_index`]).
    pub fn new(
        num_cells: usize,
        users_per_cell: usize,
        num_antennas: usize,
        nominal: Vec<CVector>,
        ellipsoids: Vec<ErrorEllipsoid>,
        large_scale_gains: Vec<f64>,
    ) -> Result<Self> {
        let links = num_cells * num_cells * users_per_cell;
        if num_cells == 0 || users_per_cell == 0 || num_antennas == 0 {
            return Err(invalid("channel set dimensions must be at least 1"));
        }
        if nominal.len() != links || ellipsoids.len() != links || large_scale_gains.len() != links {
            return Err(invalid(format!("channel set needs exactly {links} links")));
        }
        for (idx, h) in nominal.iter().enumerate() {
            if h.len() != num_antennas || !linalg::all_finite_vec(h) {
                return Err(invalid(format!("nominal channel {idx} must be a finite {num_antennas}-vector")));
            }
        }
        for ell in &ellipsoids {
            if let ErrorEllipsoid::Shape { matrix, .. } = ell {
                if matrix.nrows() != num_antennas {
                    return Err(invalid("ellipsoid shape does not match antenna count"));
                }
            }
        }
        if !large_scale_gains.iter().all(|g| g.is_finite() && *g > 0.0) {
            return Err(invalid("large-scale gains must be positive"));
        }
        Ok(ChannelSet { num_cells, users_per_cell, num_antennas, nominal, ellipsoids, large_scale_gains })
    }

    /// Channels given directly: unit gains and the same ellipsoid everywhere.
    pub fn from_nominal(
        num_cells: usize,
        users_per_cell: usize,
        nominal: Vec<CVector>,
        ellipsoid: ErrorEllipsoid,
    ) -> Result<Self> {
        let n = nominal.first().map_or(0, |h| h.len());
        let links = nominal.len();
        Self::new(num_cells, users_per_cell, n, nominal, vec![ellipsoid; links], vec![1.0; links])
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_links(&self) -> usize {
        self.nominal.len()
    }

    pub fn link_index(&self, link: Link) -> usize {
        (link.cell * self.users_per_cell + link.user) * self.num_cells + link.bs
    }

    /// Inverse of [`ChannelSet::link_index`].
    pub fn link_at(&self, index: usize) -> Link {
        let bs = index % self.num_cells;
        let u = index / self.num_cells;
        Link::new(bs, u / self.users_per_cell, u % self.users_per_cell)
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        (0..self.num_links()).map(|i| self.link_at(i))
    }

    pub fn nominal(&self, link: Link) -> &CVector {
        &self.nominal[self.link_index(link)]
    }

    pub fn ellipsoid(&self, link: Link) -> &ErrorEllipsoid {
        &self.ellipsoids[self.link_index(link)]
    }

    pub fn large_scale_gain(&self, link: Link) -> f64 {
        self.large_scale_gains[self.link_index(link)]
    }

    pub fn nominal_all(&self) -> &[CVector] {
        &self.nominal
    }

    pub fn ellipsoids(&self) -> &[ErrorEllipsoid] {
        &self.ellipsoids
    }

    /// Nominal channels from every BS to user `(cell, user)`, indexed by BS.
    pub fn user_nominal(&self, cell: usize, user: usize) -> &[CVector] {
        let start = self.link_index(Link::new(0, cell, user));
        &self.nominal[start..start + self.num_cells]
    }

    /// Same links with every ellipsoid replaced.
    pub fn with_ellipsoids(&self, ellipsoid: ErrorEllipsoid) -> Self {
        ChannelSet { ellipsoids: vec![ellipsoid; self.num_links()], ..self.clone() }
    }

    pub fn check_config(&self, cfg: &SystemConfig) -> Result<()> {
        if cfg.num_cells != self.num_cells
            || cfg.users_per_cell != self.users_per_cell
            || cfg.num_antennas != self.num_antennas
        {
            return Err(invalid(format!(
                "channel set is {}x{}x{} but config is {}x{}x{}",
                self.num_cells,
                self.users_per_cell,
                self.num_antennas,
                cfg.num_cells,
                cfg.users_per_cell,
                cfg.num_antennas
            )));
        }
        Ok(())
    }
}

/// `w_ik` per user, indexed `cell * K + user`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSet {
    pub vectors: Vec<CVector>,
}

impl BeamformerSet {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        if !vectors.iter().all(linalg::all_finite_vec) {
            return Err(invalid("beamformer entries must be finite"));
        }
        Ok(BeamformerSet { vectors })
    }

    pub fn zeros(cfg: &SystemConfig) -> Self {
        BeamformerSet { vectors: vec![CVector::zeros(cfg.num_antennas); cfg.num_users()] }
    }

    /// `Σ_i α_i Σ_k ‖w_ik‖²`.
    pub fn total_power(&self, cfg: &SystemConfig) -> f64 {
        self.vectors.iter().enumerate().map(|(u, w)| cfg.weight(u / cfg.users_per_cell) * w.norm_squared()).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let f = Complex64::new(factor, 0.0);
        BeamformerSet { vectors: self.vectors.iter().map(|w| w * f).collect() }
    }

    fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.vectors.len() != cfg.num_users() {
            return Err(invalid(format!("expected {} beamformers, got {}", cfg.num_users(), self.vectors.len())));
        }
        if self.vectors.iter().any(|w| w.len() != cfg.num_antennas) {
            return Err(invalid("beamformer length does not match antenna count"));
        }
        Ok(())
    }
}

/// Signal power and total interference received by `(cell, user)` from
/// channels `h` (indexed by BS).
pub(crate) fn signal_and_interference(
    h: &[CVector],
    beams: &BeamformerSet,
    cfg: &SystemConfig,
    cell: usize,
    user: usize,
) -> (f64, f64) {
    let k_count = cfg.users_per_cell;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (bs, hj) in h.iter().enumerate() {
        for l in 0..k_count {
            let p = hj.dotc(&beams.vectors[bs * k_count + l]).norm_sqr();
            if bs == cell && l == user {
                signal = p;
            } else {
                interference += p;
            }
        }
    }
    (signal, interference)
}

/// Linear SINR of user `(cell, user)` given its realized channels `h`
/// from every BS (indexed by BS).
pub fn compute_sinr(h: &[CVector], beams: &BeamformerSet, cfg: &SystemConfig, user: (usize, usize)) -> Result<f64> {
    let (cell, k) = user;
    if cell >= cfg.num_cells || k >= cfg.users_per_cell {
        return Err(invalid(format!("user ({cell}, {k}) out of range")));
    }
    if h.len() != cfg.num_cells || h.iter().any(|v| v.len() != cfg.num_antennas) {
        return Err(invalid("channel dimensions do not match the configuration"));
    }
    beams.check(cfg)?;
    let (s, i) = signal_and_interference(h, beams, cfg, cell, k);
    Ok(s / (i + cfg.noise(cell, k)))
}

/// Realized channels `h = h̄ + e`, with `errors` in link order.
pub fn perturb(channels: &ChannelSet, errors: &[CVector]) -> Result<Vec<CVector>> {
    if errors.len() != channels.num_links() {
        return Err(invalid(format!("expected {} error vectors, got {}", channels.num_links(), errors.len())));
    }
    let mut out = Vec::with_capacity(errors.len());
    for (idx, e) in errors.iter().enumerate() {
        if e.len() != channels.num_antennas {
            return Err(invalid("error vector length does not match antenna count"));
        }
        let ell = &channels.ellipsoids[idx];
        if !ell.contains(e) {
            let link = channels.link_at(idx);
            return Err(Error::OutsideEllipsoid {
                bs: link.bs,
                cell: link.cell,
                user: link.user,
                value: ell.measure(e),
            });
        }
        out.push(&channels.nominal[idx] + e);
    }
    Ok(out)
}

/// Uniform point of the unit ball in `C^n` (= `R^{2n}`).
pub(crate) fn unit_ball_point<R: Rng>(rng: &mut R, n: usize) -> CVector {
    let mut v = CVector::from_fn(n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let norm = v.norm();
    let u: f64 = rng.random();
    let r = u.powf(1.0 / (2 * n) as f64);
    if norm > 0.0 {
        v *= Complex64::new(r / norm, 0.0);
    }
    v
}

/// Deterministic stream of error sets (one error vector per link, in link
/// order). The first set is always the zero perturbation.
pub struct ErrorSampler<'a> {
    channels: &'a ChannelSet,
    rng: ChaCha8Rng,
    emitted: usize,
}

impl<'a> ErrorSampler<'a> {
    pub fn new(channels: &'a ChannelSet, seed: u64) -> Self {
        ErrorSampler { channels, rng: crate::rng(seed, crate::Stream::Errors), emitted: 0 }
    }
}

impl Iterator for ErrorSampler<'_> {
    type Item = Vec<CVector>;

    fn next(&mut self) -> Option<Vec<CVector>> {
        let n = self.channels.num_antennas;
        let set = if self.emitted == 0 {
            vec![CVector::zeros(n); self.channels.num_links()]
        } else {
            self.channels
                .ellipsoids
                .iter()
                .map(|ell| {
                    let u = unit_ball_point(&mut self.rng, n);
                    ell.from_unit_ball(&u)
                })
                .collect()
        };
        self.emitted += 1;
        Some(set)
    }
}

/// `count` error sets from [`ErrorSampler`].
pub fn error_sets(channels: &ChannelSet, count: usize, seed: u64) -> Vec<Vec<CVector>> {
    ErrorSampler::new(channels, seed).take(count).collect()
}

fn user_links_perturbed(channels: &ChannelSet, errors: &[CVector], cell: usize, user: usize) -> Vec<CVector> {
    let start = channels.link_index(Link::new(0, cell, user));
    (0..channels.num_cells).map(|j| &channels.nominal[start + j] + &errors[start + j]).collect()
}

/// Minimum SINR of one user over the given error sets.
pub fn worst_sinr_over(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    cfg: &SystemConfig,
    user: (usize, usize),
    sets: &[Vec<CVector>],
) -> Result<f64> {
    channels.check_config(cfg)?;
    let mut worst = f64::INFINITY;
    for errors in sets {
        let h = user_links_perturbed(channels, errors, user.0, user.1);
        worst = worst.min(compute_sinr(&h, beams, cfg, user)?);
    }
    Ok(worst)
}

/// Minimum SINR of user `(i, k)` over `num_samples` uniform error draws
/// (the first being the zero perturbation). An upper bound on the true
/// worst case, useful as a violation detector.
pub fn sampled_worst_sinr(
    channels: &ChannelSet,
    beams: &BeamformerSet,
    cfg: &SystemConfig,
    user: (usize, usize),
    num_samples: usize,
    seed: u64,
) -> Result<f64> {
    if num_samples == 0 {
        return Err(invalid("num_samples must be at least 1"));
    }
    channels.check_config(cfg)?;
    let mut worst = f64::INFINITY;
    for errors in ErrorSampler::new(channels, seed).take(num_samples) {
        let h = user_links_perturbed(channels, &errors, user.0, user.1);
        worst = worst.min(compute_sinr(&h, beams, cfg, user)?);
    }
    Ok(worst)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cvec, unit};

    fn single(h: CVector, eps: f64) -> (ChannelSet, SystemConfig) {
        let n = h.len();
        let ch = ChannelSet::from_nominal(1, 1, vec![h], ErrorEllipsoid::spherical(eps).unwrap()).unwrap();
        (ch, SystemConfig::uniform(1, 1, n, 1.0, 1.0, None).unwrap())
    }

    #[test]
    fn matched_single_user() {
        let (_, cfg) = single(unit(3, 0), 0.0);
        let beams = BeamformerSet::new(vec![unit(3, 0) * Complex64::new(2.0, 0.0)]).unwrap();
        assert_eq!(compute_sinr(&[unit(3, 0)], &beams, &cfg, (0, 0)).unwrap(), 4.0);
        assert_eq!(compute_sinr(&[unit(3, 0)], &BeamformerSet::zeros(&cfg), &cfg, (0, 0)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (_, cfg) = single(unit(3, 0), 0.0);
        let beams = BeamformerSet::new(vec![unit(2, 0)]).unwrap();
        assert!(compute_sinr(&[unit(3, 0)], &beams, &cfg, (0, 0)).is_err());
    }

    #[test]
    fn perturb_boundary() {
        let (ch, _) = single(unit(2, 0), 0.1);
        let e = cvec(&[(0.0, 0.0), (0.1, 0.0)]);
        let h = perturb(&ch, std::slice::from_ref(&e)).unwrap();
        assert_eq!(h[0], unit(2, 0) + e);
        let e = cvec(&[(0.0, 0.0), (0.1001, 0.0)]);
        assert!(matches!(perturb(&ch, &[e]), Err(Error::OutsideEllipsoid { bs: 0, cell: 0, user: 0, .. })));
    }

    #[test]
    fn zero_ball_accepts_only_zero() {
        let (ch, _) = single(unit(2, 0), 0.0);
        assert!(perturb(&ch, &[CVector::zeros(2)]).is_ok());
        assert!(perturb(&ch, &[cvec(&[(1e-300, 0.0), (0.0, 0.0)])]).is_err());
    }

    #[test]
    fn spherical_round_trip() {
        let ell = ErrorEllipsoid::spherical(0.1).unwrap();
        assert_eq!(ell.radius(), Some(0.1));
        let c = ell.shape_matrix(3).unwrap();
        assert!((c[(1, 1)].re - 100.0).abs() < 1e-9);
        assert_eq!(c[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn shape_validation() {
        let c = |re, im| Complex64::new(re, im);
        let bad = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(ErrorEllipsoid::from_shape(bad).is_err());
        let indefinite = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert!(ErrorEllipsoid::from_shape(indefinite).is_err());
        let ok = CMatrix::from_row_slice(2, 2, &[c(4.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(4.0, 0.0)]);
        let ell = ErrorEllipsoid::from_shape(ok).unwrap();
        assert!((ell.outer_radius() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_inside() {
        let c = |re, im| Complex64::new(re, im);
        let shape = CMatrix::from_row_slice(2, 2, &[c(50.0, 0.0), c(10.0, 5.0), c(10.0, -5.0), c(200.0, 0.0)]);
        let ell = ErrorEllipsoid::from_shape(shape).unwrap();
        let ch = ChannelSet::from_nominal(1, 1, vec![unit(2, 0)], ell.clone()).unwrap();
        let sets = error_sets(&ch, 2000, 3);
        assert!(sets[0][0].iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let max = sets.iter().map(|s| ell.measure(&s[0])).fold(0.0, f64::max);
        assert!(max <= 1.0 + 1e-12 && max > 0.95);
    }

    #[test]
    fn cap_indexing_is_a_bijection() {
        let cfg = SystemConfig::uniform(3, 2, 1, 1.0, 1.0, Some(1.0)).unwrap();
        let mut seen = [false; 12];
        for j in 0..3 {
            for i in (0..3).filter(|&i| i != j) {
                for k in 0..2 {
                    let idx = cfg.cap_index(j, i, k);
                    assert!(!seen[idx]);
                    seen[idx] = true;
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn link_index_round_trip() {
        let ch = ChannelSet::from_nominal(3, 2, vec![unit(1, 0); 18], ErrorEllipsoid::spherical(0.0).unwrap()).unwrap();
        for idx in 0..18 {
            assert_eq!(ch.link_index(ch.link_at(idx)), idx);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::uniform(0, 1, 1, 1.0, 1.0, None).is_err());
        assert!(SystemConfig::uniform(1, 1, 1, 0.0, 1.0, None).is_err());
        assert!(SystemConfig::uniform(1, 1, 1, 1.0, -1.0, None).is_err());
        assert!(SystemConfig::uniform(2, 1, 1, 1.0, 1.0, Some(0.0)).is_err());
        let mut cfg = SystemConfig::uniform(2, 2, 1, 1.0, 1.0, None).unwrap();
        cfg.sinr_targets.pop();
        assert!(cfg.validate().is_err());
    }
}
