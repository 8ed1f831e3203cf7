//! The four beamforming designs as semidefinite programs.
//!
//! Every design is relaxed (`w wᴴ → W ⪰ 0`) and each robust constraint is
//! replaced by its S-procedure LMI. Before assembly each link is rescaled
//! so that the solver sees entries of order one: with
//! `s = ‖h̄‖/√N_t` per link and a reference power `P`, the variables are
//! `W = P·W̃`, `t = s²P·t̃` and `λ = s²P·λ̃`, and every block is divided by
//! `s²P` (a congruence, so feasibility is unchanged). SINR blocks are
//! further multiplied by `γ` so the own-signal term has unit weight (their
//! multiplier then stands for `λ = s²P/γ·λ̃`).

mod builder;
mod extract;

pub use builder::{lmi_margin, solve_lmi, ConicBuilder, LmiSolution};
pub use extract::{extract_beamformers, principal_beam, Extraction, Verification};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::lmi::{build_phi, build_psi, Bound, HermitianVar, LmiBlock, PhiSpec, PsiSpec, VarId};
use crate::model::{ChannelSet, ErrorEllipsoid, Link, SystemConfig};
use num_complex::Complex64;
use rcbf_solver::{ConicProblem, SolverOptions, Status};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Eigenvalue ratio below which a covariance counts as rank one.
pub const RANK_ONE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    NominalMcbf,
    NominalSbf,
    RobustMcbf,
    RobustSbf,
}

impl DesignKind {
    pub const ALL: [DesignKind; 4] =
        [DesignKind::NominalMcbf, DesignKind::NominalSbf, DesignKind::RobustMcbf, DesignKind::RobustSbf];

    pub fn as_str(&self) -> &'static str {
        match self {
            DesignKind::NominalMcbf => "nominal_mcbf",
            DesignKind::NominalSbf => "nominal_sbf",
            DesignKind::RobustMcbf => "robust_mcbf",
            DesignKind::RobustSbf => "robust_sbf",
        }
    }

    pub fn is_robust(&self) -> bool {
        matches!(self, DesignKind::RobustMcbf | DesignKind::RobustSbf)
    }

    pub fn is_coordinated(&self) -> bool {
        matches!(self, DesignKind::NominalMcbf | DesignKind::RobustMcbf)
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DesignKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown design kind '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DesignStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalFailure,
}

impl DesignStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            DesignStatus::Optimal => "optimal",
            DesignStatus::PrimalInfeasible => "primal-infeasible",
            DesignStatus::DualInfeasible => "dual-infeasible",
            DesignStatus::NumericalFailure => "numerical-failure",
        }
    }

    /// Design problems are handed to the solver as its dual, so the
    /// infeasibility labels swap.
    fn from_conic(status: Status) -> Self {
        match status {
            Status::Optimal => DesignStatus::Optimal,
            Status::DualInfeasible => DesignStatus::PrimalInfeasible,
            Status::PrimalInfeasible => DesignStatus::DualInfeasible,
            Status::NumericalFailure | Status::IterationLimit => DesignStatus::NumericalFailure,
        }
    }

    /// Severity used when merging per-cell results.
    fn rank(&self) -> u8 {
        match self {
            DesignStatus::Optimal => 0,
            DesignStatus::DualInfeasible => 1,
            DesignStatus::PrimalInfeasible => 2,
            DesignStatus::NumericalFailure => 3,
        }
    }
}

impl fmt::Display for DesignStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DesignStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            DesignStatus::Optimal,
            DesignStatus::PrimalInfeasible,
            DesignStatus::DualInfeasible,
            DesignStatus::NumericalFailure,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| invalid(format!("unknown status '{s}'")))
    }
}

/// Role of one constraint block in a design problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockRole {
    /// SINR constraint of user `(cell, user)`.
    Sinr { cell: usize, user: usize },
    /// Intercell interference bound on a cross link (coordinated designs).
    Interference(Link),
    /// Leakage cap on a cross link (single-cell designs).
    Leakage(Link),
    /// `W ⪰ 0` for a user index.
    Covariance(usize),
    /// Sign constraint on a scalar variable.
    Sign(VarId),
}

/// A design problem in LMI form together with its standard-form image.
#[derive(Clone, Debug)]
pub struct DesignProblem {
    pub kind: DesignKind,
    /// Cells whose covariances are decision variables.
    pub cells: Vec<usize>,
    pub conic: ConicProblem,
    /// Normalized constraint blocks (see module docs).
    pub blocks: Vec<(BlockRole, LmiBlock)>,
    /// `(user index, W̃)`.
    pub covariances: Vec<(usize, HermitianVar)>,
    /// `(link, λ̃, factor)` with `λ = factor·λ̃`.
    pub multipliers: Vec<(Link, VarId, f64)>,
    pub slacks: Vec<(Link, VarId)>,
    /// Reference power `P` in watts.
    pub power_scale: f64,
    /// `s` per link, in channel link order.
    pub link_scale: Vec<f64>,
    pub num_vars: usize,
}

impl DesignProblem {
    pub fn count(&self, pred: impl Fn(&BlockRole) -> bool) -> usize {
        self.blocks.iter().filter(|(r, _)| pred(r)).count()
    }

    /// Complex dimensions of the blocks matching `pred`.
    pub fn block_dims(&self, pred: impl Fn(&BlockRole) -> bool) -> Vec<usize> {
        self.blocks.iter().filter(|(r, _)| pred(r)).map(|(_, b)| b.dim()).collect()
    }

    fn link_scale_of(&self, channels: &ChannelSet, link: Link) -> f64 {
        self.link_scale[channels.link_index(link)]
    }

    /// Covariance `W = P·W̃` of a user from normalized values.
    pub fn covariance(&self, values: &[f64], var: &HermitianVar) -> CMatrix {
        var.assemble(values) * Complex64::new(self.power_scale, 0.0)
    }
}

fn link_scales(channels: &ChannelSet) -> Vec<f64> {
    let sqrt_n = (channels.num_antennas() as f64).sqrt();
    channels
        .links()
        .map(|l| {
            let norm = channels.nominal(l).norm() / sqrt_n;
            let radius = channels.ellipsoid(l).outer_radius();
            if norm > 0.0 {
                norm
            } else if radius > 0.0 {
                radius
            } else {
                1.0
            }
        })
        .collect()
}

/// Median single-user matched-filter power over the users of `cells`.
fn reference_power(channels: &ChannelSet, cfg: &SystemConfig, cells: &[usize], scales: &[f64]) -> f64 {
    let n = cfg.num_antennas as f64;
    let mut p: Vec<f64> = cells
        .iter()
        .flat_map(|&i| (0..cfg.users_per_cell).map(move |k| (i, k)))
        .map(|(i, k)| {
            let s = scales[channels.link_index(Link::new(i, i, k))];
            cfg.noise(i, k) * cfg.target(i, k) / (n * s * s)
        })
        .filter(|v| v.is_finite() && *v > 0.0)
        .collect();
    if p.is_empty() {
        return 1.0;
    }
    p.sort_by(f64::total_cmp);
    let mid = p.len() / 2;
    if p.len() % 2 == 1 {
        p[mid]
    } else {
        0.5 * (p[mid - 1] + p[mid])
    }
}

struct Normalized {
    nominal: crate::linalg::CVector,
    ellipsoid: ErrorEllipsoid,
    scale: f64,
}

fn normalized(channels: &ChannelSet, scales: &[f64], link: Link, robust: bool) -> Normalized {
    let s = scales[channels.link_index(link)];
    let ellipsoid =
        if robust { channels.ellipsoid(link).scaled(1.0 / s) } else { ErrorEllipsoid::Ball { radius: 0.0 } };
    Normalized { nominal: channels.nominal(link) * Complex64::new(1.0 / s, 0.0), ellipsoid, scale: s }
}

/// Which constraints make up a design.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Form {
    /// SINR constraints with explicit interference (nominal MCBF).
    CoupledNominal,
    /// SINR + per-link interference slacks (robust MCBF).
    CoupledSlack,
    /// SINR with caps as constants + leakage caps (SBF).
    SingleCell,
}

fn build(kind: DesignKind, channels: &ChannelSet, cfg: &SystemConfig, cells: Vec<usize>) -> Result<DesignProblem> {
    channels.check_config(cfg)?;
    cfg.validate()?;
    let robust = kind.is_robust();
    let form = match kind {
        DesignKind::NominalMcbf => Form::CoupledNominal,
        DesignKind::RobustMcbf => Form::CoupledSlack,
        DesignKind::NominalSbf | DesignKind::RobustSbf => Form::SingleCell,
    };
    if form == Form::SingleCell && cfg.num_cells > 1 && cfg.interference_caps.is_none() {
        return Err(Error::MissingCaps);
    }
    let nc = cfg.num_cells;
    let kc = cfg.users_per_cell;
    let nt = cfg.num_antennas;
    let scales = link_scales(channels);
    let p = reference_power(channels, cfg, &cells, &scales);

    let mut b = ConicBuilder::new();
    let mut covariances = Vec::new();
    for &i in &cells {
        for k in 0..kc {
            covariances.push((cfg.user_index(i, k), b.new_hermitian(nt, cfg.weight(i))));
        }
    }
    let w_of = |user_index: usize| -> &HermitianVar {
        &covariances.iter().find(|(u, _)| *u == user_index).expect("covariance declared").1
    };
    let mut blocks: Vec<(BlockRole, LmiBlock)> = Vec::new();
    let mut multipliers = Vec::new();
    let mut slacks = Vec::new();

    let mut new_multiplier = |b: &mut ConicBuilder, link: Link, ell: &ErrorEllipsoid, factor: f64| -> Option<VarId> {
        if ell.is_degenerate() {
            return None;
        }
        let v = b.new_var(0.0);
        multipliers.push((link, v, factor));
        Some(v)
    };

    for &i in &cells {
        for k in 0..kc {
            let own_link = Link::new(i, i, k);
            let own = normalized(channels, &scales, own_link, robust);
            let own_var = w_of(cfg.user_index(i, k));
            let intra: Vec<&HermitianVar> = (0..kc).filter(|&l| l != k).map(|l| w_of(cfg.user_index(i, l))).collect();
            let norm_power = own.scale * own.scale * p;
            let mut noise = cfg.noise(i, k);
            let mut interference = Vec::new();
            match form {
                Form::CoupledNominal => {}
                Form::CoupledSlack => {
                    for j in (0..nc).filter(|&j| j != i) {
                        let t = b.new_var(0.0);
                        let sj = scales[channels.link_index(Link::new(j, i, k))];
                        slacks.push((Link::new(j, i, k), t));
                        interference.push((t, sj * sj / (own.scale * own.scale)));
                    }
                }
                Form::SingleCell => {
                    for j in (0..nc).filter(|&j| j != i) {
                        noise += cfg.cap(j, i, k).ok_or(Error::MissingCaps)?;
                    }
                }
            }
            let gamma = cfg.target(i, k);
            let lambda = new_multiplier(&mut b, own_link, &own.ellipsoid, norm_power / gamma);
            let mut phi = build_phi(&PhiSpec {
                nominal: &own.nominal,
                target: cfg.target(i, k),
                ellipsoid: &own.ellipsoid,
                own: own_var,
                intra: &intra,
                interference: &interference,
                noise: noise / norm_power,
                multiplier: lambda,
            })?;
            if form == Form::CoupledNominal {
                // Interference from the other cells, written out directly.
                for j in (0..nc).filter(|&j| j != i) {
                    let link = Link::new(j, i, k);
                    let h = channels.nominal(link);
                    for l in 0..kc {
                        let var = w_of(cfg.user_index(j, l));
                        for id in var.ids() {
                            let v = -linalg::quad_form(&var.basis(id), h) * p / norm_power;
                            phi.add_term(id, &CMatrix::from_element(1, 1, Complex64::new(v, 0.0)))?;
                        }
                    }
                }
            }
            let mut phi = phi.scaled(gamma);
            if let Some(l) = lambda {
                // Keep the multiplier's coefficient at unit scale.
                phi.scale_term(l, 1.0 / gamma);
            }
            blocks.push((BlockRole::Sinr { cell: i, user: k }, phi));
        }
    }

    match form {
        Form::CoupledNominal => {}
        Form::CoupledSlack => {
            for &(link, t) in &slacks {
                let n = normalized(channels, &scales, link, robust);
                let vars: Vec<&HermitianVar> = (0..kc).map(|l| w_of(cfg.user_index(link.bs, l))).collect();
                let lambda = new_multiplier(&mut b, link, &n.ellipsoid, n.scale * n.scale * p);
                let psi = build_psi(&PsiSpec {
                    link,
                    nominal: &n.nominal,
                    ellipsoid: &n.ellipsoid,
                    vars: &vars,
                    bound: Bound::Slack(t, 1.0),
                    multiplier: lambda,
                })?;
                blocks.push((BlockRole::Interference(link), psi));
            }
        }
        Form::SingleCell => {
            for &i in &cells {
                let vars: Vec<&HermitianVar> = (0..kc).map(|k| w_of(cfg.user_index(i, k))).collect();
                for j in (0..nc).filter(|&j| j != i) {
                    for l in 0..kc {
                        // Leakage from BS i to user l of cell j.
                        let link = Link::new(i, j, l);
                        let n = normalized(channels, &scales, link, robust);
                        let cap = cfg.cap(i, j, l).ok_or(Error::MissingCaps)?;
                        let lambda = new_multiplier(&mut b, link, &n.ellipsoid, n.scale * n.scale * p);
                        let psi = build_psi(&PsiSpec {
                            link,
                            nominal: &n.nominal,
                            ellipsoid: &n.ellipsoid,
                            vars: &vars,
                            bound: Bound::Constant(cap / (n.scale * n.scale * p)),
                            multiplier: lambda,
                        })?;
                        blocks.push((BlockRole::Leakage(link), psi));
                    }
                }
            }
        }
    }

    for (_, t) in &slacks {
        blocks.push((BlockRole::Sign(*t), sign_block(*t)));
    }
    for (_, l, _) in &multipliers {
        blocks.push((BlockRole::Sign(*l), sign_block(*l)));
    }
    for (u, w) in &covariances {
        blocks.push((BlockRole::Covariance(*u), covariance_block(w)));
    }
    for (_, block) in &blocks {
        b.add_block(block);
    }
    let conic = b.build()?;
    Ok(DesignProblem {
        kind,
        cells,
        conic,
        blocks,
        num_vars: b.num_vars(),
        covariances,
        multipliers,
        slacks,
        power_scale: p,
        link_scale: scales,
    })
}

fn sign_block(var: VarId) -> LmiBlock {
    let mut block = LmiBlock::new(CMatrix::zeros(1, 1)).expect("zero is Hermitian");
    block.add_term(var, &CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).expect("1x1");
    block
}

fn covariance_block(w: &HermitianVar) -> LmiBlock {
    let n = w.dim();
    let mut block = LmiBlock::new(CMatrix::zeros(n, n)).expect("zero is Hermitian");
    for id in w.ids() {
        block.add_term(id, &w.basis(id)).expect("basis is Hermitian");
    }
    block
}

/// Robust coordinated design: SINR blocks with interference slacks and
/// one robust interference block per cross link.
pub fn build_robust_mcbf(channels: &ChannelSet, cfg: &SystemConfig) -> Result<DesignProblem> {
    build(DesignKind::RobustMcbf, channels, cfg, (0..cfg.num_cells).collect())
}

/// Robust single-cell design for `cell`, with the interference caps as
/// constants.
pub fn build_robust_sbf(channels: &ChannelSet, cfg: &SystemConfig, cell: usize) -> Result<DesignProblem> {
    check_cell(cfg, cell)?;
    build(DesignKind::RobustSbf, channels, cfg, vec![cell])
}

/// Nominal coordinated design (relaxation of the nominal problem).
pub fn build_nominal_mcbf(channels: &ChannelSet, cfg: &SystemConfig) -> Result<DesignProblem> {
    build(DesignKind::NominalMcbf, channels, cfg, (0..cfg.num_cells).collect())
}

/// Nominal single-cell design for `cell`.
pub fn build_nominal_sbf(channels: &ChannelSet, cfg: &SystemConfig, cell: usize) -> Result<DesignProblem> {
    check_cell(cfg, cell)?;
    build(DesignKind::NominalSbf, channels, cfg, vec![cell])
}

fn check_cell(cfg: &SystemConfig, cell: usize) -> Result<()> {
    if cell >= cfg.num_cells {
        return Err(invalid(format!("cell {cell} out of range")));
    }
    Ok(())
}

/// Every problem that makes up a design: one for coordinated designs, one
/// per cell for single-cell designs.
pub fn build_design(kind: DesignKind, channels: &ChannelSet, cfg: &SystemConfig) -> Result<Vec<DesignProblem>> {
    match kind {
        DesignKind::NominalMcbf => Ok(vec![build_nominal_mcbf(channels, cfg)?]),
        DesignKind::RobustMcbf => Ok(vec![build_robust_mcbf(channels, cfg)?]),
        DesignKind::NominalSbf => (0..cfg.num_cells).map(|i| build_nominal_sbf(channels, cfg, i)).collect(),
        DesignKind::RobustSbf => (0..cfg.num_cells).map(|i| build_robust_sbf(channels, cfg, i)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdrSolution {
    pub kind: DesignKind,
    pub status: DesignStatus,
    /// `Σ_i α_i Σ_k tr(W_ik)` in watts; NaN unless optimal.
    pub objective: f64,
    /// `W_ik` indexed `cell * K + user`; empty unless optimal.
    pub covariances: Vec<CMatrix>,
    /// `λ` per robust link, in watts-scaled units of the original problem.
    pub multipliers: Vec<(Link, f64)>,
    /// Interference slacks `t` in watts (coordinated robust design).
    pub slacks: Vec<(Link, f64)>,
    /// `λ₂/λ₁` per covariance.
    pub rank_one_gap: Vec<f64>,
    pub iterations: usize,
    /// Largest relative solver residual over the sub-problems.
    pub residual: f64,
    /// Normalized residual of the infeasibility certificate.
    pub certificate_residual: Option<f64>,
}

impl SdrSolution {
    pub fn max_rank_one_gap(&self) -> f64 {
        self.rank_one_gap.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_rank_one(&self) -> bool {
        !self.rank_one_gap.is_empty() && self.max_rank_one_gap() <= RANK_ONE_TOL
    }
}

/// `λ₂/λ₁` of a Hermitian PSD matrix (0 for the zero matrix).
pub fn rank_one_gap(w: &CMatrix) -> f64 {
    let (values, _) = linalg::hermitian_eigen(w);
    match values.as_slice() {
        [first, second, ..] if *first > 0.0 => second.max(0.0) / first,
        _ => 0.0,
    }
}

/// Build, solve and map back every sub-problem of a design.
pub fn solve_design(
    kind: DesignKind,
    channels: &ChannelSet,
    cfg: &SystemConfig,
    opts: &SolverOptions,
) -> Result<SdrSolution> {
    let problems = build_design(kind, channels, cfg)?;
    let mut status = DesignStatus::Optimal;
    let mut iterations = 0;
    let mut residual: f64 = 0.0;
    let mut certificate_residual = None;
    let mut covariances = vec![CMatrix::zeros(cfg.num_antennas, cfg.num_antennas); cfg.num_users()];
    let mut multipliers = Vec::new();
    let mut slacks = Vec::new();
    for problem in &problems {
        let sol = solve_lmi(&problem.conic, opts)?;
        iterations += sol.iterations;
        let st = DesignStatus::from_conic(sol.status);
        if st.rank() > status.rank() {
            status = st;
        }
        if st != DesignStatus::Optimal {
            certificate_residual = certificate_residual.or(sol.certificate_residual);
            continue;
        }
        residual = residual.max(sol.residual);
        for (u, var) in &problem.covariances {
            covariances[*u] = problem.covariance(&sol.values, var);
        }
        for (link, v, factor) in &problem.multipliers {
            multipliers.push((*link, sol.values[v.0] * factor));
        }
        for (link, v) in &problem.slacks {
            let s = problem.link_scale_of(channels, *link);
            slacks.push((*link, sol.values[v.0] * s * s * problem.power_scale));
        }
    }
    if status != DesignStatus::Optimal {
        return Ok(SdrSolution {
            kind,
            status,
            objective: f64::NAN,
            covariances: Vec::new(),
            multipliers: Vec::new(),
            slacks: Vec::new(),
            rank_one_gap: Vec::new(),
            iterations,
            residual,
            certificate_residual,
        });
    }
    let objective =
        covariances.iter().enumerate().map(|(u, w)| cfg.weight(u / cfg.users_per_cell) * w.trace().re).sum();
    let rank_one_gap = covariances.iter().map(rank_one_gap).collect();
    Ok(SdrSolution {
        kind,
        status,
        objective,
        covariances,
        multipliers,
        slacks,
        rank_one_gap,
        iterations,
        residual,
        certificate_residual: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;

    fn single(eps: f64, gamma: f64) -> (ChannelSet, SystemConfig) {
        let ch = ChannelSet::from_nominal(1, 1, vec![unit(2, 0)], ErrorEllipsoid::spherical(eps).unwrap()).unwrap();
        (ch, SystemConfig::uniform(1, 1, 2, gamma, 1.0, None).unwrap())
    }

    #[test]
    fn kind_names_round_trip() {
        for k in DesignKind::ALL {
            assert_eq!(k.as_str().parse::<DesignKind>().unwrap(), k);
        }
        assert!("robust".parse::<DesignKind>().is_err());
    }

    #[test]
    fn matched_filter() {
        let (ch, cfg) = single(0.0, 1.0);
        let sol = solve_design(DesignKind::NominalMcbf, &ch, &cfg, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, DesignStatus::Optimal);
        assert!((sol.objective - 1.0).abs() < 1e-6);
        assert!((sol.covariances[0][(0, 0)].re - 1.0).abs() < 1e-6);
        let sol =
            solve_design(DesignKind::NominalMcbf, &ch, &cfg.with_targets(4.0), &SolverOptions::default()).unwrap();
        assert!((sol.objective - 4.0).abs() < 1e-5);
    }

    #[test]
    fn robust_single_user_closed_form() {
        let (ch, cfg) = single(0.1, 1.0);
        let sol = solve_design(DesignKind::RobustMcbf, &ch, &cfg, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, DesignStatus::Optimal);
        let expect = 1.0 / 0.81;
        assert!(((sol.objective - expect) / expect).abs() < 1e-6, "{}", sol.objective);
        assert!(sol.is_rank_one());
    }

    #[test]
    fn single_user_huge_target_stays_feasible() {
        // Without interference any target is reachable with enough power.
        let (ch, cfg) = single(0.1, 1e9);
        let sol = solve_design(DesignKind::RobustMcbf, &ch, &cfg, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, DesignStatus::Optimal);
        assert!((sol.objective / 1e9 - 1.0 / 0.81).abs() < 1e-6, "{}", sol.objective);
    }

    #[test]
    fn shared_dimension_high_target_is_infeasible() {
        // Two users on one antenna need W1·0.81 ≥ γ(1.21·W2 + 1) and vice
        // versa, impossible once γ·1.21 > 0.81.
        for gamma in [10.0, 1e3, 1e6] {
            let h = vec![unit(1, 0), unit(1, 0)];
            let ch = ChannelSet::from_nominal(1, 2, h, ErrorEllipsoid::spherical(0.1).unwrap()).unwrap();
            let cfg = SystemConfig::uniform(1, 2, 1, gamma, 1.0, None).unwrap();
            let sol = solve_design(DesignKind::RobustMcbf, &ch, &cfg, &SolverOptions::default()).unwrap();
            assert_eq!(sol.status, DesignStatus::PrimalInfeasible, "gamma {gamma}");
            assert!(sol.certificate_residual.unwrap() < 1e-4, "gamma {gamma}");
            assert!(sol.covariances.is_empty());
        }
    }

    #[test]
    fn sbf_needs_caps() {
        let ch = ChannelSet::from_nominal(3, 1, vec![unit(2, 0); 9], ErrorEllipsoid::spherical(0.1).unwrap()).unwrap();
        let cfg = SystemConfig::uniform(3, 1, 2, 1.0, 1.0, None).unwrap();
        assert!(matches!(build_robust_sbf(&ch, &cfg, 0), Err(Error::MissingCaps)));
        assert!(build_robust_sbf(&ch, &cfg.clone(), 5).is_err());
    }

    #[test]
    fn rank_one_gap_values() {
        assert_eq!(rank_one_gap(&(CMatrix::identity(2, 2))), 1.0);
        let mut w = CMatrix::zeros(2, 2);
        w[(0, 0)] = Complex64::new(4.0, 0.0);
        assert_eq!(rank_one_gap(&w), 0.0);
        assert_eq!(rank_one_gap(&CMatrix::zeros(2, 2)), 0.0);
    }
}
