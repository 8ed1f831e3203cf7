//! Homogeneous self-dual interior-point method.
//!
//! The embedding solved is
//!
//! ```text
//! A x − b τ = 0
//! −A^T y − s + c τ = 0
//! b^T y − c^T x − κ = 0
//! x, s ∈ K,  τ, κ ≥ 0
//! ```
//!
//! started from `x = s = e`, `y = 0`, `τ = κ = 1`. Each iteration computes
//! Nesterov–Todd scaling points for every block, forms the Schur complement
//! `M = A H A^T` (with `H` the NT scaling operator mapping `s`-space to
//! `x`-space), and takes a Mehrotra predictor–corrector step.

use crate::cone::{self, Cone};
use crate::error::SolverError;
use crate::presolve::{presolve, Presolve};
use crate::problem::{dot, norm, ConicProblem, Residuals, SparseMatrix};
use crate::scaling::Equilibration;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// `τ/κ` below which the embedding is treated as having converged to a ray.
const RAY_COLLAPSE: f64 = 1e-12;

const REFINE_STEPS: usize = 5;

/// Polishing stops after this many iterations past the first optimal point,
const POLISH_ITERS: usize = 8;
/// or once the residual grows this far above the best one, or after two
/// steps shorter than `POLISH_MIN_STEP`.
const POLISH_GIVE_UP: f64 = 100.0;
const POLISH_MIN_STEP: f64 = 1e-2;

/// Tolerances and limits for [`solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative primal, dual and gap tolerance for optimality.
    pub tolerance: f64,
    /// Once `tolerance` is met, iterating continues toward this tighter
    /// target; the best iterate seen is returned if progress stops.
    pub polish_tolerance: f64,
    /// Normalized residual a Farkas certificate must reach.
    pub infeasibility_tolerance: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Static diagonal regularization of the Jacobi-scaled Schur complement.
    pub regularization: f64,
    /// Regularization used for the single refactorization retry.
    pub regularization_retry: f64,
    /// Steps shorter than this count as stalls; two in a row abort.
    pub min_step: f64,
    /// Record per-iterate cone-membership diagnostics.
    pub record_iterates: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            polish_tolerance: 1e-10,
            infeasibility_tolerance: 1e-8,
            max_iter: 200,
            step_fraction: 0.99,
            regularization: 1e-13,
            regularization_retry: 1e-7,
            min_step: 1e-10,
            record_iterates: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Optimal,
    /// `Ax = b, x ∈ K` has no solution; `(y, z)` is a Farkas certificate.
    PrimalInfeasible,
    /// The dual is infeasible; `x` is an improving ray (`Ax = 0`, `c^T x = −1`).
    DualInfeasible,
    NumericalFailure,
    IterationLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::PrimalInfeasible => "primal-infeasible",
            Status::DualInfeasible => "dual-infeasible",
            Status::NumericalFailure => "numerical-failure",
            Status::IterationLimit => "iteration-limit",
        }
    }
}

/// Diagnostics for one iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mu: f64,
    pub tau: f64,
    pub kappa: f64,
    pub step: f64,
    pub residual: f64,
    /// Smallest eigenvalue over all blocks of `x` (orthant: smallest entry).
    pub min_x: f64,
    pub min_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub residuals: Residuals,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub log: Vec<IterationRecord>,
}

/// Solves a standard-form conic program.
pub fn solve(problem: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution, SolverError> {
    problem.validate()?;
    let n = problem.num_variables();
    let m = problem.num_constraints();

    let (kept, a, b) = match presolve(problem) {
        Presolve::Reduced { kept, equality, rhs } => (kept, equality, rhs),
        Presolve::Inconsistent { certificate } => {
            let residuals = Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN };
            return Ok(ConicSolution {
                status: Status::PrimalInfeasible,
                x: vec![0.0; n],
                y: certificate,
                z: vec![0.0; n],
                residuals,
                iterations: 0,
                primal_objective: f64::NAN,
                dual_objective: f64::NAN,
                log: Vec::new(),
            });
        }
    };

    let eq = Equilibration::compute(&a, &problem.cones);
    let a = eq.scale_matrix(&a);
    let b: Vec<f64> = b.iter().zip(&eq.row).map(|(v, d)| v * d).collect();
    let c: Vec<f64> = problem.objective.iter().zip(&eq.col).map(|(v, e)| v * e).collect();
    let mut engine = Engine::new(&a, &b, &c, &problem.cones, opts, &eq);
    let mut out = engine.run();
    out.x.iter_mut().zip(&eq.col).for_each(|(v, e)| *v *= e);
    out.z.iter_mut().zip(&eq.col).for_each(|(v, e)| *v /= e);

    let mut y = vec![0.0; m];
    for (k, &r) in kept.iter().enumerate() {
        y[r] = out.y[k] * eq.row[k];
    }
    let (residuals, primal_objective, dual_objective) = match out.status {
        Status::Optimal | Status::IterationLimit | Status::NumericalFailure => {
            let res = problem.residuals(&out.x, &y, &out.z);
            (res, dot(&problem.objective, &out.x), dot(&problem.rhs, &y))
        }
        _ => (Residuals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN }, f64::NAN, f64::NAN),
    };
    Ok(ConicSolution {
        status: out.status,
        x: out.x,
        y,
        z: out.z,
        residuals,
        iterations: out.iterations,
        primal_objective,
        dual_objective,
        log: out.log,
    })
}

/// Rows of `A` restricted to one PSD block, kept as dense symmetric matrices.
struct PsdRows {
    offset: usize,
    side: usize,
    rows: Vec<usize>,
    mats: Vec<DMatrix<f64>>,
}

/// Columns of `A` restricted to an orthant block.
struct NonNegCols {
    offset: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

enum BlockRows {
    NonNeg(NonNegCols),
    Psd(PsdRows),
}

/// NT scaling of one PSD block: `R^{-1} X R^{-T} = R^T S R = diag(λ)`.
struct PsdScaling {
    r: DMatrix<f64>,
    r_inv: DMatrix<f64>,
    lambda: DVector<f64>,
    /// NT point `W = R R^T`, with `W S W = X`.
    w: DMatrix<f64>,
}

enum Scaling {
    NonNeg,
    Psd(PsdScaling),
}

#[derive(Clone)]
struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

struct Snapshot {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
    residual: f64,
    iteration: usize,
}

struct EngineOutput {
    status: Status,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    iterations: usize,
    log: Vec<IterationRecord>,
}

/// Factored Schur complement plus the pieces of the τ elimination that do
/// not depend on the right-hand side.
struct Factor {
    schur: SchurSolver,
    q: Vec<f64>,
    u: Vec<f64>,
    denom: f64,
}

struct Engine<'a> {
    a: &'a SparseMatrix,
    b: &'a [f64],
    c: &'a [f64],
    cones: &'a [Cone],
    opts: &'a SolverOptions,
    eq: &'a Equilibration,
    blocks: Vec<BlockRows>,
    degree: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    tau: f64,
    kappa: f64,
}

impl<'a> Engine<'a> {
    fn new(
        a: &'a SparseMatrix,
        b: &'a [f64],
        c: &'a [f64],
        cones: &'a [Cone],
        opts: &'a SolverOptions,
        eq: &'a Equilibration,
    ) -> Self {
        let n = c.len();
        let offsets: Vec<(usize, Cone)> = cone::offsets(cones).collect();
        let mut block_of = vec![0usize; n];
        for (bi, &(off, cone)) in offsets.iter().enumerate() {
            block_of[off..off + cone.dim()].fill(bi);
        }

        let mut blocks: Vec<BlockRows> = offsets
            .iter()
            .map(|&(offset, cone)| match cone {
                Cone::NonNeg(k) => BlockRows::NonNeg(NonNegCols { offset, cols: vec![Vec::new(); k] }),
                Cone::Psd(side) => BlockRows::Psd(PsdRows { offset, side, rows: Vec::new(), mats: Vec::new() }),
            })
            .collect();

        let mut scratch: Vec<Vec<f64>> = offsets.iter().map(|(_, c)| vec![0.0; c.dim()]).collect();
        for r in 0..a.nrows() {
            let mut touched: Vec<usize> = Vec::new();
            for (col, v) in a.row(r) {
                let bi = block_of[col];
                match &mut blocks[bi] {
                    BlockRows::NonNeg(nn) => nn.cols[col - nn.offset].push((r, v)),
                    BlockRows::Psd(p) => {
                        if !touched.contains(&bi) {
                            touched.push(bi);
                        }
                        scratch[bi][col - p.offset] = v;
                    }
                }
            }
            for bi in touched {
                if let BlockRows::Psd(p) = &mut blocks[bi] {
                    p.rows.push(r);
                    p.mats.push(cone::smat(&scratch[bi], p.side));
                    scratch[bi].fill(0.0);
                }
            }
        }

        let mut x = vec![0.0; n];
        let mut s = vec![0.0; n];
        for &(off, cone) in &offsets {
            cone::identity_into(cone, &mut x[off..off + cone.dim()]);
            cone::identity_into(cone, &mut s[off..off + cone.dim()]);
        }
        let degree = cones.iter().map(Cone::degree).sum::<usize>() as f64;

        Engine { a, b, c, cones, opts, eq, blocks, degree, x, y: vec![0.0; b.len()], s, tau: 1.0, kappa: 1.0 }
    }

    fn mu(&self) -> f64 {
        (dot(&self.x, &self.s) + self.tau * self.kappa) / (self.degree + 1.0)
    }

    fn run(&mut self) -> EngineOutput {
        let n = self.c.len();
        let m = self.b.len();
        let opts = self.opts;
        // Convergence is judged in the caller's units, not the equilibrated ones.
        let eq = self.eq;
        let bnorm = norm(self.b.iter().zip(&eq.row).map(|(v, d)| v / d));
        let cnorm = norm(self.c.iter().zip(&eq.col).map(|(v, e)| v / e));
        let mut log = Vec::new();
        let mut stalls = 0usize;
        let mut last_step = f64::NAN;
        let mut best: Option<Snapshot> = None;
        let mut short_polish_steps = 0usize;

        let mut ax = vec![0.0; m];
        let mut aty = vec![0.0; n];

        for iter in 0..=opts.max_iter {
            self.a.mul_vec(&self.x, &mut ax);
            self.a.mul_transpose_vec(&self.y, &mut aty);
            let tau = self.tau;

            // Residuals of the homogeneous system.
            let rp: Vec<f64> = (0..m).map(|i| self.b[i] * tau - ax[i]).collect();
            let rd: Vec<f64> = (0..n).map(|j| self.c[j] * tau - aty[j] - self.s[j]).collect();
            let cx = dot(self.c, &self.x);
            let by = dot(self.b, &self.y);
            let g = by - cx - self.kappa;

            let xnorm = norm(self.x.iter().zip(&eq.col).map(|(v, e)| v * e)) / tau;
            let snorm = norm(self.s.iter().zip(&eq.col).map(|(v, e)| v / e)) / tau;
            let pres = norm(rp.iter().zip(&eq.row).map(|(v, d)| v / d)) / tau / (1.0 + bnorm + xnorm);
            let dres = norm(rd.iter().zip(&eq.col).map(|(v, e)| v / e)) / tau / (1.0 + cnorm + snorm);
            let gap = (cx - by).abs() / tau / (1.0 + (cx / tau).abs() + (by / tau).abs());
            let residual = pres.max(dres).max(gap);

            if opts.record_iterates {
                log.push(IterationRecord {
                    iteration: iter,
                    mu: self.mu(),
                    tau,
                    kappa: self.kappa,
                    step: last_step,
                    residual,
                    min_x: self.min_eig(&self.x),
                    min_s: self.min_eig(&self.s),
                });
            }

            if residual <= opts.tolerance.min(opts.polish_tolerance) {
                return self.finish(Status::Optimal, iter, log);
            }
            if residual <= opts.tolerance && best.as_ref().is_none_or(|b| residual < b.residual) {
                best = Some(self.snapshot(residual, iter));
            }
            if let Some(b) = &best {
                if residual > POLISH_GIVE_UP * b.residual || iter >= b.iteration + POLISH_ITERS {
                    return self.restore(best, Status::Optimal, iter, log);
                }
            }

            // Farkas certificates, checked once τ has fallen below κ. Once
            // τ/κ has collapsed the iterates no longer improve the ray, so a
            // looser threshold is accepted rather than iterating to underflow.
            if best.is_none() && self.tau < self.kappa {
                let cert_tol = if self.tau <= RAY_COLLAPSE * self.kappa {
                    opts.infeasibility_tolerance.sqrt()
                } else {
                    opts.infeasibility_tolerance
                };
                if by > 0.0 {
                    let r = norm(aty.iter().zip(&self.s).map(|(a, s)| a + s)) / by;
                    if r <= cert_tol {
                        return self.finish(Status::PrimalInfeasible, iter, log);
                    }
                }
                if cx < 0.0 {
                    let r = norm(ax.iter().copied()) / (-cx);
                    if r <= cert_tol {
                        return self.finish(Status::DualInfeasible, iter, log);
                    }
                }
            }

            if iter == opts.max_iter {
                return self.restore(best, Status::IterationLimit, iter, log);
            }

            let Some(scalings) = self.scalings() else {
                return self.restore(best, Status::NumericalFailure, iter, log);
            };
            let Some(factor) = self.factor(&scalings) else {
                return self.restore(best, Status::NumericalFailure, iter, log);
            };

            let mu = self.mu();

            // Predictor.
            let aff = self.direction(&scalings, &factor, &rp, &rd, g, 1.0, 0.0, None);
            let alpha_aff = self.max_step(&scalings, &aff).min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // Corrector.
            let dir = self.direction(&scalings, &factor, &rp, &rd, g, 1.0 - sigma, sigma * mu, Some(&aff));
            let alpha = (opts.step_fraction * self.max_step(&scalings, &dir)).min(1.0);
            last_step = alpha;
            if best.is_some() && (alpha.is_nan() || alpha < POLISH_MIN_STEP) {
                short_polish_steps += 1;
                if short_polish_steps >= 2 {
                    return self.restore(best, Status::Optimal, iter, log);
                }
            }

            if !(alpha.is_finite()) || alpha < opts.min_step {
                stalls += 1;
                if stalls >= 2 {
                    return self.restore(best, Status::NumericalFailure, iter, log);
                }
            } else {
                stalls = 0;
            }
            if alpha.is_finite() && alpha > 0.0 {
                axpy(alpha, &dir.dx, &mut self.x);
                axpy(alpha, &dir.dy, &mut self.y);
                axpy(alpha, &dir.ds, &mut self.s);
                self.tau += alpha * dir.dtau;
                self.kappa += alpha * dir.dkappa;
            }
        }
        unreachable!("loop returns at max_iter")
    }

    fn snapshot(&self, residual: f64, iteration: usize) -> Snapshot {
        Snapshot {
            x: self.x.clone(),
            y: self.y.clone(),
            s: self.s.clone(),
            tau: self.tau,
            kappa: self.kappa,
            residual,
            iteration,
        }
    }

    /// Finish from the best optimal iterate if polishing found one, else
    /// with `status` at the current point.
    fn restore(
        &mut self,
        best: Option<Snapshot>,
        status: Status,
        iterations: usize,
        log: Vec<IterationRecord>,
    ) -> EngineOutput {
        match best {
            Some(b) => {
                self.x = b.x;
                self.y = b.y;
                self.s = b.s;
                self.tau = b.tau;
                self.kappa = b.kappa;
                self.finish(Status::Optimal, iterations, log)
            }
            None => self.finish(status, iterations, log),
        }
    }

    fn finish(&self, status: Status, iterations: usize, log: Vec<IterationRecord>) -> EngineOutput {
        let (x, y, z) = match status {
            Status::PrimalInfeasible => {
                let by = dot(self.b, &self.y);
                (
                    vec![0.0; self.x.len()],
                    self.y.iter().map(|v| v / by).collect(),
                    self.s.iter().map(|v| v / by).collect(),
                )
            }
            Status::DualInfeasible => {
                let cx = -dot(self.c, &self.x);
                (self.x.iter().map(|v| v / cx).collect(), vec![0.0; self.y.len()], vec![0.0; self.s.len()])
            }
            _ => (
                self.x.iter().map(|v| v / self.tau).collect(),
                self.y.iter().map(|v| v / self.tau).collect(),
                self.s.iter().map(|v| v / self.tau).collect(),
            ),
        };
        EngineOutput { status, x, y, z, iterations, log }
    }

    fn min_eig(&self, v: &[f64]) -> f64 {
        cone::offsets(self.cones)
            .map(|(off, c)| cone::min_eigenvalue(c, &v[off..off + c.dim()]))
            .fold(f64::INFINITY, f64::min)
    }

    fn scalings(&self) -> Option<Vec<Scaling>> {
        let mut out = Vec::with_capacity(self.blocks.len());
        for (&(off, cone), _) in cone::offsets(self.cones).collect::<Vec<_>>().iter().zip(&self.blocks) {
            match cone {
                Cone::NonNeg(_) => out.push(Scaling::NonNeg),
                Cone::Psd(side) => {
                    let len = cone.dim();
                    let xm = cone::smat(&self.x[off..off + len], side);
                    let sm = cone::smat(&self.s[off..off + len], side);
                    out.push(Scaling::Psd(nt_scaling(xm, sm)?));
                }
            }
        }
        Some(out)
    }

    /// `out = H v` where `H` maps `s`-space to `x`-space.
    fn apply_h(&self, scalings: &[Scaling], v: &[f64], out: &mut [f64]) {
        for ((off, cone), sc) in cone::offsets(self.cones).zip(scalings) {
            let len = cone.dim();
            match (cone, sc) {
                (Cone::NonNeg(_), _) => {
                    for k in off..off + len {
                        out[k] = self.x[k] / self.s[k] * v[k];
                    }
                }
                (Cone::Psd(side), Scaling::Psd(p)) => {
                    let vm = cone::smat(&v[off..off + len], side);
                    let hm = &p.w * vm * &p.w;
                    cone::svec_into(&hm, &mut out[off..off + len]);
                }
                _ => unreachable!(),
            }
        }
    }

    fn schur(&self, scalings: &[Scaling]) -> DMatrix<f64> {
        let m = self.b.len();
        let mut mat = DMatrix::zeros(m, m);
        for (block, sc) in self.blocks.iter().zip(scalings) {
            match (block, sc) {
                (BlockRows::NonNeg(nn), _) => {
                    for (k, col) in nn.cols.iter().enumerate() {
                        let j = nn.offset + k;
                        let d = self.x[j] / self.s[j];
                        for &(ri, vi) in col {
                            for &(rj, vj) in col {
                                mat[(ri, rj)] += d * vi * vj;
                            }
                        }
                    }
                }
                (BlockRows::Psd(p), Scaling::Psd(scale)) => {
                    if p.rows.is_empty() {
                        continue;
                    }
                    let len = cone::svec_len(p.side);
                    let mut g = DMatrix::zeros(p.rows.len(), len);
                    let mut buf = vec![0.0; len];
                    let rt = scale.r.transpose();
                    for (k, f) in p.mats.iter().enumerate() {
                        let gk = &rt * f * &scale.r;
                        cone::svec_into(&gk, &mut buf);
                        g.row_mut(k).copy_from_slice(&buf);
                    }
                    let sub = &g * g.transpose();
                    for (a, &ra) in p.rows.iter().enumerate() {
                        for (b, &rb) in p.rows.iter().enumerate() {
                            mat[(ra, rb)] += sub[(a, b)];
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        mat
    }

    fn factor(&self, scalings: &[Scaling]) -> Option<Factor> {
        let m = self.b.len();
        let n = self.c.len();
        let schur = SchurSolver::new(self.schur(scalings), self.opts)?;
        let mut hc = vec![0.0; n];
        self.apply_h(scalings, self.c, &mut hc);
        let mut u = vec![0.0; m];
        self.a.mul_vec(&hc, &mut u);

        let solve = |rhs: &[f64]| schur.solve(rhs);
        let q1 = solve(&u);
        let q2 = solve(self.b);
        let mut atq1 = vec![0.0; n];
        self.a.mul_transpose_vec(&q1, &mut atq1);
        let v: Vec<f64> = self.c.iter().zip(&atq1).map(|(c, a)| c - a).collect();
        let mut hv = vec![0.0; n];
        self.apply_h(scalings, &v, &mut hv);
        let denom = dot(self.b, &q2) + dot(&v, &hv) + self.kappa / self.tau;
        if !(denom.is_finite() && denom > 0.0) {
            return None;
        }
        let q = q1.iter().zip(&q2).map(|(a, b)| a + b).collect();
        Some(Factor { schur, q, u, denom })
    }

    /// Newton direction for residual reduction `eta` and centering target
    /// `sigma_mu`; `corr` supplies the affine direction for the second-order
    /// correction.
    #[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
    fn direction(
        &self,
        scalings: &[Scaling],
        f: &Factor,
        rp: &[f64],
        rd: &[f64],
        g: f64,
        eta: f64,
        sigma_mu: f64,
        corr: Option<&Direction>,
    ) -> Direction {
        let n = self.c.len();
        let m = self.b.len();
        let r1: Vec<f64> = rp.iter().map(|v| eta * v).collect();
        let r2: Vec<f64> = rd.iter().map(|v| eta * v).collect();
        let r3 = -eta * g;
        let mut r5 = -self.tau * self.kappa + sigma_mu;
        if let Some(a) = corr {
            r5 -= a.dtau * a.dkappa;
        }

        // r4: linearized complementarity, expressed as an x-space vector.
        let mut r4 = vec![0.0; n];
        for ((off, cone), sc) in cone::offsets(self.cones).zip(scalings) {
            let len = cone.dim();
            match (cone, sc) {
                (Cone::NonNeg(_), _) => {
                    for k in off..off + len {
                        let mut rc = -self.x[k] * self.s[k] + sigma_mu;
                        if let Some(a) = corr {
                            rc -= a.dx[k] * a.ds[k];
                        }
                        r4[k] = rc / self.s[k];
                    }
                }
                (Cone::Psd(side), Scaling::Psd(p)) => {
                    let mut rc = DMatrix::zeros(side, side);
                    for i in 0..side {
                        rc[(i, i)] = sigma_mu - p.lambda[i] * p.lambda[i];
                    }
                    if let Some(a) = corr {
                        let dxs = scaled_x(p, &a.dx[off..off + len], side);
                        let dss = scaled_s(p, &a.ds[off..off + len], side);
                        let prod = &dxs * &dss;
                        rc -= (&prod + prod.transpose()) * 0.5;
                    }
                    let umat = DMatrix::from_fn(side, side, |i, j| 2.0 * rc[(i, j)] / (p.lambda[i] + p.lambda[j]));
                    let r4m = &p.r * umat * p.r.transpose();
                    cone::svec_into(&r4m, &mut r4[off..off + len]);
                }
                _ => unreachable!(),
            }
        }

        let mut hr2 = vec![0.0; n];
        self.apply_h(scalings, &r2, &mut hr2);
        let tmp: Vec<f64> = r4.iter().zip(&hr2).map(|(a, b)| a - b).collect();
        let mut a_tmp = vec![0.0; m];
        self.a.mul_vec(&tmp, &mut a_tmp);
        let rhs: Vec<f64> = r1.iter().zip(&a_tmp).map(|(a, b)| a - b).collect();
        let p = f.schur.solve(&rhs);

        let bu: Vec<f64> = self.b.iter().zip(&f.u).map(|(b, u)| b - u).collect();
        let num = r3 + dot(self.c, &tmp) + r5 / self.tau - dot(&bu, &p);
        let dtau = num / f.denom;

        let dy: Vec<f64> = p.iter().zip(&f.q).map(|(p, q)| p + q * dtau).collect();
        let mut aty = vec![0.0; n];
        self.a.mul_transpose_vec(&dy, &mut aty);
        let ds: Vec<f64> = (0..n).map(|j| r2[j] - aty[j] + self.c[j] * dtau).collect();
        let mut hds = vec![0.0; n];
        self.apply_h(scalings, &ds, &mut hds);
        let dx: Vec<f64> = r4.iter().zip(&hds).map(|(a, b)| a - b).collect();
        let dkappa = (r5 - self.kappa * dtau) / self.tau;

        Direction { dx, dy, ds, dtau, dkappa }
    }

    /// Largest step keeping every block inside its cone (may be `+inf`).
    fn max_step(&self, scalings: &[Scaling], d: &Direction) -> f64 {
        let mut alpha = f64::INFINITY;
        let ratio = |v: f64, dv: f64| if dv < 0.0 { -v / dv } else { f64::INFINITY };
        alpha = alpha.min(ratio(self.tau, d.dtau)).min(ratio(self.kappa, d.dkappa));
        for ((off, cone), sc) in cone::offsets(self.cones).zip(scalings) {
            let len = cone.dim();
            match (cone, sc) {
                (Cone::NonNeg(_), _) => {
                    for k in off..off + len {
                        alpha = alpha.min(ratio(self.x[k], d.dx[k])).min(ratio(self.s[k], d.ds[k]));
                    }
                }
                (Cone::Psd(side), Scaling::Psd(p)) => {
                    let dxs = scaled_x(p, &d.dx[off..off + len], side);
                    let dss = scaled_s(p, &d.ds[off..off + len], side);
                    alpha = alpha.min(psd_step(&p.lambda, &dxs)).min(psd_step(&p.lambda, &dss));
                }
                _ => unreachable!(),
            }
        }
        alpha
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Cholesky of the Schur complement after symmetric Jacobi scaling, so the
/// static regularization is relative to each diagonal entry rather than the
/// largest one.
struct SchurSolver {
    m: DMatrix<f64>,
    /// `D^{-1/2}` of the diagonal.
    inv_sqrt_diag: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl SchurSolver {
    fn new(m: DMatrix<f64>, opts: &SolverOptions) -> Option<Self> {
        let size = m.nrows();
        let inv_sqrt_diag = DVector::from_fn(size, |i, _| {
            let d = m[(i, i)];
            if d > 0.0 && d.is_finite() {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        });
        let chol = [opts.regularization, opts.regularization_retry].iter().find_map(|&reg| {
            let mut scaled = DMatrix::from_fn(size, size, |i, j| m[(i, j)] * inv_sqrt_diag[i] * inv_sqrt_diag[j]);
            for i in 0..size {
                scaled[(i, i)] += reg;
            }
            scaled.cholesky()
        })?;
        Some(Self { m, inv_sqrt_diag, chol })
    }

    fn solve_once(&self, r: &DVector<f64>) -> DVector<f64> {
        let scaled = r.component_mul(&self.inv_sqrt_diag);
        self.chol.solve(&scaled).component_mul(&self.inv_sqrt_diag)
    }

    /// Solves `M v = rhs` with iterative refinement against the
    /// unregularized matrix, stopping once the residual stops shrinking.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let r = DVector::from_column_slice(rhs);
        let mut v = self.solve_once(&r);
        let mut res = &r - &self.m * &v;
        let mut res_norm = res.norm();
        for _ in 0..REFINE_STEPS {
            if res_norm == 0.0 {
                break;
            }
            let cand = &v + self.solve_once(&res);
            let cand_res = &r - &self.m * &cand;
            let cand_norm = cand_res.norm();
            if cand_norm.is_nan() || cand_norm >= res_norm {
                break;
            }
            v = cand;
            res = cand_res;
            res_norm = cand_norm;
        }
        v.as_slice().to_vec()
    }
}

fn nt_scaling(x: DMatrix<f64>, s: DMatrix<f64>) -> Option<PsdScaling> {
    let side = x.nrows();
    let lx = x.cholesky()?.unpack();
    let ls = s.cholesky()?.unpack();
    let svd = (ls.transpose() * &lx).svd(true, true);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return None;
    }
    let inv_sqrt = DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let sqrt = DMatrix::from_diagonal(&lambda.map(f64::sqrt));
    let r = &lx * &v * inv_sqrt;
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(side, side))?;
    let r_inv = sqrt * v.transpose() * lx_inv;
    let w = &r * r.transpose();
    Some(PsdScaling { r, r_inv, lambda, w })
}

/// `R^{-1} dX R^{-T}`
fn scaled_x(p: &PsdScaling, dx: &[f64], side: usize) -> DMatrix<f64> {
    let m = cone::smat(dx, side);
    &p.r_inv * m * p.r_inv.transpose()
}

/// `R^T dS R`
fn scaled_s(p: &PsdScaling, ds: &[f64], side: usize) -> DMatrix<f64> {
    let m = cone::smat(ds, side);
    p.r.transpose() * m * &p.r
}

/// Max `α` with `diag(λ) + α D ⪰ 0`.
fn psd_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let side = lambda.len();
    let scaled = DMatrix::from_fn(side, side, |i, j| d[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let scaled = (&scaled + scaled.transpose()) * 0.5;
    let min = scaled.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if min < 0.0 {
        -1.0 / min
    } else {
        f64::INFINITY
    }
}
