//! Assembly of LMI-form problems into the solver's standard form.
//!
//! Design variables become the solver's dual variables `y`, and every LMI
//! `F_0 + Σ y_v F_v ⪰ 0` becomes one cone block of the slack
//! `z = c − Aᵀy`, with `c = svec(F_0)` and `A[v, ·] = −svec(F_v)`. The
//! objective `min Σ cost_v y_v` is `max bᵀy` with `b = −cost`. The Schur
//! complement then has one row per design scalar rather than one per LMI
//! entry.

use crate::error::{invalid, Result};
use crate::lmi::{complex_to_real, HermitianVar, LmiBlock, RealLmiBlock, VarId};
use num_complex::Complex64;
use rcbf_solver::{cone, Cone, ConicProblem, ConicSolution, SolverOptions, SparseMatrix, Status};

#[derive(Clone, Debug, Default)]
pub struct ConicBuilder {
    cost: Vec<f64>,
    scalar_rows: Vec<LmiBlock>,
    psd_blocks: Vec<RealLmiBlock>,
}

/// Outcome of an LMI problem, in design-variable space.
#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub status: Status,
    /// Design variables (indexed by `VarId`); meaningful when optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
    /// For an infeasible design: `‖A x‖` of the normalized Farkas ray
    /// (`⟨F_0, X⟩ = −1`).
    pub certificate_residual: Option<f64>,
}

impl ConicBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self, cost: f64) -> VarId {
        self.cost.push(cost);
        VarId(self.cost.len() - 1)
    }

    /// Fresh Hermitian variable whose trace carries `trace_cost`.
    pub fn new_hermitian(&mut self, n: usize, trace_cost: f64) -> HermitianVar {
        let first = VarId(self.cost.len());
        for local in 0..n * n {
            self.cost.push(if local < n { trace_cost } else { 0.0 });
        }
        HermitianVar::new(n, first)
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    /// `var ≥ 0`.
    pub fn nonneg(&mut self, var: VarId) {
        let mut block = LmiBlock::new(nalgebra::DMatrix::zeros(1, 1)).expect("zero is Hermitian");
        block.add_term(var, &nalgebra::DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))).expect("1x1");
        self.scalar_rows.push(block);
    }

    /// `W ⪰ 0`.
    pub fn psd(&mut self, var: &HermitianVar) {
        let n = var.dim();
        let mut block = LmiBlock::new(nalgebra::DMatrix::zeros(n, n)).expect("zero is Hermitian");
        for id in var.ids() {
            block.add_term(id, &var.basis(id)).expect("basis is Hermitian");
        }
        self.add_block(&block);
    }

    /// Add a Hermitian LMI; 1×1 blocks become scalar inequalities.
    pub fn add_block(&mut self, block: &LmiBlock) {
        if block.dim() == 1 {
            self.scalar_rows.push(block.clone());
        } else {
            self.psd_blocks.push(complex_to_real(block));
        }
    }

    pub fn build(&self) -> Result<ConicProblem> {
        let m = self.cost.len();
        let mut cones = Vec::new();
        if !self.scalar_rows.is_empty() {
            cones.push(Cone::NonNeg(self.scalar_rows.len()));
        }
        cones.extend(self.psd_blocks.iter().map(|b| Cone::Psd(b.constant.nrows())));
        let n: usize = cones.iter().map(|c| c.dim()).sum();
        let mut c = vec![0.0; n];
        let mut triplets = Vec::new();
        for (k, row) in self.scalar_rows.iter().enumerate() {
            c[k] = row.constant()[(0, 0)].re;
            for (var, coeff) in row.linear() {
                check_var(*var, m)?;
                triplets.push((var.0, k, -coeff[(0, 0)].re));
            }
        }
        let mut offset = self.scalar_rows.len();
        for block in &self.psd_blocks {
            let side = block.constant.nrows();
            let len = cone::svec_len(side);
            cone::svec_into(&block.constant, &mut c[offset..offset + len]);
            let mut buf = vec![0.0; len];
            for (var, coeff) in &block.linear {
                check_var(*var, m)?;
                cone::svec_into(coeff, &mut buf);
                for (idx, v) in buf.iter().enumerate() {
                    if *v != 0.0 {
                        triplets.push((var.0, offset + idx, -v));
                    }
                }
            }
            offset += len;
        }
        let a = SparseMatrix::from_triplets(m, n, &triplets)?;
        let b = self.cost.iter().map(|v| -v).collect();
        Ok(ConicProblem::new(c, a, b, cones)?)
    }
}

fn check_var(var: VarId, m: usize) -> Result<()> {
    if var.0 >= m {
        return Err(invalid(format!("block references undeclared variable {}", var.0)));
    }
    Ok(())
}

/// Boundary fraction for the retry after a stalled solve. Near-degenerate
/// designs can lose centrality at 0.99 and run into the cone boundary.
const RETRY_STEP_FRACTION: f64 = 0.95;

/// Solve a problem produced by [`ConicBuilder::build`]. A solve that stalls
/// or runs out of iterations is retried once with shorter steps.
pub fn solve_lmi(problem: &ConicProblem, opts: &SolverOptions) -> Result<LmiSolution> {
    let mut sol: ConicSolution = rcbf_solver::solve(problem, opts)?;
    if matches!(sol.status, Status::NumericalFailure | Status::IterationLimit)
        && opts.step_fraction > RETRY_STEP_FRACTION
    {
        let first = sol.iterations;
        sol = rcbf_solver::solve(problem, &SolverOptions { step_fraction: RETRY_STEP_FRACTION, ..opts.clone() })?;
        sol.iterations += first;
    }
    let objective = -sol.dual_objective;
    let certificate_residual = match sol.status {
        Status::DualInfeasible => {
            let mut ax = vec![0.0; problem.num_constraints()];
            problem.equality.mul_vec(&sol.x, &mut ax);
            let ctx: f64 = problem.objective.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
            let norm = ax.iter().map(|v| v * v).sum::<f64>().sqrt();
            Some(if ctx != 0.0 { norm / ctx.abs() } else { norm })
        }
        _ => None,
    };
    Ok(LmiSolution {
        status: sol.status,
        values: sol.y,
        objective,
        iterations: sol.iterations,
        residual: sol.residuals.max(),
        certificate_residual,
    })
}

/// Largest `s` such that `F(x) ⪰ s·I` for some `x` with the block's
/// multiplier nonnegative; `≥ 0` exactly when the LMI is feasible.
/// Returns `+∞` when the margin is unbounded.
pub fn lmi_margin(block: &LmiBlock, opts: &SolverOptions) -> Result<f64> {
    let nvars = block.max_var().map_or(0, |v| v.0 + 1);
    let mut builder = ConicBuilder::new();
    for _ in 0..nvars {
        builder.new_var(0.0);
    }
    let s = builder.new_var(-1.0);
    let mut shifted = block.clone();
    let n = block.dim();
    shifted.add_term(s, &(-nalgebra::DMatrix::<Complex64>::identity(n, n)))?;
    builder.add_block(&shifted);
    if let Some(lambda) = block.multiplier() {
        builder.nonneg(lambda);
    }
    let problem = builder.build()?;
    let sol = solve_lmi(&problem, opts)?;
    match sol.status {
        Status::Optimal => Ok(sol.values[s.0]),
        Status::PrimalInfeasible => Ok(f64::INFINITY),
        other => Err(invalid(format!("margin problem ended with status {}", other.as_str()))),
    }
}
