//! LMI modeling: Hermitian matrix variables, affine Hermitian blocks, the
//! S-procedure for robust quadratic constraints, and the real embedding
//! consumed by the conic solver.

use crate::error::{invalid, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::model::{ErrorEllipsoid, Link};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

const HERMITIAN_TOL: f64 = 1e-12;

/// Identifier of one real scalar decision variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

/// An `n×n` Hermitian matrix variable stored as `n²` consecutive real
/// coordinates: the `n` diagonal entries, then `(Re, Im)` of each strictly
/// upper entry `(p, q)`, `p < q`, row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianVar {
    n: usize,
    first: usize,
}

impl HermitianVar {
    pub fn new(n: usize, first: VarId) -> Self {
        HermitianVar { n, first: first.0 }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_coordinates(&self) -> usize {
        self.n * self.n
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (self.first..self.first + self.n * self.n).map(VarId)
    }

    pub fn diagonal_ids(&self) -> impl Iterator<Item = VarId> {
        (self.first..self.first + self.n).map(VarId)
    }

    /// Matrix positions touched by coordinate `local`, as `(p, q, value)`
    /// with the Hermitian counterpart implied.
    fn position(&self, local: usize) -> (usize, usize, Complex64) {
        if local < self.n {
            return (local, local, Complex64::new(1.0, 0.0));
        }
        let mut r = local - self.n;
        let imag = r % 2 == 1;
        r /= 2;
        for p in 0..self.n {
            let row = self.n - p - 1;
            if r < row {
                let q = p + 1 + r;
                let v = if imag { Complex64::new(0.0, 1.0) } else { Complex64::new(1.0, 0.0) };
                return (p, q, v);
            }
            r -= row;
        }
        unreachable!("coordinate out of range")
    }

    /// Basis matrix of one coordinate.
    pub fn basis(&self, id: VarId) -> CMatrix {
        let (p, q, v) = self.position(id.0 - self.first);
        let mut m = CMatrix::zeros(self.n, self.n);
        m[(p, q)] = v;
        if p != q {
            m[(q, p)] = v.conj();
        }
        m
    }

    /// Assemble the matrix from a full variable vector (indexed by `VarId`).
    pub fn assemble(&self, values: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for local in 0..self.n * self.n {
            let (p, q, v) = self.position(local);
            let x = values[self.first + local];
            m[(p, q)] += v * x;
            if p != q {
                m[(q, p)] += v.conj() * x;
            }
        }
        m
    }

    /// Coordinates of a Hermitian matrix (inverse of `assemble`).
    pub fn coordinates(&self, m: &CMatrix) -> Vec<f64> {
        (0..self.n * self.n)
            .map(|local| {
                let (p, q, v) = self.position(local);
                if p == q {
                    m[(p, p)].re
                } else if v.im != 0.0 {
                    m[(p, q)].im
                } else {
                    m[(p, q)].re
                }
            })
            .collect()
    }
}

/// Robust quadratic constraint
/// `e^H A e + b^H e + e^H b + c >= 0` for all `e^H C e <= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustQuadratic {
    pub a: CMatrix,
    pub b: CVector,
    pub c: f64,
    pub shape: CMatrix,
}

fn checked_hermitian(m: &CMatrix, what: &str) -> Result<CMatrix> {
    if !m.is_square() || !linalg::all_finite(m) {
        return Err(invalid(format!("{what} must be square and finite")));
    }
    if linalg::hermitian_deviation(m) > HERMITIAN_TOL * (1.0 + linalg::max_abs(m)) {
        return Err(invalid(format!("{what} is not Hermitian")));
    }
    Ok(linalg::symmetrize(m))
}

impl RobustQuadratic {
    pub fn new(a: CMatrix, b: CVector, c: f64, shape: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if b.len() != n || shape.nrows() != n || !c.is_finite() {
            return Err(invalid("robust quadratic dimensions disagree"));
        }
        let a = checked_hermitian(&a, "A")?;
        let shape = checked_hermitian(&shape, "C")?;
        if linalg::min_eigenvalue(&shape) <= 0.0 {
            return Err(invalid("C must be positive definite"));
        }
        Ok(RobustQuadratic { a, b, c, shape })
    }

    /// Value of the quadratic at `e`.
    pub fn value(&self, e: &CVector) -> f64 {
        linalg::quad_form(&self.a, e) + 2.0 * self.b.dotc(e).re + self.c
    }
}

/// `F(x) = F_0 + Σ_v x_v F_v ⪰ 0` with Hermitian coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct LmiBlock {
    constant: CMatrix,
    linear: BTreeMap<VarId, CMatrix>,
    multiplier: Option<VarId>,
}

impl LmiBlock {
    pub fn new(constant: CMatrix) -> Result<Self> {
        let constant = checked_hermitian(&constant, "constant part")?;
        Ok(LmiBlock { constant, linear: BTreeMap::new(), multiplier: None })
    }

    /// Add `coeff` to the coefficient of `var`.
    pub fn add_term(&mut self, var: VarId, coeff: &CMatrix) -> Result<()> {
        if coeff.nrows() != self.dim() {
            return Err(invalid("coefficient dimension differs from the block"));
        }
        let coeff = checked_hermitian(coeff, "coefficient")?;
        match self.linear.get_mut(&var) {
            Some(existing) => *existing += coeff,
            None => {
                self.linear.insert(var, coeff);
            }
        }
        Ok(())
    }

    pub fn set_multiplier(&mut self, var: VarId) {
        self.multiplier = Some(var);
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn constant(&self) -> &CMatrix {
        &self.constant
    }

    pub fn linear(&self) -> &BTreeMap<VarId, CMatrix> {
        &self.linear
    }

    pub fn coefficient(&self, var: VarId) -> Option<&CMatrix> {
        self.linear.get(&var)
    }

    pub fn multiplier(&self) -> Option<VarId> {
        self.multiplier
    }

    /// `F(x)` for a full variable vector indexed by `VarId`.
    pub fn evaluate(&self, values: &[f64]) -> CMatrix {
        let mut m = self.constant.clone();
        for (var, coeff) in &self.linear {
            m += coeff * Complex64::new(values[var.0], 0.0);
        }
        m
    }

    pub fn min_eigenvalue(&self, values: &[f64]) -> f64 {
        linalg::min_eigenvalue(&self.evaluate(values))
    }

    /// `f·F(x)` for `f > 0` (same feasible set).
    pub fn scaled(&self, f: f64) -> LmiBlock {
        let c = Complex64::new(f, 0.0);
        LmiBlock {
            constant: &self.constant * c,
            linear: self.linear.iter().map(|(v, m)| (*v, m * c)).collect(),
            multiplier: self.multiplier,
        }
    }

    /// Multiply the coefficient of `var` by `f`, i.e. substitute `var → f·var`.
    pub fn scale_term(&mut self, var: VarId, f: f64) {
        if let Some(m) = self.linear.get_mut(&var) {
            *m *= Complex64::new(f, 0.0);
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<VarId> {
        self.linear.keys().next_back().copied()
    }
}

/// `[[A + λC, b], [b^H, c − λ]] ⪰ 0` with multiplier `lambda`.
pub fn s_procedure(rq: &RobustQuadratic, lambda: VarId) -> Result<LmiBlock> {
    let n = rq.a.nrows();
    let mut constant = CMatrix::zeros(n + 1, n + 1);
    constant.view_mut((0, 0), (n, n)).copy_from(&rq.a);
    for p in 0..n {
        constant[(p, n)] = rq.b[p];
        constant[(n, p)] = rq.b[p].conj();
    }
    constant[(n, n)] = Complex64::new(rq.c, 0.0);
    let mut block = LmiBlock::new(constant)?;
    let mut coeff = CMatrix::zeros(n + 1, n + 1);
    coeff.view_mut((0, 0), (n, n)).copy_from(&rq.shape);
    coeff[(n, n)] = Complex64::new(-1.0, 0.0);
    block.add_term(lambda, &coeff)?;
    block.set_multiplier(lambda);
    Ok(block)
}

/// `[I; h^H] E [I; h^H]^H = [[E, E h], [h^H E, h^H E h]]`.
fn bordered(e: &CMatrix, h: &CVector) -> CMatrix {
    let n = e.nrows();
    let eh = e * h;
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(e);
    for p in 0..n {
        m[(p, n)] = eh[p];
        m[(n, p)] = eh[p].conj();
    }
    m[(n, n)] = Complex64::new(h.dotc(&eh).re, 0.0);
    m
}

/// Add `Σ_v x_v · weight · [I; h^H] B_v [I; h^H]^H` for every coordinate of `var`.
fn add_bordered(block: &mut LmiBlock, var: &HermitianVar, weight: f64, h: &CVector) -> Result<()> {
    for id in var.ids() {
        let m = bordered(&var.basis(id), h) * Complex64::new(weight, 0.0);
        block.add_term(id, &m)?;
    }
    Ok(())
}

/// Scalar (1×1) version used when the error set is `{0}`:
/// `Σ weight · h^H W h + Σ coeff · t + constant ≥ 0`.
fn add_nominal(block: &mut LmiBlock, var: &HermitianVar, weight: f64, h: &CVector) -> Result<()> {
    for id in var.ids() {
        let v = weight * linalg::quad_form(&var.basis(id), h);
        block.add_term(id, &CMatrix::from_element(1, 1, Complex64::new(v, 0.0)))?;
    }
    Ok(())
}

fn scalar(v: f64) -> CMatrix {
    CMatrix::from_element(1, 1, Complex64::new(v, 0.0))
}

fn corner(n: usize, v: f64) -> CMatrix {
    let mut m = CMatrix::zeros(n + 1, n + 1);
    m[(n, n)] = Complex64::new(v, 0.0);
    m
}

fn add_multiplier(block: &mut LmiBlock, ellipsoid: &ErrorEllipsoid, n: usize, lambda: Option<VarId>) -> Result<()> {
    let lambda = lambda.ok_or_else(|| invalid("robust block needs a multiplier variable"))?;
    let shape = ellipsoid.shape_matrix(n).expect("non-degenerate ellipsoid");
    let mut coeff = CMatrix::zeros(n + 1, n + 1);
    coeff.view_mut((0, 0), (n, n)).copy_from(&shape);
    coeff[(n, n)] = Complex64::new(-1.0, 0.0);
    block.add_term(lambda, &coeff)?;
    block.set_multiplier(lambda);
    Ok(())
}

/// Inputs of the robust SINR block of one user.
pub struct PhiSpec<'a> {
    pub nominal: &'a CVector,
    pub target: f64,
    pub ellipsoid: &'a ErrorEllipsoid,
    /// The user's own covariance.
    pub own: &'a HermitianVar,
    /// Covariances of the other users of the same cell.
    pub intra: &'a [&'a HermitianVar],
    /// Intercell interference budget terms `(t, weight)`.
    pub interference: &'a [(VarId, f64)],
    /// Noise power plus any constant interference allowance.
    pub noise: f64,
    /// Multiplier variable; unused when the ellipsoid is the zero ball.
    pub multiplier: Option<VarId>,
}

/// `[I; h̄^H](W/γ − Σ_{ℓ≠k} W_ℓ)[I; h̄^H]^H + diag(λC, −Σ w·t − σ² − λ) ⪰ 0`.
/// For a zero-radius error set the equivalent scalar constraint is emitted.
pub fn build_phi(spec: &PhiSpec<'_>) -> Result<LmiBlock> {
    let n = spec.nominal.len();
    if !(spec.target.is_finite() && spec.target > 0.0) {
        return Err(invalid("SINR target must be positive"));
    }
    if spec.own.dim() != n || spec.intra.iter().any(|v| v.dim() != n) {
        return Err(invalid("covariance variables do not match the channel length"));
    }
    if spec.ellipsoid.is_degenerate() {
        let mut block = LmiBlock::new(scalar(-spec.noise))?;
        add_nominal(&mut block, spec.own, 1.0 / spec.target, spec.nominal)?;
        for v in spec.intra {
            add_nominal(&mut block, v, -1.0, spec.nominal)?;
        }
        for &(t, w) in spec.interference {
            block.add_term(t, &scalar(-w))?;
        }
        return Ok(block);
    }
    let mut block = LmiBlock::new(corner(n, -spec.noise))?;
    add_bordered(&mut block, spec.own, 1.0 / spec.target, spec.nominal)?;
    for v in spec.intra {
        add_bordered(&mut block, v, -1.0, spec.nominal)?;
    }
    for &(t, w) in spec.interference {
        block.add_term(t, &corner(n, -w))?;
    }
    add_multiplier(&mut block, spec.ellipsoid, n, spec.multiplier)?;
    Ok(block)
}

/// Right-hand side of an interference constraint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    /// `weight · t`.
    Slack(VarId, f64),
    Constant(f64),
}

/// Inputs of a robust interference block on one cross link.
pub struct PsiSpec<'a> {
    pub link: Link,
    pub nominal: &'a CVector,
    pub ellipsoid: &'a ErrorEllipsoid,
    /// Covariances of every user served by the transmitting BS.
    pub vars: &'a [&'a HermitianVar],
    pub bound: Bound,
    pub multiplier: Option<VarId>,
}

/// `[I; h̄^H](−Σ_ℓ W_ℓ)[I; h̄^H]^H + diag(λC, t − λ) ⪰ 0`.
pub fn build_psi(spec: &PsiSpec<'_>) -> Result<LmiBlock> {
    let n = spec.nominal.len();
    if spec.link.bs == spec.link.cell {
        return Err(invalid("interference blocks need bs != cell"));
    }
    if spec.vars.iter().any(|v| v.dim() != n) {
        return Err(invalid("covariance variables do not match the channel length"));
    }
    let degenerate = spec.ellipsoid.is_degenerate();
    let size = if degenerate { 0 } else { n };
    let base = match spec.bound {
        Bound::Constant(c) => c,
        Bound::Slack(..) => 0.0,
    };
    let mut block = LmiBlock::new(corner(size, base))?;
    for v in spec.vars {
        if degenerate {
            add_nominal(&mut block, v, -1.0, spec.nominal)?;
        } else {
            add_bordered(&mut block, v, -1.0, spec.nominal)?;
        }
    }
    if let Bound::Slack(t, w) = spec.bound {
        block.add_term(t, &corner(size, w))?;
    }
    if !degenerate {
        add_multiplier(&mut block, spec.ellipsoid, n, spec.multiplier)?;
    }
    Ok(block)
}

/// Real symmetric form of an [`LmiBlock`]. Traces are doubled by the
/// embedding; `trace_scale` records the factor.
#[derive(Clone, Debug, PartialEq)]
pub struct RealLmiBlock {
    pub constant: DMatrix<f64>,
    pub linear: BTreeMap<VarId, DMatrix<f64>>,
    pub multiplier: Option<VarId>,
    pub trace_scale: f64,
}

/// Maps every Hermitian `M` to `[[Re M, −Im M], [Im M, Re M]]`, which is
/// PSD exactly when `M` is.
pub fn complex_to_real(block: &LmiBlock) -> RealLmiBlock {
    RealLmiBlock {
        constant: linalg::embed(&block.constant),
        linear: block.linear.iter().map(|(v, m)| (*v, linalg::embed(m))).collect(),
        multiplier: block.multiplier,
        trace_scale: 2.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unit;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hermitian_var_round_trip() {
        let var = HermitianVar::new(3, VarId(2));
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0),
                Complex64::new(2.0, 3.0),
                Complex64::new(-1.0, 0.5),
                Complex64::new(2.0, -3.0),
                c(4.0),
                Complex64::new(0.0, -2.0),
                Complex64::new(-1.0, -0.5),
                Complex64::new(0.0, 2.0),
                c(5.0),
            ],
        );
        let mut values = vec![0.0; 2];
        values.extend(var.coordinates(&m));
        assert_eq!(var.assemble(&values), m);
        let from_basis: CMatrix =
            var.ids().map(|id| var.basis(id) * c(values[id.0])).fold(CMatrix::zeros(3, 3), |a, b| a + b);
        assert_eq!(from_basis, m);
        assert_eq!(var.diagonal_ids().collect::<Vec<_>>(), vec![VarId(2), VarId(3), VarId(4)]);
    }

    #[test]
    fn trivial_s_procedure() {
        let rq = RobustQuadratic::new(CMatrix::zeros(2, 2), CVector::zeros(2), 1.0, CMatrix::identity(2, 2)).unwrap();
        let block = s_procedure(&rq, VarId(0)).unwrap();
        assert_eq!(block.multiplier(), Some(VarId(0)));
        let at = block.evaluate(&[0.4]);
        assert_eq!(at, CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.4), c(0.4), c(0.6)])));
        assert!(block.min_eigenvalue(&[0.0]) >= 0.0);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 1)] = c(1.0);
        assert!(RobustQuadratic::new(a, CVector::zeros(2), 0.0, CMatrix::identity(2, 2)).is_err());
        let not_pd = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]));
        assert!(RobustQuadratic::new(CMatrix::zeros(2, 2), CVector::zeros(2), 0.0, not_pd).is_err());
    }

    #[test]
    fn psi_rejects_same_cell() {
        let w = HermitianVar::new(2, VarId(0));
        let ell = ErrorEllipsoid::spherical(0.1).unwrap();
        let h = unit(2, 0);
        let spec = PsiSpec {
            link: Link::new(1, 1, 0),
            nominal: &h,
            ellipsoid: &ell,
            vars: &[&w],
            bound: Bound::Constant(1.0),
            multiplier: Some(VarId(4)),
        };
        assert!(build_psi(&spec).is_err());
    }

    #[test]
    fn robust_phi_requires_multiplier() {
        let w = HermitianVar::new(2, VarId(0));
        let ell = ErrorEllipsoid::spherical(0.1).unwrap();
        let h = unit(2, 0);
        let spec = PhiSpec {
            nominal: &h,
            target: 1.0,
            ellipsoid: &ell,
            own: &w,
            intra: &[],
            interference: &[],
            noise: 1.0,
            multiplier: None,
        };
        assert!(build_phi(&spec).is_err());
    }

    #[test]
    fn embedding_doubles_trace() {
        let mut block = LmiBlock::new(CMatrix::identity(3, 3)).unwrap();
        block.add_term(VarId(1), &CMatrix::identity(3, 3)).unwrap();
        let real = complex_to_real(&block);
        assert_eq!(real.constant, DMatrix::identity(6, 6));
        assert_eq!(real.constant.trace(), real.trace_scale * block.constant().trace().re);
    }
}
