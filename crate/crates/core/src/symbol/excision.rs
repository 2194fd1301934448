//! Weight jets, excision functions and kernels built on the anisotropic radius.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{coordinate_jet, Kernel, SymbolKernel, SymbolPoint, SymbolSpace, Var};
use crate::aniso::{aniso_abs, aniso_bracket, AnisotropyVector};
use crate::error::{Error, Result};
use crate::jet::MatrixJet;

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Covariable axes of a symbol space together with their weights.
#[derive(Debug, Clone)]
pub(crate) struct Weight {
    pub ell: AnisotropyVector,
    pub vars: Vec<Var>,
    pub with_lambda: bool,
}

impl Weight {
    pub fn new(space: &SymbolSpace, with_lambda: bool) -> Self {
        let with_lambda = with_lambda && space.has_lambda();
        Self {
            ell: space.covariable_ell(with_lambda),
            vars: space.covariable_vars(with_lambda),
            with_lambda,
        }
    }

    pub fn values(&self, pt: &SymbolPoint) -> Vec<f64> {
        pt.covariables(self.with_lambda)
    }

    pub fn radius(&self, pt: &SymbolPoint) -> f64 {
        aniso_abs(&self.values(pt), &self.ell).expect("matching dimensions")
    }

    pub fn bracket(&self, pt: &SymbolPoint) -> f64 {
        aniso_bracket(&self.values(pt), &self.ell).expect("matching dimensions")
    }

    fn scaled_power_sum(
        &self,
        pt: &SymbolPoint,
        vars: &[Var],
        order: usize,
        scale: f64,
    ) -> Result<MatrixJet> {
        let mut s = MatrixJet::scalar(vars.len(), order, re(0.0));
        for (j, &v) in self.vars.iter().enumerate() {
            let w = coordinate_jet(pt, vars, order, v)
                .scale(re(scale.powi(-(self.ell.entry(j) as i32))));
            s = s.add(&w.powi(2 * self.ell.pi(j) as u32)?)?;
        }
        Ok(s)
    }

    /// Jet of `|v|_ℓ`; the radius is factored out first so large arguments stay finite.
    pub fn radius_jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let r0 = self.radius(pt);
        if r0 == 0.0 {
            return Err(Error::Origin);
        }
        let s = self.scaled_power_sum(pt, vars, order, r0)?;
        Ok(s.powf(1.0 / (2.0 * self.ell.product() as f64))?
            .scale(re(r0)))
    }

    /// Jet of `⟨v⟩_ℓ^s`.
    pub fn bracket_power_jet(
        &self,
        pt: &SymbolPoint,
        vars: &[Var],
        order: usize,
        s: f64,
    ) -> Result<MatrixJet> {
        let r = self.radius(pt).max(1.0);
        let two_l = 2.0 * self.ell.product() as f64;
        let inner = self
            .scaled_power_sum(pt, vars, order, r)?
            .add_identity(re(r.powf(-two_l)))?;
        Ok(inner.powf(s / two_l)?.scale(re(r.powf(s))))
    }
}

/// Smooth cut `χ(|v|_ℓ/θ)` vanishing for `|v|_ℓ ≤ θ/c` and equal to one for
/// `|v|_ℓ ≥ cθ`, interpolated by the quintic smoothstep (C² at both seams).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Excision {
    pub c: f64,
    pub theta: f64,
}

impl Default for Excision {
    fn default() -> Self {
        Self { c: 2.0, theta: 1.0 }
    }
}

impl Excision {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "excision constant {c} must exceed 1"
            )));
        }
        Ok(Self { c, theta: 1.0 })
    }

    /// `χ_θ(v) = χ(δ_{1/θ} v)`.
    pub fn scaled(&self, theta: f64) -> Result<Self> {
        if !(theta >= 1.0) {
            return Err(Error::ThetaBelowOne(theta));
        }
        Ok(Self {
            c: self.c,
            theta: self.theta * theta,
        })
    }

    fn t_of(&self, rho: f64) -> f64 {
        let lo = 1.0 / self.c;
        (rho / self.theta - lo) / (self.c - lo)
    }

    /// Value as a function of the radius.
    pub fn value(&self, rho: f64) -> f64 {
        let t = self.t_of(rho).clamp(0.0, 1.0);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }

    /// `χ ≡ 0` on a neighbourhood of this radius.
    pub fn vanishes_near(&self, rho: f64) -> bool {
        rho / self.theta < 1.0 / self.c
    }

    /// `χ ≡ 1` on a neighbourhood of this radius.
    pub fn is_one_near(&self, rho: f64) -> bool {
        rho / self.theta > self.c
    }

    pub(crate) fn jet(
        &self,
        w: &Weight,
        pt: &SymbolPoint,
        vars: &[Var],
        order: usize,
    ) -> Result<MatrixJet> {
        let rho = w.radius(pt);
        if self.vanishes_near(rho) {
            return Ok(MatrixJet::scalar(vars.len(), order, re(0.0)));
        }
        if self.is_one_near(rho) {
            return Ok(MatrixJet::scalar(vars.len(), order, re(1.0)));
        }
        let lo = 1.0 / self.c;
        let span = self.c - lo;
        let t = w
            .radius_jet(pt, vars, order)?
            .scale(re(1.0 / (self.theta * span)))
            .add_identity(re(-lo / span))?;
        let t0 = t.scalar_value().re.clamp(0.0, 1.0);
        // Taylor coefficients of 6t⁵ - 15t⁴ + 10t³
        let coeffs = [
            t0 * t0 * t0 * (10.0 - 15.0 * t0 + 6.0 * t0 * t0),
            30.0 * t0 * t0 * (1.0 - t0) * (1.0 - t0),
            (120.0 * t0 * t0 * t0 - 180.0 * t0 * t0 + 60.0 * t0) / 2.0,
            (360.0 * t0 * t0 - 360.0 * t0 + 60.0) / 6.0,
            (720.0 * t0 - 360.0) / 24.0,
            720.0 / 120.0,
        ];
        let cs: Vec<Complex64> = coeffs.iter().map(|&v| re(v)).collect();
        t.compose_scalar(&cs)
    }
}

/// `χ(ξ, λ)` as a scalar symbol.
#[derive(Debug, Clone)]
pub struct ExcisionKernel {
    weight: Weight,
    excision: Excision,
}

impl ExcisionKernel {
    pub fn new(space: &SymbolSpace, excision: Excision, with_lambda: bool) -> Self {
        Self {
            weight: Weight::new(space, with_lambda),
            excision,
        }
    }
}

impl SymbolKernel for ExcisionKernel {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        self.excision.jet(&self.weight, pt, vars, order)
    }

    fn depends_on_x(&self) -> bool {
        false
    }

    fn depends_on_lambda(&self) -> bool {
        self.weight.with_lambda
    }
}

/// `⟨v⟩_ℓ^s` over the covariables.
#[derive(Debug, Clone)]
pub struct BracketPower {
    weight: Weight,
    s: f64,
}

impl BracketPower {
    pub fn new(space: &SymbolSpace, s: f64, with_lambda: bool) -> Self {
        Self {
            weight: Weight::new(space, with_lambda),
            s,
        }
    }
}

impl SymbolKernel for BracketPower {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        self.weight.bracket_power_jet(pt, vars, order, self.s)
    }

    fn depends_on_x(&self) -> bool {
        false
    }

    fn depends_on_lambda(&self) -> bool {
        self.weight.with_lambda
    }
}

/// `χ(v)·|v|_ℓ^s`, smooth and homogeneous of degree `s` outside a compact set.
#[derive(Debug, Clone)]
pub struct ExcisedAbsPower {
    weight: Weight,
    excision: Excision,
    s: f64,
}

impl ExcisedAbsPower {
    pub fn new(space: &SymbolSpace, s: f64, excision: Excision, with_lambda: bool) -> Self {
        Self {
            weight: Weight::new(space, with_lambda),
            excision,
            s,
        }
    }
}

impl SymbolKernel for ExcisedAbsPower {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let chi = self.excision.jet(&self.weight, pt, vars, order)?;
        if chi.max_abs() == 0.0 {
            return Ok(chi);
        }
        chi.mul(&self.weight.radius_jet(pt, vars, order)?.powf(self.s)?)
    }

    fn depends_on_x(&self) -> bool {
        false
    }

    fn depends_on_lambda(&self) -> bool {
        self.weight.with_lambda
    }
}

/// `χ·a`, skipping `a` wherever `χ` vanishes identically (homogeneous
/// components may be singular at the origin).
#[derive(Debug, Clone)]
pub struct Excised {
    inner: Kernel,
    weight: Weight,
    excision: Excision,
}

impl Excised {
    pub fn new(inner: Kernel, space: &SymbolSpace, excision: Excision) -> Self {
        Self {
            inner,
            weight: Weight::new(space, true),
            excision,
        }
    }
}

impl SymbolKernel for Excised {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let chi = self.excision.jet(&self.weight, pt, vars, order)?;
        if chi.max_abs() == 0.0 {
            let (r, c) = self.shape();
            return Ok(MatrixJet::zeros(vars.len(), order, r, c));
        }
        chi.mul(&self.inner.jet(pt, vars, order)?)
    }

    fn depends_on_x(&self) -> bool {
        self.inner.depends_on_x()
    }

    fn depends_on_lambda(&self) -> bool {
        self.weight.with_lambda || self.inner.depends_on_lambda()
    }
}

/// Running record of condition numbers seen by an [`Inverse`] kernel.
#[derive(Debug, Default)]
pub struct InverseLog {
    max_cond_bits: AtomicU64,
    count: AtomicU64,
}

impl InverseLog {
    fn record(&self, cond: f64) {
        self.count.fetch_add(1, Ordering::Relaxed);
        let mut cur = self.max_cond_bits.load(Ordering::Relaxed);
        while cond > f64::from_bits(cur) {
            match self.max_cond_bits.compare_exchange_weak(
                cur,
                cond.to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => break,
                Err(now) => cur = now,
            }
        }
    }

    pub fn max_condition(&self) -> f64 {
        f64::from_bits(self.max_cond_bits.load(Ordering::Relaxed))
    }

    pub fn inversions(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

pub const MAX_CONDITION: f64 = 1e12;

/// Pointwise inverse `a(x,ξ,λ)^{-1}`; fails when the condition number exceeds `1e12`.
#[derive(Debug)]
pub struct Inverse {
    inner: Kernel,
    log: Arc<InverseLog>,
}

impl Inverse {
    pub fn new(inner: Kernel) -> Self {
        Self {
            inner,
            log: Arc::new(InverseLog::default()),
        }
    }

    pub fn log(&self) -> Arc<InverseLog> {
        self.log.clone()
    }
}

pub(crate) fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (mx, mn) = (sv.max(), sv.min());
    if mn == 0.0 {
        f64::INFINITY
    } else {
        mx / mn
    }
}

impl SymbolKernel for Inverse {
    fn shape(&self) -> (usize, usize) {
        let (r, c) = self.inner.shape();
        (c, r)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let a = self.inner.jet(pt, vars, order)?;
        let cond = condition_number(&a.value());
        self.log.record(cond);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
        a.inverse()
    }

    fn depends_on_x(&self) -> bool {
        self.inner.depends_on_x()
    }

    fn depends_on_lambda(&self) -> bool {
        self.inner.depends_on_lambda()
    }

    fn depends_on_xi(&self) -> bool {
        self.inner.depends_on_xi()
    }
}

/// Extends a component given on the anisotropic unit sphere by
/// `a(v) = |v|_ℓ^deg · a(δ_{1/|v|_ℓ} v)`.
#[derive(Debug, Clone)]
pub struct HomogeneousExtension {
    component: Kernel,
    degree: f64,
    weight: Weight,
}

impl HomogeneousExtension {
    pub fn new(component: Kernel, degree: f64, space: &SymbolSpace, with_lambda: bool) -> Self {
        Self {
            component,
            degree,
            weight: Weight::new(space, with_lambda),
        }
    }
}

impl SymbolKernel for HomogeneousExtension {
    fn shape(&self) -> (usize, usize) {
        self.component.shape()
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let rho = self.weight.radius_jet(pt, vars, order)?;
        let r0 = rho.scalar_value().re;
        let v0 = self.weight.values(pt);
        let omega0: Vec<f64> = v0
            .iter()
            .enumerate()
            .map(|(j, v)| v * r0.powi(-(self.weight.ell.entry(j) as i32)))
            .collect();
        let sphere_pt = pt.with_covariables(&omega0, self.weight.with_lambda);
        let rho_inv = rho.powf(-1.0)?;
        // inner variables: covariables, then any x variables requested
        let mut inner_vars = self.weight.vars.clone();
        let mut inner_jets = Vec::with_capacity(inner_vars.len());
        for (j, &v) in self.weight.vars.iter().enumerate() {
            let vj = coordinate_jet(pt, vars, order, v);
            inner_jets.push(vj.mul(&rho_inv.powi(self.weight.ell.entry(j))?)?);
        }
        for &v in vars {
            if let Var::X(_) = v {
                inner_vars.push(v);
                inner_jets.push(coordinate_jet(pt, vars, order, v));
            }
        }
        let on_sphere = if vars.is_empty() {
            self.component.jet(&sphere_pt, &[], order)?
        } else {
            self.component
                .jet(&sphere_pt, &inner_vars, order)?
                .substitute(&inner_jets)?
        };
        on_sphere.mul(&rho.powf(self.degree)?)
    }

    fn depends_on_x(&self) -> bool {
        self.component.depends_on_x()
    }

    fn depends_on_lambda(&self) -> bool {
        self.weight.with_lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{PolyTerm, Polynomial, XProfile};
    use approx::assert_relative_eq;

    fn space12() -> SymbolSpace {
        SymbolSpace::xi_only(AnisotropyVector::new(vec![1, 2]).unwrap())
    }

    fn pt(xi: &[f64]) -> SymbolPoint {
        SymbolPoint::new(vec![0.0; xi.len()], xi.to_vec(), re(0.0))
    }

    #[test]
    fn chi_theta_examples() {
        let chi = Excision::default();
        let w = Weight::new(&space12(), false);
        assert_eq!(chi.scaled(1.0).unwrap(), chi);
        let two = chi.scaled(2.0).unwrap();
        let a = two.value(w.radius(&pt(&[2.0, 4.0])));
        let b = chi.value(w.radius(&pt(&[1.0, 1.0])));
        assert_relative_eq!(a, b, epsilon = 1e-15);
        assert_eq!(two.value(4.0), 1.0);
        assert_eq!(two.value(0.99), 0.0);
        assert!(matches!(chi.scaled(0.5), Err(Error::ThetaBelowOne(_))));
    }

    #[test]
    fn radius_and_bracket_jets() {
        let w = Weight::new(&space12(), false);
        let p = pt(&[0.8, -1.3]);
        let vars = [Var::Xi(0), Var::Xi(1)];
        let r = w.radius_jet(&p, &vars, 2).unwrap();
        let h = 1e-5;
        let fd = (w.radius(&p.shifted(Var::Xi(0), h)) - w.radius(&p.shifted(Var::Xi(0), -h)))
            / (2.0 * h);
        assert_relative_eq!(
            r.derivative_value(&[1, 0]).unwrap()[(0, 0)].re,
            fd,
            epsilon = 1e-8
        );
        let b = w.bracket_power_jet(&p, &vars, 1, 1.0).unwrap();
        assert_relative_eq!(b.scalar_value().re, w.bracket(&p), epsilon = 1e-14);
        let big = pt(&[1e6, 1e12]);
        assert!(w
            .bracket_power_jet(&big, &vars, 2, -3.0)
            .unwrap()
            .max_abs()
            .is_finite());
    }

    #[test]
    fn homogeneous_extension_of_polynomial() {
        let space = space12();
        let c1 = DMatrix::from_element(1, 1, re(1.0));
        let poly = Polynomial::new(
            vec![
                PolyTerm::new(c1.clone(), vec![4, 0], 0, XProfile::default()),
                PolyTerm::new(c1, vec![0, 2], 0, XProfile::default()),
            ],
            (1, 1),
            2,
        )
        .unwrap();
        let ext = HomogeneousExtension::new(Arc::new(poly.clone()), 4.0, &space, false);
        let vars = [Var::Xi(0), Var::Xi(1)];
        for xi in [[0.3, 2.0], [-1.7, 0.1], [5.0, -40.0]] {
            let p = pt(&xi);
            let a = ext.jet(&p, &vars, 2).unwrap();
            let b = poly.jet(&p, &vars, 2).unwrap();
            assert!(a.sub(&b).unwrap().max_abs() <= 1e-9 * b.max_abs());
        }
        assert_eq!(ext.eval(&pt(&[0.0, 0.0])).unwrap_err(), Error::Origin);
    }

    #[test]
    fn inverse_logs_conditions() {
        let m = DMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(1e-13)]);
        let inv = Inverse::new(Arc::new(crate::symbol::Constant::new(m)));
        assert!(matches!(
            inv.eval(&pt(&[1.0, 1.0])),
            Err(Error::IllConditioned { .. })
        ));
        assert_eq!(inv.log().inversions(), 1);
        assert!(inv.log().max_condition() > 1e12);
    }
}
