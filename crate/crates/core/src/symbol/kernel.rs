use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{coordinate_jet, lambda_jet, Kernel, SymbolKernel, SymbolPoint, Var};
use crate::aniso::AnisotropyVector;
use crate::error::{Error, Result};
use crate::jet::MatrixJet;

#[derive(Debug, Clone)]
pub struct Constant {
    value: DMatrix<Complex64>,
}

impl Constant {
    pub fn new(value: DMatrix<Complex64>) -> Self {
        Self { value }
    }

    pub fn scalar(z: Complex64) -> Self {
        Self {
            value: DMatrix::from_element(1, 1, z),
        }
    }
}

impl SymbolKernel for Constant {
    fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    fn jet(&self, _pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        Ok(MatrixJet::constant(vars.len(), order, &self.value))
    }

    fn depends_on_x(&self) -> bool {
        false
    }

    fn depends_on_lambda(&self) -> bool {
        false
    }

    fn depends_on_xi(&self) -> bool {
        false
    }

    fn xi_degree(&self) -> Option<u32> {
        Some(0)
    }
}

/// Scalar coefficient profile in `x`, of class `S^0_cl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XProfile {
    Constant {
        value: f64,
    },
    /// `limit + (center - limit)·exp(-|x|²/width²)`
    RadialSettling {
        center: f64,
        limit: f64,
        width: f64,
    },
}

impl Default for XProfile {
    fn default() -> Self {
        XProfile::Constant { value: 1.0 }
    }
}

impl XProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            XProfile::Constant { value } if value.is_finite() => Ok(()),
            XProfile::RadialSettling {
                center,
                limit,
                width,
            } if center.is_finite() && limit.is_finite() && *width > 0.0 => Ok(()),
            _ => Err(Error::InvalidArgument(format!(
                "invalid x-profile {self:?}"
            ))),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, XProfile::Constant { .. })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            XProfile::Constant { value } => value,
            XProfile::RadialSettling {
                center,
                limit,
                width,
            } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                limit + (center - limit) * (-r2 / (width * width)).exp()
            }
        }
    }

    /// Value of the degree-zero principal component as `|x| → ∞`.
    pub fn radial_limit(&self) -> f64 {
        match *self {
            XProfile::Constant { value } => value,
            XProfile::RadialSettling { limit, .. } => limit,
        }
    }

    pub fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        match *self {
            XProfile::Constant { value } => Ok(MatrixJet::scalar(
                vars.len(),
                order,
                Complex64::new(value, 0.0),
            )),
            XProfile::RadialSettling {
                center,
                limit,
                width,
            } => {
                let mut g = MatrixJet::scalar(vars.len(), order, Complex64::new(0.0, 0.0));
                for i in 0..pt.x.len() {
                    let xi = coordinate_jet(pt, vars, order, Var::X(i));
                    g = g.add(&xi.mul(&xi)?)?;
                }
                let e = g.scale(Complex64::new(-1.0 / (width * width), 0.0)).exp()?;
                e.scale(Complex64::new(center - limit, 0.0))
                    .add_identity(Complex64::new(limit, 0.0))
            }
        }
    }
}

/// `coef · φ(x) · ξ^α · λ^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub coef: DMatrix<Complex64>,
    pub alpha: Vec<u32>,
    pub lambda_power: u32,
    pub profile: XProfile,
}

impl PolyTerm {
    pub fn new(
        coef: DMatrix<Complex64>,
        alpha: Vec<u32>,
        lambda_power: u32,
        profile: XProfile,
    ) -> Self {
        Self {
            coef,
            alpha,
            lambda_power,
            profile,
        }
    }

    /// Anisotropic degree `|α|_{ℓ'} + ℓ_λ·k`.
    pub fn degree(&self, ell_xi: &AnisotropyVector, lambda_weight: u32) -> u64 {
        self.alpha
            .iter()
            .zip(ell_xi.entries())
            .map(|(&a, &l)| a as u64 * l as u64)
            .sum::<u64>()
            + lambda_weight as u64 * self.lambda_power as u64
    }
}

/// Declarative polynomial symbol `Σ c_t φ_t(x) ξ^{α_t} λ^{k_t}`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    terms: Vec<PolyTerm>,
    shape: (usize, usize),
    xi_dim: usize,
}

impl Polynomial {
    pub fn new(terms: Vec<PolyTerm>, shape: (usize, usize), xi_dim: usize) -> Result<Self> {
        for t in &terms {
            if t.coef.shape() != shape {
                return Err(Error::ShapeMismatch(format!(
                    "term coefficient {:?} vs {:?}",
                    t.coef.shape(),
                    shape
                )));
            }
            if t.alpha.len() != xi_dim {
                return Err(Error::DimensionMismatch {
                    expected: xi_dim,
                    got: t.alpha.len(),
                });
            }
            t.profile.validate()?;
        }
        Ok(Self {
            terms,
            shape,
            xi_dim,
        })
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn xi_dim(&self) -> usize {
        self.xi_dim
    }

    /// Same polynomial with every profile replaced by its radial limit.
    pub fn radial_limit(&self) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|t| PolyTerm {
                profile: XProfile::Constant {
                    value: t.profile.radial_limit(),
                },
                ..t.clone()
            })
            .collect();
        Polynomial {
            terms,
            shape: self.shape,
            xi_dim: self.xi_dim,
        }
    }

    /// Terms grouped by anisotropic degree, highest first.
    pub fn homogeneous_parts(
        &self,
        ell_xi: &AnisotropyVector,
        lambda_weight: u32,
    ) -> BTreeMap<u64, Polynomial> {
        let mut groups: BTreeMap<u64, Vec<PolyTerm>> = BTreeMap::new();
        for t in &self.terms {
            groups
                .entry(t.degree(ell_xi, lambda_weight))
                .or_default()
                .push(t.clone());
        }
        groups
            .into_iter()
            .map(|(d, terms)| {
                (
                    d,
                    Polynomial {
                        terms,
                        shape: self.shape,
                        xi_dim: self.xi_dim,
                    },
                )
            })
            .collect()
    }

    pub fn max_degree(&self, ell_xi: &AnisotropyVector, lambda_weight: u32) -> Option<u64> {
        self.terms
            .iter()
            .map(|t| t.degree(ell_xi, lambda_weight))
            .max()
    }

    pub fn zero(shape: (usize, usize), xi_dim: usize) -> Polynomial {
        Polynomial {
            terms: Vec::new(),
            shape,
            xi_dim,
        }
    }

    /// Value at `(x, ξ)` with `λ = 0`; used for spectra of principal parts.
    pub fn eval_at(&self, x: &[f64], xi: &[f64], lambda: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.shape.0, self.shape.1);
        for t in &self.terms {
            let mut s = Complex64::new(t.profile.value(x), 0.0) * lambda.powu(t.lambda_power);
            for (xj, &a) in xi.iter().zip(&t.alpha) {
                s *= xj.powi(a as i32);
            }
            out += &t.coef * s;
        }
        out
    }
}

impl SymbolKernel for Polynomial {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let n = vars.len();
        let mut out = MatrixJet::zeros(n, order, self.shape.0, self.shape.1);
        let xi: Vec<MatrixJet> = (0..self.xi_dim)
            .map(|j| coordinate_jet(pt, vars, order, Var::Xi(j)))
            .collect();
        let lam = lambda_jet(pt, vars, order);
        let mut xi_pows: Vec<Vec<MatrixJet>> = xi
            .iter()
            .map(|j| {
                vec![
                    MatrixJet::scalar(n, order, Complex64::new(1.0, 0.0)),
                    j.clone(),
                ]
            })
            .collect();
        let mut lam_pows = vec![
            MatrixJet::scalar(n, order, Complex64::new(1.0, 0.0)),
            lam.clone(),
        ];
        for t in &self.terms {
            let mut s = t.profile.jet(pt, vars, order)?;
            for (j, &a) in t.alpha.iter().enumerate() {
                while xi_pows[j].len() <= a as usize {
                    let next = xi_pows[j].last().expect("nonempty").mul(&xi[j])?;
                    xi_pows[j].push(next);
                }
                if a > 0 {
                    s = s.mul(&xi_pows[j][a as usize])?;
                }
            }
            while lam_pows.len() <= t.lambda_power as usize {
                let next = lam_pows.last().expect("nonempty").mul(&lam)?;
                lam_pows.push(next);
            }
            if t.lambda_power > 0 {
                s = s.mul(&lam_pows[t.lambda_power as usize])?;
            }
            out = out.add(&s.times_matrix(&t.coef)?)?;
        }
        Ok(out)
    }

    fn depends_on_x(&self) -> bool {
        self.terms.iter().any(|t| !t.profile.is_constant())
    }

    fn depends_on_lambda(&self) -> bool {
        self.terms.iter().any(|t| t.lambda_power > 0)
    }

    fn depends_on_xi(&self) -> bool {
        self.terms.iter().any(|t| t.alpha.iter().any(|&a| a > 0))
    }

    fn xi_degree(&self) -> Option<u32> {
        Some(
            self.terms
                .iter()
                .map(|t| t.alpha.iter().sum::<u32>())
                .max()
                .unwrap_or(0),
        )
    }
}

fn broadcast_shape(kernels: &[Kernel]) -> (usize, usize) {
    kernels
        .iter()
        .map(|k| k.shape())
        .find(|&s| s != (1, 1))
        .unwrap_or((1, 1))
}

#[derive(Debug, Clone)]
pub struct Sum {
    terms: Vec<Kernel>,
}

impl Sum {
    pub fn new(terms: Vec<Kernel>) -> Self {
        Self { terms }
    }
}

impl SymbolKernel for Sum {
    fn shape(&self) -> (usize, usize) {
        broadcast_shape(&self.terms)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let (r, c) = self.shape();
        let mut out = MatrixJet::zeros(vars.len(), order, r, c);
        for t in &self.terms {
            out = out.add(&t.jet(pt, vars, order)?)?;
        }
        Ok(out)
    }

    fn depends_on_x(&self) -> bool {
        self.terms.iter().any(|t| t.depends_on_x())
    }

    fn depends_on_lambda(&self) -> bool {
        self.terms.iter().any(|t| t.depends_on_lambda())
    }

    fn depends_on_xi(&self) -> bool {
        self.terms.iter().any(|t| t.depends_on_xi())
    }

    fn xi_degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .map(|t| t.xi_degree())
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }
}

/// Pointwise matrix product, left to right; `1×1` factors broadcast.
#[derive(Debug, Clone)]
pub struct Product {
    factors: Vec<Kernel>,
}

impl Product {
    pub fn new(factors: Vec<Kernel>) -> Self {
        Self { factors }
    }
}

impl SymbolKernel for Product {
    fn shape(&self) -> (usize, usize) {
        let rows = self
            .factors
            .iter()
            .map(|k| k.shape())
            .find(|&s| s != (1, 1))
            .map_or(1, |s| s.0);
        let cols = self
            .factors
            .iter()
            .rev()
            .map(|k| k.shape())
            .find(|&s| s != (1, 1))
            .map_or(1, |s| s.1);
        (rows, cols)
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let mut it = self.factors.iter();
        let first = it.next().ok_or(Error::Empty("product factors"))?;
        let mut out = first.jet(pt, vars, order)?;
        for f in it {
            if out.max_abs() == 0.0 {
                let (r, c) = self.shape();
                return Ok(MatrixJet::zeros(vars.len(), order, r, c));
            }
            out = out.mul(&f.jet(pt, vars, order)?)?;
        }
        Ok(out)
    }

    fn depends_on_x(&self) -> bool {
        self.factors.iter().any(|t| t.depends_on_x())
    }

    fn depends_on_lambda(&self) -> bool {
        self.factors.iter().any(|t| t.depends_on_lambda())
    }

    fn depends_on_xi(&self) -> bool {
        self.factors.iter().any(|t| t.depends_on_xi())
    }

    fn xi_degree(&self) -> Option<u32> {
        self.factors
            .iter()
            .map(|t| t.xi_degree())
            .try_fold(0, |acc, d| d.map(|d| acc + d))
    }
}

#[derive(Debug, Clone)]
pub struct Scale {
    inner: Kernel,
    c: Complex64,
}

impl Scale {
    pub fn new(inner: Kernel, c: Complex64) -> Self {
        Self { inner, c }
    }
}

impl SymbolKernel for Scale {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        Ok(self.inner.jet(pt, vars, order)?.scale(self.c))
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

    fn xi_degree(&self) -> Option<u32> {
        self.inner.xi_degree()
    }
}

/// `∂^β a` as a symbol in its own right.
#[derive(Debug, Clone)]
pub struct Derivative {
    inner: Kernel,
    beta: Vec<(Var, u32)>,
}

impl Derivative {
    pub fn new(inner: Kernel, beta: Vec<(Var, u32)>) -> Self {
        let mut merged: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, k) in beta {
            *merged.entry(v).or_default() += k;
        }
        Self {
            inner,
            beta: merged.into_iter().filter(|&(_, k)| k > 0).collect(),
        }
    }
}

impl SymbolKernel for Derivative {
    fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        let mut all: Vec<Var> = vars.to_vec();
        for &(v, _) in &self.beta {
            if !all.contains(&v) {
                all.push(v);
            }
        }
        let total: u32 = self.beta.iter().map(|&(_, k)| k).sum();
        let mut j = self.inner.jet(pt, &all, order + total as usize)?;
        for &(v, k) in &self.beta {
            let idx = all.iter().position(|&u| u == v).expect("added above");
            for _ in 0..k {
                j = j.differentiate(idx);
            }
        }
        let keep: Vec<usize> = (0..vars.len()).collect();
        Ok(j.truncate(order).restrict(&keep))
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

    fn xi_degree(&self) -> Option<u32> {
        let d: u32 = self
            .beta
            .iter()
            .filter(|(v, _)| matches!(v, Var::Xi(_)))
            .map(|&(_, k)| k)
            .sum();
        self.inner.xi_degree().map(|q| q.saturating_sub(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn heat() -> Polynomial {
        // -ξ² - λ in one dimension
        Polynomial::new(
            vec![
                PolyTerm::new(
                    DMatrix::from_element(1, 1, c(-1.0)),
                    vec![2],
                    0,
                    XProfile::default(),
                ),
                PolyTerm::new(
                    DMatrix::from_element(1, 1, c(-1.0)),
                    vec![0],
                    1,
                    XProfile::default(),
                ),
            ],
            (1, 1),
            1,
        )
        .unwrap()
    }

    #[test]
    fn polynomial_values_and_derivatives() {
        let p = heat();
        let pt = SymbolPoint::new(vec![0.0], vec![3.0], Complex64::new(1.0, 2.0));
        assert_eq!(p.eval(&pt).unwrap()[(0, 0)], Complex64::new(-10.0, -2.0));
        let j = p
            .jet(&pt, &[Var::Xi(0), Var::LamRe, Var::LamIm], 2)
            .unwrap();
        assert_eq!(j.derivative_value(&[1, 0, 0]).unwrap()[(0, 0)], c(-6.0));
        assert_eq!(j.derivative_value(&[2, 0, 0]).unwrap()[(0, 0)], c(-2.0));
        assert_eq!(j.derivative_value(&[0, 1, 0]).unwrap()[(0, 0)], c(-1.0));
        assert_eq!(
            j.derivative_value(&[0, 0, 1]).unwrap()[(0, 0)],
            Complex64::new(0.0, -1.0)
        );
        assert_eq!(p.xi_degree(), Some(2));
        assert!(!p.depends_on_x());
    }

    #[test]
    fn radial_settling_profile() {
        let prof = XProfile::RadialSettling {
            center: 2.0,
            limit: 1.0,
            width: 1.5,
        };
        assert_relative_eq!(prof.value(&[0.0]), 2.0);
        assert_relative_eq!(prof.value(&[40.0]), 1.0);
        let pt = SymbolPoint::new(vec![0.7], vec![0.0], c(0.0));
        let j = prof.jet(&pt, &[Var::X(0)], 2).unwrap();
        let expected = -2.0 * 0.7 / 2.25 * (-(0.49) / 2.25f64).exp();
        assert_relative_eq!(
            j.derivative_value(&[1]).unwrap()[(0, 0)].re,
            expected,
            epsilon = 1e-14
        );
    }

    #[test]
    fn derivative_kernel_matches_jet() {
        let p: Kernel = Arc::new(heat());
        let d = Derivative::new(p, vec![(Var::Xi(0), 1)]);
        let pt = SymbolPoint::new(vec![0.0], vec![1.5], c(2.0));
        assert_eq!(d.eval(&pt).unwrap()[(0, 0)], c(-3.0));
        let j = d.jet(&pt, &[Var::Xi(0)], 1).unwrap();
        assert_eq!(j.derivative_value(&[1]).unwrap()[(0, 0)], c(-2.0));
        assert_eq!(d.xi_degree(), Some(1));
    }

    #[test]
    fn homogeneous_parts_group_by_degree() {
        let ell = AnisotropyVector::new(vec![1]).unwrap();
        let mut terms = heat().terms().to_vec();
        terms.push(PolyTerm::new(
            DMatrix::from_element(1, 1, c(0.5)),
            vec![0],
            0,
            XProfile::default(),
        ));
        let p = Polynomial::new(terms, (1, 1), 1).unwrap();
        let parts = p.homogeneous_parts(&ell, 2);
        assert_eq!(parts.keys().cloned().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(parts[&2].terms().len(), 2);
    }
}
