//! Matrix-valued symbols `a(x, ξ, λ)` with derivative access through jets.
//!
//! A symbol is an immutable tree of [`SymbolKernel`]s. Every kernel can
//! produce a truncated Taylor jet in any subset of the coordinates
//! `x`, `ξ`, `Re λ`, `Im λ`, which gives exact derivatives for the
//! declarative polynomial format and everything built from it.

mod calculus;
mod classical;
mod excision;
mod fd;
mod kernel;
mod probes;
mod seminorm;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aniso::{AnisotropyVector, MultiIndex};
use crate::error::{Error, Result};
use crate::jet::MatrixJet;

pub use calculus::{
    asymptotic_sum, compose, diagonal, neumann_parametrix, principal_inverse, AsymptoticSum,
    BatteryConfig, Compose, Parametrix, PrincipalInverse,
};
pub use classical::{ClassicalSymbol, HomogeneityReport, HomogeneousComponent};
pub use excision::{
    BracketPower, Excised, ExcisedAbsPower, Excision, ExcisionKernel, HomogeneousExtension,
    Inverse, InverseLog,
};
pub use fd::{ClosureSymbol, SymbolFn, FD_ORDER_CAP};
pub use kernel::{Constant, Derivative, PolyTerm, Polynomial, Product, Scale, Sum, XProfile};
pub use probes::{
    fit_log2_slope, measured_order, measured_order_on, OrderConfig, OrderFit, ProbeConfig, ProbeSet,
};
pub use seminorm::{seminorm, SeminormKind, SeminormReport};

/// Coordinate of a jet variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X(usize),
    Xi(usize),
    LamRe,
    LamIm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub lambda: Complex64,
}

impl SymbolPoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>, lambda: Complex64) -> Self {
        Self { x, xi, lambda }
    }

    pub fn coordinate(&self, v: Var) -> f64 {
        match v {
            Var::X(i) => self.x[i],
            Var::Xi(i) => self.xi[i],
            Var::LamRe => self.lambda.re,
            Var::LamIm => self.lambda.im,
        }
    }

    pub fn shifted(&self, v: Var, h: f64) -> Self {
        let mut p = self.clone();
        match v {
            Var::X(i) => p.x[i] += h,
            Var::Xi(i) => p.xi[i] += h,
            Var::LamRe => p.lambda.re += h,
            Var::LamIm => p.lambda.im += h,
        }
        p
    }

    /// `(ξ, Re λ, Im λ)` or `ξ` alone.
    pub fn covariables(&self, with_lambda: bool) -> Vec<f64> {
        let mut v = self.xi.clone();
        if with_lambda {
            v.push(self.lambda.re);
            v.push(self.lambda.im);
        }
        v
    }

    pub fn with_covariables(&self, v: &[f64], with_lambda: bool) -> Self {
        let d = self.xi.len();
        let mut p = self.clone();
        p.xi.copy_from_slice(&v[..d]);
        if with_lambda {
            p.lambda = Complex64::new(v[d], v[d + 1]);
        }
        p
    }
}

/// Coordinates and weights of a symbol class: `x ∈ R^{d_x}`, `ξ ∈ R^d` with
/// anisotropy `ℓ'`, and optionally `λ ∈ C ≅ R²` with weight `ℓ_λ` on both parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSpace {
    pub x_dim: usize,
    pub ell_xi: AnisotropyVector,
    pub lambda_weight: Option<u32>,
}

impl SymbolSpace {
    pub fn new(x_dim: usize, ell_xi: AnisotropyVector, lambda_weight: Option<u32>) -> Result<Self> {
        if lambda_weight == Some(0) {
            return Err(Error::InvalidAnisotropy(
                "lambda weight must be >= 1".into(),
            ));
        }
        Ok(Self {
            x_dim,
            ell_xi,
            lambda_weight,
        })
    }

    /// Symbols in `ξ ∈ R^d` only, with `x ∈ R^d`.
    pub fn xi_only(ell_xi: AnisotropyVector) -> Self {
        Self {
            x_dim: ell_xi.len(),
            ell_xi,
            lambda_weight: None,
        }
    }

    /// Parameter-dependent symbols with `ℓ = (ℓ', ℓ_λ, ℓ_λ)`.
    pub fn with_lambda(ell_xi: AnisotropyVector, lambda_weight: u32) -> Result<Self> {
        Self::new(ell_xi.len(), ell_xi, Some(lambda_weight))
    }

    pub fn xi_dim(&self) -> usize {
        self.ell_xi.len()
    }

    pub fn has_lambda(&self) -> bool {
        self.lambda_weight.is_some()
    }

    /// Weight vector on the covariables, `ℓ'` or `(ℓ', ℓ_λ, ℓ_λ)`.
    pub fn covariable_ell(&self, with_lambda: bool) -> AnisotropyVector {
        match (with_lambda, self.lambda_weight) {
            (true, Some(w)) => {
                let mut e = self.ell_xi.entries().to_vec();
                e.extend([w, w]);
                AnisotropyVector::new(e).expect("positive weights")
            }
            _ => self.ell_xi.clone(),
        }
    }

    pub fn full_ell(&self) -> AnisotropyVector {
        self.covariable_ell(true)
    }

    pub fn covariable_vars(&self, with_lambda: bool) -> Vec<Var> {
        let mut v: Vec<Var> = (0..self.xi_dim()).map(Var::Xi).collect();
        if with_lambda && self.has_lambda() {
            v.push(Var::LamRe);
            v.push(Var::LamIm);
        }
        v
    }

    pub fn x_vars(&self) -> Vec<Var> {
        (0..self.x_dim).map(Var::X).collect()
    }

    /// Weight of a single coordinate; `x` has weight 0.
    pub fn weight_of(&self, v: Var) -> u32 {
        match v {
            Var::X(_) => 0,
            Var::Xi(j) => self.ell_xi.entry(j),
            Var::LamRe | Var::LamIm => self.lambda_weight.unwrap_or(0),
        }
    }

    /// `|β|_ℓ` for a derivative given as `(variable, count)` pairs.
    pub fn derivative_weight(&self, beta: &[(Var, u32)]) -> u64 {
        beta.iter()
            .map(|&(v, k)| self.weight_of(v) as u64 * k as u64)
            .sum()
    }

    /// Converts a multi-index over the covariables into `(variable, count)` pairs.
    pub fn beta_pairs(&self, beta: &MultiIndex) -> Result<Vec<(Var, u32)>> {
        let vars = self.covariable_vars(true);
        if beta.len() != vars.len() {
            return Err(Error::DimensionMismatch {
                expected: vars.len(),
                got: beta.len(),
            });
        }
        Ok(vars
            .into_iter()
            .zip(beta.0.iter().cloned())
            .filter(|&(_, k)| k > 0)
            .collect())
    }

    pub fn origin(&self, lambda: Complex64) -> SymbolPoint {
        SymbolPoint::new(vec![0.0; self.x_dim], vec![0.0; self.xi_dim()], lambda)
    }
}

/// A node of a symbol tree.
pub trait SymbolKernel: Debug + Send + Sync {
    fn shape(&self) -> (usize, usize);

    /// Taylor jet at `pt` in the listed variables, truncated at `order`.
    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet>;

    fn depends_on_x(&self) -> bool;

    fn depends_on_lambda(&self) -> bool {
        true
    }

    fn depends_on_xi(&self) -> bool {
        true
    }

    /// Total degree in `ξ` when the kernel is polynomial in `ξ`.
    fn xi_degree(&self) -> Option<u32> {
        None
    }

    fn eval(&self, pt: &SymbolPoint) -> Result<DMatrix<Complex64>> {
        Ok(self.jet(pt, &[], 0)?.value())
    }
}

pub type Kernel = Arc<dyn SymbolKernel>;

/// Scalar jet of one coordinate in the listed variables.
pub fn coordinate_jet(pt: &SymbolPoint, vars: &[Var], order: usize, v: Var) -> MatrixJet {
    let value = Complex64::new(pt.coordinate(v), 0.0);
    match vars.iter().position(|&u| u == v) {
        Some(i) => MatrixJet::variable(vars.len(), order, i, value, Complex64::new(1.0, 0.0)),
        None => MatrixJet::scalar(vars.len(), order, value),
    }
}

/// Scalar jet of the complex parameter `λ = Re λ + i Im λ`.
pub fn lambda_jet(pt: &SymbolPoint, vars: &[Var], order: usize) -> MatrixJet {
    let mut j = MatrixJet::scalar(vars.len(), order, pt.lambda);
    if order >= 1 {
        let ones = [
            (Var::LamRe, Complex64::new(1.0, 0.0)),
            (Var::LamIm, Complex64::new(0.0, 1.0)),
        ];
        for (v, slope) in ones {
            if let Some(i) = vars.iter().position(|&u| u == v) {
                j = j
                    .add(&MatrixJet::variable(
                        vars.len(),
                        order,
                        i,
                        Complex64::new(0.0, 0.0),
                        slope,
                    ))
                    .expect("same layout");
            }
        }
    }
    j
}

/// An order-tagged symbol on a [`SymbolSpace`].
#[derive(Debug, Clone)]
pub struct MatrixSymbol {
    pub space: SymbolSpace,
    pub order: f64,
    pub kernel: Kernel,
}

impl MatrixSymbol {
    pub fn new(space: SymbolSpace, order: f64, kernel: Kernel) -> Self {
        Self {
            space,
            order,
            kernel,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.kernel.shape()
    }

    pub fn eval(&self, pt: &SymbolPoint) -> Result<DMatrix<Complex64>> {
        self.check_point(pt)?;
        self.kernel.eval(pt)
    }

    pub fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        self.check_point(pt)?;
        self.kernel.jet(pt, vars, order)
    }

    fn check_point(&self, pt: &SymbolPoint) -> Result<()> {
        if pt.x.len() != self.space.x_dim {
            return Err(Error::DimensionMismatch {
                expected: self.space.x_dim,
                got: pt.x.len(),
            });
        }
        if pt.xi.len() != self.space.xi_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.xi_dim(),
                got: pt.xi.len(),
            });
        }
        Ok(())
    }

    pub fn depends_on_x(&self) -> bool {
        self.kernel.depends_on_x()
    }

    pub fn constant(space: SymbolSpace, value: DMatrix<Complex64>) -> Self {
        Self::new(space, 0.0, Arc::new(Constant::new(value)))
    }

    pub fn identity(space: SymbolSpace, m: usize) -> Self {
        Self::constant(space, DMatrix::identity(m, m))
    }

    /// `∂^β a`, of order `μ - |β|_ℓ`.
    pub fn derivative(&self, beta: &[(Var, u32)]) -> MatrixSymbol {
        let order = self.order - self.space.derivative_weight(beta) as f64;
        MatrixSymbol::new(
            self.space.clone(),
            order,
            Arc::new(Derivative::new(self.kernel.clone(), beta.to_vec())),
        )
    }

    pub fn add(&self, other: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol::new(
            self.space.clone(),
            self.order.max(other.order),
            Arc::new(Sum::new(vec![self.kernel.clone(), other.kernel.clone()])),
        )
    }

    pub fn sub(&self, other: &MatrixSymbol) -> MatrixSymbol {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> MatrixSymbol {
        MatrixSymbol::new(
            self.space.clone(),
            self.order,
            Arc::new(Scale::new(self.kernel.clone(), c)),
        )
    }

    /// Pointwise product `a(x,ξ,λ)·b(x,ξ,λ)`.
    pub fn pointwise(&self, other: &MatrixSymbol) -> MatrixSymbol {
        MatrixSymbol::new(
            self.space.clone(),
            self.order + other.order,
            Arc::new(Product::new(vec![
                self.kernel.clone(),
                other.kernel.clone(),
            ])),
        )
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }
}
