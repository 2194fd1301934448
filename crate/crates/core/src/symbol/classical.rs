use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::excision::Weight;
use super::{
    Constant, Excised, Excision, HomogeneousExtension, Kernel, MatrixSymbol, Polynomial, ProbeSet,
    Sum, SymbolSpace,
};
use crate::aniso::dilate;
use crate::error::{Error, Result};

/// Relative tolerance of the homogeneity identity.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

/// `a_{(μ-j)}`, homogeneous of the given degree in the covariables.
#[derive(Debug, Clone)]
pub struct HomogeneousComponent {
    pub degree: f64,
    pub kernel: Kernel,
}

impl HomogeneousComponent {
    /// A kernel that is already homogeneous (e.g. a homogeneous polynomial).
    pub fn homogeneous(kernel: Kernel, degree: f64) -> Self {
        Self { degree, kernel }
    }

    /// A kernel prescribed on the anisotropic unit sphere, extended by homogeneity.
    pub fn from_sphere(kernel: Kernel, degree: f64, space: &SymbolSpace) -> Self {
        Self {
            degree,
            kernel: Arc::new(HomogeneousExtension::new(kernel, degree, space, true)),
        }
    }

    pub fn zero(degree: f64, shape: (usize, usize)) -> Self {
        Self {
            degree,
            kernel: Arc::new(Constant::new(DMatrix::zeros(shape.0, shape.1))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub max_relative_error: f64,
    pub samples: usize,
    pub pass: bool,
}

/// `a ∼ Σ_j χ·a_{(μ-j)}`, optionally with a known exact symbol.
#[derive(Debug, Clone)]
pub struct ClassicalSymbol {
    pub space: SymbolSpace,
    pub order: f64,
    pub components: Vec<HomogeneousComponent>,
    pub excision: Excision,
    exact: Option<Kernel>,
}

impl ClassicalSymbol {
    /// Components may arrive in any order; gaps in `μ - j` are filled with zeros.
    pub fn new(
        space: SymbolSpace,
        order: f64,
        mut components: Vec<HomogeneousComponent>,
        excision: Excision,
    ) -> Result<Self> {
        let first = components
            .first()
            .ok_or(Error::Empty("classical components"))?;
        let shape = first.kernel.shape();
        components.sort_by(|a, b| b.degree.total_cmp(&a.degree));
        let mut filled: Vec<HomogeneousComponent> = Vec::new();
        for c in components {
            if c.kernel.shape() != shape {
                return Err(Error::ShapeMismatch(
                    "components of different shapes".into(),
                ));
            }
            let j = order - c.degree;
            if j < -1e-12 || (j - j.round()).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "component degree {} is not {order} - j",
                    c.degree
                )));
            }
            let j = j.round() as usize;
            if j < filled.len() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate component of degree {}",
                    c.degree
                )));
            }
            while filled.len() < j {
                filled.push(HomogeneousComponent::zero(
                    order - filled.len() as f64,
                    shape,
                ));
            }
            filled.push(HomogeneousComponent {
                degree: order - j as f64,
                kernel: c.kernel,
            });
        }
        Ok(Self {
            space,
            order,
            components: filled,
            excision,
            exact: None,
        })
    }

    /// Attaches the symbol the expansion is asymptotic to.
    pub fn with_exact(mut self, exact: Kernel) -> Self {
        self.exact = Some(exact);
        self
    }

    /// Splits a polynomial into its homogeneous parts; the polynomial itself is the exact symbol.
    pub fn from_polynomial(
        space: SymbolSpace,
        poly: &Polynomial,
        excision: Excision,
    ) -> Result<Self> {
        if poly.xi_dim() != space.xi_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.xi_dim(),
                got: poly.xi_dim(),
            });
        }
        let lw = space.lambda_weight.unwrap_or(1);
        if space.lambda_weight.is_none() && poly.terms().iter().any(|t| t.lambda_power > 0) {
            return Err(Error::InvalidArgument(
                "λ-dependent term in a symbol space without λ".into(),
            ));
        }
        let parts = poly.homogeneous_parts(&space.ell_xi, lw);
        let order = parts.keys().next_back().map_or(0.0, |&d| d as f64);
        let shape = super::SymbolKernel::shape(poly);
        let components: Vec<HomogeneousComponent> = if parts.is_empty() {
            vec![HomogeneousComponent::zero(0.0, shape)]
        } else {
            parts
                .into_iter()
                .map(|(d, p)| HomogeneousComponent::homogeneous(Arc::new(p) as Kernel, d as f64))
                .collect()
        };
        Ok(Self::new(space, order, components, excision)?.with_exact(Arc::new(poly.clone())))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.components[0].kernel.shape()
    }

    pub fn principal(&self) -> &HomogeneousComponent {
        &self.components[0]
    }

    pub fn exact(&self) -> Option<&Kernel> {
        self.exact.as_ref()
    }

    /// `Σ_{j ≤ n} χ·a_{(μ-j)}`.
    pub fn partial_sum(&self, n: usize) -> MatrixSymbol {
        let terms: Vec<Kernel> = self.components[..=n.min(self.components.len() - 1)]
            .iter()
            .map(|c| Arc::new(Excised::new(c.kernel.clone(), &self.space, self.excision)) as Kernel)
            .collect();
        MatrixSymbol::new(self.space.clone(), self.order, Arc::new(Sum::new(terms)))
    }

    pub fn assembled(&self) -> MatrixSymbol {
        self.partial_sum(self.components.len() - 1)
    }

    /// The exact symbol when known, otherwise the assembled expansion.
    pub fn symbol(&self) -> MatrixSymbol {
        match &self.exact {
            Some(k) => MatrixSymbol::new(self.space.clone(), self.order, k.clone()),
            None => self.assembled(),
        }
    }

    /// `a - Σ_{j ≤ n} χ·a_{(μ-j)}`, of order `μ - n - 1`.
    pub fn truncation_remainder(&self, n: usize) -> MatrixSymbol {
        self.symbol()
            .sub(&self.partial_sum(n))
            .with_order(self.order - n as f64 - 1.0)
    }

    /// Checks `a_{(μ-j)}(δ_ϱ v) = ϱ^{μ-j} a_{(μ-j)}(v)` at every probe and dilation.
    pub fn homogeneity_check(
        &self,
        probes: &ProbeSet,
        dilations: &[f64],
    ) -> Result<HomogeneityReport> {
        let w = Weight::new(&self.space, true);
        let mut worst: f64 = 0.0;
        let mut samples = 0;
        for c in &self.components {
            for pt in probes.points() {
                if w.radius(pt) == 0.0 {
                    continue;
                }
                let base = c.kernel.eval(pt)?;
                let v = pt.covariables(w.with_lambda);
                for &rho in dilations {
                    let moved = pt.with_covariables(&dilate(rho, &v, &w.ell), w.with_lambda);
                    let lhs = c.kernel.eval(&moved)?;
                    let rhs = &base * Complex64::new(rho.powf(c.degree), 0.0);
                    let den = rhs.norm().max(lhs.norm());
                    let err = if den == 0.0 {
                        0.0
                    } else {
                        (lhs - rhs).norm() / den
                    };
                    worst = worst.max(err);
                    samples += 1;
                }
            }
        }
        Ok(HomogeneityReport {
            max_relative_error: worst,
            samples,
            pass: worst <= HOMOGENEITY_TOL,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::AnisotropyVector;
    use crate::symbol::{PolyTerm, ProbeConfig, SymbolKernel, SymbolPoint, XProfile};

    fn heat2() -> (SymbolSpace, Polynomial) {
        let space = SymbolSpace::with_lambda(AnisotropyVector::isotropic(2), 2).unwrap();
        let one = |v: f64| DMatrix::from_element(1, 1, Complex64::new(v, 0.0));
        let poly = Polynomial::new(
            vec![
                PolyTerm::new(one(-1.0), vec![2, 0], 0, XProfile::default()),
                PolyTerm::new(one(-1.0), vec![0, 2], 0, XProfile::default()),
                PolyTerm::new(one(-1.0), vec![0, 0], 1, XProfile::default()),
                PolyTerm::new(one(0.5), vec![1, 0], 0, XProfile::default()),
            ],
            (1, 1),
            2,
        )
        .unwrap();
        (space, poly)
    }

    #[test]
    fn polynomial_components_fill_gaps() {
        let (space, poly) = heat2();
        let a = ClassicalSymbol::from_polynomial(space, &poly, Excision::default()).unwrap();
        assert_eq!(a.order, 2.0);
        assert_eq!(a.components.len(), 2);
        assert_eq!(a.components[1].degree, 1.0);
        let pt = SymbolPoint::new(vec![0.0, 0.0], vec![30.0, -2.0], Complex64::new(4.0, 1.0));
        let assembled = a.assembled().eval(&pt).unwrap();
        let exact = poly.eval(&pt).unwrap();
        assert!((assembled - exact).norm() < 1e-9);
    }

    #[test]
    fn homogeneity_of_polynomial_parts() {
        let (space, poly) = heat2();
        let a =
            ClassicalSymbol::from_polynomial(space.clone(), &poly, Excision::default()).unwrap();
        let probes = ProbeSet::generate(&space, &ProbeConfig::default()).unwrap();
        let r = a.homogeneity_check(&probes, &[0.5, 3.0, 17.0]).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn remainder_vanishes_outside_excision() {
        let (space, poly) = heat2();
        let a = ClassicalSymbol::from_polynomial(space, &poly, Excision::default()).unwrap();
        let rem = a.truncation_remainder(1);
        assert_eq!(rem.order, 0.0);
        let far = SymbolPoint::new(vec![0.0, 0.0], vec![3.0, 0.0], Complex64::new(0.0, 0.0));
        assert!(rem.eval(&far).unwrap().norm() < 1e-12);
    }
}
