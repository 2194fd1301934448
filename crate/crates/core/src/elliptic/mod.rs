//! Parameter-dependent ellipticity, resolvents and maximal regularity for
//! differential operators `A = Σ a_α(x) D^α` on torus grids.

mod maxreg;
mod resolvent;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::aniso::{aniso_length, AnisotropyVector, GridSpec, MultiIndex, SectorSpec};
use crate::error::{Error, Result};
use crate::psido::{block_eigenvalues, realize, GridOperator};
use crate::symbol::{
    ClassicalSymbol, Excision, PolyTerm, Polynomial, ProbeConfig, ProbeSet, SymbolSpace,
};

pub use maxreg::{
    maxreg_experiment, maxreg_with_forcing, ForcingConfig, ForcingSample, ForcingTerm,
    MaxRegReport, SampleRatio, TimeGrid, TimeProfile,
};
pub use resolvent::{
    ray_slopes, resolvent_rbound, resolvent_via_parametrix, RaySlope, ResolventParametrix,
    ResolventRBoundReport, ResolventReport, ResolventSample,
};

/// Default distance an eigenvalue must keep from the sector.
pub const ELLIPTICITY_MARGIN: f64 = 1e-6;

/// `A = Σ_α a_α(x) D^α_x` with `m × m` coefficients `coef · φ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialOperatorSpec {
    pub ell: AnisotropyVector,
    pub m: usize,
    terms: Vec<PolyTerm>,
    order: u32,
}

impl DifferentialOperatorSpec {
    pub fn new(ell: AnisotropyVector, m: usize, terms: Vec<PolyTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("operator terms"));
        }
        let d = ell.len();
        let mut order = 0;
        for t in &terms {
            if t.alpha.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: t.alpha.len(),
                });
            }
            if t.coef.shape() != (m, m) {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient {:?} in an {m}x{m} operator",
                    t.coef.shape()
                )));
            }
            if t.lambda_power != 0 {
                return Err(Error::InvalidArgument(
                    "operator terms cannot carry powers of λ".into(),
                ));
            }
            t.profile.validate()?;
            order = order.max(aniso_length(&MultiIndex(t.alpha.clone()), &ell)?);
        }
        if order == 0 {
            return Err(Error::InvalidArgument("operator of order zero".into()));
        }
        Ok(Self {
            ell,
            m,
            terms,
            order: order as u32,
        })
    }

    pub fn dim(&self) -> usize {
        self.ell.len()
    }

    /// `μ = max |α|_{ℓ'}`.
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.terms.iter().all(|t| t.profile.is_constant())
    }

    /// `cA`.
    pub fn scaled(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PolyTerm {
                coef: &t.coef * Complex64::new(c, 0.0),
                ..t.clone()
            })
            .collect();
        Self {
            terms,
            ..self.clone()
        }
    }

    /// `Σ_{|α|_{ℓ'} = μ} a_α(x) ξ^α`.
    pub fn principal_polynomial(&self) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.degree(&self.ell, 1) == self.order as u64)
            .cloned()
            .collect();
        Polynomial::new(terms, (self.m, self.m), self.dim()).expect("validated terms")
    }

    /// The principal part with every coefficient replaced by its radial limit.
    pub fn extended_principal_polynomial(&self) -> Polynomial {
        self.principal_polynomial().radial_limit()
    }

    /// Symbol space with `ℓ = (ℓ', μ, μ)`.
    pub fn symbol_space(&self) -> SymbolSpace {
        SymbolSpace::new(self.dim(), self.ell.clone(), Some(self.order)).expect("positive order")
    }

    /// `A` realized on the grid (the full symbol at `λ = 0`).
    pub fn grid_operator(&self, grid: &GridSpec) -> Result<GridOperator> {
        let a = build_full_symbol(self)?.symbol();
        realize(&a, Complex64::new(0.0, 0.0), grid)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityWitness {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub eigenvalue: [f64; 2],
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub principal_ok: bool,
    pub extended_ok: bool,
    pub pass: bool,
    /// Smallest distance of a principal-symbol eigenvalue to the sector.
    pub principal_distance: f64,
    pub extended_distance: f64,
    pub margin: f64,
    pub principal_witness: Option<EllipticityWitness>,
    pub extended_witness: Option<EllipticityWitness>,
    pub probes: usize,
    pub seed: u64,
}

fn worst_distance(
    poly: &Polynomial,
    sector: &SectorSpec,
    points: impl Iterator<Item = (Vec<f64>, Vec<f64>)>,
) -> Result<(f64, Option<EllipticityWitness>)> {
    let mut best = f64::INFINITY;
    let mut witness = None;
    for (x, xi) in points {
        let v = poly.eval_at(&x, &xi, Complex64::new(0.0, 0.0));
        for e in block_eigenvalues(&v).ok_or(Error::EigenFailure)? {
            let dist = sector.cone_distance(e);
            if dist < best {
                best = dist;
                witness = Some(EllipticityWitness {
                    x: x.clone(),
                    xi: xi.clone(),
                    eigenvalue: [e.re, e.im],
                    distance: dist,
                });
            }
        }
    }
    Ok((best, witness))
}

/// Spectra of the principal symbol on `{|ξ|_{ℓ'} = 1} × x-probes` and of the
/// extended principal symbol on `{|ξ|_{ℓ'} = 1} × {|x| = 1}` against the sector.
pub fn ellipticity_check(
    a: &DifferentialOperatorSpec,
    sector: &SectorSpec,
    probes: &ProbeConfig,
    margin: f64,
) -> Result<EllipticityReport> {
    sector.validate()?;
    let space = SymbolSpace::new(a.dim(), a.ell.clone(), None)?;
    let set = ProbeSet::generate(&space, probes)?.with_radii(vec![1.0])?;
    let principal = a.principal_polynomial();
    let pts: Vec<(Vec<f64>, Vec<f64>)> = set
        .points()
        .iter()
        .map(|p| (p.x.clone(), p.xi.clone()))
        .collect();
    let (principal_distance, principal_witness) =
        worst_distance(&principal, sector, pts.iter().cloned())?;

    let extended = a.extended_principal_polynomial();
    let mut units: Vec<Vec<f64>> = set
        .xs
        .iter()
        .filter_map(|x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (r > 0.0).then(|| x.iter().map(|v| v / r).collect())
        })
        .collect();
    if units.is_empty() {
        let mut e = vec![0.0; a.dim()];
        e[0] = 1.0;
        units.push(e);
    }
    let ext_pts = units
        .iter()
        .flat_map(|x| set.directions.iter().map(move |xi| (x.clone(), xi.clone())));
    let (extended_distance, extended_witness) = worst_distance(&extended, sector, ext_pts)?;
    let principal_ok = principal_distance > margin;
    let extended_ok = extended_distance > margin;
    Ok(EllipticityReport {
        principal_ok,
        extended_ok,
        pass: principal_ok && extended_ok,
        principal_distance,
        extended_distance,
        margin,
        principal_witness,
        extended_witness,
        probes: set.len(),
        seed: probes.seed,
    })
}

/// `a(x, ξ, λ) = Σ a_α(x) ξ^α - λ` on the space with `ℓ = (ℓ', μ, μ)`.
pub fn build_full_symbol(a: &DifferentialOperatorSpec) -> Result<ClassicalSymbol> {
    let mut terms = a.terms.clone();
    terms.push(PolyTerm::new(
        -DMatrix::<Complex64>::identity(a.m, a.m),
        vec![0; a.dim()],
        1,
        Default::default(),
    ));
    let poly = Polynomial::new(terms, (a.m, a.m), a.dim())?;
    ClassicalSymbol::from_polynomial(a.symbol_space(), &poly, Excision::default())
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftReport {
    pub gamma: f64,
    /// `max Re σ(A_grid)`.
    pub spectral_abscissa: f64,
    pub margin: f64,
}

/// Smallest `γ ∈ {0} ∪ {2^k : k ≥ -20}` with `Re σ(A_grid - γ) ≤ -margin`.
pub fn choose_shift(
    a: &DifferentialOperatorSpec,
    grid: &GridSpec,
    margin: f64,
) -> Result<ShiftReport> {
    let eig = a.grid_operator(grid)?.eigenvalues()?;
    let abscissa = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if abscissa <= -margin {
        return Ok(ShiftReport {
            gamma: 0.0,
            spectral_abscissa: abscissa,
            margin,
        });
    }
    for k in -20..=60 {
        let gamma = 2f64.powi(k);
        if abscissa - gamma <= -margin {
            return Ok(ShiftReport {
                gamma,
                spectral_abscissa: abscissa,
                margin,
            });
        }
    }
    let worst = eig
        .into_iter()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .unwrap_or_default();
    Err(Error::UnstableMode {
        eigenvalue: worst,
        margin,
    })
}

/// Heat-type `Σ_j c·D_j^{2}` style operators from `(α, coefficient)` pairs with constant scalar coefficients.
pub fn scalar_constant_operator(
    ell: AnisotropyVector,
    terms: &[(Vec<u32>, f64)],
) -> Result<DifferentialOperatorSpec> {
    let terms = terms
        .iter()
        .map(|(alpha, c)| {
            PolyTerm::new(
                DMatrix::from_element(1, 1, Complex64::new(*c, 0.0)),
                alpha.clone(),
                0,
                Default::default(),
            )
        })
        .collect();
    DifferentialOperatorSpec::new(ell, 1, terms)
}

/// `Σ_j sign·D_j^2` on `R^d`: `sign = -1` gives the heat generator with symbol `-|ξ|²`.
pub fn laplacian(d: usize, sign: f64) -> DifferentialOperatorSpec {
    let terms: Vec<(Vec<u32>, f64)> = (0..d)
        .map(|j| {
            let mut a = vec![0; d];
            a[j] = 2;
            (a, sign)
        })
        .collect();
    scalar_constant_operator(AnisotropyVector::isotropic(d), &terms).expect("valid Laplacian")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{SymbolPoint, XProfile};

    #[test]
    fn ellipticity_examples() {
        let sector = SectorSpec::right_half_plane(1.0).unwrap();
        let cfg = ProbeConfig::default();
        let heat = laplacian(2, -1.0);
        let r = ellipticity_check(&heat, &sector, &cfg, ELLIPTICITY_MARGIN).unwrap();
        assert!(r.pass);
        assert!((r.principal_distance - 1.0).abs() < 1e-12);
        let bad = laplacian(2, 1.0);
        let r = ellipticity_check(&bad, &sector, &cfg, ELLIPTICITY_MARGIN).unwrap();
        assert!(!r.pass && !r.principal_ok);
        assert_eq!(r.principal_witness.unwrap().distance, 0.0);
        let aniso = scalar_constant_operator(
            AnisotropyVector::new(vec![1, 2]).unwrap(),
            &[(vec![4, 0], -1.0), (vec![0, 2], -1.0)],
        )
        .unwrap();
        assert_eq!(aniso.order(), 4);
        assert!(
            ellipticity_check(&aniso, &sector, &cfg, ELLIPTICITY_MARGIN)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn extended_symbol_uses_radial_limits() {
        let one = DMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0));
        let spec = DifferentialOperatorSpec::new(
            AnisotropyVector::isotropic(1),
            1,
            vec![PolyTerm::new(
                one,
                vec![2],
                0,
                XProfile::RadialSettling {
                    center: 1.0,
                    limit: -1.0,
                    width: 1.0,
                },
            )],
        )
        .unwrap();
        let r = ellipticity_check(
            &spec,
            &SectorSpec::right_half_plane(1.0).unwrap(),
            &ProbeConfig::default(),
            1e-6,
        )
        .unwrap();
        assert!(!r.extended_ok && !r.pass);
        assert_eq!(r.extended_witness.unwrap().eigenvalue, [1.0, 0.0]);
    }

    #[test]
    fn full_symbol_components() {
        let mut terms = vec![PolyTerm::new(
            DMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0)),
            vec![2],
            0,
            XProfile::default(),
        )];
        terms.push(PolyTerm::new(
            DMatrix::from_element(1, 1, Complex64::new(0.3, 0.0)),
            vec![0],
            0,
            XProfile::RadialSettling {
                center: 1.0,
                limit: 0.0,
                width: 1.0,
            },
        ));
        let spec = DifferentialOperatorSpec::new(AnisotropyVector::isotropic(1), 1, terms).unwrap();
        let a = build_full_symbol(&spec).unwrap();
        assert_eq!(a.order, 2.0);
        assert_eq!(a.space.lambda_weight, Some(2));
        assert_eq!(a.components.len(), 3);
        let pt = SymbolPoint::new(vec![0.0], vec![3.0], Complex64::new(2.0, 1.0));
        let p = a.principal().kernel.eval(&pt).unwrap()[(0, 0)];
        assert_eq!(p, Complex64::new(-11.0, -1.0));
        assert_eq!(
            a.components[2].kernel.eval(&pt).unwrap()[(0, 0)],
            Complex64::new(0.3, 0.0)
        );
    }

    #[test]
    fn shift_for_heat() {
        let g = GridSpec::new(1, 4.0, 16).unwrap();
        let heat = laplacian(1, -1.0);
        let s = choose_shift(&heat, &g, 1e-6).unwrap();
        assert_eq!(s.spectral_abscissa, 0.0);
        assert_eq!(s.gamma, 2f64.powi(-19));
        let shifted = scalar_constant_operator(
            AnisotropyVector::isotropic(1),
            &[(vec![2], -1.0), (vec![0], -3.0)],
        )
        .unwrap();
        assert_eq!(choose_shift(&shifted, &g, 1e-6).unwrap().gamma, 0.0);
    }
}
