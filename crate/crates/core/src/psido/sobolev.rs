use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{GridFunction, GridOperator};
use crate::aniso::{aniso_bracket, aniso_length, AnisotropyVector, GridSpec, MultiIndex};
use crate::error::{Error, Result};
use crate::rbound::RBoundBudget;
use crate::symbol::{
    seminorm, Constant, ExcisedAbsPower, Excision, Kernel, MatrixSymbol, PolyTerm, Polynomial,
    ProbeConfig, ProbeSet, Product, SeminormKind, Sum, SymbolPoint, SymbolSpace, Var, XProfile,
};

/// `op(⟨ξ⟩_{ℓ'}^s · I_m)` on the grid.
pub fn bracket_multiplier(
    grid: &GridSpec,
    m: usize,
    s: f64,
    ell: &AnisotropyVector,
) -> Result<GridOperator> {
    if ell.len() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: ell.len(),
        });
    }
    Ok(GridOperator::scalar_from_fn(grid.clone(), m, |xi| {
        Complex64::new(
            aniso_bracket(xi, ell).expect("checked dimension").powf(s),
            0.0,
        )
    }))
}

/// `‖op(⟨ξ⟩^s_{ℓ'}) u‖_{L_p}`.
pub fn sobolev_norm(u: &GridFunction, s: f64, p: f64, ell: &AnisotropyVector) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "exponent {p} must lie in [1, ∞)"
        )));
    }
    if s == 0.0 {
        return Ok(u.lp_norm(p));
    }
    Ok(bracket_multiplier(&u.grid, u.m(), s, ell)?
        .apply(u)?
        .lp_norm(p))
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalentNormReport {
    pub s: u32,
    /// `min m(κ)/⟨κ⟩^s` over the lattice.
    pub lower: f64,
    /// `max m(κ)/⟨κ⟩^s` over the lattice.
    pub upper: f64,
    pub value_at_origin: f64,
    /// Sup-seminorms of `m` in `S^{s;ℓ'}` for `|β| ≤ 2`.
    pub seminorms: Vec<(Vec<(Var, u32)>, f64)>,
    #[serde(skip)]
    pub symbol: Option<MatrixSymbol>,
}

/// `m(ξ) = 1 + Σ_j φ_j(ξ) ξ_j^{s/ℓ_j}` with `φ_j = χ |ξ|_{ℓ'}^{-s} ξ_j^{s/ℓ_j}`,
/// i.e. `1 + χ |ξ|^{-s} Σ_j ξ_j^{2s/ℓ_j}`.
pub fn equivalent_norm_multiplier(
    s: u32,
    ell: &AnisotropyVector,
    grid: &GridSpec,
    excision: Excision,
    probes: &ProbeConfig,
) -> Result<EquivalentNormReport> {
    for &l in ell.entries() {
        if !s.is_multiple_of(l) {
            return Err(Error::Divisibility { s, entry: l });
        }
    }
    if ell.len() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: ell.len(),
        });
    }
    let d = ell.len();
    let space = SymbolSpace::xi_only(ell.clone());
    let one = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    let terms: Vec<PolyTerm> = (0..d)
        .map(|j| {
            let mut alpha = vec![0; d];
            alpha[j] = 2 * s / ell.entry(j);
            PolyTerm::new(one.clone(), alpha, 0, XProfile::default())
        })
        .collect();
    let poly: Kernel = Arc::new(Polynomial::new(terms, (1, 1), d)?);
    let cut: Kernel = Arc::new(ExcisedAbsPower::new(&space, -(s as f64), excision, false));
    let kernel: Kernel = Arc::new(Sum::new(vec![
        Arc::new(Constant::new(one)),
        Arc::new(Product::new(vec![cut, poly])),
    ]));
    let m = MatrixSymbol::new(space.clone(), s as f64, kernel);

    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for k in 0..grid.node_count() {
        let xi = grid.lattice_point(k);
        let v = m.eval(&SymbolPoint::new(
            vec![0.0; d],
            xi.clone(),
            Complex64::new(0.0, 0.0),
        ))?[(0, 0)]
            .re;
        let r = v / aniso_bracket(&xi, ell)?.powi(s as i32);
        lower = lower.min(r);
        upper = upper.max(r);
    }
    let value_at_origin = m.eval(&space.origin(Complex64::new(0.0, 0.0)))?[(0, 0)].re;

    let pset = ProbeSet::generate(&space, probes)?;
    let mut seminorms = Vec::new();
    for total in 0..=2u32 {
        for beta in MultiIndex::up_to_total(d, total)
            .into_iter()
            .filter(|b| b.total() == total)
        {
            let pairs = space.beta_pairs(&beta)?;
            let r = seminorm(
                &m,
                &pairs,
                SeminormKind::Sup,
                &pset,
                &RBoundBudget::default(),
            )?;
            seminorms.push((pairs, r.value));
        }
    }
    Ok(EquivalentNormReport {
        s,
        lower,
        upper,
        value_at_origin,
        seminorms,
        symbol: Some(m),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    /// `min (Σ_{|α|_{ℓ'} ≤ s} ‖∂^α u‖_p) / ‖u‖_{H^s}` over the samples.
    pub lower: f64,
    pub upper: f64,
    pub samples: usize,
}

/// Compares the derivative norm `Σ_{|α|_{ℓ'} ≤ s} ‖∂^α u‖_p` with the Bessel-potential norm.
pub fn derivative_norm_equivalence(
    samples: &[GridFunction],
    s: u32,
    ell: &AnisotropyVector,
    p: f64,
) -> Result<EquivalenceReport> {
    let first = samples.first().ok_or(Error::Empty("equivalence samples"))?;
    for &l in ell.entries() {
        if s % l != 0 {
            return Err(Error::Divisibility { s, entry: l });
        }
    }
    let d = ell.len();
    let grid = first.grid.clone();
    let m = first.m();
    let alphas: Vec<MultiIndex> = MultiIndex::up_to_total(d, s)
        .into_iter()
        .filter(|a| aniso_length(a, ell).map(|v| v <= s as u64).unwrap_or(false))
        .collect();
    let ops: Vec<GridOperator> = alphas
        .iter()
        .map(|a| {
            GridOperator::scalar_from_fn(grid.clone(), m, |xi| {
                xi.iter()
                    .zip(&a.0)
                    .fold(Complex64::new(1.0, 0.0), |acc, (x, &k)| {
                        acc * Complex64::new(0.0, *x).powu(k)
                    })
            })
        })
        .collect();
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    for u in samples {
        let h = sobolev_norm(u, s as f64, p, ell)?;
        if h == 0.0 {
            continue;
        }
        let mut w = 0.0;
        for op in &ops {
            w += op.apply(u)?.lp_norm(p);
        }
        lower = lower.min(w / h);
        upper = upper.max(w / h);
    }
    Ok(EquivalenceReport {
        lower,
        upper,
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbound::BanachSpaceSpec;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn sobolev_norm_of_single_mode() {
        let g = GridSpec::new(1, 5.0, 32).unwrap();
        let ell = AnisotropyVector::isotropic(1);
        let fib = BanachSpaceSpec::lp(2, 3.0).unwrap();
        let u =
            GridFunction::mode(g.clone(), fib, &[4], &[c(1.0), Complex64::new(0.0, 2.0)]).unwrap();
        let kappa = 4.0 * g.frequency_step();
        let expected = (1.0 + kappa * kappa).powf(0.75) * u.lp_norm(3.0);
        assert!((sobolev_norm(&u, 1.5, 3.0, &ell).unwrap() - expected).abs() < 1e-10 * expected);
        assert_eq!(sobolev_norm(&u, 0.0, 3.0, &ell).unwrap(), u.lp_norm(3.0));
    }

    #[test]
    fn equivalent_norm_examples() {
        let g = GridSpec::new(1, 6.0, 64).unwrap();
        let r = equivalent_norm_multiplier(
            2,
            &AnisotropyVector::isotropic(1),
            &g,
            Excision::default(),
            &ProbeConfig::default(),
        )
        .unwrap();
        assert!(r.lower > 0.0 && r.value_at_origin == 1.0);
        assert!(r.seminorms.iter().all(|(_, v)| v.is_finite()));
        let g2 = GridSpec::new(2, 6.0, 16).unwrap();
        let ell = AnisotropyVector::new(vec![1, 2]).unwrap();
        let r2 =
            equivalent_norm_multiplier(2, &ell, &g2, Excision::default(), &ProbeConfig::default())
                .unwrap();
        assert!(r2.lower > 0.0);
        assert_eq!(
            equivalent_norm_multiplier(
                3,
                &AnisotropyVector::new(vec![2]).unwrap(),
                &g,
                Excision::default(),
                &ProbeConfig::default()
            )
            .unwrap_err(),
            Error::Divisibility { s: 3, entry: 2 }
        );
    }
}
