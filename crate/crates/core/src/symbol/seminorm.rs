use serde::{Deserialize, Serialize};

use super::probes::{bracket_fn, derivative_at};
use super::{MatrixSymbol, ProbeSet, Var, FD_ORDER_CAP};
use crate::error::{Error, Result};
use crate::rbound::{rbound_of_range, BanachSpaceSpec, EstimateMethod, RBoundBudget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormKind {
    Sup,
    RBound,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeminormReport {
    pub beta: Vec<(Var, u32)>,
    pub kind: SeminormKind,
    pub value: f64,
    pub method: Option<EstimateMethod>,
    pub probe_count: usize,
    pub probes: String,
}

/// Sup-norm or R-bound of `{⟨(ξ,λ)⟩_ℓ^{-μ+|β|_ℓ} ∂^β a}` over the probe set.
pub fn seminorm(
    a: &MatrixSymbol,
    beta: &[(Var, u32)],
    kind: SeminormKind,
    probes: &ProbeSet,
    budget: &RBoundBudget,
) -> Result<SeminormReport> {
    for &(_, k) in beta {
        if k as usize > FD_ORDER_CAP {
            return Err(Error::DerivativeUnavailable {
                order: k as usize,
                cap: FD_ORDER_CAP,
            });
        }
    }
    let s = -a.order + a.space.derivative_weight(beta) as f64;
    let bracket = bracket_fn(&a.space);
    let (value, method) = match kind {
        SeminormKind::Sup => {
            let norms = super::probes::weighted_norms(&a.kernel, probes.points(), beta, |p| {
                bracket(p).powf(s)
            })?;
            (norms.into_iter().fold(0.0, f64::max), None)
        }
        SeminormKind::RBound => {
            use rayon::prelude::*;
            let family: Vec<Result<_>> = probes
                .points()
                .par_iter()
                .map(|p| {
                    Ok(derivative_at(&a.kernel, p, beta)?
                        * num_complex::Complex64::new(bracket(p).powf(s), 0.0))
                })
                .collect();
            let family = family.into_iter().collect::<Result<Vec<_>>>()?;
            let (rows, cols) = a.shape();
            let est = rbound_of_range(
                &family,
                &BanachSpaceSpec::euclidean(cols),
                &BanachSpaceSpec::euclidean(rows),
                2.0,
                budget,
            )?;
            (est.value, Some(est.method))
        }
    };
    Ok(SeminormReport {
        beta: beta.to_vec(),
        kind,
        value,
        method,
        probe_count: probes.len(),
        probes: probes.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::AnisotropyVector;
    use crate::symbol::{BracketPower, ClosureSymbol, ProbeConfig, SymbolPoint, SymbolSpace};
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use std::sync::Arc;

    #[test]
    fn normalized_bracket_is_one() {
        let space =
            SymbolSpace::with_lambda(AnisotropyVector::new(vec![1, 2]).unwrap(), 2).unwrap();
        let a = MatrixSymbol::new(
            space.clone(),
            1.7,
            Arc::new(BracketPower::new(&space, 1.7, true)),
        );
        let probes = ProbeSet::generate(&space, &ProbeConfig::default()).unwrap();
        let r = seminorm(
            &a,
            &[],
            SeminormKind::Sup,
            &probes,
            &RBoundBudget::default(),
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_matrix_operator_norm() {
        let space = SymbolSpace::xi_only(AnisotropyVector::isotropic(2));
        let c =
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 4.0, 0.0].map(|v| Complex64::new(v, 0.0)));
        let a = MatrixSymbol::constant(space.clone(), c);
        let probes = ProbeSet::generate(&space, &ProbeConfig::default()).unwrap();
        let s = seminorm(
            &a,
            &[],
            SeminormKind::Sup,
            &probes,
            &RBoundBudget::default(),
        )
        .unwrap();
        let r = seminorm(
            &a,
            &[],
            SeminormKind::RBound,
            &probes,
            &RBoundBudget::default(),
        )
        .unwrap();
        assert!((s.value - 5.0).abs() < 1e-12);
        assert!(r.value >= s.value - 1e-12);
    }

    #[test]
    fn first_derivative_of_bracket_closure() {
        let space = SymbolSpace::xi_only(AnisotropyVector::isotropic(1));
        let f = ClosureSymbol::new(
            &space,
            (1, 1),
            false,
            Arc::new(|p: &SymbolPoint| {
                DMatrix::from_element(1, 1, Complex64::new((1.0 + p.xi[0] * p.xi[0]).sqrt(), 0.0))
            }),
        );
        let a = MatrixSymbol::new(space.clone(), 1.0, Arc::new(f));
        let cfg = ProbeConfig {
            k_min: -3,
            k_max: 10,
            per_octave: 2,
            ..Default::default()
        };
        let probes = ProbeSet::generate(&space, &cfg).unwrap();
        let r = seminorm(
            &a,
            &[(Var::Xi(0), 1)],
            SeminormKind::Sup,
            &probes,
            &RBoundBudget::default(),
        )
        .unwrap();
        assert!(r.value <= 1.0 + 1e-7 && r.value > 0.9, "{r:?}");
        assert!(matches!(
            seminorm(
                &a,
                &[(Var::Xi(0), 5)],
                SeminormKind::Sup,
                &probes,
                &RBoundBudget::default()
            ),
            Err(Error::DerivativeUnavailable { .. })
        ));
    }
}
