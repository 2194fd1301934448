use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{realize, GridFunction};
use crate::aniso::{aniso_bracket, AnisotropyVector};
use crate::error::{Error, Result};
use crate::symbol::{compose, MatrixSymbol};

/// Defects at or below this multiple of `‖op(a)op(b)u‖` are round-off.
pub const DEFECT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct DefectSample {
    pub lambda: [f64; 2],
    /// `⟨λ⟩_ℓ` with the λ-weight of the symbol space.
    pub bracket: f64,
    /// `‖op(a #_N b)(λ)u - op(a)(λ)op(b)(λ)u‖_2`.
    pub defect: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionDefectReport {
    pub n: usize,
    /// `μ_1 + μ_2 - N - 1`.
    pub target: f64,
    /// Log-log slope of the defect in `⟨λ⟩_ℓ`; `-∞` when all defects are round-off.
    pub slope: f64,
    pub samples: Vec<DefectSample>,
}

/// Compares `op(a #_N b)` with the grid product `op(a)op(b)` on a fixed input along the given `λ`.
pub fn composition_defect(
    a: &MatrixSymbol,
    b: &MatrixSymbol,
    n: usize,
    lambdas: &[Complex64],
    u: &GridFunction,
) -> Result<CompositionDefectReport> {
    let w = a
        .space
        .lambda_weight
        .ok_or_else(|| Error::Precondition("symbols have no λ parameter".into()))?;
    if lambdas.len() < 2 {
        return Err(Error::InvalidArgument("need at least two λ samples".into()));
    }
    let ab = compose(a, b, n)?;
    let ell = AnisotropyVector::new(vec![w, w])?;
    let samples: Vec<Result<DefectSample>> = lambdas
        .par_iter()
        .map(|&l| {
            let grid = &u.grid;
            let prod = realize(a, l, grid)?.apply(&realize(b, l, grid)?.apply(u)?)?;
            let sym = realize(&ab, l, grid)?.apply(u)?;
            Ok(DefectSample {
                lambda: [l.re, l.im],
                bracket: aniso_bracket(&[l.re, l.im], &ell)?,
                defect: sym.sub(&prod)?.lp_norm(2.0),
                scale: prod.lp_norm(2.0),
            })
        })
        .collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    let used: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.defect > DEFECT_FLOOR * s.scale)
        .map(|s| (s.bracket.ln(), s.defect.ln()))
        .collect();
    let slope = if used.len() < 2 {
        f64::NEG_INFINITY
    } else {
        let k = used.len() as f64;
        let mx = used.iter().map(|p| p.0).sum::<f64>() / k;
        let my = used.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(CompositionDefectReport {
        n,
        target: a.order + b.order - n as f64 - 1.0,
        slope,
        samples,
    })
}
