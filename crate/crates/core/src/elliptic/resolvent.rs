use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_full_symbol, DifferentialOperatorSpec};
use crate::aniso::{GridSpec, SectorSpec};
use crate::error::{Error, Result};
use crate::psido::{bracket_multiplier, realize, GridOperator, GRID_MAX_CONDITION};
use crate::rbound::{
    rbound_estimate, BanachSpaceSpec, EstimateMethod, EstimatorMode, OperatorFamily, RBoundBudget,
};
use crate::symbol::{
    compose, neumann_parametrix, principal_inverse, ClassicalSymbol, MatrixSymbol, OrderConfig,
    Parametrix, ProbeSet,
};

/// Remainder norms at or below this count as exact zeros in slope fits.
pub const REMAINDER_FLOOR: f64 = 1e-13;

/// Symbolic pieces of `P(λ)` for a fixed operator and Neumann depth.
#[derive(Debug, Clone)]
pub struct ResolventParametrix {
    pub symbol: ClassicalSymbol,
    pub parametrix: Parametrix,
    /// `a#p - 1` with the full Leibniz sum (exact, since `a` is polynomial in `ξ`).
    pub r1: MatrixSymbol,
    pub order: u32,
}

impl ResolventParametrix {
    pub fn new(
        a: &DifferentialOperatorSpec,
        sector: &SectorSpec,
        n: usize,
        cfg: &OrderConfig,
    ) -> Result<Self> {
        let symbol = build_full_symbol(a)?;
        let probes = ProbeSet::generate(&symbol.space, &cfg.probes)?;
        let inv = principal_inverse(&symbol, sector, &probes)?;
        let full = symbol.symbol();
        let parametrix = neumann_parametrix(&full, &inv.symbol.assembled(), n, cfg)?;
        let exact_depth = full.kernel.xi_degree().map_or(n, |d| d as usize);
        let id = MatrixSymbol::identity(full.space.clone(), a.m);
        let r1 = compose(&full, &parametrix.p, exact_depth)?
            .sub(&id)
            .with_order(-(n as f64) - 1.0);
        Ok(Self {
            symbol,
            parametrix,
            r1,
            order: a.order(),
        })
    }

    /// Evaluates everything at one `λ`.
    pub fn sample(&self, lambda: Complex64, grid: &GridSpec) -> Result<ResolventSample> {
        let a_grid = realize(&self.symbol.symbol(), lambda, grid)?;
        let direct = a_grid
            .inverse(GRID_MAX_CONDITION)
            .ok_or(Error::NotInvertible { lambda })?;
        let m = self.symbol.shape().0;
        let id = GridOperator::identity(grid.clone(), m);
        let identity_residual = a_grid.compose(&direct).distance(&id);
        let p = realize(&self.parametrix.p, lambda, grid)?;
        let r1 = realize(&self.r1, lambda, grid)?;
        let r2 = realize(&self.parametrix.r2, lambda, grid)?;
        let remainder_norm = r1.l2_norm();
        let right_remainder_norm = r2.l2_norm();
        let grid_remainder_norm = a_grid.compose(&p).distance(&id);
        let direct_norm = direct.l2_norm();
        let discrepancy = if remainder_norm < 1.0 {
            let corr = r1
                .shifted(Complex64::new(1.0, 0.0))
                .inverse(GRID_MAX_CONDITION)
                .ok_or(Error::NotInvertible { lambda })?;
            let corrected = p.compose(&corr);
            Some(corrected.distance(&direct) / direct_norm)
        } else {
            None
        };
        Ok(ResolventSample {
            lambda: [lambda.re, lambda.im],
            remainder_norm,
            right_remainder_norm,
            grid_remainder_norm,
            resolvent_norm: direct_norm,
            discrepancy,
            identity_residual,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventSample {
    pub lambda: [f64; 2],
    /// `‖op(r_1)(λ)‖`.
    pub remainder_norm: f64,
    /// `‖op(r_2)(λ)‖`.
    pub right_remainder_norm: f64,
    /// `‖(A_grid - λ)P(λ) - 1‖`.
    pub grid_remainder_norm: f64,
    pub resolvent_norm: f64,
    /// `‖P(1 + R_1)^{-1} - (A - λ)^{-1}‖ / ‖(A - λ)^{-1}‖`, when `‖R_1‖ < 1`.
    pub discrepancy: Option<f64>,
    /// `‖(A - λ)(A - λ)^{-1} - 1‖`.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RaySlope {
    pub angle: f64,
    /// Log-log slope of `‖R_1‖` in `|λ|`; `-∞` when every value is below the floor.
    pub slope: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventReport {
    pub n: usize,
    pub order: u32,
    pub samples: Vec<ResolventSample>,
    pub slopes: Vec<RaySlope>,
    /// Smallest sampled radius from which on `‖R_1‖ ≤ 1/2` on every ray.
    pub threshold_radius: Option<f64>,
    pub max_discrepancy: f64,
}

/// Least-squares slopes of `log ‖R_1‖` against `log |λ|`, grouped by ray.
pub fn ray_slopes(samples: &[ResolventSample], floor: f64) -> Vec<RaySlope> {
    let mut rays: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for s in samples {
        let z = Complex64::new(s.lambda[0], s.lambda[1]);
        let key = (z.arg() * 1e9).round() as i64;
        rays.entry(key)
            .or_default()
            .push((z.norm(), s.remainder_norm));
    }
    rays.into_iter()
        .map(|(key, pts)| {
            let used: Vec<(f64, f64)> = pts
                .iter()
                .filter(|p| p.1 > floor)
                .map(|p| (p.0.ln(), p.1.ln()))
                .collect();
            let slope = if used.len() < 2 {
                f64::NEG_INFINITY
            } else {
                let n = used.len() as f64;
                let mx = used.iter().map(|p| p.0).sum::<f64>() / n;
                let my = used.iter().map(|p| p.1).sum::<f64>() / n;
                let sxy: f64 = used.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let sxx: f64 = used.iter().map(|p| (p.0 - mx).powi(2)).sum();
                sxy / sxx
            };
            RaySlope {
                angle: key as f64 * 1e-9,
                slope,
                points: used.len(),
            }
        })
        .collect()
}

/// `P(λ)(1 + R_1(λ))^{-1}` against the direct grid inverse at every `λ`; fails
/// at the first sample with `‖R_1(λ)‖ ≥ 1`.
pub fn resolvent_via_parametrix(
    a: &DifferentialOperatorSpec,
    sector: &SectorSpec,
    lambdas: &[Complex64],
    n: usize,
    grid: &GridSpec,
    cfg: &OrderConfig,
) -> Result<ResolventReport> {
    if lambdas.is_empty() {
        return Err(Error::Empty("λ samples"));
    }
    for &l in lambdas {
        if !sector.contains(l) {
            return Err(Error::InvalidArgument(format!(
                "λ = {l} lies outside the sector"
            )));
        }
    }
    let rp = ResolventParametrix::new(a, sector, n, cfg)?;
    let samples: Vec<Result<ResolventSample>> =
        lambdas.par_iter().map(|&l| rp.sample(l, grid)).collect();
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(s) = samples.iter().find(|s| s.remainder_norm >= 1.0) {
        return Err(Error::RemainderTooLarge {
            lambda: Complex64::new(s.lambda[0], s.lambda[1]),
            norm: s.remainder_norm,
        });
    }
    let mut by_radius: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for s in &samples {
        let r = Complex64::new(s.lambda[0], s.lambda[1]).norm();
        let e = by_radius
            .entry((r.ln() * 1e9).round() as i64)
            .or_insert((r, 0.0));
        e.1 = e.1.max(s.remainder_norm);
    }
    let mut threshold_radius = None;
    for &(r, worst) in by_radius.values().rev() {
        if worst <= 0.5 {
            threshold_radius = Some(r);
        } else {
            break;
        }
    }
    let max_discrepancy = samples
        .iter()
        .filter_map(|s| s.discrepancy)
        .fold(0.0, f64::max);
    Ok(ResolventReport {
        n,
        order: a.order(),
        slopes: ray_slopes(&samples, REMAINDER_FLOOR),
        samples,
        threshold_radius,
        max_discrepancy,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventRBoundReport {
    pub value: f64,
    pub method: EstimateMethod,
    pub samples: usize,
    /// `‖λ(A - λ)^{-1}‖` per sample, in input order.
    pub norms: Vec<f64>,
    pub s: f64,
    pub p: f64,
}

/// R-bound of `{λ(A_grid - λ)^{-1}}` on the discrete `H^{s;ℓ'}_p(grid, X)`.
#[allow(clippy::too_many_arguments)]
pub fn resolvent_rbound(
    a: &DifferentialOperatorSpec,
    sector: &SectorSpec,
    lambdas: &[Complex64],
    s: f64,
    p: f64,
    fiber: &BanachSpaceSpec,
    grid: &GridSpec,
    budget: &RBoundBudget,
) -> Result<ResolventRBoundReport> {
    if lambdas.is_empty() {
        return Err(Error::Empty("λ samples"));
    }
    if fiber.dim != a.m {
        return Err(Error::DimensionMismatch {
            expected: a.m,
            got: fiber.dim,
        });
    }
    let op = a.grid_operator(grid)?;
    // grid eigenvalues inside the sector are legitimate λ samples at which A - λ is singular
    if let Some(e) = op.eigenvalues()?.into_iter().find(|&e| sector.contains(e)) {
        return Err(Error::NotInvertible { lambda: e });
    }
    let full = build_full_symbol(a)?.symbol();
    let conj = if s != 0.0 {
        Some((
            bracket_multiplier(grid, a.m, s, &a.ell)?,
            bracket_multiplier(grid, a.m, -s, &a.ell)?,
        ))
    } else {
        None
    };
    let family: Vec<Result<GridOperator>> = lambdas
        .par_iter()
        .map(|&l| {
            let inv = realize(&full, l, grid)?
                .inverse(GRID_MAX_CONDITION)
                .ok_or(Error::NotInvertible { lambda: l })?;
            let t = inv.scaled(l);
            Ok(match &conj {
                Some((w, wi)) => w.compose(&t).compose(wi),
                None => t,
            })
        })
        .collect();
    let family = family.into_iter().collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = family.par_iter().map(|t| t.l2_norm()).collect();
    let (value, method) =
        if budget.mode == EstimatorMode::Auto && p == 2.0 && fiber.hilbert_scale().is_some() {
            (
                norms.iter().cloned().fold(0.0, f64::max),
                EstimateMethod::HilbertOracle,
            )
        } else {
            let n = grid.node_count();
            let space = BanachSpaceSpec::bochner(fiber.clone(), n, grid.cell_volume(), p)?;
            let fam = OperatorFamily::new(family.iter().map(|t| t.to_dense()).collect())?;
            let est = rbound_estimate(&fam, &space, &space, p, budget)?;
            (est.value, est.method)
        };
    Ok(ResolventRBoundReport {
        value,
        method,
        samples: lambdas.len(),
        norms,
        s,
        p,
    })
}
