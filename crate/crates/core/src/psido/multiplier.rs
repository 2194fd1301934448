use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::sobolev::bracket_multiplier;
use super::{realize, GridFunction, GridOperator};
use crate::aniso::{aniso_bracket, AnisotropyVector, GridSpec};
use crate::error::{Error, Result};
use crate::rbound::{
    rbound_estimate, BanachSpaceSpec, EstimateMethod, EstimatorMode, OperatorFamily, RBoundBudget,
};
use crate::symbol::{MatrixSymbol, SymbolPoint, Var};

/// Sum of a few modulated Gaussian bumps with random vector amplitudes. The
/// parameters do not depend on `M`, so refinements sample the same function.
pub fn random_smooth_function(
    grid: &GridSpec,
    fiber: &BanachSpaceSpec,
    seed: u64,
    bumps: usize,
) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = grid.half_width;
    let d = grid.dim;
    let m = fiber.dim;
    struct Bump {
        center: Vec<f64>,
        width: f64,
        freq: Vec<f64>,
        amp: Vec<Complex64>,
    }
    let list: Vec<Bump> = (0..bumps)
        .map(|_| Bump {
            center: (0..d)
                .map(|_| rng.random_range(-0.5 * b..=0.5 * b))
                .collect(),
            width: rng.random_range(b / 16.0..=b / 6.0),
            freq: (0..d)
                .map(|_| rng.random_range(-6.0..=6.0) * std::f64::consts::PI / b)
                .collect(),
            amp: (0..m)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        })
        .collect();
    GridFunction::from_fn(grid.clone(), fiber.clone(), |x| {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for bump in &list {
            let r2: f64 = x
                .iter()
                .zip(&bump.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum();
            let phase: f64 = x.iter().zip(&bump.freq).map(|(a, k)| a * k).sum();
            let e = Complex64::from_polar((-r2 / (2.0 * bump.width * bump.width)).exp(), phase);
            for (vi, ai) in v.iter_mut().zip(&bump.amp) {
                *vi += ai * e;
            }
        }
        v
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HilbertReport {
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub trials: usize,
    pub p: f64,
    pub points: usize,
}

/// Multiplier `χ_{[0,∞)}(ξ)·I` on a one-dimensional grid (the Nyquist slot gets `1/2`).
pub fn hilbert_multiplier(grid: &GridSpec, m: usize) -> GridOperator {
    GridOperator::scalar_from_fn(grid.clone(), m, |xi| {
        Complex64::new(if xi[0] >= 0.0 { 1.0 } else { 0.0 }, 0.0)
    })
}

/// Largest observed `‖Hu‖_p / ‖u‖_p` over seeded smooth samples.
pub fn hilbert_transform_check(
    fiber: &BanachSpaceSpec,
    p: f64,
    grid: &GridSpec,
    trials: usize,
    seed: u64,
) -> Result<HilbertReport> {
    if grid.dim != 1 {
        return Err(Error::InvalidGrid(
            "the Hilbert transform check needs a one-dimensional grid".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::Empty("Hilbert transform trials"));
    }
    let h = hilbert_multiplier(grid, fiber.dim);
    let ratios: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = random_smooth_function(grid, fiber, seed.wrapping_add(t as u64), 4)?;
            let hu = h.apply(&u)?;
            Ok(hu.lp_norm(p) / u.lp_norm(p))
        })
        .collect();
    let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(HilbertReport {
        max_ratio,
        mean_ratio,
        trials,
        p,
        points: grid.points,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessReport {
    pub r_family: f64,
    pub r_multipliers: f64,
    pub ratio: f64,
    pub method: EstimateMethod,
    /// Largest `ℓ¹` weight of the hull representations found.
    pub hull_weight: f64,
    pub hull_residual: f64,
    pub multipliers: usize,
}

/// Least-squares representation of `v` in the span of the family; returns `(Σ|c_i|, residual)`.
fn hull_representation(family: &OperatorFamily, v: &DMatrix<Complex64>) -> (f64, f64) {
    let n = family.len();
    let (r, c) = family.shape();
    let mut a = DMatrix::zeros(r * c, n);
    for (i, t) in family.members().iter().enumerate() {
        for (k, z) in t.iter().enumerate() {
            a[(k, i)] = *z;
        }
    }
    let b = DVector::from_iterator(r * c, v.iter().cloned());
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(n));
    let residual = (&a * &coef - &b).norm();
    (coef.iter().map(|z| z.norm()).sum(), residual)
}

fn multiplier_family_norms(
    ops: &[GridOperator],
    grid: &GridSpec,
    x: &BanachSpaceSpec,
    y: &BanachSpaceSpec,
    p: f64,
    budget: &RBoundBudget,
) -> Result<(f64, EstimateMethod)> {
    if budget.mode == EstimatorMode::Auto && p == 2.0 {
        if let (Some(sx), Some(sy)) = (x.hilbert_scale(), y.hilbert_scale()) {
            let v = ops.par_iter().map(|o| o.l2_norm()).reduce(|| 0.0, f64::max);
            return Ok((v * sy / sx, EstimateMethod::HilbertOracle));
        }
    }
    let n = grid.node_count();
    let w = grid.cell_volume();
    let xb = BanachSpaceSpec::bochner(x.clone(), n, w, p)?;
    let yb = BanachSpaceSpec::bochner(y.clone(), n, w, p)?;
    let fam = OperatorFamily::new(ops.iter().map(|o| o.to_dense()).collect())?;
    let est = rbound_estimate(&fam, &xb, &yb, p, budget)?;
    Ok((est.value, est.method))
}

/// Checks the hull condition for `ξ^β ∂^β m` (`β ≤ (1,…,1)`) on the lattice, realizes
/// every `m` on the grid and compares the R-bound of the multipliers with `R(T)`.
#[allow(clippy::too_many_arguments)]
pub fn multiplier_rbound_harness(
    family: &OperatorFamily,
    multipliers: &[MatrixSymbol],
    x: &BanachSpaceSpec,
    y: &BanachSpaceSpec,
    p: f64,
    grid: &GridSpec,
    budget: &RBoundBudget,
    tol: f64,
) -> Result<HarnessReport> {
    if multipliers.is_empty() {
        return Err(Error::Empty("multiplier samples"));
    }
    let d = grid.dim;
    let mut hull_weight: f64 = 0.0;
    let mut hull_residual: f64 = 0.0;
    for m in multipliers {
        if m.depends_on_x() {
            return Err(Error::Precondition(
                "multipliers must not depend on x".into(),
            ));
        }
        if m.shape() != family.shape() {
            return Err(Error::ShapeMismatch(format!(
                "multiplier {:?} vs family {:?}",
                m.shape(),
                family.shape()
            )));
        }
        for mask in 0..(1usize << d) {
            let beta: Vec<(Var, u32)> = (0..d)
                .filter(|j| mask >> j & 1 == 1)
                .map(|j| (Var::Xi(j), 1))
                .collect();
            let dm = m.derivative(&beta);
            for k in 0..grid.node_count() {
                let xi = grid.lattice_point(k);
                let weight: f64 = beta
                    .iter()
                    .map(|&(v, _)| if let Var::Xi(j) = v { xi[j] } else { 1.0 })
                    .product();
                let val = dm.eval(&SymbolPoint::new(
                    vec![0.0; d],
                    xi,
                    Complex64::new(0.0, 0.0),
                ))? * Complex64::new(weight, 0.0);
                let (l1, res) = hull_representation(family, &val);
                hull_weight = hull_weight.max(l1);
                let scale = val.norm().max(1.0);
                hull_residual = hull_residual.max(res / scale);
                if l1 > 1.0 + tol || res > tol * scale {
                    return Err(Error::Membership(format!(
                        "value at ξ = {:?} (β mask {mask}) has hull weight {l1:.4} and residual {res:.2e}",
                        grid.lattice_point(k)
                    )));
                }
            }
        }
    }
    let t_est = rbound_estimate(family, x, y, p, budget)?;
    let ops: Vec<GridOperator> = multipliers
        .iter()
        .map(|m| realize(m, Complex64::new(0.0, 0.0), grid))
        .collect::<Result<Vec<_>>>()?;
    let (r_mult, method) = multiplier_family_norms(&ops, grid, x, y, p, budget)?;
    Ok(HarnessReport {
        r_family: t_est.value,
        r_multipliers: r_mult,
        ratio: r_mult / t_est.value,
        method,
        hull_weight,
        hull_residual,
        multipliers: multipliers.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OpIterationReport {
    pub mu_prime: f64,
    /// R-bound estimate of `⟨λ⟩^{-μ'} op(a)(λ)` between the discrete Sobolev spaces.
    pub value: f64,
    /// Same for the first `λ`-derivative.
    pub derivative_value: f64,
    pub method: EstimateMethod,
    pub samples: usize,
}

fn lambda_bracket(lambda: Complex64, weight: u32) -> f64 {
    let ell = AnisotropyVector::new(vec![weight, weight]).expect("positive weight");
    aniso_bracket(&[lambda.re, lambda.im], &ell).expect("two entries")
}

/// `W^{s-ν} T W^{-s}` with `W = op(⟨ξ⟩_{ℓ'})`, kept in multiplier form when possible.
fn conjugate(
    op: GridOperator,
    grid: &GridSpec,
    s: f64,
    nu: f64,
    ell: &AnisotropyVector,
) -> Result<GridOperator> {
    let w = |k: usize| -> Complex64 {
        let v: f64 = grid
            .lattice_variants(k)
            .into_iter()
            .map(|(xi, wt)| wt * aniso_bracket(&xi, ell).expect("dimension").powf(-nu))
            .sum();
        Complex64::new(v, 0.0)
    };
    Ok(match op {
        GridOperator::Scalar { grid: g, m, values } => {
            let values = values
                .into_iter()
                .enumerate()
                .map(|(k, v)| v * w(k))
                .collect();
            GridOperator::Scalar { grid: g, m, values }
        }
        GridOperator::Multiplier { grid: g, blocks } => {
            let blocks = blocks
                .into_iter()
                .enumerate()
                .map(|(k, b)| b * w(k))
                .collect();
            GridOperator::Multiplier { grid: g, blocks }
        }
        other => {
            let (mo, mi) = other.fiber_dims();
            let left = bracket_multiplier(grid, mo, s - nu, ell)?.to_dense();
            let right = bracket_multiplier(grid, mi, -s, ell)?.to_dense();
            GridOperator::Dense {
                grid: grid.clone(),
                m_in: mi,
                m_out: mo,
                matrix: left * other.to_dense() * right,
            }
        }
    })
}

/// R-bounds over `λ` of `⟨λ⟩^{-μ'+|β|} ∂_λ^β op(a)(λ): H^s_p → H^{s-ν}_p` for `β ∈ {0, 1}`.
#[allow(clippy::too_many_arguments)]
pub fn op_iteration_rbound(
    a: &MatrixSymbol,
    s: f64,
    nu: f64,
    p: f64,
    lambdas: &[Complex64],
    grid: &GridSpec,
    x: &BanachSpaceSpec,
    y: &BanachSpaceSpec,
    budget: &RBoundBudget,
) -> Result<OpIterationReport> {
    let weight = a
        .space
        .lambda_weight
        .ok_or_else(|| Error::Precondition("symbol has no λ parameter".into()))?;
    if lambdas.is_empty() {
        return Err(Error::Empty("λ samples"));
    }
    let mu = a.order;
    let mu_prime = if nu >= 0.0 { mu } else { mu - nu };
    let da = a.derivative(&[(Var::LamRe, 1)]);
    let ell = a.space.ell_xi.clone();
    let build = |sym: &MatrixSymbol, shift: f64| -> Result<Vec<GridOperator>> {
        lambdas
            .iter()
            .map(|&l| {
                let op = conjugate(realize(sym, l, grid)?, grid, s, nu, &ell)?;
                Ok(op.scaled(Complex64::new(
                    lambda_bracket(l, weight).powf(-mu_prime + shift),
                    0.0,
                )))
            })
            .collect()
    };
    let (value, method) = multiplier_family_norms(&build(a, 0.0)?, grid, x, y, p, budget)?;
    let (derivative_value, _) =
        multiplier_family_norms(&build(&da, weight as f64)?, grid, x, y, p, budget)?;
    Ok(OpIterationReport {
        mu_prime,
        value,
        derivative_value,
        method,
        samples: lambdas.len(),
    })
}

fn difference_norm(a: &GridOperator, b: &GridOperator) -> f64 {
    match (a, b) {
        (GridOperator::Scalar { values: va, .. }, GridOperator::Scalar { values: vb, .. }) => va
            .iter()
            .zip(vb)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max),
        _ => crate::rbound::spectral_norm(&(a.to_dense() - b.to_dense())),
    }
}

/// Relative gap between central differences of `op(a)(λ)` in `Re λ` and `op(∂_λ a)(λ)`.
pub fn lambda_derivative_discrepancy(
    a: &MatrixSymbol,
    lambda: Complex64,
    grid: &GridSpec,
    rel_step: f64,
) -> Result<f64> {
    let h = rel_step * lambda.norm().max(1.0);
    let plus = realize(a, lambda + h, grid)?;
    let minus = realize(a, lambda - h, grid)?;
    let exact = realize(&a.derivative(&[(Var::LamRe, 1)]), lambda, grid)?;
    let fd = match (&plus, &minus) {
        (
            GridOperator::Scalar {
                grid: g,
                m,
                values: vp,
            },
            GridOperator::Scalar { values: vm, .. },
        ) => GridOperator::Scalar {
            grid: g.clone(),
            m: *m,
            values: vp
                .iter()
                .zip(vm)
                .map(|(x, y)| (x - y) / (2.0 * h))
                .collect(),
        },
        _ => GridOperator::Dense {
            grid: grid.clone(),
            m_in: plus.fiber_dims().1,
            m_out: plus.fiber_dims().0,
            matrix: (plus.to_dense() - minus.to_dense()) / Complex64::new(2.0 * h, 0.0),
        },
    };
    let scale = exact.l2_norm().max(1e-300);
    Ok(difference_norm(&fd, &exact) / scale)
}
