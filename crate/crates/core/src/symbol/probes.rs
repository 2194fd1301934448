use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::excision::Weight;
use super::{Kernel, MatrixSymbol, SymbolPoint, SymbolSpace, Var};
use crate::aniso::{dilate, sphere_projection};
use crate::error::{Error, Result};

/// Probe directions on the anisotropic unit sphere, dyadic radii and base points `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub directions: usize,
    pub k_min: i32,
    pub k_max: i32,
    pub per_octave: usize,
    pub x_points: usize,
    pub include_origin: bool,
    pub seed: u64,
    /// `λ` directions are drawn from `|arg λ| ≤ half_angle`.
    pub half_angle: f64,
    /// Random `x` points lie in `[-x_radius, x_radius]^d`.
    pub x_radius: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            directions: 16,
            k_min: 2,
            k_max: 8,
            per_octave: 1,
            x_points: 2,
            include_origin: true,
            seed: 7,
            half_angle: FRAC_PI_2,
            x_radius: 2.0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.directions == 0 || self.per_octave == 0 || self.k_max < self.k_min {
            return Err(Error::InvalidArgument("empty probe configuration".into()));
        }
        if !(self.half_angle >= 0.0 && self.half_angle <= std::f64::consts::PI) {
            return Err(Error::InvalidSector(format!(
                "probe half angle {}",
                self.half_angle
            )));
        }
        if !self.include_origin && self.x_points == 0 {
            return Err(Error::InvalidArgument("no x probe points".into()));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        let steps = (self.k_max - self.k_min) as usize * self.per_octave;
        (0..=steps)
            .map(|i| 2f64.powf(self.k_min as f64 + i as f64 / self.per_octave as f64))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ProbeSet {
    pub space: SymbolSpace,
    /// Points on `{|v|_ℓ = 1}` in the covariables.
    pub directions: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    points: Vec<SymbolPoint>,
}

fn axis_directions(space: &SymbolSpace, half_angle: f64) -> Vec<Vec<f64>> {
    let d = space.xi_dim();
    let lam = space.has_lambda();
    let width = d + if lam { 2 } else { 0 };
    let mut out = Vec::new();
    for j in 0..d {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; width];
            v[j] = s;
            out.push(v);
        }
    }
    if lam {
        let mut angles = vec![0.0];
        if half_angle > 0.0 {
            angles.extend([half_angle, -half_angle]);
        }
        for a in angles {
            let mut v = vec![0.0; width];
            v[d] = f64::cos(a);
            v[d + 1] = f64::sin(a);
            out.push(v);
        }
    }
    out
}

impl ProbeSet {
    /// Directions come as a fixed sequence (axes, then seeded random ones), so a
    /// larger `directions` count always yields a superset.
    pub fn generate(space: &SymbolSpace, cfg: &ProbeConfig) -> Result<Self> {
        cfg.validate()?;
        let ell = space.full_ell();
        let mut dirs = axis_directions(space, cfg.half_angle);
        dirs.truncate(cfg.directions);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        while dirs.len() < cfg.directions {
            let mut v: Vec<f64> = (0..space.xi_dim())
                .map(|_| rng.sample(StandardNormal))
                .collect();
            if space.has_lambda() {
                let r: f64 = rng.sample::<f64, _>(StandardNormal).abs();
                let a = if cfg.half_angle > 0.0 {
                    rng.random_range(-cfg.half_angle..=cfg.half_angle)
                } else {
                    0.0
                };
                v.push(r * a.cos());
                v.push(r * a.sin());
            }
            if let Ok((rho, w)) = sphere_projection(&v, &ell) {
                if rho > 0.0 {
                    dirs.push(w);
                }
            }
        }
        let mut xs = Vec::new();
        if cfg.include_origin {
            xs.push(vec![0.0; space.x_dim]);
        }
        let mut xrng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        for _ in 0..cfg.x_points {
            xs.push(
                (0..space.x_dim)
                    .map(|_| xrng.random_range(-cfg.x_radius..=cfg.x_radius))
                    .collect(),
            );
        }
        Self::from_parts(space.clone(), dirs, cfg.radii(), xs)
    }

    pub fn from_parts(
        space: SymbolSpace,
        directions: Vec<Vec<f64>>,
        radii: Vec<f64>,
        xs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if directions.is_empty() || radii.is_empty() || xs.is_empty() {
            return Err(Error::Empty("probe set"));
        }
        let ell = space.full_ell();
        let with_lambda = space.has_lambda();
        let base = space.origin(Complex64::new(0.0, 0.0));
        let mut points = Vec::with_capacity(directions.len() * radii.len() * xs.len());
        for &r in &radii {
            for d in &directions {
                if d.len() != ell.len() {
                    return Err(Error::DimensionMismatch {
                        expected: ell.len(),
                        got: d.len(),
                    });
                }
                let v = dilate(r, d, &ell);
                for x in &xs {
                    let mut p = base.with_covariables(&v, with_lambda);
                    p.x = x.clone();
                    points.push(p);
                }
            }
        }
        Ok(Self {
            space,
            directions,
            radii,
            xs,
            points,
        })
    }

    pub fn with_radii(&self, radii: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            self.space.clone(),
            self.directions.clone(),
            radii,
            self.xs.clone(),
        )
    }

    pub fn points(&self) -> &[SymbolPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points on the shell of the `i`-th radius.
    pub fn shell(&self, i: usize) -> &[SymbolPoint] {
        let n = self.directions.len() * self.xs.len();
        &self.points[i * n..(i + 1) * n]
    }

    pub fn describe(&self) -> String {
        format!(
            "{} directions x {} radii in [{:.3e}, {:.3e}] x {} x-points",
            self.directions.len(),
            self.radii.len(),
            self.radii[0],
            self.radii[self.radii.len() - 1],
            self.xs.len()
        )
    }
}

/// `∂^β k(pt)` via a jet in the variables of `β`.
pub(crate) fn derivative_at(
    kernel: &Kernel,
    pt: &SymbolPoint,
    beta: &[(Var, u32)],
) -> Result<DMatrix<Complex64>> {
    if beta.is_empty() {
        return kernel.eval(pt);
    }
    let vars: Vec<Var> = beta.iter().map(|&(v, _)| v).collect();
    let mono: Vec<u8> = beta.iter().map(|&(_, k)| k as u8).collect();
    let total: u32 = beta.iter().map(|&(_, k)| k).sum();
    let j = kernel.jet(pt, &vars, total as usize)?;
    Ok(j.derivative_value(&mono).expect("monomial within order"))
}

/// Spectral norms of `w(pt)·∂^β k(pt)` in probe order, computed in parallel.
pub(crate) fn weighted_norms<F>(
    kernel: &Kernel,
    points: &[SymbolPoint],
    beta: &[(Var, u32)],
    weight: F,
) -> Result<Vec<f64>>
where
    F: Fn(&SymbolPoint) -> f64 + Sync,
{
    let out: Vec<Result<f64>> = points
        .par_iter()
        .map(|p| {
            let m = derivative_at(kernel, p, beta)?;
            let n = crate::rbound::spectral_norm(&m) * weight(p);
            if n.is_finite() {
                Ok(n)
            } else {
                Err(Error::InvalidArgument(format!(
                    "non-finite symbol value at ξ = {:?}, λ = {}",
                    p.xi, p.lambda
                )))
            }
        })
        .collect();
    out.into_iter().collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OrderConfig {
    pub probes: ProbeConfig,
    /// Sup-norms at or below this are treated as zero.
    pub floor: f64,
    pub tolerance: f64,
}

impl Default for OrderConfig {
    fn default() -> Self {
        Self {
            probes: ProbeConfig::default(),
            floor: 1e-12,
            tolerance: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderFit {
    /// Log-log slope; `-∞` when the symbol vanishes on every shell.
    pub slope: f64,
    pub exact: bool,
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    pub residual: f64,
}

impl OrderFit {
    /// `slope ≤ target + tol`.
    pub fn within(&self, target: f64, tol: f64) -> bool {
        self.exact || self.slope <= target + tol
    }
}

/// Least-squares slope of `log2 max(v, floor)` against `log2 r`; returns
/// `(slope, exact, rms residual)` with `exact` when every value is below the floor.
pub fn fit_log2_slope(radii: &[f64], values: &[f64], floor: f64) -> Result<(f64, bool, f64)> {
    if radii.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: radii.len(),
            got: values.len(),
        });
    }
    if radii.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two radii".into(),
        ));
    }
    if values.iter().all(|&v| v <= floor) {
        return Ok((f64::NEG_INFINITY, true, 0.0));
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.log2()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(floor).log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "slope fit needs distinct radii".into(),
        ));
    }
    let slope = sxy / sxx;
    let res = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, false, res))
}

/// Decay rate of `sup ‖∂^β a‖` along the dyadic shells `|(ξ,λ)|_ℓ = r`.
pub fn measured_order(
    a: &MatrixSymbol,
    beta: &[(Var, u32)],
    cfg: &OrderConfig,
) -> Result<OrderFit> {
    let probes = ProbeSet::generate(&a.space, &cfg.probes)?;
    measured_order_on(a, beta, &probes, cfg.floor)
}

pub fn measured_order_on(
    a: &MatrixSymbol,
    beta: &[(Var, u32)],
    probes: &ProbeSet,
    floor: f64,
) -> Result<OrderFit> {
    let norms = weighted_norms(&a.kernel, probes.points(), beta, |_| 1.0)?;
    let per = probes.directions.len() * probes.xs.len();
    let sups: Vec<f64> = norms
        .chunks(per)
        .map(|c| c.iter().cloned().fold(0.0, f64::max))
        .collect();
    let (slope, exact, residual) = fit_log2_slope(&probes.radii, &sups, floor)?;
    Ok(OrderFit {
        slope,
        exact,
        radii: probes.radii.clone(),
        sups,
        residual,
    })
}

/// `⟨(ξ,λ)⟩_ℓ` on the full covariables of the space.
pub(crate) fn bracket_fn(space: &SymbolSpace) -> impl Fn(&SymbolPoint) -> f64 + Sync {
    let w = Weight::new(space, true);
    move |p: &SymbolPoint| w.bracket(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::{aniso_abs, AnisotropyVector};
    use crate::symbol::BracketPower;
    use std::sync::Arc;

    #[test]
    fn directions_lie_on_sphere_and_extend() {
        let space =
            SymbolSpace::with_lambda(AnisotropyVector::new(vec![1, 2]).unwrap(), 2).unwrap();
        let small = ProbeSet::generate(
            &space,
            &ProbeConfig {
                directions: 10,
                ..Default::default()
            },
        )
        .unwrap();
        let big = ProbeSet::generate(
            &space,
            &ProbeConfig {
                directions: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(&big.directions[..10], &small.directions[..]);
        for d in &big.directions {
            assert!((aniso_abs(d, &space.full_ell()).unwrap() - 1.0).abs() < 1e-12);
            assert!(d[3].atan2(d[2]).abs() <= FRAC_PI_2 + 1e-12);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let r: Vec<f64> = (2..=8).map(|k| 2f64.powi(k)).collect();
        let v: Vec<f64> = r.iter().map(|x| 3.0 * x.powf(-1.5)).collect();
        let (s, exact, res) = fit_log2_slope(&r, &v, 1e-12).unwrap();
        assert!((s + 1.5).abs() < 1e-12 && !exact && res < 1e-12);
        assert!(fit_log2_slope(&r, &vec![0.0; r.len()], 1e-12).unwrap().1);
    }

    #[test]
    fn measured_order_of_bracket_power() {
        let space =
            SymbolSpace::with_lambda(AnisotropyVector::new(vec![2, 1]).unwrap(), 2).unwrap();
        let a = MatrixSymbol::new(
            space.clone(),
            -1.5,
            Arc::new(BracketPower::new(&space, -1.5, true)),
        );
        let fit = measured_order(&a, &[], &OrderConfig::default()).unwrap();
        assert!((fit.slope + 1.5).abs() < 0.05, "{fit:?}");
        let d = measured_order(&a, &[(Var::Xi(1), 1)], &OrderConfig::default()).unwrap();
        assert!(d.within(-2.5, 0.25), "{d:?}");
    }
}
