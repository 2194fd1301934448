//! Rademacher averages and R-bound estimation for finite operator families.
//!
//! For operators `T_1, …, T_N` and vectors `x_1, …, x_N` the Rademacher
//! functional is
//!
//! ```text
//! (Σ_ε ‖Σ_j ε_j T_j x_j‖^p)^{1/p} / (Σ_ε ‖Σ_j ε_j x_j‖^p)^{1/p}
//! ```
//!
//! and the R-bound of a family is its supremum over all finite choices.
//! Estimates here are lower bounds, except for the Hilbert case (both spaces
//! Hilbert and `p = 2`) where the R-bound equals the largest operator norm.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ENUMERATION_TERMS: usize = 20;
pub const MAX_ALPHA_TERMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    Euclidean,
    Lp {
        p: f64,
    },
    /// Discrete `L_p(grid; X)`: `(weight · Σ_b ‖x_b‖_X^p)^{1/p}` over `blocks` blocks.
    Bochner {
        blocks: usize,
        weight: f64,
        p: f64,
        inner: Box<BanachSpaceSpec>,
    },
}

/// Finite-dimensional complex Banach space. Every kind offered here is of
/// class (HT) and has property (α).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanachSpaceSpec {
    pub dim: usize,
    pub norm: NormKind,
}

impl BanachSpaceSpec {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            dim,
            norm: NormKind::Euclidean,
        }
    }

    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l_p exponent {p} must lie in (1, ∞)"
            )));
        }
        Ok(Self {
            dim,
            norm: NormKind::Lp { p },
        })
    }

    pub fn bochner(inner: BanachSpaceSpec, blocks: usize, weight: f64, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "L_p exponent {p} must lie in (1, ∞)"
            )));
        }
        if blocks == 0 || !(weight > 0.0) {
            return Err(Error::InvalidArgument(
                "Bochner space needs blocks > 0 and weight > 0".into(),
            ));
        }
        Ok(Self {
            dim: blocks * inner.dim,
            norm: NormKind::Bochner {
                blocks,
                weight,
                p,
                inner: Box::new(inner),
            },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidArgument(
                "space dimension must be positive".into(),
            ));
        }
        match &self.norm {
            NormKind::Euclidean => Ok(()),
            NormKind::Lp { p } if *p > 1.0 && p.is_finite() => Ok(()),
            NormKind::Lp { p } => Err(Error::InvalidArgument(format!(
                "l_p exponent {p} must lie in (1, ∞)"
            ))),
            NormKind::Bochner {
                blocks,
                weight,
                p,
                inner,
            } => {
                inner.validate()?;
                if *blocks * inner.dim != self.dim || !(*weight > 0.0) || !(*p > 1.0) {
                    return Err(Error::InvalidArgument("inconsistent Bochner space".into()));
                }
                Ok(())
            }
        }
    }

    pub fn class_ht(&self) -> bool {
        true
    }

    pub fn property_alpha(&self) -> bool {
        true
    }

    pub fn is_hilbert(&self) -> bool {
        match &self.norm {
            NormKind::Euclidean => true,
            NormKind::Lp { p } => *p == 2.0,
            NormKind::Bochner { p, inner, .. } => *p == 2.0 && inner.is_hilbert(),
        }
    }

    /// For Hilbert kinds, the factor `s` with `‖x‖ = s·‖x‖_2`.
    pub fn hilbert_scale(&self) -> Option<f64> {
        match &self.norm {
            NormKind::Euclidean => Some(1.0),
            NormKind::Lp { p } if *p == 2.0 => Some(1.0),
            NormKind::Lp { .. } => None,
            NormKind::Bochner {
                weight, p, inner, ..
            } if *p == 2.0 => inner.hilbert_scale().map(|s| s * weight.sqrt()),
            NormKind::Bochner { .. } => None,
        }
    }

    pub fn norm(&self, x: &[Complex64]) -> f64 {
        match &self.norm {
            NormKind::Euclidean => x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
            NormKind::Lp { p } => lp_norm(x.iter().map(|z| z.norm()), *p),
            NormKind::Bochner {
                blocks,
                weight,
                p,
                inner,
            } => {
                let chunk = x.len() / blocks;
                let s: f64 = x.chunks(chunk).map(|c| inner.norm(c).powf(*p)).sum();
                (weight * s).powf(1.0 / p)
            }
        }
    }
}

fn lp_norm<I: Iterator<Item = f64>>(it: I, p: f64) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    m * v.iter().map(|a| (a / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

#[derive(Debug, Clone)]
pub struct OperatorFamily {
    members: Vec<DMatrix<Complex64>>,
}

impl OperatorFamily {
    pub fn new(members: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("operator family"));
        }
        let shape = members[0].shape();
        if let Some(m) = members.iter().find(|m| m.shape() != shape) {
            return Err(Error::ShapeMismatch(format!(
                "member {:?} differs from {:?}",
                m.shape(),
                shape
            )));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[DMatrix<Complex64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.members[0].shape()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            members: self
                .members
                .iter()
                .map(|m| m * Complex64::new(c, 0.0))
                .collect(),
        }
    }

    /// `Some(α_j)` when every member is a multiple of the identity.
    pub fn scalar_coefficients(&self) -> Option<Vec<Complex64>> {
        let (r, c) = self.shape();
        if r != c {
            return None;
        }
        self.members
            .iter()
            .map(|m| {
                let a = m[(0, 0)];
                let ok = (0..r).all(|i| {
                    (0..c).all(|j| {
                        if i == j {
                            m[(i, j)] == a
                        } else {
                            m[(i, j)] == Complex64::new(0.0, 0.0)
                        }
                    })
                });
                ok.then_some(a)
            })
            .collect()
    }
}

/// `(mean_ε ‖Σ_j ε_j y_j‖^p)^{1/p}` over all sign patterns, using the symmetry
/// `ε ↦ -ε` to fix `ε_1 = +1` and a Gray-code walk for the rest.
pub fn rademacher_mean(ys: &[DVector<Complex64>], p: f64, space: &BanachSpaceSpec) -> Result<f64> {
    let n = ys.len();
    if n == 0 {
        return Err(Error::Empty("rademacher sum"));
    }
    if n > MAX_ENUMERATION_TERMS {
        return Err(Error::TooManyTerms {
            n,
            cap: MAX_ENUMERATION_TERMS,
        });
    }
    let dim = ys[0].len();
    let mut signs = vec![1.0f64; n];
    let mut sum = DVector::<Complex64>::zeros(dim);
    for y in ys {
        sum += y;
    }
    let patterns = 1usize << (n - 1);
    let mut vals = Vec::with_capacity(patterns);
    vals.push(space.norm(sum.as_slice()));
    for i in 1..patterns {
        let j = i.trailing_zeros() as usize + 1;
        signs[j] = -signs[j];
        sum.axpy(
            Complex64::new(2.0 * signs[j], 0.0),
            &ys[j],
            Complex64::new(1.0, 0.0),
        );
        vals.push(space.norm(sum.as_slice()));
    }
    let m = vals.iter().cloned().fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    let mean: f64 = vals.iter().map(|v| (v / m).powf(p)).sum::<f64>() / patterns as f64;
    Ok(m * mean.powf(1.0 / p))
}

/// Ratio of Rademacher means of `T_j x_j` and `x_j`.
pub fn rademacher_functional(
    ts: &[&DMatrix<Complex64>],
    xs: &[DVector<Complex64>],
    p: f64,
    x_space: &BanachSpaceSpec,
    y_space: &BanachSpaceSpec,
) -> Result<f64> {
    if ts.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            got: xs.len(),
        });
    }
    if ts.is_empty() {
        return Err(Error::Empty("rademacher functional"));
    }
    if ts.len() > MAX_ENUMERATION_TERMS {
        return Err(Error::TooManyTerms {
            n: ts.len(),
            cap: MAX_ENUMERATION_TERMS,
        });
    }
    for (t, x) in ts.iter().zip(xs) {
        if t.ncols() != x.len() {
            return Err(Error::ShapeMismatch(format!(
                "operator with {} columns applied to length {}",
                t.ncols(),
                x.len()
            )));
        }
    }
    let den = rademacher_mean(xs, p, x_space)?;
    if den == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    let ys: Vec<DVector<Complex64>> = ts.iter().zip(xs).map(|(t, x)| *t * x).collect();
    Ok(rademacher_mean(&ys, p, y_space)? / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    ExactEnumeration,
    MonteCarloLower,
    HilbertOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Use the Hilbert oracle whenever it applies.
    #[default]
    Auto,
    Sampling,
}

/// Best tuple found so far; feeding it back makes growing estimates monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub indices: Vec<usize>,
    pub xs: Vec<DVector<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct RBoundBudget {
    /// Largest tuple size tried.
    pub n_max: usize,
    /// Number of tuples of size ≥ 2 tried in sampling mode.
    pub samples: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    pub mode: EstimatorMode,
    pub warm_start: Option<Witness>,
}

impl Default for RBoundBudget {
    fn default() -> Self {
        Self {
            n_max: 3,
            samples: 256,
            ascent_steps: 50,
            seed: 0,
            mode: EstimatorMode::Auto,
            warm_start: None,
        }
    }
}

impl RBoundBudget {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn sampling(mut self) -> Self {
        self.mode = EstimatorMode::Sampling;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RBoundEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub p: f64,
    pub n_max: usize,
    pub sample_count: usize,
    pub seed: u64,
    /// Certified upper bound, when one is available.
    pub upper_bound: Option<f64>,
    #[serde(skip)]
    pub witness: Option<Witness>,
}

fn hilbert_norms(
    family: &OperatorFamily,
    x: &BanachSpaceSpec,
    y: &BanachSpaceSpec,
) -> Option<Vec<f64>> {
    let (sx, sy) = (x.hilbert_scale()?, y.hilbert_scale()?);
    Some(
        family
            .members()
            .par_iter()
            .map(|m| spectral_norm(m) * sy / sx)
            .collect(),
    )
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Contraction-principle cap `2·sup|α_j|` for scalar families, or the Hilbert value.
pub fn upper_bound(
    family: &OperatorFamily,
    x: &BanachSpaceSpec,
    y: &BanachSpaceSpec,
    p: f64,
) -> Option<f64> {
    if p == 2.0 {
        if let Some(n) = hilbert_norms(family, x, y) {
            return Some(n.into_iter().fold(0.0, f64::max));
        }
    }
    if x == y {
        if let Some(alpha) = family.scalar_coefficients() {
            return Some(2.0 * alpha.iter().map(|a| a.norm()).fold(0.0, f64::max));
        }
    }
    None
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn tuple_seed(seed: u64, indices: &[usize]) -> u64 {
    let mut h = splitmix(seed ^ 0x5EED);
    for &i in indices {
        h = splitmix(h ^ (i as u64).wrapping_mul(0x1000_0000_01B3));
    }
    splitmix(h ^ indices.len() as u64)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

fn top_right_singular(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let k = svd.singular_values.imax();
    let v = v_t.row(k).adjoint();
    if v.norm() == 0.0 {
        let mut e = DVector::zeros(n);
        e[0] = Complex64::new(1.0, 0.0);
        return e;
    }
    v
}

struct Ctx<'a> {
    family: &'a OperatorFamily,
    x: &'a BanachSpaceSpec,
    y: &'a BanachSpaceSpec,
    p: f64,
    steps: usize,
}

impl Ctx<'_> {
    fn value(&self, xs: &[DVector<Complex64>], ys: &[DVector<Complex64>]) -> Result<f64> {
        let den = rademacher_mean(xs, self.p, self.x)?;
        if den == 0.0 {
            return Err(Error::ZeroDenominator);
        }
        Ok(rademacher_mean(ys, self.p, self.y)? / den)
    }

    /// Random-direction hill climbing on the vectors of one tuple.
    fn ascend(
        &self,
        indices: &[usize],
        mut xs: Vec<DVector<Complex64>>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(f64, Vec<DVector<Complex64>>)> {
        let ms = self.family.members();
        let mut ys: Vec<DVector<Complex64>> =
            indices.iter().zip(&xs).map(|(&i, x)| &ms[i] * x).collect();
        let mut best = self.value(&xs, &ys)?;
        let mut eta = 0.3;
        for _ in 0..self.steps {
            let j = rng.random_range(0..xs.len());
            let d = gaussian_vector(rng, xs[j].len());
            let dn = d.norm();
            if dn == 0.0 {
                continue;
            }
            let cand = &xs[j] + d * Complex64::new(eta * xs[j].norm() / dn, 0.0);
            let old_x = std::mem::replace(&mut xs[j], cand);
            let old_y = std::mem::replace(&mut ys[j], &ms[indices[j]] * &xs[j]);
            match self.value(&xs, &ys) {
                Ok(v) if v > best => {
                    best = v;
                    eta = (eta * 1.3).min(2.0);
                }
                _ => {
                    xs[j] = old_x;
                    ys[j] = old_y;
                    eta = (eta * 0.6).max(1e-6);
                }
            }
        }
        Ok((best, xs))
    }

    fn run_tuple(
        &self,
        seed: u64,
        indices: &[usize],
        tops: &[DVector<Complex64>],
    ) -> Result<(f64, Vec<DVector<Complex64>>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(tuple_seed(seed, indices));
        let xs: Vec<DVector<Complex64>> = indices
            .iter()
            .map(|&i| {
                let phase =
                    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
                let g = gaussian_vector(&mut rng, tops[i].len());
                let gn = g.norm().max(1e-300);
                &tops[i] * phase + g * Complex64::new(0.3 / gn, 0.0)
            })
            .collect();
        self.ascend(indices, xs, &mut rng)
    }
}

fn multiset_count(n: usize, k: usize) -> f64 {
    // C(n + k - 1, k)
    (0..k).fold(1.0, |acc, i| acc * (n + i) as f64 / (i + 1) as f64)
}

fn all_multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    loop {
        out.push(cur.clone());
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if cur[pos] + 1 < n {
                let v = cur[pos] + 1;
                for c in cur[pos..].iter_mut() {
                    *c = v;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        if k == 0 {
            return out;
        }
    }
}

/// Lower-bound estimate of `R(T)` as a map `X → Y`.
pub fn rbound_estimate(
    family: &OperatorFamily,
    x_space: &BanachSpaceSpec,
    y_space: &BanachSpaceSpec,
    p: f64,
    budget: &RBoundBudget,
) -> Result<RBoundEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Rademacher exponent {p} must lie in [1, ∞)"
        )));
    }
    x_space.validate()?;
    y_space.validate()?;
    let (rows, cols) = family.shape();
    if cols != x_space.dim || rows != y_space.dim {
        return Err(Error::ShapeMismatch(format!(
            "operators {rows}x{cols} between spaces of dimension {} and {}",
            x_space.dim, y_space.dim
        )));
    }
    if budget.n_max == 0 || budget.n_max > MAX_ENUMERATION_TERMS {
        return Err(Error::TooManyTerms {
            n: budget.n_max,
            cap: MAX_ENUMERATION_TERMS,
        });
    }
    let upper = upper_bound(family, x_space, y_space, p);
    if budget.mode == EstimatorMode::Auto && p == 2.0 {
        if let Some(norms) = hilbert_norms(family, x_space, y_space) {
            let (k, value) =
                norms.iter().enumerate().fold(
                    (0, 0.0),
                    |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                );
            let witness = Witness {
                indices: vec![k],
                xs: vec![top_right_singular(&family.members()[k])],
            };
            return Ok(RBoundEstimate {
                value,
                method: EstimateMethod::HilbertOracle,
                p,
                n_max: 1,
                sample_count: family.len(),
                seed: budget.seed,
                upper_bound: upper,
                witness: Some(witness),
            });
        }
    }

    let ctx = Ctx {
        family,
        x: x_space,
        y: y_space,
        p,
        steps: budget.ascent_steps,
    };
    let n = family.len();
    let tops: Vec<DVector<Complex64>> = family
        .members()
        .par_iter()
        .map(top_right_singular)
        .collect();

    let mut candidates: Vec<(f64, Witness)> = Vec::new();
    if let Some(w) = &budget.warm_start {
        let valid = !w.indices.is_empty()
            && w.indices.len() == w.xs.len()
            && w.indices.iter().all(|&i| i < n)
            && w.xs.iter().all(|x| x.len() == cols);
        if valid {
            let ms = family.members();
            let ys: Vec<DVector<Complex64>> = w
                .indices
                .iter()
                .zip(&w.xs)
                .map(|(&i, x)| &ms[i] * x)
                .collect();
            if let Ok(v) = ctx.value(&w.xs, &ys) {
                candidates.push((v, w.clone()));
            }
        }
    }

    // singletons start at the top singular vector, so the estimate dominates the operator norms
    let singles: Vec<Result<(f64, Vec<DVector<Complex64>>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(tuple_seed(budget.seed, &[i]));
            ctx.ascend(&[i], vec![tops[i].clone()], &mut rng)
        })
        .collect();
    for (i, r) in singles.into_iter().enumerate() {
        let (v, xs) = r?;
        candidates.push((
            v,
            Witness {
                indices: vec![i],
                xs,
            },
        ));
    }

    let total: f64 = (2..=budget.n_max).map(|k| multiset_count(n, k)).sum();
    let exact = total <= budget.samples as f64;
    let tuples: Vec<Vec<usize>> = if exact {
        (2..=budget.n_max)
            .flat_map(|k| all_multisets(n, k))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(budget.seed));
        (0..budget.samples)
            .map(|_| {
                let k = rng.random_range(2..=budget.n_max);
                let mut t: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
                t.sort_unstable();
                t
            })
            .collect()
    };
    let results: Vec<Result<(f64, Vec<DVector<Complex64>>)>> = tuples
        .par_iter()
        .map(|t| ctx.run_tuple(budget.seed, t, &tops))
        .collect();
    for (t, r) in tuples.iter().zip(results) {
        match r {
            Ok((v, xs)) => candidates.push((
                v,
                Witness {
                    indices: t.clone(),
                    xs,
                },
            )),
            Err(Error::ZeroDenominator) => {}
            Err(e) => return Err(e),
        }
    }

    let mut best: Option<(f64, Witness)> = None;
    for (v, w) in candidates {
        if best.as_ref().is_none_or(|b| v > b.0) {
            best = Some((v, w));
        }
    }
    let (value, witness) = best.ok_or(Error::Empty("estimation candidates"))?;
    Ok(RBoundEstimate {
        value,
        method: if exact {
            EstimateMethod::ExactEnumeration
        } else {
            EstimateMethod::MonteCarloLower
        },
        p,
        n_max: budget.n_max,
        sample_count: n + tuples.len(),
        seed: budget.seed,
        upper_bound: upper,
        witness: Some(witness),
    })
}

/// R-bound of the sampled range `{f(γ) : γ ∈ Γ}`.
pub fn rbound_of_range(
    values: &[DMatrix<Complex64>],
    x_space: &BanachSpaceSpec,
    y_space: &BanachSpaceSpec,
    p: f64,
    budget: &RBoundBudget,
) -> Result<RBoundEstimate> {
    if values.is_empty() {
        return Err(Error::Empty("range sample"));
    }
    let family = OperatorFamily::new(values.to_vec())?;
    rbound_estimate(&family, x_space, y_space, p, budget)
}

#[derive(Debug, Clone, Serialize)]
pub struct KahaneReport {
    pub p: f64,
    pub q: f64,
    pub trials: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Ratios `mean_p / mean_q` of `‖Σ ε_j x_j‖` over random tuples of sizes `1..=n_max`.
pub fn kahane_equivalence_check(
    p: f64,
    q: f64,
    trials: usize,
    n_max: usize,
    space: &BanachSpaceSpec,
    seed: u64,
) -> Result<KahaneReport> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::InvalidArgument(
            "Kahane exponents must lie in [1, ∞)".into(),
        ));
    }
    if trials == 0 || n_max == 0 {
        return Err(Error::InvalidArgument(
            "need trials >= 1 and n_max >= 1".into(),
        ));
    }
    if n_max > MAX_ENUMERATION_TERMS {
        return Err(Error::TooManyTerms {
            n: n_max,
            cap: MAX_ENUMERATION_TERMS,
        });
    }
    let ratios: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tuple_seed(seed, &[t]));
            let n = rng.random_range(1..=n_max);
            let xs: Vec<DVector<Complex64>> = (0..n)
                .map(|_| gaussian_vector(&mut rng, space.dim))
                .collect();
            Ok(rademacher_mean(&xs, p, space)? / rademacher_mean(&xs, q, space)?)
        })
        .collect();
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for r in ratios {
        let r = r?;
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    Ok(KahaneReport {
        p,
        q,
        trials,
        min_ratio,
        max_ratio,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub ratio: f64,
    pub pass: bool,
}

/// Checks `mean_p(α_j x_j) ≤ 2·mean_p(β_j x_j)` for `|α_j| ≤ |β_j|`.
pub fn contraction_check(
    alpha: &[Complex64],
    beta: &[Complex64],
    xs: &[DVector<Complex64>],
    p: f64,
    space: &BanachSpaceSpec,
) -> Result<ContractionReport> {
    if alpha.len() != beta.len() || alpha.len() != xs.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: beta.len().min(xs.len()),
        });
    }
    if let Some(j) = (0..alpha.len()).find(|&j| alpha[j].norm() > beta[j].norm() * (1.0 + 1e-15)) {
        return Err(Error::Precondition(format!("|alpha_{j}| > |beta_{j}|")));
    }
    let ya: Vec<DVector<Complex64>> = xs.iter().zip(alpha).map(|(x, a)| x * *a).collect();
    let yb: Vec<DVector<Complex64>> = xs.iter().zip(beta).map(|(x, b)| x * *b).collect();
    let rhs = rademacher_mean(&yb, p, space)?;
    let lhs = rademacher_mean(&ya, p, space)?;
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(ContractionReport {
        ratio,
        pass: ratio <= 2.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyAlphaReport {
    pub n_max: usize,
    pub trials: usize,
    pub max_ratio: f64,
}

fn double_mean(
    xs: &[Vec<DVector<Complex64>>],
    signs: &[Vec<f64>],
    p: f64,
    space: &BanachSpaceSpec,
) -> f64 {
    let n = xs.len();
    let half = 1usize << (n - 1);
    let mut acc = 0.0;
    let mut eps = vec![1.0; n];
    let mut eps2 = vec![1.0; n];
    for a in 0..half {
        for (j, e) in eps.iter_mut().enumerate().skip(1) {
            *e = if (a >> (j - 1)) & 1 == 1 { -1.0 } else { 1.0 };
        }
        for b in 0..half {
            for (k, e) in eps2.iter_mut().enumerate().skip(1) {
                *e = if (b >> (k - 1)) & 1 == 1 { -1.0 } else { 1.0 };
            }
            let mut s = DVector::<Complex64>::zeros(space.dim);
            for j in 0..n {
                for k in 0..n {
                    s.axpy(
                        Complex64::new(signs[j][k] * eps[j] * eps2[k], 0.0),
                        &xs[j][k],
                        Complex64::new(1.0, 0.0),
                    );
                }
            }
            acc += space.norm(s.as_slice()).powf(p);
        }
    }
    (acc / (half * half) as f64).powf(1.0 / p)
}

/// Largest observed double-Rademacher ratio with random signs `α_{jk}`.
pub fn property_alpha_check(
    space: &BanachSpaceSpec,
    n_max: usize,
    trials: usize,
    p: f64,
    seed: u64,
) -> Result<PropertyAlphaReport> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be positive".into()));
    }
    if n_max > MAX_ALPHA_TERMS {
        return Err(Error::TooManyTerms {
            n: n_max,
            cap: MAX_ALPHA_TERMS,
        });
    }
    let ratios: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(tuple_seed(seed, &[t, 7]));
            let n = rng.random_range(1..=n_max);
            let xs: Vec<Vec<DVector<Complex64>>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| gaussian_vector(&mut rng, space.dim))
                        .collect()
                })
                .collect();
            let signs: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                        .collect()
                })
                .collect();
            let ones = vec![vec![1.0; n]; n];
            let den = double_mean(&xs, &ones, p, space);
            if den == 0.0 {
                0.0
            } else {
                double_mean(&xs, &signs, p, space) / den
            }
        })
        .collect();
    Ok(PropertyAlphaReport {
        n_max,
        trials,
        max_ratio: ratios.into_iter().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub r_t: f64,
    pub r_s: f64,
    pub r_sum: f64,
    pub r_product: f64,
    pub sum_ok: bool,
    pub product_ok: bool,
    /// Right-hand sides used certified upper bounds.
    pub certified: bool,
}

/// Checks `R(T+S) ≤ R(T) + R(S)` and `R(TS) ≤ R(T)R(S)` for square families on one space.
pub fn rbound_algebra_check(
    t: &OperatorFamily,
    s: &OperatorFamily,
    space: &BanachSpaceSpec,
    p: f64,
    budget: &RBoundBudget,
) -> Result<AlgebraReport> {
    if t.shape() != s.shape() || t.shape().0 != t.shape().1 {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            t.shape(),
            s.shape()
        )));
    }
    let mut sums = Vec::with_capacity(t.len() * s.len());
    let mut prods = Vec::with_capacity(t.len() * s.len());
    for a in t.members() {
        for b in s.members() {
            sums.push(a + b);
            prods.push(a * b);
        }
    }
    let est = |f: &OperatorFamily| rbound_estimate(f, space, space, p, budget);
    let et = est(t)?;
    let es = est(s)?;
    let esum = est(&OperatorFamily::new(sums)?)?;
    let eprod = est(&OperatorFamily::new(prods)?)?;
    let certified = et.upper_bound.is_some() && es.upper_bound.is_some();
    let ut = et.upper_bound.unwrap_or(et.value);
    let us = es.upper_bound.unwrap_or(es.value);
    let slack = if certified { 1e-12 } else { 0.05 };
    Ok(AlgebraReport {
        r_t: et.value,
        r_s: es.value,
        r_sum: esum.value,
        r_product: eprod.value,
        sum_ok: esum.value <= (ut + us) * (1.0 + slack) + 1e-300,
        product_ok: eprod.value <= ut * us * (1.0 + slack) + 1e-300,
        certified,
    })
}
