//! Anisotropic weights, multi-indices, sector geometry and torus grids.
//!
//! For an anisotropy vector `ℓ = (ℓ_1, …, ℓ_n)` with `L = ℓ_1⋯ℓ_n` and
//! `π_j = L / ℓ_j` the quasi-norm and its regularization are
//!
//! ```text
//! |ξ|_ℓ = (Σ ξ_j^{2π_j})^{1/(2L)},     ⟨ξ⟩_ℓ = (1 + Σ ξ_j^{2π_j})^{1/(2L)}
//! ```
//!
//! Both are evaluated in log space once an entry is large or an exponent
//! is high, since `2π_j` grows quickly for uneven `ℓ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct AnisotropyVector {
    entries: Vec<u32>,
    pis: Vec<u64>,
    product: u64,
}

impl AnisotropyVector {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidAnisotropy("empty".into()));
        }
        if let Some(bad) = entries.iter().find(|&&e| e == 0) {
            return Err(Error::InvalidAnisotropy(format!("entry {bad} < 1")));
        }
        let product = entries
            .iter()
            .try_fold(1u64, |acc, &e| acc.checked_mul(e as u64))
            .ok_or_else(|| Error::InvalidAnisotropy("product overflows".into()))?;
        let pis = entries.iter().map(|&e| product / e as u64).collect();
        Ok(Self {
            entries,
            pis,
            product,
        })
    }

    pub fn isotropic(n: usize) -> Self {
        Self::new(vec![1; n]).expect("n >= 1")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn entry(&self, j: usize) -> u32 {
        self.entries[j]
    }

    /// `π_j = ∏_{i≠j} ℓ_i`.
    pub fn pi(&self, j: usize) -> u64 {
        self.pis[j]
    }

    /// `L = ℓ_1⋯ℓ_n`.
    pub fn product(&self) -> u64 {
        self.product
    }

    pub fn is_isotropic(&self) -> bool {
        self.entries.iter().all(|&e| e == 1)
    }

    /// Concatenation `(ℓ, ℓ')`, used to append parameter weights to covariable weights.
    pub fn concat(&self, other: &AnisotropyVector) -> Result<AnisotropyVector> {
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        AnisotropyVector::new(e)
    }

    pub fn sum(&self) -> u64 {
        self.entries.iter().map(|&e| e as u64).sum()
    }

    pub fn reciprocal_sum(&self) -> f64 {
        self.entries.iter().map(|&e| 1.0 / e as f64).sum()
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: n,
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<u32>> for AnisotropyVector {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        AnisotropyVector::new(v)
    }
}

impl From<AnisotropyVector> for Vec<u32> {
    fn from(a: AnisotropyVector) -> Self {
        a.entries
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, j: usize) -> Self {
        let mut v = vec![0; n];
        v[j] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&b| (1..=b).map(f64::from).product::<f64>())
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> Result<MultiIndex> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// All multi-indices of length `n` with total degree at most `max_total`,
    /// graded by degree.
    pub fn up_to_total(n: usize, max_total: u32) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        for deg in 0..=max_total {
            let mut cur = vec![0u32; n];
            fill_degree(&mut out, &mut cur, 0, deg);
        }
        out
    }

    /// All `β ≤ bound` componentwise.
    pub fn below(bound: &MultiIndex) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(vec![])];
        for &b in &bound.0 {
            let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
            for m in &out {
                for v in 0..=b {
                    let mut e = m.0.clone();
                    e.push(v);
                    next.push(MultiIndex(e));
                }
            }
            out = next;
        }
        out
    }
}

fn fill_degree(out: &mut Vec<MultiIndex>, cur: &mut Vec<u32>, pos: usize, remaining: u32) {
    let n = cur.len();
    if n == 0 {
        if remaining == 0 {
            out.push(MultiIndex(vec![]));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = remaining;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        fill_degree(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

/// `|β|_ℓ = Σ ℓ_j β_j`.
pub fn aniso_length(beta: &MultiIndex, ell: &AnisotropyVector) -> Result<u64> {
    ell.check(beta.len())?;
    Ok(beta
        .0
        .iter()
        .zip(ell.entries())
        .map(|(&b, &l)| b as u64 * l as u64)
        .sum())
}

fn needs_log_space(xi: &[f64], ell: &AnisotropyVector) -> bool {
    xi.iter()
        .enumerate()
        .any(|(j, x)| x.abs() > 1e3 || ell.pi(j) > 8)
}

/// Logarithm of `Σ |ξ_j|^{2π_j}`, or `None` when every entry vanishes.
fn log_power_sum(xi: &[f64], ell: &AnisotropyVector) -> Option<f64> {
    let logs: Vec<f64> = xi
        .iter()
        .enumerate()
        .filter(|(_, x)| **x != 0.0)
        .map(|(j, x)| 2.0 * ell.pi(j) as f64 * x.abs().ln())
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    Some(max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
}

fn power_sum(xi: &[f64], ell: &AnisotropyVector) -> f64 {
    xi.iter()
        .enumerate()
        .map(|(j, x)| x.abs().powi(2 * ell.pi(j) as i32))
        .sum()
}

/// `|ξ|_ℓ`; anisotropically 1-homogeneous.
pub fn aniso_abs(xi: &[f64], ell: &AnisotropyVector) -> Result<f64> {
    ell.check(xi.len())?;
    let two_l = 2.0 * ell.product() as f64;
    if ell.is_isotropic() {
        return Ok(xi.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    if needs_log_space(xi, ell) {
        return Ok(log_power_sum(xi, ell).map_or(0.0, |ls| (ls / two_l).exp()));
    }
    Ok(power_sum(xi, ell).powf(1.0 / two_l))
}

/// `⟨ξ⟩_ℓ ≥ 1`.
pub fn aniso_bracket(xi: &[f64], ell: &AnisotropyVector) -> Result<f64> {
    ell.check(xi.len())?;
    let two_l = 2.0 * ell.product() as f64;
    if ell.is_isotropic() {
        return Ok((1.0 + xi.iter().map(|x| x * x).sum::<f64>()).sqrt());
    }
    if needs_log_space(xi, ell) {
        let ls = match log_power_sum(xi, ell) {
            Some(ls) => ls,
            None => return Ok(1.0),
        };
        // log(1 + e^ls)
        let l1p = if ls > 0.0 {
            ls + (-ls).exp().ln_1p()
        } else {
            ls.exp().ln_1p()
        };
        return Ok((l1p / two_l).exp());
    }
    Ok((1.0 + power_sum(xi, ell)).powf(1.0 / two_l))
}

/// Anisotropic dilation `(ϱ^{ℓ_1}ξ_1, …, ϱ^{ℓ_n}ξ_n)`.
pub fn dilate(rho: f64, xi: &[f64], ell: &AnisotropyVector) -> Vec<f64> {
    xi.iter()
        .zip(ell.entries())
        .map(|(x, &l)| x * rho.powi(l as i32))
        .collect()
}

/// Splits `ξ ≠ 0` into `(|ξ|_ℓ, ω)` with `ω` on the anisotropic unit sphere.
pub fn sphere_projection(xi: &[f64], ell: &AnisotropyVector) -> Result<(f64, Vec<f64>)> {
    let r = aniso_abs(xi, ell)?;
    if r == 0.0 {
        return Err(Error::Origin);
    }
    Ok((r, dilate(1.0 / r, xi, ell)))
}

#[derive(Debug, Clone, Serialize)]
pub struct PeetreReport {
    pub max_ratio: f64,
    pub bound: f64,
    pub samples: usize,
    pub violations: usize,
    pub pass: bool,
}

/// Checks `⟨ξ+ξ'⟩^s_ℓ ≤ 2^{|s|}⟨ξ⟩^s_ℓ⟨ξ'⟩^{|s|}_ℓ` on the given pairs.
pub fn peetre_check(
    s: f64,
    samples: &[(Vec<f64>, Vec<f64>)],
    ell: &AnisotropyVector,
) -> Result<PeetreReport> {
    if samples.is_empty() {
        return Err(Error::Empty("peetre samples"));
    }
    let bound = 2f64.powf(s.abs());
    let mut max_ratio: f64 = 0.0;
    let mut violations = 0;
    for (a, b) in samples {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
        // ratio evaluated in log space; brackets can be large
        let log_ratio = s * aniso_bracket(&sum, ell)?.ln()
            - s * aniso_bracket(a, ell)?.ln()
            - s.abs() * aniso_bracket(b, ell)?.ln();
        let ratio = log_ratio.exp();
        if ratio > bound * (1.0 + 1e-12) {
            violations += 1;
        }
        max_ratio = max_ratio.max(ratio);
    }
    Ok(PeetreReport {
        max_ratio,
        bound,
        samples: samples.len(),
        violations,
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightEquivalenceReport {
    /// `min ⟨ξ⟩_ℓ / ⟨ξ⟩^{1/Σℓ_j}`
    pub lower_c: f64,
    /// `max ⟨ξ⟩_ℓ / ⟨ξ⟩^{Σ1/ℓ_j}`
    pub upper_c: f64,
    pub lower_exponent: f64,
    pub upper_exponent: f64,
}

pub fn weight_equivalence_check(
    ell: &AnisotropyVector,
    samples: &[Vec<f64>],
) -> Result<WeightEquivalenceReport> {
    if samples.is_empty() {
        return Err(Error::Empty("weight samples"));
    }
    let lower_exponent = 1.0 / ell.sum() as f64;
    let upper_exponent = ell.reciprocal_sum();
    let iso = AnisotropyVector::isotropic(ell.len());
    let mut lower_c = f64::INFINITY;
    let mut upper_c: f64 = 0.0;
    for xi in samples {
        let w = aniso_bracket(xi, ell)?.ln();
        let b = aniso_bracket(xi, &iso)?.ln();
        lower_c = lower_c.min((w - lower_exponent * b).exp());
        upper_c = upper_c.max((w - upper_exponent * b).exp());
    }
    Ok(WeightEquivalenceReport {
        lower_c,
        upper_c,
        lower_exponent,
        upper_exponent,
    })
}

/// Closed sector `Λ = {λ : |arg λ| ≤ θ, |λ| ≥ r_0}` with a sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub half_opening_angle: f64,
    pub min_radius: f64,
    pub sample_radii: Vec<f64>,
    pub sample_angles: Vec<f64>,
}

impl SectorSpec {
    pub fn new(half_opening_angle: f64, min_radius: f64) -> Result<Self> {
        if !(half_opening_angle > 0.0 && half_opening_angle <= PI) {
            return Err(Error::InvalidSector(format!(
                "half angle {half_opening_angle} outside (0, π]"
            )));
        }
        if !(min_radius > 0.0) {
            return Err(Error::InvalidSector(format!(
                "min radius {min_radius} must be positive"
            )));
        }
        Ok(Self {
            half_opening_angle,
            min_radius,
            sample_radii: vec![min_radius],
            sample_angles: vec![0.0],
        })
    }

    pub fn right_half_plane(min_radius: f64) -> Result<Self> {
        Self::new(PI / 2.0, min_radius)
    }

    /// Logarithmically spaced radii on `[r_min, r_max]`.
    pub fn with_log_radii(mut self, r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if n == 0 || !(r_min > 0.0) || r_max < r_min || (n > 1 && r_max == r_min) {
            return Err(Error::InvalidSector("bad radius range".into()));
        }
        self.sample_radii = if n == 1 {
            vec![r_min]
        } else {
            let (a, b) = (r_min.ln(), r_max.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        };
        self.validate()?;
        Ok(self)
    }

    /// `n` uniformly spaced angles on `[-θ, θ]`.
    pub fn with_uniform_angles(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSector("need at least one angle".into()));
        }
        let t = self.half_opening_angle;
        self.sample_angles = if n == 1 {
            vec![0.0]
        } else {
            (0..n)
                .map(|i| -t + 2.0 * t * i as f64 / (n - 1) as f64)
                .collect()
        };
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_opening_angle > 0.0 && self.half_opening_angle <= PI) {
            return Err(Error::InvalidSector("half angle outside (0, π]".into()));
        }
        if self.sample_radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSector(
                "sample radii must be strictly increasing".into(),
            ));
        }
        if self
            .sample_radii
            .iter()
            .any(|&r| r < self.min_radius * (1.0 - 1e-12))
        {
            return Err(Error::InvalidSector(
                "sample radius below min radius".into(),
            ));
        }
        if self
            .sample_angles
            .iter()
            .any(|a| a.abs() > self.half_opening_angle + 1e-12)
        {
            return Err(Error::InvalidSector(
                "sample angle outside the sector".into(),
            ));
        }
        Ok(())
    }

    pub fn samples(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.sample_radii.len() * self.sample_angles.len());
        for &r in &self.sample_radii {
            for &a in &self.sample_angles {
                out.push(Complex64::from_polar(r, a));
            }
        }
        out
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() >= self.min_radius * (1.0 - 1e-12)
            && z.arg().abs() <= self.half_opening_angle + 1e-12
    }

    /// Euclidean distance from `z` to the closed cone `{|arg λ| ≤ θ} ∪ {0}`.
    ///
    /// Principal symbols are homogeneous, so ellipticity is tested against
    /// the cone rather than the truncated sector.
    pub fn cone_distance(&self, z: Complex64) -> f64 {
        let r = z.norm();
        if r == 0.0 {
            return 0.0;
        }
        let excess = z.arg().abs() - self.half_opening_angle;
        if excess <= 0.0 {
            0.0
        } else if excess >= PI / 2.0 {
            r
        } else {
            r * excess.sin()
        }
    }
}

/// Torus `[-B, B)^d` with `M` points per axis and the lattice `{k π / B}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        let g = Self {
            dim,
            half_width,
            points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidGrid("dimension must be >= 1".into()));
        }
        if self.points < 4 || !self.points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis {} must be even and >= 4",
                self.points
            )));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::InvalidGrid("half width must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Row-major unravel, axis 0 slowest.
    pub fn unravel(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.points;
            idx /= self.points;
        }
        out
    }

    pub fn ravel(&self, ix: &[usize]) -> usize {
        ix.iter().fold(0, |acc, &i| acc * self.points + i)
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.unravel(idx)
            .into_iter()
            .map(|i| -self.half_width + i as f64 * h)
            .collect()
    }

    /// Signed lattice index of FFT slot `k` on one axis; the Nyquist slot maps to `-M/2`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let m = self.points as i64;
        let k = k as i64;
        if k < m / 2 {
            k
        } else {
            k - m
        }
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.points / 2
    }

    pub fn frequency_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn frequency(&self, k: usize) -> f64 {
        self.signed_index(k) as f64 * self.frequency_step()
    }

    pub fn nyquist_frequency(&self) -> f64 {
        self.points as f64 / 2.0 * self.frequency_step()
    }

    /// Lattice point for flat FFT slot `idx`.
    pub fn lattice_point(&self, idx: usize) -> Vec<f64> {
        self.unravel(idx)
            .into_iter()
            .map(|k| self.frequency(k))
            .collect()
    }

    /// Evaluation points for a lattice slot with weights. The Nyquist slot on an
    /// axis is shared by `±M/2·π/B`; symbols are averaged over both signs so the
    /// effective lattice stays symmetric about the origin.
    pub fn lattice_variants(&self, idx: usize) -> Vec<(Vec<f64>, f64)> {
        let ks = self.unravel(idx);
        let mut out = vec![(Vec::with_capacity(self.dim), 1.0)];
        for &k in &ks {
            let f = self.frequency(k);
            if self.is_nyquist(k) {
                let mut next = Vec::with_capacity(out.len() * 2);
                for (p, w) in &out {
                    for s in [f, -f] {
                        let mut q = p.clone();
                        q.push(s);
                        next.push((q, w * 0.5));
                    }
                }
                out = next;
            } else {
                for (p, _) in out.iter_mut() {
                    p.push(f);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ell(v: &[u32]) -> AnisotropyVector {
        AnisotropyVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn pis_are_consistent() {
        let l = ell(&[2, 3, 5]);
        assert_eq!(l.product(), 30);
        for j in 0..3 {
            assert_eq!(l.pi(j) * l.entry(j) as u64, 30);
        }
        assert!(AnisotropyVector::new(vec![1, 0]).is_err());
        assert!(AnisotropyVector::new(vec![]).is_err());
    }

    #[test]
    fn abs_examples() {
        assert_eq!(aniso_abs(&[3.0, 4.0], &ell(&[1, 1])).unwrap(), 5.0);
        assert_eq!(aniso_abs(&[0.0, 0.0, 0.0], &ell(&[1, 2, 3])).unwrap(), 0.0);
        assert_relative_eq!(
            aniso_abs(&[1.0, 1.0], &ell(&[1, 2])).unwrap(),
            2f64.powf(0.25),
            epsilon = 1e-14
        );
        assert!(aniso_abs(&[1.0], &ell(&[1, 2])).is_err());
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(aniso_bracket(&[0.0, 0.0], &ell(&[1, 2])).unwrap(), 1.0);
        assert_relative_eq!(
            aniso_bracket(&[1.0, 1.0], &ell(&[1, 2])).unwrap(),
            3f64.powf(0.25),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            aniso_bracket(&[3.0, 4.0], &ell(&[1, 1])).unwrap(),
            26f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn length_examples() {
        let l = ell(&[1, 2]);
        assert_eq!(aniso_length(&MultiIndex(vec![1, 2]), &l).unwrap(), 5);
        assert_eq!(aniso_length(&MultiIndex(vec![0, 0]), &l).unwrap(), 0);
        assert_eq!(aniso_length(&MultiIndex(vec![4, 0]), &l).unwrap(), 4);
        assert_eq!(aniso_length(&MultiIndex(vec![0, 2]), &l).unwrap(), 4);
        assert!(aniso_length(&MultiIndex(vec![1]), &l).is_err());
    }

    #[test]
    fn log_space_matches_direct() {
        let l = ell(&[1, 3, 4]); // π = (12, 4, 3), log path
        let xi = [0.7, -1.3, 2.1];
        let direct = power_sum(&xi, &l).powf(1.0 / 24.0);
        assert_relative_eq!(aniso_abs(&xi, &l).unwrap(), direct, max_relative = 1e-13);
        // large entries stay finite
        let big = [1e6, 1e9, 1e12];
        assert!(aniso_abs(&big, &l).unwrap().is_finite());
        assert!(aniso_bracket(&big, &l).unwrap().is_finite());
    }

    #[test]
    fn peetre_trivial_cases() {
        let l = ell(&[1, 2]);
        let samples = vec![
            (vec![1.0, 2.0], vec![-3.0, 0.5]),
            (vec![0.0, 0.0], vec![4.0, 1.0]),
        ];
        let r = peetre_check(0.0, &samples, &l).unwrap();
        assert_relative_eq!(r.max_ratio, 1.0);
        assert!(r.pass);
        let zero = vec![
            (vec![1.0, 2.0], vec![0.0, 0.0]),
            (vec![-5.0, 3.0], vec![0.0, 0.0]),
        ];
        for s in [-2.0, 0.5, 3.0] {
            let r = peetre_check(s, &zero, &l).unwrap();
            assert_relative_eq!(r.max_ratio, 1.0, epsilon = 1e-12);
            assert!(r.pass);
        }
        assert!(peetre_check(1.0, &[], &l).is_err());
    }

    #[test]
    fn weight_equivalence_at_origin_and_sphere() {
        let l = ell(&[1, 1]);
        let r = weight_equivalence_check(&l, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!((r.lower_c, r.upper_c), (1.0, 1.0));
        assert_relative_eq!(r.lower_exponent, 0.5);
        assert_relative_eq!(r.upper_exponent, 2.0);
        // on |ξ|_ℓ = 1 the bracket is 2^{1/(2L)}
        let l = ell(&[1, 2]);
        let (_, w) = sphere_projection(&[0.3, -2.0], &l).unwrap();
        assert_relative_eq!(aniso_abs(&w, &l).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            aniso_bracket(&w, &l).unwrap(),
            2f64.powf(0.25),
            epsilon = 1e-14
        );
    }

    #[test]
    fn multi_index_enumeration() {
        let all = MultiIndex::up_to_total(2, 2);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], MultiIndex(vec![0, 0]));
        let below = MultiIndex::below(&MultiIndex(vec![1, 1]));
        assert_eq!(below.len(), 4);
        assert_eq!(MultiIndex(vec![2, 3]).factorial(), 12.0);
    }

    #[test]
    fn sector_sampling_and_distance() {
        let s = SectorSpec::right_half_plane(1.0)
            .unwrap()
            .with_log_radii(1.0, 1e3, 4)
            .unwrap()
            .with_uniform_angles(5)
            .unwrap();
        assert!(s.samples().iter().all(|&z| s.contains(z)));
        assert_relative_eq!(
            s.cone_distance(Complex64::new(-1.0, 0.0)),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(s.cone_distance(Complex64::new(1.0, 0.0)), 0.0);
        let narrow = SectorSpec::new(PI / 4.0, 1.0).unwrap();
        assert_relative_eq!(
            narrow.cone_distance(Complex64::new(0.0, 2.0)),
            2.0 * (PI / 4.0).sin(),
            epsilon = 1e-14
        );
        assert!(SectorSpec::new(0.0, 1.0).is_err());
        let mut bad = s.clone();
        bad.sample_radii = vec![2.0, 1.5];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn grid_lattice_is_symmetric() {
        assert!(GridSpec::new(1, 16.0, 7).is_err());
        assert!(GridSpec::new(1, 16.0, 2).is_err());
        let g = GridSpec::new(1, 16.0, 8).unwrap();
        let mut freqs: Vec<f64> = (0..8)
            .flat_map(|k| g.lattice_variants(k).into_iter().map(|(p, _)| p[0]))
            .collect();
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in freqs.iter().zip(freqs.iter().rev()) {
            assert_relative_eq!(*a, -*b);
        }
        let g2 = GridSpec::new(2, 1.0, 4).unwrap();
        let corner = g2.ravel(&[2, 2]);
        let v = g2.lattice_variants(corner);
        assert_eq!(v.len(), 4);
        assert_relative_eq!(v.iter().map(|(_, w)| w).sum::<f64>(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ells() -> impl Strategy<Value = AnisotropyVector> {
            prop::collection::vec(1u32..4, 1..4).prop_map(|v| AnisotropyVector::new(v).unwrap())
        }

        proptest! {
            #[test]
            fn homogeneity(l in ells(), seed in prop::collection::vec(-10.0f64..10.0, 3), rho in 0.1f64..10.0) {
                let xi: Vec<f64> = seed.iter().cycle().take(l.len()).cloned().collect();
                let lhs = aniso_abs(&dilate(rho, &xi, &l), &l).unwrap();
                let rhs = rho * aniso_abs(&xi, &l).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }

            #[test]
            fn bracket_dominates(l in ells(), seed in prop::collection::vec(-50.0f64..50.0, 3)) {
                let xi: Vec<f64> = seed.iter().cycle().take(l.len()).cloned().collect();
                let b = aniso_bracket(&xi, &l).unwrap();
                let a = aniso_abs(&xi, &l).unwrap();
                prop_assert!(b >= 1.0);
                prop_assert!(b >= a * (1.0 - 1e-14));
            }

            #[test]
            fn length_is_additive(l in ells(), b in prop::collection::vec(0u32..5, 3), c in prop::collection::vec(0u32..5, 3)) {
                let n = l.len();
                let b = MultiIndex(b[..n].to_vec());
                let c = MultiIndex(c[..n].to_vec());
                let s = aniso_length(&b.add(&c).unwrap(), &l).unwrap();
                prop_assert_eq!(s, aniso_length(&b, &l).unwrap() + aniso_length(&c, &l).unwrap());
            }

            #[test]
            fn isotropic_reduces_to_euclidean(xi in prop::collection::vec(-100.0f64..100.0, 1..5)) {
                let l = AnisotropyVector::isotropic(xi.len());
                let e = xi.iter().map(|x| x * x).sum::<f64>();
                prop_assert_eq!(aniso_abs(&xi, &l).unwrap(), e.sqrt());
                prop_assert_eq!(aniso_bracket(&xi, &l).unwrap(), (1.0 + e).sqrt());
                let beta = MultiIndex(xi.iter().map(|x| x.abs() as u32 % 4).collect());
                prop_assert_eq!(aniso_length(&beta, &l).unwrap(), beta.total() as u64);
            }
        }
    }
}
