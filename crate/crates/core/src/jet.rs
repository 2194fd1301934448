//! Truncated multivariate Taylor jets with complex matrix coefficients.
//!
//! A jet of order `K` in `n` variables stores `f^{(α)}(p)/α!` for every
//! `|α| ≤ K`. Monomials are graded by total degree, so lowering the order is
//! a prefix truncation of the coefficient array.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug)]
pub struct JetLayout {
    pub nvars: usize,
    pub order: usize,
    monomials: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `degree_end[k]` = number of monomials of degree `≤ k`.
    degree_end: Vec<usize>,
    /// `pairs[k]` lists `(i, j)` with `mono_i + mono_j = mono_k`.
    pairs: Vec<Vec<(u32, u32)>>,
}

impl JetLayout {
    fn build(nvars: usize, order: usize) -> Self {
        let mut monomials: Vec<Vec<u8>> = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            push_degree(&mut monomials, &mut cur, 0, deg);
            degree_end.push(monomials.len());
        }
        let index: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let mut pairs = vec![Vec::new(); monomials.len()];
        for (i, a) in monomials.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in monomials[..degree_end[order - da]].iter().enumerate() {
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                pairs[index[&sum]].push((i as u32, j as u32));
            }
        }
        Self {
            nvars,
            order,
            monomials,
            index,
            degree_end,
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomial(&self, k: usize) -> &[u8] {
        &self.monomials[k]
    }

    pub fn index_of(&self, mono: &[u8]) -> Option<usize> {
        self.index.get(mono).copied()
    }

    pub fn terms_up_to(&self, degree: usize) -> usize {
        self.degree_end[degree.min(self.order)]
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, pos: usize, remaining: usize) {
    let n = cur.len();
    if n == 0 {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = remaining as u8;
        out.push(cur.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v as u8;
        push_degree(out, cur, pos + 1, remaining - v);
    }
    cur[pos] = 0;
}

/// Shared layout for `(nvars, order)`.
pub fn layout(nvars: usize, order: usize) -> Arc<JetLayout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetLayout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(l) = cache.lock().expect("layout cache").get(&(nvars, order)) {
        return l.clone();
    }
    let built = Arc::new(JetLayout::build(nvars, order));
    cache
        .lock()
        .expect("layout cache")
        .entry((nvars, order))
        .or_insert(built)
        .clone()
}

#[derive(Debug, Clone)]
pub struct MatrixJet {
    layout: Arc<JetLayout>,
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl MatrixJet {
    pub fn zeros(nvars: usize, order: usize, rows: usize, cols: usize) -> Self {
        let layout = layout(nvars, order);
        let data = vec![ZERO; layout.len() * rows * cols];
        Self {
            layout,
            rows,
            cols,
            data,
        }
    }

    pub fn constant(nvars: usize, order: usize, value: &DMatrix<Complex64>) -> Self {
        let mut j = Self::zeros(nvars, order, value.nrows(), value.ncols());
        j.set_coeff(0, value);
        j
    }

    pub fn scalar(nvars: usize, order: usize, value: Complex64) -> Self {
        let mut j = Self::zeros(nvars, order, 1, 1);
        j.data[0] = value;
        j
    }

    pub fn identity(nvars: usize, order: usize, m: usize) -> Self {
        Self::constant(nvars, order, &DMatrix::identity(m, m))
    }

    /// Scalar jet `value + slope·t_var`.
    pub fn variable(
        nvars: usize,
        order: usize,
        var: usize,
        value: Complex64,
        slope: Complex64,
    ) -> Self {
        let mut j = Self::scalar(nvars, order, value);
        if order >= 1 {
            let mut mono = vec![0u8; nvars];
            mono[var] = 1;
            let k = j.layout.index_of(&mono).expect("degree-one monomial");
            j.data[k] = slope;
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn layout(&self) -> &JetLayout {
        &self.layout
    }

    fn block(&self) -> usize {
        self.rows * self.cols
    }

    pub fn coeff_slice(&self, k: usize) -> &[Complex64] {
        let b = self.block();
        &self.data[k * b..(k + 1) * b]
    }

    pub fn coeff(&self, k: usize) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, self.coeff_slice(k))
    }

    /// Coefficient of the given monomial, i.e. `∂^α f / α!`.
    pub fn coeff_of(&self, mono: &[u8]) -> Option<DMatrix<Complex64>> {
        self.layout.index_of(mono).map(|k| self.coeff(k))
    }

    /// Full partial derivative `∂^α f`.
    pub fn derivative_value(&self, mono: &[u8]) -> Option<DMatrix<Complex64>> {
        let fact: f64 = mono
            .iter()
            .map(|&b| (1..=b as u32).map(f64::from).product::<f64>())
            .product();
        self.coeff_of(mono).map(|c| c * Complex64::new(fact, 0.0))
    }

    pub fn set_coeff(&mut self, k: usize, m: &DMatrix<Complex64>) {
        let (r, c) = (self.rows, self.cols);
        let b = r * c;
        for i in 0..r {
            for j in 0..c {
                self.data[k * b + i * c + j] = m[(i, j)];
            }
        }
    }

    pub fn value(&self) -> DMatrix<Complex64> {
        self.coeff(0)
    }

    pub fn scalar_value(&self) -> Complex64 {
        self.data[0]
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.nvars() != other.nvars() || self.order() != other.order() {
            return Err(Error::ShapeMismatch(format!(
                "jet layouts ({}, {}) vs ({}, {})",
                self.nvars(),
                self.order(),
                other.nvars(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        if (self.rows, self.cols) == (other.rows, other.cols) {
            let mut out = self.clone();
            for (a, b) in out.data.iter_mut().zip(&other.data) {
                *a += b;
            }
            return Ok(out);
        }
        // a 1×1 summand acts as a multiple of the identity
        let (s, m) = if self.is_scalar() {
            (self, other)
        } else if other.is_scalar() {
            (other, self)
        } else {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        };
        if m.rows != m.cols {
            return Err(Error::ShapeMismatch("scalar plus non-square matrix".into()));
        }
        let mut out = m.clone();
        let b = m.block();
        for k in 0..self.layout.len() {
            for i in 0..m.rows {
                out.data[k * b + i * m.cols + i] += s.data[k];
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn add_identity(&self, c: Complex64) -> Result<Self> {
        self.add(&MatrixJet::scalar(self.nvars(), self.order(), c))
    }

    /// Cauchy product; `1×1` factors broadcast as scalars.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        let (rows, inner, cols, mode) = if self.cols == other.rows {
            (self.rows, self.cols, other.cols, 0)
        } else if self.is_scalar() {
            (other.rows, 1, other.cols, 1)
        } else if other.is_scalar() {
            (self.rows, 1, self.cols, 2)
        } else {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        };
        let mut out = MatrixJet::zeros(self.nvars(), self.order(), rows, cols);
        let ob = rows * cols;
        let (ab, bb) = (self.block(), other.block());
        for (k, pairs) in self.layout.pairs.iter().enumerate() {
            let dst = &mut out.data[k * ob..(k + 1) * ob];
            for &(i, j) in pairs {
                let a = &self.data[i as usize * ab..(i as usize + 1) * ab];
                let b = &other.data[j as usize * bb..(j as usize + 1) * bb];
                match mode {
                    0 => {
                        for r in 0..rows {
                            for c in 0..cols {
                                let mut acc = ZERO;
                                for t in 0..inner {
                                    acc += a[r * inner + t] * b[t * cols + c];
                                }
                                dst[r * cols + c] += acc;
                            }
                        }
                    }
                    1 => {
                        let s = a[0];
                        for (d, v) in dst.iter_mut().zip(b) {
                            *d += s * v;
                        }
                    }
                    _ => {
                        let s = b[0];
                        for (d, v) in dst.iter_mut().zip(a) {
                            *d += v * s;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Kronecker-style lift of a scalar jet by a constant matrix.
    pub fn times_matrix(&self, m: &DMatrix<Complex64>) -> Result<Self> {
        if !self.is_scalar() {
            return Err(Error::ShapeMismatch(
                "times_matrix expects a scalar jet".into(),
            ));
        }
        let mut out = MatrixJet::zeros(self.nvars(), self.order(), m.nrows(), m.ncols());
        let b = out.block();
        for k in 0..self.layout.len() {
            let s = self.data[k];
            if s == ZERO {
                continue;
            }
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.data[k * b + i * m.ncols() + j] = s * m[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Inverse of a square jet with invertible value.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch("inverse of non-square jet".into()));
        }
        let m = self.rows;
        let c0 = self
            .value()
            .try_inverse()
            .ok_or_else(|| Error::Precondition("jet value is singular".into()))?;
        let mut out = MatrixJet::zeros(self.nvars(), self.order(), m, m);
        out.set_coeff(0, &c0);
        let b = m * m;
        let mut acc = vec![ZERO; b];
        for k in 1..self.layout.len() {
            acc.iter_mut().for_each(|z| *z = ZERO);
            for &(i, j) in &self.layout.pairs[k] {
                if i == 0 {
                    continue;
                }
                let a = &self.data[i as usize * b..(i as usize + 1) * b];
                let c = &out.data[j as usize * b..(j as usize + 1) * b];
                for r in 0..m {
                    for s in 0..m {
                        let mut v = ZERO;
                        for t in 0..m {
                            v += a[r * m + t] * c[t * m + s];
                        }
                        acc[r * m + s] += v;
                    }
                }
            }
            for r in 0..m {
                for s in 0..m {
                    let mut v = ZERO;
                    for t in 0..m {
                        v += c0[(r, t)] * acc[t * m + s];
                    }
                    out.data[k * b + r * m + s] = -v;
                }
            }
        }
        Ok(out)
    }

    /// `f ∘ self` for a scalar jet, given `coeffs[k] = f^{(k)}(v)/k!` at the value `v`.
    pub fn compose_scalar(&self, coeffs: &[Complex64]) -> Result<Self> {
        if !self.is_scalar() {
            return Err(Error::ShapeMismatch(
                "compose_scalar expects a scalar jet".into(),
            ));
        }
        let k = self.order().min(coeffs.len().saturating_sub(1));
        let mut nil = self.clone();
        nil.data[0] = ZERO;
        let mut out = MatrixJet::scalar(self.nvars(), self.order(), coeffs[k]);
        for c in coeffs[..k].iter().rev() {
            out = out.mul(&nil)?;
            out.data[0] += c;
        }
        Ok(out)
    }

    /// `self^s` for a scalar jet with nonzero value (principal branch).
    pub fn powf(&self, s: f64) -> Result<Self> {
        let v = self.scalar_value();
        if v == ZERO {
            return Err(Error::Precondition("powf of a jet with zero value".into()));
        }
        let k = self.order();
        let mut coeffs = Vec::with_capacity(k + 1);
        let mut binom = 1.0;
        for i in 0..=k {
            coeffs.push(binom * v.powf(s - i as f64));
            binom *= (s - i as f64) / (i as f64 + 1.0);
        }
        if v.im == 0.0 && v.re > 0.0 {
            coeffs.iter_mut().for_each(|c| c.im = 0.0);
        }
        self.compose_scalar(&coeffs)
    }

    pub fn exp(&self) -> Result<Self> {
        let v = self.scalar_value().exp();
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut f = 1.0;
        for i in 0..=self.order() {
            if i > 0 {
                f *= i as f64;
            }
            coeffs.push(v / f);
        }
        self.compose_scalar(&coeffs)
    }

    /// Nonnegative integer power by repeated squaring; valid at zero values.
    pub fn powi(&self, n: u32) -> Result<Self> {
        let mut result = MatrixJet::scalar(self.nvars(), self.order(), ONE);
        if !self.is_scalar() {
            let m = self.rows;
            result = MatrixJet::identity(self.nvars(), self.order(), m);
        }
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let l = layout(self.nvars(), order);
        let n = l.len() * self.block();
        Self {
            layout: l,
            rows: self.rows,
            cols: self.cols,
            data: self.data[..n].to_vec(),
        }
    }

    /// `∂_var`, returning a jet of order one lower (order 0 stays at order 0 with zero value).
    pub fn differentiate(&self, var: usize) -> Self {
        let new_order = self.order().saturating_sub(1);
        let mut out = MatrixJet::zeros(self.nvars(), new_order, self.rows, self.cols);
        if self.order() == 0 {
            return out;
        }
        let b = self.block();
        let mut up = vec![0u8; self.nvars()];
        for k in 0..out.layout.len() {
            up.copy_from_slice(out.layout.monomial(k));
            up[var] += 1;
            let src = self.layout.index_of(&up).expect("monomial within order");
            let f = up[var] as f64;
            for t in 0..b {
                out.data[k * b + t] = self.data[src * b + t] * f;
            }
        }
        out
    }

    /// Restricts to the listed variables (other variables are set to their base point),
    /// returning a jet in `keep.len()` variables in the listed order.
    pub fn restrict(&self, keep: &[usize]) -> Self {
        let mut out = MatrixJet::zeros(keep.len(), self.order(), self.rows, self.cols);
        let b = self.block();
        let mut full = vec![0u8; self.nvars()];
        for k in 0..out.layout.len() {
            full.iter_mut().for_each(|v| *v = 0);
            for (i, &v) in keep.iter().enumerate() {
                full[v] = out.layout.monomial(k)[i];
            }
            let src = self.layout.index_of(&full).expect("monomial within order");
            out.data[k * b..(k + 1) * b].copy_from_slice(&self.data[src * b..(src + 1) * b]);
        }
        out
    }

    /// Chain rule: `self` is a jet in `w` at `w0`, and `inner[i]` is a scalar jet
    /// of `w_i(u)` with value `w0_i`. Returns the jet of `self ∘ w` in `u`.
    pub fn substitute(&self, inner: &[MatrixJet]) -> Result<Self> {
        if inner.len() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                got: inner.len(),
            });
        }
        let (nu, order) = match inner.first() {
            Some(j) => (j.nvars(), j.order()),
            None => {
                return Err(Error::Precondition(
                    "substitute needs at least one variable".into(),
                ));
            }
        };
        let mut deltas = Vec::with_capacity(inner.len());
        for j in inner {
            if !j.is_scalar() || j.nvars() != nu || j.order() != order {
                return Err(Error::ShapeMismatch(
                    "inner jets must share a scalar layout".into(),
                ));
            }
            let mut d = j.clone();
            d.data[0] = ZERO;
            deltas.push(d);
        }
        let top = self.order().min(order);
        // powers[i][e] = Δw_i^e
        let mut powers: Vec<Vec<MatrixJet>> = Vec::with_capacity(deltas.len());
        for d in &deltas {
            let mut p = vec![MatrixJet::scalar(nu, order, ONE)];
            for e in 1..=top {
                let next = p[e - 1].mul(d)?;
                p.push(next);
            }
            powers.push(p);
        }
        let mut out = MatrixJet::zeros(nu, order, self.rows, self.cols);
        let b = self.block();
        for k in 0..self.layout.terms_up_to(top) {
            let c = self.coeff_slice(k);
            if c.iter().all(|z| *z == ZERO) {
                continue;
            }
            let mono = self.layout.monomial(k);
            let mut term = MatrixJet::scalar(nu, order, ONE);
            for (i, &e) in mono.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&powers[i][e as usize])?;
                }
            }
            for t in 0..out.layout.len() {
                let s = term.data[t];
                if s == ZERO {
                    continue;
                }
                for (q, cv) in c.iter().enumerate() {
                    out.data[t * b + q] += s * cv;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose_map<F: Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>>(&self, f: F) -> Self {
        let first = f(&self.coeff(0));
        let mut out = MatrixJet::zeros(self.nvars(), self.order(), first.nrows(), first.ncols());
        out.set_coeff(0, &first);
        for k in 1..self.layout.len() {
            out.set_coeff(k, &f(&self.coeff(k)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn layout_is_graded_prefix() {
        let l3 = layout(2, 3);
        let l1 = layout(2, 1);
        assert_eq!(l3.len(), 10);
        for k in 0..l1.len() {
            assert_eq!(l1.monomial(k), l3.monomial(k));
        }
        assert_eq!(layout(0, 4).len(), 1);
    }

    #[test]
    fn product_of_polynomials() {
        // (1 + x)(2 + y) = 2 + 2x + y + xy
        let x = MatrixJet::variable(2, 3, 0, c(1.0), c(1.0));
        let y = MatrixJet::variable(2, 3, 1, c(2.0), c(1.0));
        let p = x.mul(&y).unwrap();
        assert_eq!(p.coeff_of(&[0, 0]).unwrap()[(0, 0)], c(2.0));
        assert_eq!(p.coeff_of(&[1, 0]).unwrap()[(0, 0)], c(2.0));
        assert_eq!(p.coeff_of(&[1, 1]).unwrap()[(0, 0)], c(1.0));
        assert_eq!(p.coeff_of(&[2, 0]).unwrap()[(0, 0)], c(0.0));
    }

    #[test]
    fn inverse_matches_geometric_series() {
        // 1/(1 - x) = Σ x^k
        let x = MatrixJet::variable(1, 6, 0, c(0.0), c(1.0));
        let inv = x
            .scale(c(-1.0))
            .add_identity(c(1.0))
            .unwrap()
            .inverse()
            .unwrap();
        for k in 0..=6u8 {
            assert_relative_eq!(inv.coeff_of(&[k]).unwrap()[(0, 0)].re, 1.0, epsilon = 1e-14);
        }
        // matrix case: (A0 + A1 t)^{-1} times itself is the identity jet
        let a0 = DMatrix::from_row_slice(2, 2, &[c(2.0), c(1.0), c(0.0), c(3.0)]);
        let a1 =
            DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), Complex64::new(0.0, 1.0), c(-1.0)]);
        let mut a = MatrixJet::constant(1, 4, &a0);
        a.set_coeff(1, &a1);
        let prod = a.mul(&a.inverse().unwrap()).unwrap();
        assert!(prod.sub(&MatrixJet::identity(1, 4, 2)).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn powf_and_exp() {
        // sqrt(4 + t) = 2 + t/4 - t²/64 + ...
        let t = MatrixJet::variable(1, 3, 0, c(4.0), c(1.0));
        let s = t.powf(0.5).unwrap();
        assert_relative_eq!(s.coeff_of(&[1]).unwrap()[(0, 0)].re, 0.25, epsilon = 1e-15);
        assert_relative_eq!(
            s.coeff_of(&[2]).unwrap()[(0, 0)].re,
            -1.0 / 64.0,
            epsilon = 1e-15
        );
        let e = MatrixJet::variable(1, 4, 0, c(0.0), c(2.0)).exp().unwrap();
        assert_relative_eq!(
            e.derivative_value(&[4]).unwrap()[(0, 0)].re,
            16.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn differentiate_restrict_substitute() {
        // f = x² y on (x, y) = (3, 2)
        let x = MatrixJet::variable(2, 4, 0, c(3.0), c(1.0));
        let y = MatrixJet::variable(2, 4, 1, c(2.0), c(1.0));
        let f = x.powi(2).unwrap().mul(&y).unwrap();
        let fx = f.differentiate(0);
        assert_eq!(fx.value()[(0, 0)], c(12.0));
        let only_y = f.restrict(&[1]);
        assert_eq!(only_y.coeff_of(&[1]).unwrap()[(0, 0)], c(9.0));
        // substitute x = u², y = u at u = 1: f = u^5, derivative 5
        let u = MatrixJet::variable(1, 4, 0, c(1.0), c(1.0));
        let xs = u.powi(2).unwrap();
        let x1 = MatrixJet::variable(2, 4, 0, c(1.0), c(1.0));
        let y1 = MatrixJet::variable(2, 4, 1, c(1.0), c(1.0));
        let g = x1.powi(2).unwrap().mul(&y1).unwrap();
        let h = g.substitute(&[xs, u.clone()]).unwrap();
        assert_relative_eq!(
            h.derivative_value(&[1]).unwrap()[(0, 0)].re,
            5.0,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            h.derivative_value(&[3]).unwrap()[(0, 0)].re,
            60.0,
            epsilon = 1e-12
        );
    }
}
