//! Torus realizations of `op(a)(λ)`, discrete Sobolev norms and multiplier experiments.

mod algebra;
mod composition;
mod io;
mod multiplier;
mod sobolev;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::aniso::GridSpec;
use crate::error::{Error, Result};
use crate::rbound::{spectral_norm, BanachSpaceSpec};
use crate::symbol::{MatrixSymbol, SymbolPoint};

pub(crate) use algebra::block_eigenvalues;
pub use algebra::GRID_MAX_CONDITION;
pub use composition::{composition_defect, CompositionDefectReport, DefectSample, DEFECT_FLOOR};
pub use io::{
    read_binary, read_binary_from, read_csv, read_csv_from, write_binary, write_binary_to,
    write_csv, write_csv_to,
};
pub use multiplier::{
    hilbert_multiplier, hilbert_transform_check, lambda_derivative_discrepancy,
    multiplier_rbound_harness, op_iteration_rbound, random_smooth_function, HarnessReport,
    HilbertReport, OpIterationReport,
};
pub use sobolev::{
    bracket_multiplier, derivative_norm_equivalence, equivalent_norm_multiplier, sobolev_norm,
    EquivalenceReport, EquivalentNormReport,
};

/// Default relative threshold for the spectral tail of an input function.
pub const TAIL_TOL: f64 = 1e-8;

/// `m`-vector valued samples on a torus grid, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub fiber: BanachSpaceSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, fiber: BanachSpaceSpec, values: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        fiber.validate()?;
        let expected = grid.node_count() * fiber.dim;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "non-finite grid function value".into(),
            ));
        }
        Ok(Self {
            grid,
            fiber,
            values,
        })
    }

    pub fn zeros(grid: GridSpec, fiber: BanachSpaceSpec) -> Self {
        let n = grid.node_count() * fiber.dim;
        Self {
            grid,
            fiber,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<Complex64>>(
        grid: GridSpec,
        fiber: BanachSpaceSpec,
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.node_count() * fiber.dim);
        for j in 0..grid.node_count() {
            let v = f(&grid.node(j));
            if v.len() != fiber.dim {
                return Err(Error::DimensionMismatch {
                    expected: fiber.dim,
                    got: v.len(),
                });
            }
            values.extend(v);
        }
        Self::new(grid, fiber, values)
    }

    /// `e^{iκ·x} v` for the lattice frequency with signed indices `k`.
    pub fn mode(
        grid: GridSpec,
        fiber: BanachSpaceSpec,
        k: &[i64],
        v: &[Complex64],
    ) -> Result<Self> {
        if k.len() != grid.dim {
            return Err(Error::DimensionMismatch {
                expected: grid.dim,
                got: k.len(),
            });
        }
        let step = grid.frequency_step();
        let kappa: Vec<f64> = k.iter().map(|&q| q as f64 * step).collect();
        Self::from_fn(grid, fiber, |x| {
            let phase: f64 = x.iter().zip(&kappa).map(|(a, b)| a * b).sum();
            let e = Complex64::from_polar(1.0, phase);
            v.iter().map(|c| c * e).collect()
        })
    }

    pub fn m(&self) -> usize {
        self.fiber.dim
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn node_value(&self, j: usize) -> &[Complex64] {
        let m = self.m();
        &self.values[j * m..(j + 1) * m]
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.fiber.clone(), values)
    }

    /// Discrete `L_p(grid, X)` norm with cell weight `(2B/M)^d`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let w = self.grid.cell_volume();
        let m = self.m();
        let s: f64 = self
            .values
            .chunks(m)
            .map(|c| self.fiber.norm(c).powf(p))
            .sum();
        (w * s).powf(1.0 / p)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            ..self.clone()
        })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|a| a * c).collect(),
            ..self.clone()
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.fiber.dim != other.fiber.dim {
            return Err(Error::ShapeMismatch(
                "grid functions on different grids or fibers".into(),
            ));
        }
        Ok(())
    }

    /// Unnormalized DFT of each component, same layout.
    pub fn spectrum(&self) -> Vec<Complex64> {
        transform(&self.grid, self.m(), &self.values, false)
    }

    pub fn from_spectrum(
        grid: GridSpec,
        fiber: BanachSpaceSpec,
        spec: &[Complex64],
    ) -> Result<Self> {
        let m = fiber.dim;
        let values = transform(&grid, m, spec, true);
        Self::new(grid, fiber, values)
    }

    /// Largest `|û|` on the outer quarter of the lattice relative to the peak.
    pub fn coverage_ratio(&self) -> f64 {
        let spec = self.spectrum();
        let m = self.m();
        let g = &self.grid;
        let band = (3 * g.points / 8) as i64;
        let mut peak: f64 = 0.0;
        let mut edge: f64 = 0.0;
        for (k, c) in spec.chunks(m).enumerate() {
            let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            peak = peak.max(n);
            if g.unravel(k)
                .into_iter()
                .any(|q| g.signed_index(q).abs() >= band)
            {
                edge = edge.max(n);
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }
}

/// Axis-wise FFT of `m` interleaved components; the inverse is normalized by `1/M^d`.
pub(crate) fn transform(
    grid: &GridSpec,
    m: usize,
    data: &[Complex64],
    inverse: bool,
) -> Vec<Complex64> {
    let n = grid.node_count();
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    let mut planner = FftPlanner::new();
    let mp = grid.points;
    let fft = if inverse {
        planner.plan_fft_inverse(mp)
    } else {
        planner.plan_fft_forward(mp)
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut line = vec![Complex64::new(0.0, 0.0); mp];
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for c in 0..m {
        for j in 0..n {
            buf[j] = data[j * m + c];
        }
        for a in 0..grid.dim {
            let stride = mp.pow((grid.dim - 1 - a) as u32);
            let outer = n / (stride * mp);
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * mp * stride + i;
                    for k in 0..mp {
                        line[k] = buf[base + k * stride];
                    }
                    fft.process(&mut line);
                    for k in 0..mp {
                        buf[base + k * stride] = line[k];
                    }
                }
            }
        }
        for j in 0..n {
            out[j * m + c] = buf[j] * scale;
        }
    }
    out
}

/// Linear operator on grid functions.
#[derive(Debug, Clone)]
pub enum GridOperator {
    /// Scalar multiplier `c(κ)·I_m`, one value per lattice slot.
    Scalar {
        grid: GridSpec,
        m: usize,
        values: Vec<Complex64>,
    },
    /// Matrix multiplier, one `m_out × m_in` block per lattice slot.
    Multiplier {
        grid: GridSpec,
        blocks: Vec<DMatrix<Complex64>>,
    },
    /// Node-major dense matrix of size `N·m_out × N·m_in`.
    Dense {
        grid: GridSpec,
        m_in: usize,
        m_out: usize,
        matrix: DMatrix<Complex64>,
    },
    /// Applied left to right: the first operator acts first.
    Chain(Vec<GridOperator>),
}

impl GridOperator {
    pub fn identity(grid: GridSpec, m: usize) -> Self {
        let n = grid.node_count();
        GridOperator::Scalar {
            grid,
            m,
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn scalar_from_fn<F: Fn(&[f64]) -> Complex64>(grid: GridSpec, m: usize, f: F) -> Self {
        let values = (0..grid.node_count())
            .map(|k| {
                grid.lattice_variants(k)
                    .into_iter()
                    .map(|(xi, w)| f(&xi) * w)
                    .sum()
            })
            .collect();
        GridOperator::Scalar { grid, m, values }
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            GridOperator::Scalar { grid, .. }
            | GridOperator::Multiplier { grid, .. }
            | GridOperator::Dense { grid, .. } => grid,
            GridOperator::Chain(ops) => ops[0].grid(),
        }
    }

    /// `(m_out, m_in)`.
    pub fn fiber_dims(&self) -> (usize, usize) {
        match self {
            GridOperator::Scalar { m, .. } => (*m, *m),
            GridOperator::Multiplier { blocks, .. } => blocks[0].shape(),
            GridOperator::Dense { m_in, m_out, .. } => (*m_out, *m_in),
            GridOperator::Chain(ops) => (ops[ops.len() - 1].fiber_dims().0, ops[0].fiber_dims().1),
        }
    }

    pub fn is_translation_invariant(&self) -> bool {
        match self {
            GridOperator::Scalar { .. } | GridOperator::Multiplier { .. } => true,
            GridOperator::Dense { .. } => false,
            GridOperator::Chain(ops) => ops.iter().all(|o| o.is_translation_invariant()),
        }
    }

    /// Applies the operator; the output fiber keeps the input norm kind when dimensions agree.
    pub fn apply_to(&self, u: &GridFunction, out_fiber: &BanachSpaceSpec) -> Result<GridFunction> {
        let (mo, mi) = self.fiber_dims();
        if u.m() != mi || out_fiber.dim != mo {
            return Err(Error::ShapeMismatch(format!(
                "operator {mo}x{mi} on fiber {} -> {}",
                u.m(),
                out_fiber.dim
            )));
        }
        if *self.grid() != u.grid {
            return Err(Error::ShapeMismatch(
                "operator and function on different grids".into(),
            ));
        }
        let values = match self {
            GridOperator::Scalar { values, .. } => {
                let mut s = u.spectrum();
                for (k, c) in s.chunks_mut(mi).enumerate() {
                    c.iter_mut().for_each(|z| *z *= values[k]);
                }
                transform(&u.grid, mi, &s, true)
            }
            GridOperator::Multiplier { blocks, .. } => {
                let s = u.spectrum();
                let mut out = Vec::with_capacity(blocks.len() * mo);
                for (k, c) in s.chunks(mi).enumerate() {
                    let v = &blocks[k] * DVector::from_column_slice(c);
                    out.extend(v.iter());
                }
                transform(&u.grid, mo, &out, true)
            }
            GridOperator::Dense { matrix, .. } => {
                let v = matrix * DVector::from_column_slice(u.values());
                v.as_slice().to_vec()
            }
            GridOperator::Chain(ops) => {
                let mut cur = u.clone();
                for (i, op) in ops.iter().enumerate() {
                    let fib = if i + 1 == ops.len() {
                        out_fiber.clone()
                    } else {
                        fiber_like(&cur.fiber, op.fiber_dims().0)
                    };
                    cur = op.apply_to(&cur, &fib)?;
                }
                return Ok(cur);
            }
        };
        GridFunction::new(u.grid.clone(), out_fiber.clone(), values)
    }

    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let fib = fiber_like(&u.fiber, self.fiber_dims().0);
        self.apply_to(u, &fib)
    }

    /// Node-major dense matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match self {
            GridOperator::Dense { matrix, .. } => matrix.clone(),
            GridOperator::Scalar { grid, m, values } => {
                let blocks: Vec<DMatrix<Complex64>> = values
                    .iter()
                    .map(|&v| DMatrix::identity(*m, *m) * v)
                    .collect();
                dense_from_blocks(grid, &[blocks])
            }
            GridOperator::Multiplier { grid, blocks } => {
                dense_from_blocks(grid, std::slice::from_ref(blocks))
            }
            GridOperator::Chain(ops) => {
                let mut acc = ops[0].to_dense();
                for op in &ops[1..] {
                    acc = op.to_dense() * acc;
                }
                acc
            }
        }
    }

    /// Operator norm on `L_2(grid, C^m)` with the Euclidean fiber norm.
    pub fn l2_norm(&self) -> f64 {
        match self {
            GridOperator::Scalar { values, .. } => {
                values.iter().map(|v| v.norm()).fold(0.0, f64::max)
            }
            GridOperator::Multiplier { blocks, .. } => blocks
                .par_iter()
                .map(spectral_norm)
                .reduce(|| 0.0, f64::max),
            _ => spectral_norm(&self.to_dense()),
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        match self {
            GridOperator::Scalar { grid, m, values } => GridOperator::Scalar {
                grid: grid.clone(),
                m: *m,
                values: values.iter().map(|v| v * c).collect(),
            },
            GridOperator::Multiplier { grid, blocks } => GridOperator::Multiplier {
                grid: grid.clone(),
                blocks: blocks.iter().map(|b| b * c).collect(),
            },
            GridOperator::Dense {
                grid,
                m_in,
                m_out,
                matrix,
            } => GridOperator::Dense {
                grid: grid.clone(),
                m_in: *m_in,
                m_out: *m_out,
                matrix: matrix * c,
            },
            GridOperator::Chain(ops) => {
                let mut ops = ops.clone();
                let last = ops.len() - 1;
                ops[last] = ops[last].scaled(c);
                GridOperator::Chain(ops)
            }
        }
    }
}

fn fiber_like(fiber: &BanachSpaceSpec, dim: usize) -> BanachSpaceSpec {
    if dim == fiber.dim {
        fiber.clone()
    } else {
        BanachSpaceSpec::euclidean(dim)
    }
}

/// Dense kernels `K[j, n] = c_j[j - n]` from per-node slot blocks (a single
/// entry in `per_node` means translation invariance).
fn dense_from_blocks(grid: &GridSpec, per_node: &[Vec<DMatrix<Complex64>>]) -> DMatrix<Complex64> {
    let n = grid.node_count();
    let (mo, mi) = per_node[0][0].shape();
    let conv: Vec<Vec<Complex64>> = per_node
        .par_iter()
        .map(|blocks| {
            // interleave the block entries as mo*mi components and transform back
            let mut data = Vec::with_capacity(n * mo * mi);
            for b in blocks {
                for p in 0..mo {
                    for q in 0..mi {
                        data.push(b[(p, q)]);
                    }
                }
            }
            transform(grid, mo * mi, &data, true)
        })
        .collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let c = if conv.len() == 1 { &conv[0] } else { &conv[j] };
            let jx = grid.unravel(j);
            let mut row = vec![Complex64::new(0.0, 0.0); mo * n * mi];
            let mut diff = vec![0usize; grid.dim];
            for nn in 0..n {
                let nx = grid.unravel(nn);
                for a in 0..grid.dim {
                    diff[a] = (jx[a] + grid.points - nx[a]) % grid.points;
                }
                let r = grid.ravel(&diff);
                for p in 0..mo {
                    for q in 0..mi {
                        row[p * n * mi + nn * mi + q] = c[r * mo * mi + p * mi + q];
                    }
                }
            }
            row
        })
        .collect();
    let mut m = DMatrix::zeros(n * mo, n * mi);
    for (j, row) in rows.into_iter().enumerate() {
        for p in 0..mo {
            for col in 0..n * mi {
                m[(j * mo + p, col)] = row[p * n * mi + col];
            }
        }
    }
    m
}

/// Averages the symbol over the Nyquist variants of every lattice slot.
fn slot_values(
    a: &MatrixSymbol,
    x: &[f64],
    lambda: Complex64,
    grid: &GridSpec,
) -> Result<Vec<DMatrix<Complex64>>> {
    let (r, c) = a.shape();
    (0..grid.node_count())
        .map(|k| {
            let mut acc = DMatrix::zeros(r, c);
            for (xi, w) in grid.lattice_variants(k) {
                let pt = SymbolPoint::new(x.to_vec(), xi, lambda);
                acc += a.eval(&pt)? * Complex64::new(w, 0.0);
            }
            Ok(acc)
        })
        .collect()
}

/// `op(a)(λ)` on the grid: a multiplier when `a` does not depend on `x`, the
/// dense kernel sum otherwise.
pub fn realize(a: &MatrixSymbol, lambda: Complex64, grid: &GridSpec) -> Result<GridOperator> {
    grid.validate()?;
    if a.space.xi_dim() != grid.dim || a.space.x_dim != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: a.space.xi_dim(),
        });
    }
    if !a.depends_on_x() {
        let blocks = slot_values(a, &vec![0.0; grid.dim], lambda, grid)?;
        if a.shape().0 == a.shape().1
            && blocks.iter().all(|b| {
                let d = b[(0, 0)];
                (0..b.nrows()).all(|i| {
                    (0..b.ncols())
                        .all(|j| b[(i, j)] == if i == j { d } else { Complex64::new(0.0, 0.0) })
                })
            })
        {
            let m = a.shape().0;
            return Ok(GridOperator::Scalar {
                grid: grid.clone(),
                m,
                values: blocks.iter().map(|b| b[(0, 0)]).collect(),
            });
        }
        return Ok(GridOperator::Multiplier {
            grid: grid.clone(),
            blocks,
        });
    }
    let per_node: Vec<Result<Vec<DMatrix<Complex64>>>> = (0..grid.node_count())
        .into_par_iter()
        .map(|j| slot_values(a, &grid.node(j), lambda, grid))
        .collect();
    let per_node = per_node.into_iter().collect::<Result<Vec<_>>>()?;
    let (mo, mi) = a.shape();
    let matrix = dense_from_blocks(grid, &per_node);
    Ok(GridOperator::Dense {
        grid: grid.clone(),
        m_in: mi,
        m_out: mo,
        matrix,
    })
}

/// `op(a)(λ)u`, refusing inputs whose spectrum is not settled inside the lattice.
pub fn op_apply(
    a: &MatrixSymbol,
    lambda: Complex64,
    u: &GridFunction,
    tail_tol: f64,
) -> Result<GridFunction> {
    let ratio = u.coverage_ratio();
    if ratio > tail_tol {
        return Err(Error::Coverage {
            ratio,
            tol: tail_tol,
        });
    }
    realize(a, lambda, &u.grid)?.apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::AnisotropyVector;
    use crate::symbol::{PolyTerm, Polynomial, SymbolSpace, XProfile};
    use std::sync::Arc;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn grid1(m: usize) -> GridSpec {
        GridSpec::new(1, 4.0, m).unwrap()
    }

    fn poly1(terms: Vec<(f64, u32, u32, XProfile)>, with_lambda: bool) -> MatrixSymbol {
        let space = if with_lambda {
            SymbolSpace::with_lambda(AnisotropyVector::isotropic(1), 2).unwrap()
        } else {
            SymbolSpace::xi_only(AnisotropyVector::isotropic(1))
        };
        let ts = terms
            .into_iter()
            .map(|(v, a, k, p)| PolyTerm::new(DMatrix::from_element(1, 1, c(v)), vec![a], k, p))
            .collect();
        MatrixSymbol::new(
            space,
            0.0,
            Arc::new(Polynomial::new(ts, (1, 1), 1).unwrap()),
        )
    }

    #[test]
    fn fft_roundtrip_2d() {
        let g = GridSpec::new(2, 3.0, 8).unwrap();
        let u = GridFunction::from_fn(g.clone(), BanachSpaceSpec::euclidean(2), |x| {
            vec![c(x[0] * x[1]), Complex64::new(x[0].sin(), x[1])]
        })
        .unwrap();
        let back = GridFunction::from_spectrum(g, u.fiber.clone(), &u.spectrum()).unwrap();
        assert!(u.sub(&back).unwrap().lp_norm(2.0) < 1e-12);
    }

    #[test]
    fn single_mode_eigenfunctions() {
        let g = grid1(32);
        let fib = BanachSpaceSpec::euclidean(1);
        let u = GridFunction::mode(g.clone(), fib, &[3], &[c(1.0)]).unwrap();
        let kappa = 3.0 * g.frequency_step();
        let ixi = MatrixSymbol::new(
            SymbolSpace::xi_only(AnisotropyVector::isotropic(1)),
            1.0,
            Arc::new(
                Polynomial::new(
                    vec![PolyTerm::new(
                        DMatrix::from_element(1, 1, Complex64::new(0.0, 1.0)),
                        vec![1],
                        0,
                        XProfile::default(),
                    )],
                    (1, 1),
                    1,
                )
                .unwrap(),
            ),
        );
        let v = realize(&ixi, c(0.0), &g).unwrap().apply(&u).unwrap();
        let expected = u.scale(Complex64::new(0.0, kappa));
        assert!(v.sub(&expected).unwrap().lp_norm(2.0) < 1e-12);

        let heat = poly1(
            vec![
                (-1.0, 2, 0, XProfile::default()),
                (-1.0, 0, 1, XProfile::default()),
            ],
            true,
        );
        let inv = MatrixSymbol::new(
            heat.space.clone(),
            -2.0,
            Arc::new(crate::symbol::Inverse::new(heat.kernel.clone())),
        );
        let w = realize(&inv, c(1.0), &g).unwrap().apply(&u).unwrap();
        let expected = u.scale(c(1.0 / (-kappa * kappa - 1.0)));
        assert!(w.sub(&expected).unwrap().lp_norm(2.0) < 1e-12);

        let id = MatrixSymbol::identity(heat.space.clone(), 1);
        assert!(
            realize(&id, c(0.0), &g)
                .unwrap()
                .apply(&u)
                .unwrap()
                .sub(&u)
                .unwrap()
                .lp_norm(2.0)
                < 1e-12
        );
    }

    #[test]
    fn dense_matches_multiplier_for_x_independent_symbols() {
        let g = grid1(16);
        let prof = XProfile::RadialSettling {
            center: 2.0,
            limit: 1.0,
            width: 1.0,
        };
        let a = poly1(
            vec![(1.0, 2, 0, XProfile::default()), (1.0, 0, 0, prof)],
            false,
        );
        let dense = realize(&a, c(0.0), &g).unwrap();
        assert!(!dense.is_translation_invariant());
        // a(x, ξ) = ξ² + φ(x): the zeroth-order part acts by multiplication
        let u = GridFunction::from_fn(g.clone(), BanachSpaceSpec::euclidean(1), |x| {
            vec![c((-x[0] * x[0]).exp())]
        })
        .unwrap();
        let v = dense.apply(&u).unwrap();
        let lap = poly1(vec![(1.0, 2, 0, XProfile::default())], false);
        let lv = realize(&lap, c(0.0), &g).unwrap().apply(&u).unwrap();
        let mult = GridFunction::from_fn(g.clone(), BanachSpaceSpec::euclidean(1), |x| {
            vec![c((-x[0] * x[0]).exp() * (1.0 + (-x[0] * x[0]).exp()))]
        })
        .unwrap();
        assert!(v.sub(&lv.add(&mult).unwrap()).unwrap().lp_norm(2.0) < 1e-10);
        let md = realize(&lap, c(0.0), &g).unwrap().to_dense();
        let direct = md * DVector::from_column_slice(u.values());
        assert!((direct - DVector::from_column_slice(lv.values())).norm() < 1e-10);
    }

    #[test]
    fn coverage_rejects_rough_input() {
        let g = grid1(64);
        let fib = BanachSpaceSpec::euclidean(1);
        let rough = GridFunction::mode(g.clone(), fib.clone(), &[31], &[c(1.0)]).unwrap();
        let id = MatrixSymbol::identity(SymbolSpace::xi_only(AnisotropyVector::isotropic(1)), 1);
        assert!(matches!(
            op_apply(&id, c(0.0), &rough, TAIL_TOL),
            Err(Error::Coverage { .. })
        ));
        let smooth =
            GridFunction::from_fn(g, fib, |x| vec![c((-2.0 * x[0] * x[0]).exp())]).unwrap();
        assert!(op_apply(&id, c(0.0), &smooth, TAIL_TOL).is_ok());
    }
}
