use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::GridOperator;
use crate::error::{Error, Result};
use crate::rbound::spectral_norm;

/// Condition number above which a grid operator counts as singular.
pub const GRID_MAX_CONDITION: f64 = 1e12;

fn condition(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / lo
    }
}

impl GridOperator {
    /// Per-slot blocks of a translation-invariant operator.
    pub fn slot_blocks(&self) -> Option<Vec<DMatrix<Complex64>>> {
        match self {
            GridOperator::Scalar { m, values, .. } => Some(
                values
                    .iter()
                    .map(|&v| DMatrix::identity(*m, *m) * v)
                    .collect(),
            ),
            GridOperator::Multiplier { blocks, .. } => Some(blocks.clone()),
            GridOperator::Chain(ops) if ops.iter().all(|o| o.is_translation_invariant()) => {
                let mut acc = ops[0].slot_blocks()?;
                for op in &ops[1..] {
                    let b = op.slot_blocks()?;
                    acc = acc.iter().zip(&b).map(|(x, y)| y * x).collect();
                }
                Some(acc)
            }
            _ => None,
        }
    }

    fn from_blocks_like(&self, blocks: Vec<DMatrix<Complex64>>) -> GridOperator {
        GridOperator::Multiplier {
            grid: self.grid().clone(),
            blocks,
        }
    }

    /// `self ∘ rhs`: `rhs` acts first.
    pub fn compose(&self, rhs: &GridOperator) -> GridOperator {
        if let (
            GridOperator::Scalar { grid, m, values: a },
            GridOperator::Scalar { values: b, .. },
        ) = (self, rhs)
        {
            return GridOperator::Scalar {
                grid: grid.clone(),
                m: *m,
                values: a.iter().zip(b).map(|(x, y)| x * y).collect(),
            };
        }
        if let (Some(a), Some(b)) = (self.slot_blocks(), rhs.slot_blocks()) {
            return self.from_blocks_like(a.iter().zip(&b).map(|(x, y)| x * y).collect());
        }
        let (mo, _) = self.fiber_dims();
        let (_, mi) = rhs.fiber_dims();
        GridOperator::Dense {
            grid: self.grid().clone(),
            m_in: mi,
            m_out: mo,
            matrix: self.to_dense() * rhs.to_dense(),
        }
    }

    /// `self + c·rhs`.
    pub fn add_scaled(&self, rhs: &GridOperator, c: Complex64) -> GridOperator {
        if let (
            GridOperator::Scalar { grid, m, values: a },
            GridOperator::Scalar { values: b, .. },
        ) = (self, rhs)
        {
            return GridOperator::Scalar {
                grid: grid.clone(),
                m: *m,
                values: a.iter().zip(b).map(|(x, y)| x + c * y).collect(),
            };
        }
        if let (Some(a), Some(b)) = (self.slot_blocks(), rhs.slot_blocks()) {
            return self.from_blocks_like(a.iter().zip(&b).map(|(x, y)| x + y * c).collect());
        }
        let (mo, mi) = self.fiber_dims();
        GridOperator::Dense {
            grid: self.grid().clone(),
            m_in: mi,
            m_out: mo,
            matrix: self.to_dense() + rhs.to_dense() * c,
        }
    }

    /// `self + c·I`.
    pub fn shifted(&self, c: Complex64) -> GridOperator {
        let (mo, mi) = self.fiber_dims();
        assert_eq!(mo, mi, "shift of a non-square operator");
        self.add_scaled(&GridOperator::identity(self.grid().clone(), mo), c)
    }

    /// Inverse, or `None` when some block (or the dense matrix) has condition above `max_condition`.
    pub fn inverse(&self, max_condition: f64) -> Option<GridOperator> {
        if let GridOperator::Scalar { grid, m, values } = self {
            let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if values
                .iter()
                .any(|v| !(v.norm() * max_condition > scale) || v.norm() == 0.0)
            {
                return None;
            }
            return Some(GridOperator::Scalar {
                grid: grid.clone(),
                m: *m,
                values: values.iter().map(|v| v.inv()).collect(),
            });
        }
        if let Some(blocks) = self.slot_blocks() {
            let scale = blocks.iter().map(spectral_norm).fold(0.0, f64::max);
            let inv: Option<Vec<DMatrix<Complex64>>> = blocks
                .par_iter()
                .map(|b| {
                    let lo = b.clone().svd(false, false).singular_values.min();
                    if lo == 0.0 || scale / lo > max_condition {
                        None
                    } else {
                        b.clone().try_inverse()
                    }
                })
                .collect();
            return inv.map(|b| self.from_blocks_like(b));
        }
        let d = self.to_dense();
        if condition(&d) > max_condition {
            return None;
        }
        let (mo, mi) = self.fiber_dims();
        d.try_inverse().map(|matrix| GridOperator::Dense {
            grid: self.grid().clone(),
            m_in: mo,
            m_out: mi,
            matrix,
        })
    }

    /// Eigenvalues of a square operator, sorted by real part then imaginary part.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let mut out = match self.slot_blocks() {
            Some(blocks) => {
                let per: Vec<Option<Vec<Complex64>>> =
                    blocks.par_iter().map(block_eigenvalues).collect();
                per.into_iter()
                    .collect::<Option<Vec<_>>>()
                    .ok_or(Error::EigenFailure)?
                    .concat()
            }
            None => block_eigenvalues(&self.to_dense()).ok_or(Error::EigenFailure)?,
        };
        out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Ok(out)
    }

    /// Operator norm of `self - rhs` on `L_2`.
    pub fn distance(&self, rhs: &GridOperator) -> f64 {
        self.add_scaled(rhs, Complex64::new(-1.0, 0.0)).l2_norm()
    }
}

pub(crate) fn block_eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Some(vec![m[(0, 0)]]);
    }
    let schur = m.clone().try_schur(1e-14, 10_000)?;
    let (_, t) = schur.unpack();
    Some((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::GridSpec;

    #[test]
    fn block_algebra_matches_dense() {
        let g = GridSpec::new(1, 2.0, 8).unwrap();
        let blocks: Vec<DMatrix<Complex64>> = (0..8)
            .map(|k| {
                DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        Complex64::new(2.0 + k as f64, 0.0),
                        Complex64::new(0.0, 1.0),
                        Complex64::new(0.5, 0.0),
                        Complex64::new(-1.0, k as f64),
                    ],
                )
            })
            .collect();
        let a = GridOperator::Multiplier {
            grid: g.clone(),
            blocks,
        };
        let inv = a.inverse(GRID_MAX_CONDITION).unwrap();
        assert!(
            a.compose(&inv)
                .distance(&GridOperator::identity(g.clone(), 2))
                < 1e-12
        );
        let dense = GridOperator::Dense {
            grid: g.clone(),
            m_in: 2,
            m_out: 2,
            matrix: a.to_dense(),
        };
        let dinv = dense.inverse(GRID_MAX_CONDITION).unwrap();
        assert!((dinv.to_dense() - inv.to_dense()).norm() < 1e-10);
        let mut e1 = a.eigenvalues().unwrap();
        let mut e2 = dense.eigenvalues().unwrap();
        e1.truncate(16);
        e2.truncate(16);
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).norm() < 1e-9, "{x} vs {y}");
        }
        let zero = GridOperator::Scalar {
            grid: g.clone(),
            m: 1,
            values: vec![Complex64::new(0.0, 0.0); 8],
        };
        assert!(zero.inverse(GRID_MAX_CONDITION).is_none());
    }
}
