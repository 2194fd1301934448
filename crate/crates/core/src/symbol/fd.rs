use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::excision::Weight;
use super::{SymbolKernel, SymbolPoint, SymbolSpace, Var};
use crate::error::{Error, Result};
use crate::jet::{layout, MatrixJet};

/// Largest derivative order per axis available by finite differences.
pub const FD_ORDER_CAP: usize = 4;

const BASE_STEP: f64 = 1e-2;

pub type SymbolFn = Arc<dyn Fn(&SymbolPoint) -> DMatrix<Complex64> + Send + Sync>;

/// Symbol given by an evaluator only; derivatives come from Richardson
/// extrapolated central differences with steps `h·⟨v⟩_ℓ^{ℓ_j}`.
#[derive(Clone)]
pub struct ClosureSymbol {
    f: SymbolFn,
    shape: (usize, usize),
    weight: Weight,
    x_dependent: bool,
    step: f64,
}

impl fmt::Debug for ClosureSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureSymbol")
            .field("shape", &self.shape)
            .field("step", &self.step)
            .finish()
    }
}

// (offset, weight) pairs of second-order central stencils
fn stencil(k: usize) -> &'static [(f64, f64)] {
    match k {
        0 => &[(0.0, 1.0)],
        1 => &[(-1.0, -0.5), (1.0, 0.5)],
        2 => &[(-1.0, 1.0), (0.0, -2.0), (1.0, 1.0)],
        3 => &[(-2.0, -0.5), (-1.0, 1.0), (1.0, -1.0), (2.0, 0.5)],
        4 => &[
            (-2.0, 1.0),
            (-1.0, -4.0),
            (0.0, 6.0),
            (1.0, -4.0),
            (2.0, 1.0),
        ],
        _ => unreachable!("order capped"),
    }
}

impl ClosureSymbol {
    pub fn new(space: &SymbolSpace, shape: (usize, usize), x_dependent: bool, f: SymbolFn) -> Self {
        Self {
            f,
            shape,
            weight: Weight::new(space, true),
            x_dependent,
            step: BASE_STEP,
        }
    }

    pub fn with_step(mut self, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step {h} outside (0, 1)"
            )));
        }
        self.step = h;
        Ok(self)
    }

    fn axis_step(&self, pt: &SymbolPoint, v: Var) -> Result<f64> {
        let h = match v {
            Var::X(_) => self.step * (1.0 + pt.x.iter().map(|a| a * a).sum::<f64>()).sqrt(),
            _ => {
                let j = self.weight.vars.iter().position(|&u| u == v);
                match j {
                    Some(j) => {
                        self.step
                            * self
                                .weight
                                .bracket(pt)
                                .powi(self.weight.ell.entry(j) as i32)
                    }
                    None => self.step,
                }
            }
        };
        let scale = pt.coordinate(v).abs().max(1.0);
        if !(h.is_finite() && h > scale * 1e-13) {
            return Err(Error::StepUnderflow { scale: h });
        }
        Ok(h)
    }

    fn mixed(&self, pt: &SymbolPoint, axes: &[(Var, usize, f64)]) -> DMatrix<Complex64> {
        let mut acc = DMatrix::zeros(self.shape.0, self.shape.1);
        let mut idx = vec![0usize; axes.len()];
        loop {
            let mut p = pt.clone();
            let mut w = 1.0;
            for (a, &(v, k, h)) in axes.iter().enumerate() {
                let (off, c) = stencil(k)[idx[a]];
                p = p.shifted(v, off * h);
                w *= c / h.powi(k as i32);
            }
            acc += (self.f)(&p) * Complex64::new(w, 0.0);
            let mut a = 0;
            loop {
                if a == axes.len() {
                    return acc;
                }
                idx[a] += 1;
                if idx[a] < stencil(axes[a].1).len() {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    }

    /// `∂^mono f(pt)` for a monomial over `vars`.
    pub fn derivative(
        &self,
        pt: &SymbolPoint,
        vars: &[Var],
        mono: &[u8],
    ) -> Result<DMatrix<Complex64>> {
        let mut axes = Vec::new();
        for (&v, &k) in vars.iter().zip(mono) {
            if k == 0 {
                continue;
            }
            if k as usize > FD_ORDER_CAP {
                return Err(Error::DerivativeUnavailable {
                    order: k as usize,
                    cap: FD_ORDER_CAP,
                });
            }
            axes.push((v, k as usize, self.axis_step(pt, v)?));
        }
        if axes.is_empty() {
            return Ok((self.f)(pt));
        }
        let coarse = self.mixed(pt, &axes);
        let half: Vec<(Var, usize, f64)> = axes.iter().map(|&(v, k, h)| (v, k, h / 2.0)).collect();
        let fine = self.mixed(pt, &half);
        Ok((fine * Complex64::new(4.0, 0.0) - coarse) / Complex64::new(3.0, 0.0))
    }
}

impl SymbolKernel for ClosureSymbol {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn jet(&self, pt: &SymbolPoint, vars: &[Var], order: usize) -> Result<MatrixJet> {
        if order > FD_ORDER_CAP {
            return Err(Error::DerivativeUnavailable {
                order,
                cap: FD_ORDER_CAP,
            });
        }
        let l = layout(vars.len(), order);
        let mut out = MatrixJet::zeros(vars.len(), order, self.shape.0, self.shape.1);
        for k in 0..l.len() {
            let mono = l.monomial(k);
            let relevant = vars.iter().zip(mono).all(|(&v, &e)| {
                e == 0
                    || match v {
                        Var::X(_) => self.x_dependent,
                        _ => true,
                    }
            });
            if !relevant {
                continue;
            }
            let fact: f64 = mono
                .iter()
                .map(|&e| (1..=e as u32).product::<u32>() as f64)
                .product();
            let d = self.derivative(pt, vars, mono)?;
            out.set_coeff(k, &(d / Complex64::new(fact, 0.0)));
        }
        Ok(out)
    }

    fn depends_on_x(&self) -> bool {
        self.x_dependent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aniso::AnisotropyVector;
    use approx::assert_relative_eq;

    fn sqrt_symbol() -> ClosureSymbol {
        let space = SymbolSpace::xi_only(AnisotropyVector::isotropic(1));
        ClosureSymbol::new(
            &space,
            (1, 1),
            false,
            Arc::new(|p: &SymbolPoint| {
                DMatrix::from_element(1, 1, Complex64::new((1.0 + p.xi[0] * p.xi[0]).sqrt(), 0.0))
            }),
        )
    }

    #[test]
    fn derivatives_of_bracket() {
        let s = sqrt_symbol();
        for xi in [0.0, 0.7, 5.0, 300.0] {
            let pt = SymbolPoint::new(vec![0.0], vec![xi], Complex64::new(0.0, 0.0));
            let j = s.jet(&pt, &[Var::Xi(0)], 3).unwrap();
            let b = (1.0 + xi * xi).sqrt();
            let d1 = xi / b;
            let d2 = 1.0 / (b * b * b);
            let d3 = -3.0 * xi / b.powi(5);
            let scale = |k: i32| b.powi(1 - k).max(1e-300);
            assert_relative_eq!(
                j.derivative_value(&[1]).unwrap()[(0, 0)].re,
                d1,
                epsilon = 1e-7 * scale(1)
            );
            assert_relative_eq!(
                j.derivative_value(&[2]).unwrap()[(0, 0)].re,
                d2,
                epsilon = 1e-6 * scale(2)
            );
            assert_relative_eq!(
                j.derivative_value(&[3]).unwrap()[(0, 0)].re,
                d3,
                epsilon = 1e-4 * scale(3)
            );
        }
    }

    #[test]
    fn order_cap_is_enforced() {
        let s = sqrt_symbol();
        let pt = SymbolPoint::new(vec![0.0], vec![1.0], Complex64::new(0.0, 0.0));
        assert!(matches!(
            s.jet(&pt, &[Var::Xi(0)], 5),
            Err(Error::DerivativeUnavailable { .. })
        ));
    }

    #[test]
    fn step_underflow_reported() {
        let s = sqrt_symbol().with_step(1e-15).unwrap();
        let pt = SymbolPoint::new(vec![0.0], vec![1.0], Complex64::new(0.0, 0.0));
        assert!(matches!(
            s.jet(&pt, &[Var::Xi(0)], 1),
            Err(Error::StepUnderflow { .. })
        ));
    }
}
