//! Numerical laboratory for anisotropic operator-valued pseudodifferential
//! calculus on torus grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`aniso`]: anisotropic weights, multi-indices, sectors and grids
//! * [`jet`]: truncated Taylor jets with matrix coefficients
//! * [`rbound`]: Rademacher averages and R-bound estimation
//! * [`symbol`]: symbol kernels, classical symbols, composition and parametrices
//! * [`psido`]: grid realization of symbols, Sobolev norms and multiplier harnesses
//! * [`elliptic`]: ellipticity, resolvents and maximal regularity

pub mod aniso;
pub mod elliptic;
pub mod error;
pub mod jet;
pub mod psido;
pub mod rbound;
pub mod symbol;

pub use error::{Error, Result};
