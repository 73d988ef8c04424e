//! Numerical laboratory for degenerate-elliptic operators of Grushin type.
//!
//! The operator acts on `R^n x R^m` as
//! `H = -div_1 |x1|^(2d1,2d1') grad_1 - |x1|^(2d2,2d2') lap_2`,
//! where `a^(e,e')` is `a^e` for `a <= 1` and `a^e'` for `a >= 1`.

pub mod error;
pub mod geometry;
pub mod quad;
pub mod spectral;
pub mod rng;
pub mod heat;
pub mod sde;
pub mod acceptance;
pub mod report;
pub mod cli;

pub use error::{Error, Result};
