//! Curvature identity laboratory: exact jet arithmetic, Riemannian curvature
//! stacks, conformal variations and quadrature on compact charts.

pub mod error;
pub mod expr;
pub mod tensor;
pub mod curvature;
pub mod conformal;
pub mod quadrature;

pub use error::{Error, Result};
