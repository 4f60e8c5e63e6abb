//! Deviation bounds for squared norms of Gaussian and sub-gaussian vectors,
//! calculus and bound constants for symmetric third-order tensors, and Monte
//! Carlo drivers that check each inequality numerically.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod mc;
pub mod statapps;
pub mod tensor;

pub use error::{Error, Result};
