//! Stochastic stability analysis of two-dimensional immune-tumor models.

pub mod error;
pub mod linalg;
pub mod linearize;
pub mod lyapunov;
pub mod models;
pub mod simulate;
pub mod stability;

pub use error::{Error, Result};
