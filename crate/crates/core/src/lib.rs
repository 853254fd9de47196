//! Numerical laboratory for uniform Hanson-Wright type concentration inequalities.
//!
//! The crate evaluates the random quantities these inequalities are about (suprema of
//! quadratic chaoses, truncations, covariance estimators with missing entries, Ising
//! chaoses), the right-hand sides of the bounds with all absolute constants exposed,
//! and checks the inequalities either exactly by enumeration or by seeded Monte Carlo.
//!
//! The matrix kernel and the bound evaluators are generic over [`Real`] (`f32`/`f64`);
//! the simulation layers work in `f64`. Aliases for the common instantiations are
//! exported at the crate root.

pub mod bounds;
pub mod chaos;
pub mod covariance;
pub mod distributions;
pub mod error;
pub mod fixtures;
pub mod ising;
pub mod linalg;
pub mod montecarlo;
pub mod numeric;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SymMatrix = linalg::SymMatrix<f64>;
pub type SymMatrix32 = linalg::SymMatrix<f32>;
pub type MatrixFamily = linalg::MatrixFamily<f64>;
pub type MatrixFamily32 = linalg::MatrixFamily<f32>;
