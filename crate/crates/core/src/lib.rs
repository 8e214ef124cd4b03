//! Hill approximation of the equilateral restricted four-body problem.

pub mod equilibria;
pub mod error;
pub mod integrate;
pub mod io;
pub mod manifolds;
pub mod model;
pub mod orbits;
pub mod parallel;
pub mod poincare;
pub mod regularization;

pub use error::{Error, Result};
