//! Finite-difference solvers for Maxwell systems with a monotone,
//! field-dependent conductivity, including the quasi-static (zero
//! permittivity) limit, on staggered grids with perfectly conducting
//! boundaries.

pub mod app;
pub mod conductivity;
pub mod error;
pub mod forcing;
pub mod grid;
pub mod harness;
pub mod io;
pub mod scenario;
pub mod solver_full;
pub mod solver_qs;
pub mod trajectory;

pub use error::{Error, Result};
