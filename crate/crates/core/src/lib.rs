//! Numerical mountain-pass solutions of the two-sided mean field equation
//!
//! ```text
//! −Δu = λ1 (e^u/∫e^u − 1) − λ2 (e^{−u}/∫e^{−u} − 1),    ∫u = 0
//! ```
//!
//! on the unit flat torus.

pub mod bumps;
pub mod checks;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod functional;
pub mod krylov;
pub mod minimax;
pub mod sampling;
pub mod torus;

pub use error::{Error, Result};
pub use functional::{EnergyBreakdown, Params};
pub use torus::{Field, MeanZeroField, Point, Regularity, TorusGrid};
