//! Variational laboratory for the coupled critical system
//!
//! ```text
//! −Δu = λ₁u + μ₁u³ + βv²u + θ₁u log u²
//! −Δv = λ₂v + μ₂v³ + βu²v + θ₂v log v²
//! ```
//!
//! on balls of R⁴, reduced to radial problems.

pub mod bubble;
pub mod error;
pub mod functionals;
pub mod nehari;
pub mod nonexistence;
pub mod par;
pub mod params;
pub mod radial;
pub mod solvers;
pub mod sweep;

pub use error::{Error, Result};
pub use functionals::{EnergyBreakdown, StatePair};
pub use par::Execution;
pub use params::{DomainConstants, ParameterSet};
pub use radial::{RadialField, RadialGrid};

/// Seventeen significant digits, enough for a lossless round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
