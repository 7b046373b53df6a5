//! Globally monotonic step-response tracking for linear time-invariant
//! MIMO plants.
//!
//! The pipeline is: analyse the plant ([`geometry::structural_report`]),
//! decide solvability ([`synthesis::check_fixed_modes`],
//! [`synthesis::check_structural`]), build a feedback matrix
//! ([`synthesis::synthesize_feedback`] or [`synthesis::synthesize_auto`]) and
//! verify it by eigenstructure checks and simulation ([`runtime`]).
//!
//! Everything is generic over [`Scalar`]: exact rationals reproduce
//! hand-computed examples exactly, floats serve larger plants.

pub mod cli;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod poly;
pub(crate) mod rng;
pub mod runtime;
pub mod scalar;
pub mod synthesis;
pub mod system;

pub use error::{Error, Result};
pub use linalg::{Mat, Subspace};
pub use scalar::{Rational, Scalar};
pub use system::{LtiSystem, SteadyState, TimeDomain};

/// Exact rational matrix.
pub type ExactMat = Mat<Rational>;
/// Double-precision matrix.
pub type FloatMat = Mat<f64>;
/// Plant with exact rational data.
pub type ExactSystem = LtiSystem<Rational>;
/// Plant with double-precision data.
pub type FloatSystem = LtiSystem<f64>;
