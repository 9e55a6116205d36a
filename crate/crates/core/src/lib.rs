//! Passive Hermitian functions in the Hardy space `H²` of the upper
//! half-plane whose real part is constant on a band `I = [a, b]`.
//!
//! Given a nonnegative loss density `v` off the band, the library
//!
//! * decides whether `v` extends to the band ([`density::check_feasibility`]),
//! * evaluates the constant level `α` of the real part
//!   ([`parametrization::alpha_functional`]),
//! * completes `v` on the band ([`parametrization::extend`]) and verifies the
//!   completion with the half-line Hilbert operator
//!   ([`parametrization::verify_constancy`]),
//! * reproduces the minimal on-band loss `λ = (b² − a²)/(2ab)` for `α = −1`
//!   with near-extremal families ([`extremal`]).

pub mod density;
pub mod error;
pub mod extremal;
pub mod kernels;
pub mod output;
pub mod parametrization;
pub mod quadrature;
pub mod sampling;

pub use density::{Density, FeasibilityReport, Interp, Segment, Verdict};
pub use error::{Error, Result};
pub use kernels::{Band, SigmaValue};
pub use parametrization::{ConstancyReport, ExtensionResult};
pub use quadrature::{Estimate, QuadratureConfig};
