//! Covariance-level toolkit for linear quantum stochastic systems under
//! classical linear feedback.
//!
//! The crate models open quantum harmonic oscillators at the level of their
//! symmetrized covariance matrices:
//!
//! - [`model`] builds quadrature-form state-space systems `(A, B, C, D)` from
//!   physical parameters `(R, K, S)` and checks physical realizability and
//!   the uncertainty LMI.
//! - [`interconnect`] composes two plants and a classical linear controller
//!   into a mixed quantum-classical closed loop with the block-zero structure
//!   that forbids direct plant-plant coupling.
//! - [`covariance`] solves the steady-state Lyapunov equation and propagates
//!   the covariance differential equation by exact discretization.
//! - [`entanglement`] computes separability verdicts and logarithmic
//!   negativity for two-mode Gaussian states, and runs the randomized
//!   verification that classical linear control never creates entanglement.

pub mod covariance;
pub mod entanglement;
pub mod interconnect;
pub mod model;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
