//! Fourier-pseudospectral toolkit for the damped wave equation
//!
//! ```text
//! u_tt - Δu + u_t - Δu_t = f(u),   f(u) = |u|^p  or  |u|^{p-1} u
//! ```
//!
//! on periodic boxes `[-L, L)^n` (`n = 1, 2`) standing in for `R^n`.
//!
//! The linear part is propagated exactly per Fourier mode ([`propagators`]),
//! the source by an exponential Runge–Kutta step ([`solver`]). [`analysis`]
//! turns trajectories into decay exponents and profile errors, [`blowup`]
//! holds the test-function functional and a heuristic classifier.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod blowup;
pub mod bump;
pub mod config;
pub mod error;
pub mod fourier_core;
pub mod propagators;
pub mod quadrature;
pub mod solver;

pub use config::{DataSpec, Experiment, ExperimentConfig};
pub use error::{Error, Result};
pub use fourier_core::{make_grid, transform, inverse_transform, Field, SpectralGrid, Spectrum};
pub use solver::{Form, Nonlinearity, State, Trajectory};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
