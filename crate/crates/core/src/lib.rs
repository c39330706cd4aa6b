//! Incompressible Navier-Stokes-Voigt dynamics with delayed forcing on a
//! periodic box, evolved pseudospectrally, together with a verification lab
//! that certifies energy-decay inequalities, absorbing-ball entry, pullback
//! contraction, a smooth/decaying regularity decomposition, and time-averaged
//! invariant measures for the associated evolution process.
//!
//! The governing system couples a Voigt-regularized momentum equation
//!
//! ```text
//! d/dt (u + a^2 A u) + nu A u + B(u) = f(t) + g(t, u_t)
//! ```
//!
//! with a delay operator `g` acting on the recent history segment
//! `u_t(theta) = u(t + theta)`, `theta in [-h, 0]`.  All fields are zero-mean,
//! divergence-free, truncated Fourier series; the Stokes operator `A` and the
//! Voigt mass `I + a^2 A` act diagonally per mode, which the time steppers
//! exploit for unconditionally stable implicit-explicit updates.
//!
//! Module map:
//! - [`spectral`]: grids, truncated divergence-free fields, Leray projection,
//!   Stokes operator, dealiased convection, norms, embedding constants.
//! - [`delay`]: history segments, process states, delay operators, and the
//!   feasibility window for the decay parameters.
//! - [`forcing`]: time-dependent forcing profiles with closed-form
//!   exponentially weighted integrals.
//! - [`stepper`]: IMEX integrators, energy accounting, blow-up detection.
//! - [`estimates`]: inequality certificates along stored or re-evolved runs.
//! - [`attractor`]: state clouds, pullback sweeps, regularity splitting.
//! - [`measure`]: empirical time-average measures and invariance residuals.
//! - [`io`]: binary snapshots, checkpoints, manifests, CSV series.
//! - [`config`]: plain-text run configuration.

pub mod attractor;
pub mod config;
pub mod delay;
pub mod error;
pub mod estimates;
pub mod forcing;
pub mod io;
pub mod measure;
pub mod params;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use params::PhysicalParams;
pub use spectral::{Grid, SpectralField, Space};
