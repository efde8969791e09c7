//! Spectral and time-domain analysis of a star network of three fluid-conveying
//! pipes, joined at a common vertex and pinned at the outer ends, with feedback
//! damping applied through the vertex bending moment.
//!
//! The crate computes:
//!
//! * the energy inner product the closed-loop stability is measured in
//!   ([`model`]),
//! * fundamental systems of the spectral ODE on an edge ([`ode`]),
//! * the two eigenvalue branches, with eigenfunctions, residuals and
//!   semisimplicity data ([`spectral`]),
//! * large-mode asymptotic expansions used as seeds and cross-checks
//!   ([`asymptotics`]),
//! * the inverse of the generator, split into its conservative part and the
//!   feedback correction ([`inverse`]),
//! * a Hermite-cubic Galerkin semi-discretization and trapezoidal time
//!   stepping ([`fem`]),
//! * decay-rate estimation and spectral diagnostics ([`analysis`]).

mod error;

pub mod analysis;
pub mod asymptotics;
pub mod fem;
pub mod inverse;
pub mod io;
pub mod model;
pub mod numerics;
pub mod ode;
pub mod spectral;

pub use error::{Error, ParamViolation, Result};
