//! # dephasing
//!
//! Fundamental precision limits for quantum sensing under collective
//! dephasing noise.
//!
//! A register of `N` two-level probes accumulates a phase `b t` under the
//! collective generator `J_z`, while a classical noise field `xi(t)` adds a
//! random phase `lambda(t) = int_0^t xi`. This crate provides:
//!
//! - [`noise`]: noise models, the decoherence function `chi(t)` in the time
//!   and frequency domains, spectral moments and short-time power-law fits.
//! - [`dicke`]: exact dynamics of permutation-symmetric states in the Dicke
//!   basis, quantum Fisher information and symmetric logarithmic derivative.
//! - [`bounds`]: state-independent precision bounds and optimal interrogation
//!   times, and their GHZ-state counterparts.
//! - [`phase_space`]: the large-`N` Gaussian (Holstein-Primakoff) treatment of
//!   one-axis-twisted spin-squeezed states.
//! - [`control`]: pulse sequences, segment covariances, the
//!   moment-matrix constant `K_Q'` and the controlled no-go bound.
//! - [`montecarlo`]: a trajectory-level oracle that samples noise phases and
//!   averages unitary evolutions.
//! - [`validation`]: named cross-module checks with measured values and
//!   tolerances, shared by the command-line front end and the tests.
//!
//! All fallible operations return [`Result`] with the crate-wide [`Error`].

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod bounds;
pub mod control;
pub mod dicke;
pub mod error;
pub mod montecarlo;
pub mod noise;
pub mod numerics;
pub mod phase_space;
pub mod validation;

pub use error::{Error, Result};
