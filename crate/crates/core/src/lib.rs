//! Numerical core for a resonantly driven three-level V system (ground level 1,
//! metastable level 2 driven by a slow pulse, auxiliary level 3 driven by short
//! strong probe pulses) observed through its fluorescence.
//!
//! Three independent routes to the level populations are provided and are
//! meant to be cross-checked against each other:
//!
//! - [`analytic`]: first-order closed forms in the small measurement parameter
//!   `eps_p`, including the ideal and shifted projection limits;
//! - [`bloch`]: exact propagation of the ensemble master equation through a
//!   piecewise-constant pulse schedule;
//! - [`trajectories`]: Monte-Carlo quantum jumps with waiting times drawn by
//!   inverse transform sampling of the no-photon probability.
//!
//! The crate is `no_std` and needs only `alloc`.
//!
//! Index convention: atomic level `k` (1, 2, 3) lives at array index `k - 1`
//! in every vector and matrix.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
// Modules import `num_traits::Float` for libm-backed math; when a dev
// dependency links std the inherent methods take over and the import
// goes unused, hence the `allow` on each of those imports.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analytic;
pub mod bloch;
pub mod density;
mod error;
pub mod linalg3;
pub mod nophoton;
pub mod presets;
pub mod pulses;
pub mod trajectories;
pub mod vsystem;
mod wide;

pub use density::DensityMatrix3;
pub use error::{Error, Result};
pub use linalg3::{Complex, EigenDecomp3, Mat3C, Mat9C, Vec3C};
pub use pulses::{Mode, Placement, PulseSchedule, Segment};
pub use vsystem::{Epsilons, RegimeReport, VParams};
