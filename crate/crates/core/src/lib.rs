//! Simulation kernels for hybrid stochastic Hamiltonian systems with
//! infinite history and (state-dependent) regime switching.
//!
//! The continuous component `Z(t) = (X(t), Y(t))` follows a degenerate
//! diffusion: positions `X` move with `(aX + bY) dt` and carry no noise,
//! velocities `Y` carry a bounded history-dependent drift, a Hölder
//! pointwise drift, and a diagonal diffusion. The discrete component
//! switches between regimes at rates that may depend on the exponentially
//! discounted history norm of `Z`.
//!
//! The crate is `no_std` (with `alloc`); all floating-point transcendentals
//! go through `libm` so results are bit-stable across platforms. Everything
//! here is a pure function of its inputs plus an explicit RNG stream; IO,
//! parallel ensembles, and file formats live in the companion `hamswitch`
//! crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN
#![allow(clippy::too_many_arguments)]
#![allow(clippy::needless_range_loop, clippy::manual_memcpy)] // strided kernels

extern crate alloc;

pub mod error;
pub mod math;
pub mod model;
pub mod rng;
pub mod sde;
pub mod segment;
pub mod stats;
pub mod switching;
pub mod weights;
pub mod zvonkin;

/// Regime index (0-based internally; configs use 1-based labels).
pub type Regime = usize;

pub use error::CoreError;
