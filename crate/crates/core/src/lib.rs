//! Simulation and integrated-volatility estimation for Brownian semistationary
//! (BSS) processes
//!
//! `Y_t = ∫ g(t − s) σ_s dW_s`
//!
//! The crate is `no_std` with `alloc`. Enable the `std` feature to route the
//! elementary math functions through the platform library instead of `libm`,
//! and `serde` to (de)serialize configuration types.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
pub mod kernels;
pub mod limit_theory;
pub mod optimize;
pub mod simulate;
pub mod special_fn;

pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
pub use simulate::{HybridConfig, SamplePath, SimulationOutput, VolatilityConfig};
pub use special_fn::QuadratureSpec;
