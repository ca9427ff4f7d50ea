//! Study harness, file formats and command-line front end for `bssvol-core`.
//!
//! Adds an FFT convolution for the hybrid scheme, JSON configuration,
//! CSV output with run manifests, and a parallel Monte Carlo study.

#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub use bssvol_core::{
    estimators, kernels, limit_theory, optimize, simulate, special_fn, Error, HybridConfig, KernelFamily, KernelSpec,
    QuadratureSpec, Result, SamplePath, SimulationOutput, VolatilityConfig,
};

pub mod cli;
pub mod config;
pub mod error;
pub mod fft;
pub mod io;
pub mod manifest;
pub mod study;
