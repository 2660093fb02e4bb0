//! Prediction intervals for feedforward ReLU regression networks.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the numerical
//! machinery only:
//!
//! - [`nn`]: a small dense ReLU network with exact backpropagation, Adam and
//!   per-example parameter Jacobians.
//! - [`masks`]: Bernoulli retention masks for dropout training, MC dropout and
//!   fixed structural thinning.
//! - [`intervals`]: delta method, bootstrap, MC dropout and extra-neural
//!   network interval constructors, coverage metrics and the ensemble MSPE
//!   decomposition.
//! - [`dgp`]: the linear and nonlinear simulation processes with Cholesky
//!   correlation imposition, plus feature/target standardization.
//! - [`study`]: one coverage-study replication end to end.
//! - [`bench`]: repeated random split protocol and RMSPE aggregation.
//!
//! File formats, CSV loading, the CLI and thread pools live in the `iforge`
//! companion crate. Work that can run in parallel is expressed through the
//! [`exec::Executor`] trait so that crate can plug in a thread pool without
//! changing any result.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod data;
pub mod dgp;
mod error;
pub mod exec;
pub mod intervals;
pub mod linalg;
pub mod masks;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod study;

pub use data::Dataset;
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use masks::{Mask, MaskMode};
pub use nn::{NetworkSpec, Parameters, TrainConfig};
