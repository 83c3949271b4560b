//! Support points and projected support points on the unit hypercube.
//!
//! Support points minimize the energy distance between a design's empirical
//! distribution and `U[0,1]^p`; projected support points minimize a
//! prior-averaged Gaussian-kernel discrepancy that also rewards uniform
//! low-dimensional projections. This crate provides both optimizers, the
//! distance/discrepancy criteria used to compare designs, a small Gaussian
//! process toolkit for emulation studies, and the benchmark harness.

pub mod design;
pub mod energy;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernel;
pub mod metrics;
pub mod psp_opt;
pub mod rng;
pub mod sampling;
pub mod sobol;
pub mod sp_opt;
pub mod testfns;

pub use design::{load_design, read_design, save_design, write_design, Design};
pub use energy::EnergyEstimate;
pub use error::{Error, Result};
pub use kernel::{KernelSpec, PodSpec};
pub use rng::RngConfig;
pub use sampling::{BaselineKind, BatchSource, Prior, PriorDrawBatch, SampleBatch};
