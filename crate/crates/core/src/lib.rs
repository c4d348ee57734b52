//! Knowledge-driven meta-learning for MIMO CSI feedback.
//!
//! The crate covers the whole pipeline at desk scale:
//!
//! * [`numerics`]: complex linear algebra and seeded random streams.
//! * [`channel`]: a clustered tapped-delay-line simulator and the
//!   channel → per-subband eigenvector transform.
//! * [`metaenv`]: synthetic meta tasks built from random spatial/frequency
//!   bases, without any collected data.
//! * [`augment`]: second-order-statistics matched augmentation and the
//!   baseline augmenters it is compared against.
//! * [`model`]: a compact quantized MLP autoencoder trained on −SGCS.
//! * [`train`]: inner-loop optimisation, Reptile meta-training and target
//!   retraining with convergence logs.
//! * [`dataset`] and [`config`]: the on-disk formats shared with the CLI.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod channel;
pub mod config;
pub mod dataset;
mod error;
pub mod metaenv;
pub mod model;
pub mod numerics;
pub mod train;

pub use channel::{CsiEigen, Origin, SystemConfig, TimeChannel};
pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, RngStream};
