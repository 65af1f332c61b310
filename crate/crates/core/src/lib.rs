//! Link-level simulator for multi-RISS sensing and communication.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod error_analysis;
pub mod experiments;
pub mod placement;
pub mod sampling;
pub mod scene;
pub mod sensing_range;

pub use error::{Error, Result};
