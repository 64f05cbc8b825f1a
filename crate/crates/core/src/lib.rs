//! Mouse-dynamics bot detection.
//!
//! Pointer trajectories are decomposed into Sigma-Lognormal strokes, turned
//! into fixed-size feature vectors and classified as human or bot. The crate
//! also synthesises bot trajectories (function-based and adversarial) to
//! train and stress the detectors.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod error;
pub mod features;
pub mod gan;
pub mod io;
pub mod lognormal;
pub mod model;
pub mod optim;
pub mod surrogate;
pub mod synth;
pub mod tags;
pub mod trajectory;

pub use error::{Error, Result};
