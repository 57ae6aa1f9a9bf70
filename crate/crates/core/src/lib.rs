//! UWB radar imaging of transformer windings.
//!
//! A pulse is transmitted toward the winding from a series of measuring
//! points along its axis, and the echoes are mapped onto a Y-Z image by
//! time-arrival (delay-and-sum) migration. Comparing the winding's edges in
//! a baseline and a test image gives its axial displacement.
//!
//! Pipeline: [`synth::synthesize`] (or a recorded B-scan) ->
//! [`gate::apply_gate`] -> [`migrate::migrate`] -> [`analyze`].

// `!(x > 0.0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod bscan_file;
pub mod cli;
pub mod config;
pub mod error;
pub mod gate;
pub mod geometry;
pub mod image_file;
pub mod migrate;
pub mod pulse;
pub mod synth;

pub use error::{Error, Result};
