//! Sensing-aided beamforming for indoor wireless power transfer.
//!
//! The crate synthesizes bistatic MIMO channels for scenes with flat specular
//! walls, forms radar reflectivity maps, estimates wall lines from them, and
//! uses the resulting image-source model to predict CSI for geometry-based
//! multi-beam transmission.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod pipeline;
pub mod vision;
pub mod wpt;

pub use error::{Error, Result};
