//! Color blending on optical see-through displays.
//!
//! The display adds its light to whatever background light passes through
//! the optics. This crate models that blend, reduces colorimeter readings of
//! it to per-cell medians, compares how the display colors shift between
//! pairs of backgrounds, and searches for display commands that reproduce an
//! intended perceived color against a given background.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod colorspace;
pub mod dataset;
pub mod display;
pub mod error;
pub mod hull;
pub mod kv;
pub mod plot;
pub mod solver;

pub use error::{Error, Result};
