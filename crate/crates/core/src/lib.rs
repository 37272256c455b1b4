//! Paperclip view laboratory.
//!
//! Procedurally generates wire-like "paperclip" objects, renders them under
//! axis-aligned rotations, and measures how different recognizers generalize
//! from a handful of training views to the rest of the view sphere:
//!
//! * [`clipgen`] builds and validates the 8-vertex objects,
//! * [`scene`] holds rotation algebra, pose grids and cameras,
//! * [`render`] rasterizes views and writes datasets with manifests,
//! * [`oracles`] implements 2D matching, linear combination of views and
//!   reconstruction + alignment on exact vertex correspondences,
//! * [`mlp`] is a small natively trained classifier on coordinate arrays,
//! * [`harness`] runs experiment presets and emits profiles, CSV and SVG.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clipgen;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod oracles;
pub mod render;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
