//! OILU square fiducial markers.
//!
//! A marker is a stack of concentric square rings; each ring draws one
//! decimal digit as a subset of its four sides. This crate covers the whole
//! path from number to pixels and back:
//!
//! - [`codec`]: digits, side patterns, the quarter-turn permutation and facet groups.
//! - [`render`]: deterministic raster rendering plus exact ground-truth geometry.
//! - [`vision`]: grayscale, Otsu binarization, component cleanup, quad detection, rectification.
//! - [`levelset`]: exact distance map inside the quad, ring bands, diagonal triangles, occupancy.
//! - [`decoder`]: the end-to-end `decode` entry point.
//! - [`harness`]: synthetic distortions and seeded robustness sweeps.

pub mod codec;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod levelset;
pub mod raster;
pub mod render;
pub mod selftest;
pub mod vision;

pub use codec::{
    digit_to_pattern, facet_values, pattern_to_digit, rotate_digit, rotate_pattern_ccw, Digit,
    FacetGroup, OiluNumber, Side, SidePattern,
};
pub use decoder::{decode, decode_file, DecodeConfig, DecodeResult};
pub use error::{Error, Result, Stage};
pub use raster::Raster;
pub use render::{layout_rings, render_marker, MarkerGeometry, MarkerStyle, Polarity};
