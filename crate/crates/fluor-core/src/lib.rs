//! Fluorescent reradiation for non-spectral renderers.
//!
//! Dense Donaldson reradiation matrices are reduced to small K x K matrices
//! acting on color vectors in an arbitrary non-orthogonal sensitivity basis
//! (XYZ, XYZU with a UV band, or a 7-band CMF split). The reduced matrices
//! replace component-wise albedo multiplication in a tristimulus renderer,
//! forward or adjoint. A dense bispectral renderer serves as the ground
//! truth for Delta E 2000 evaluation.

pub mod basis;
pub mod colorimetry;
pub mod data;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod materials;
pub mod reduction;
pub mod spectral;
pub mod transport;

pub use error::{FluorError, Result};
