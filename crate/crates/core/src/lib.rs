//! Numerical laboratory for size estimates of inclusions in thin
//! anisotropic elastic plates.

pub mod config;
pub mod couple;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod morley;
pub mod plate;
pub mod quad;
pub mod size;
pub mod smallness;
pub mod sparse;
pub mod tensor;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;
