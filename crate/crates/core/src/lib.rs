//! Curvature measures of offsets of 3D point clouds.
//!
//! The r-offset of a finite point set is a union of equal balls. Its boundary
//! is built exactly as a spherical polyhedron ([`boundary`]), and the mean,
//! Gaussian and anisotropic curvature measures are integrated against
//! Lipschitz test functions cell by cell ([`measures`]).

pub mod boundary;
pub mod cloud;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod io;
pub mod measures;
pub mod stability;

pub use cloud::PointCloud;
pub use error::{CurvError, Result};
