//! Translating vortex-sheet pairs for the surface quasi-geostrophic equation.
//!
//! A sheet pair is described by radial and strength perturbations of two
//! mirrored circles. The crate evaluates the contour residuals, linearizes
//! them at the circle pair, solves them by Newton continuation in the
//! sheet size, and checks the result against the point-vortex limit.

pub mod cli;
pub mod contour;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod kernels;
pub mod linop;
pub mod pointvortex;
pub mod reduce;
pub mod solver;
pub mod trig;

pub use error::{Error, Result};
