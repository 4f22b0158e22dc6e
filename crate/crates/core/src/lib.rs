//! Stationary Boolean models with convex polytope grains: simulation,
//! density estimation, and recovery of intensity and mean shape.

pub mod error;
pub mod boolsim;
pub mod flags;
pub mod geom;
pub mod invert;
pub mod translative;

pub use error::{Error, Result};
