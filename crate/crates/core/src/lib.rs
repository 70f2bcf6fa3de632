//! External rays of polynomials with disconnected filled Julia sets.
//!
//! The crate evaluates the Green's function of the basin of infinity, traces
//! smooth and broken external rays by following its gradient, decides where
//! periodic rays land, and runs the inductive search for a smooth ray landing
//! at a prescribed repelling or parabolic fixed point.

pub mod angle;
pub mod error;
pub mod json;
pub mod landing;
pub mod poly;
pub mod potential;
pub mod presets;
pub mod probe;
pub mod ray;
pub mod render;
pub mod verifier;
mod roots;

pub use angle::{Angle, Orientation};
pub use error::{Error, Result};
pub use poly::{CriticalPoint, PeriodicPoint, PointClass, Polynomial};
pub use potential::{PotentialField, PotentialSample, Singularity, SingularityCatalog};
