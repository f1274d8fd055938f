//! Proximal gradient flows on Hadamard spaces, destabilizing geodesic rays and
//! certification of the sharp slope bound inf |∂F| = max(0, sup −F(ℓ)/‖ℓ‖).

pub mod banded;
pub mod destabilizer;
pub mod error;
pub mod export;
pub mod flow;
pub mod functional;
pub mod geodesic;
pub mod model;
pub mod ray;
pub mod registry;
pub mod suites;
pub mod toric;

pub use error::{Error, Result};
pub use functional::{slope, Functional, SlopeEstimate};
pub use geodesic::GeodesicSpace;
