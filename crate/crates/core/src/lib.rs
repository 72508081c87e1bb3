//! Random-dot edge stimuli, temporal integration, a contrario line detection,
//! closed-form performance prediction and response evaluation.

pub mod binomial;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod image;
pub mod merge;
pub mod params;
pub mod pbm;
pub mod prediction;
pub mod rng;
pub mod synthesis;

pub use error::{Error, Result};
pub use image::{BinaryImage, Pixel};
pub use params::DegradationParams;
