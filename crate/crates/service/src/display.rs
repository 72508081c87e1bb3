//! Physical display setup of a session.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub pixel_pitch_mm: f64,
    pub viewing_distance_mm: f64,
    /// CSS pixels per stimulus pixel measured by the UI's calibration
    /// screen, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

impl DisplayGeometry {
    /// Apparatus of the original experiments.
    pub const LAB: DisplayGeometry = DisplayGeometry {
        pixel_pitch_mm: 0.35,
        viewing_distance_mm: 700.0,
        scale: None,
    };

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.pixel_pitch_mm) || !positive(self.viewing_distance_mm) || !self.scale.map_or(true, positive) {
            return Err(ServiceError::Invalid(format!("display geometry {self:?} must be positive and finite")));
        }
        Ok(())
    }

    /// Visual angle subtended by one pixel, in degrees.
    pub fn degrees_per_pixel(&self) -> f64 {
        self.degrees_for(1.0)
    }

    /// Visual angle subtended by `pixels` adjacent pixels, in degrees.
    pub fn degrees_for(&self, pixels: f64) -> f64 {
        (2.0 * (pixels * self.pixel_pitch_mm / (2.0 * self.viewing_distance_mm)).atan()).to_degrees()
    }
}
