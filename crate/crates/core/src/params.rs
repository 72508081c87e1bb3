use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bernoulli pair of the degradation process: background appearance
/// probability `p_b` and extra foreground appearance probability `p_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationParams {
    pub p_b: f64,
    pub p_f: f64,
}

impl DegradationParams {
    pub fn new(p_b: f64, p_f: f64) -> Result<Self> {
        let params = Self { p_b, p_f };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("p_b", self.p_b)?;
        check_probability("p_f", self.p_f)
    }

    /// Marginal probability that a foreground pixel is white.
    pub fn foreground_density(&self) -> f64 {
        foreground_density(*self)
    }
}

/// `p_b + p_f - p_b p_f`.
pub fn foreground_density(params: DegradationParams) -> f64 {
    params.p_b + params.p_f - params.p_b * params.p_f
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {p} is not a probability")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_cases() {
        assert_eq!(foreground_density(DegradationParams { p_b: 0.0, p_f: 0.37 }), 0.37);
        assert_eq!(foreground_density(DegradationParams { p_b: 0.37, p_f: 0.0 }), 0.37);
    }

    #[test]
    fn worked_value() {
        // 0.005 + 0.2 - 0.001 in exact decimal arithmetic.
        let p = foreground_density(DegradationParams { p_b: 0.005, p_f: 0.2 });
        assert!((p - 0.204).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(DegradationParams::new(-0.1, 0.2).is_err());
        assert!(DegradationParams::new(0.1, 1.2).is_err());
    }

    proptest! {
        #[test]
        fn density_bounds(p_b in 0.0..=1.0f64, p_f in 0.0..=1.0f64) {
            let p1 = foreground_density(DegradationParams { p_b, p_f });
            prop_assert!(p1 >= p_b.max(p_f) - 1e-15);
            prop_assert!(p1 <= 1.0 + 1e-15);
        }
    }
}
