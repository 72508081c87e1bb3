//! Temporal integration by boolean union and the merged-parameter laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BinaryImage;
use crate::params::DegradationParams;

/// Which frame a merged window is attributed to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alignment {
    PastOnly,
    #[default]
    Centered,
    FutureOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeWindow {
    pub n_f: usize,
    pub alignment: Alignment,
}

impl MergeWindow {
    pub fn centered(n_f: usize) -> Self {
        Self {
            n_f,
            alignment: Alignment::Centered,
        }
    }

    /// Frame index a window starting at `start` is reported at.
    pub fn time_index(&self, start: usize) -> usize {
        match self.alignment {
            Alignment::PastOnly => start + self.n_f - 1,
            Alignment::Centered => start + self.n_f / 2,
            Alignment::FutureOnly => start,
        }
    }

    /// Start frames of the windows that fit in `frame_count` frames.
    pub fn starts(&self, frame_count: usize, stride: usize) -> impl Iterator<Item = usize> {
        let last = frame_count.checked_sub(self.n_f);
        (0..).step_by(stride.max(1)).take_while(move |&s| last.is_some_and(|l| s <= l))
    }
}

/// Pixelwise OR of the frames.
pub fn merge_frames(frames: &[BinaryImage]) -> Result<BinaryImage> {
    let (first, rest) = frames
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("cannot merge an empty frame list".into()))?;
    let mut out = first.clone();
    for f in rest {
        out.or_assign(f)?;
    }
    Ok(out)
}

/// Merged parameters of `t` frames of a static edge.
pub fn merged_params_static(params: DegradationParams, t: u32) -> DegradationParams {
    DegradationParams {
        p_b: union_probability(params.p_b, t),
        p_f: union_probability(params.p_f, t),
    }
}

/// Merged parameters and clean width of `t` frames of a unit-width edge
/// moving one pixel per frame.
pub fn merged_params_dynamic(params: DegradationParams, t: u32) -> (DegradationParams, f64) {
    (
        DegradationParams {
            p_b: union_probability(params.p_b, t),
            p_f: params.p_f,
        },
        f64::from(t),
    )
}

/// `1 - (1 - p)^t`.
pub fn union_probability(p: f64, t: u32) -> f64 {
    -((t as f64) * (-p).ln_1p()).exp_m1()
}
