use serde::{Deserialize, Serialize};

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::geometry::{undirected_angle_difference, Point};
use crate::synthesis::EdgeSpec;

use super::responses::ClickResponse;

/// Which extent rule applies: a single static edge, or a merged moving edge
/// whose clean footprint is an `L_e x t` rectangle (`t` = truth width).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoringCase {
    Static,
    DynamicMerged,
}

/// Tolerances of the localisation rules.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub angle: f64,
    pub distance: f64,
    pub extent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            angle: 0.1,
            distance: 15.0,
            extent: 20.0,
        }
    }
}

/// Whether the segment `p`–`q` localises `truth`: parallel within the angle
/// tolerance, both ends close to the truth axis, and both ends close to the
/// truth midpoint.
pub fn score_segment(p: Point, q: Point, truth: &EdgeSpec, case: ScoringCase, tol: Tolerances) -> bool {
    if p == q {
        return false;
    }
    let angle = (q.y - p.y).atan2(q.x - p.x);
    if undirected_angle_difference(angle, truth.angle) > tol.angle {
        return false;
    }
    let (max_offset, max_reach) = match case {
        ScoringCase::Static => (tol.distance, 0.5 * truth.length + tol.extent),
        ScoringCase::DynamicMerged => (
            0.5 * truth.width + tol.distance,
            0.5 * truth.length.hypot(truth.width) + tol.extent,
        ),
    };
    let (ux, uy) = (truth.angle.cos(), truth.angle.sin());
    let m = truth.midpoint;
    [p, q].into_iter().all(|c| {
        let offset = ((c.y - m.y) * ux - (c.x - m.x) * uy).abs();
        offset <= max_offset && c.distance(m) <= max_reach
    })
}

/// Scores a localisation answer; reject-box answers, timeouts, incomplete
/// answers and noise stimuli are misses.
pub fn score_click(response: &ClickResponse, truth: Option<&EdgeSpec>, case: ScoringCase) -> Result<bool> {
    response.validate()?;
    if response.reject && response.clicks.len() > 1 {
        return Err(Error::InvalidParameter("reject answer with two in-image clicks".into()));
    }
    let Some(truth) = truth else {
        return Ok(false);
    };
    if response.reject || response.timed_out || response.clicks.len() != 2 {
        return Ok(false);
    }
    let center = |(x, y): (i64, i64)| Point::new(x as f64 + 0.5, y as f64 + 0.5);
    Ok(score_segment(
        center(response.clicks[0]),
        center(response.clicks[1]),
        truth,
        case,
        Tolerances::default(),
    ))
}

/// Scores the axis ends of a detection with the click rules.
pub fn score_detection(det: &Detection, truth: Option<&EdgeSpec>, case: ScoringCase) -> bool {
    match (&det.candidate, truth) {
        (Some(c), Some(truth)) => score_segment(c.axis[0], c.axis[1], truth, case, Tolerances::default()),
        _ => false,
    }
}
