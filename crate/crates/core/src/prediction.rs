//! Closed-form predictions of detector performance.

use serde::{Deserialize, Serialize};

use crate::binomial::{log_binomial_tail, n_tests};
use crate::error::{Error, Result};
use crate::merge::union_probability;
use crate::params::DegradationParams;

/// Image and candidate geometry the predictions depend on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionContext {
    /// Side of the square image, in pixels.
    pub image_side: usize,
    pub edge_length: f64,
    /// Width of the clean edge (of the merged rectangle for moving edges).
    pub clean_width: f64,
    pub candidate_width: u32,
    pub n_widths: usize,
    pub epsilon: f64,
}

impl PredictionContext {
    /// 300x300 canvas, 200 px edge of width 1, one width, `epsilon = 1`.
    pub fn paper(candidate_width: u32) -> Self {
        Self {
            image_side: 300,
            edge_length: 200.0,
            clean_width: 1.0,
            candidate_width,
            n_widths: 1,
            epsilon: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let area = (self.image_side * self.image_side) as f64;
        let w = self.candidate_width as f64;
        if self.candidate_width == 0 || !(self.clean_width > 0.0) || !(self.edge_length > 0.0) {
            return Err(Error::InvalidParameter("edge and candidate sizes must be positive".into()));
        }
        if self.edge_length * self.clean_width.max(w) >= area {
            return Err(Error::InvalidParameter("edge footprint does not fit the image".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        Ok(())
    }

    /// `round(L_e w)`.
    pub fn window_pixels(&self) -> u64 {
        (self.edge_length * self.candidate_width as f64).round() as u64
    }

    /// Fraction of the candidate window covered by the edge.
    fn edge_fraction(&self) -> f64 {
        let w = self.candidate_width as f64;
        self.clean_width.min(w) / w
    }

    fn with_case(&self, case: EdgeCase) -> Self {
        match case {
            EdgeCase::Static => *self,
            EdgeCase::Dynamic { frames } => Self {
                clean_width: f64::from(frames),
                ..*self
            },
        }
    }
}

/// Static edge, or a unit-width edge moving one pixel per frame merged over
/// `frames` frames (clean width becomes `frames`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "case")]
pub enum EdgeCase {
    Static,
    Dynamic { frames: u32 },
}

/// Expected number of white pixels in the image.
pub fn expected_white_count(ctx: &PredictionContext, params: DegradationParams) -> f64 {
    let (on, off) = edge_areas(ctx);
    on * params.foreground_density() + off * params.p_b
}

/// Expected number of tests, `N_w E[M(M-1)] / 2`, with independent binomial
/// counts on and off the edge.
pub fn expected_n_tests(ctx: &PredictionContext, params: DegradationParams) -> f64 {
    let (on, off) = edge_areas(ctx);
    let p1 = params.foreground_density();
    let p_b = params.p_b;
    let second_factorial = on * (on - 1.0) * p1 * p1 + off * (off - 1.0) * p_b * p_b + 2.0 * on * p1 * off * p_b;
    0.5 * second_factorial * ctx.n_widths as f64
}

fn edge_areas(ctx: &PredictionContext) -> (f64, f64) {
    let on = ctx.edge_length * ctx.clean_width;
    let total = (ctx.image_side * ctx.image_side) as f64;
    (on, total - on)
}

/// Expected count of the candidate lying on the true edge, supports excluded.
pub fn expected_on_edge_count(ctx: &PredictionContext, params: DegradationParams) -> f64 {
    let n_w = ctx.window_pixels() as f64;
    let r = ctx.edge_fraction();
    (r * n_w - 2.0) * params.foreground_density() + (1.0 - r) * n_w * params.p_b
}

/// Spread of the on-edge count as printed alongside the worked examples: the
/// square root of the sum of the squared binomial variances of the on-edge
/// and off-edge parts of the window.
///
/// This is not a standard deviation; see [`on_edge_count_std_dev`].
pub fn on_edge_count_sigma(ctx: &PredictionContext, params: DegradationParams) -> f64 {
    let (on, off) = window_variances(ctx, params);
    on.hypot(off)
}

/// Standard deviation of the on-edge count, the square root of the sum of the
/// two binomial variances.
pub fn on_edge_count_std_dev(ctx: &PredictionContext, params: DegradationParams) -> f64 {
    let (on, off) = window_variances(ctx, params);
    (on + off).sqrt()
}

fn window_variances(ctx: &PredictionContext, params: DegradationParams) -> (f64, f64) {
    let n_w = ctx.window_pixels() as f64;
    let r = ctx.edge_fraction();
    let p1 = params.foreground_density();
    let p_b = params.p_b;
    (r * n_w * p1 * (1.0 - p1), (1.0 - r) * n_w * p_b * (1.0 - p_b))
}

/// `log10` of the predicted NFA of the true-edge candidate: expected number
/// of tests times the background tail at the rounded-up expected count.
///
/// For [`EdgeCase::Dynamic`] `params.p_b` is the merged background density.
pub fn predicted_nfa(ctx: &PredictionContext, params: DegradationParams, case: EdgeCase) -> Result<f64> {
    let (tests, tail) = nfa_factors(ctx, params, case)?;
    Ok(tests + tail)
}

/// `log10` of the expected number of tests and of the tail probability.
///
/// Only the tail is monotone in `p_f`: between two steps of the rounded
/// count the number of tests keeps growing, so the predicted NFA has a small
/// sawtooth of at most `2 log10(1 + 1/M)` per step.
pub fn nfa_factors(ctx: &PredictionContext, params: DegradationParams, case: EdgeCase) -> Result<(f64, f64)> {
    let ctx = ctx.with_case(case);
    ctx.validate()?;
    params.validate()?;
    let n = ctx.window_pixels().saturating_sub(2);
    let k_hat = expected_on_edge_count(&ctx, params).max(0.0).ceil() as u64;
    let tail = log_binomial_tail(k_hat.min(n + 1), n, params.p_b)?;
    let n_t = expected_n_tests(&ctx, params);
    Ok((if n_t > 0.0 { n_t.log10() } else { f64::NEG_INFINITY }, tail))
}

/// One background density of a decision curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p_b: f64,
    pub case: EdgeCase,
    /// Smallest `p_f` predicted detectable; `None` when even `p_f = 1` is not.
    pub p_f_star: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionCurve {
    pub width: u32,
    pub epsilon: f64,
    pub points: Vec<CurvePoint>,
}

/// Bisection tolerance on `p_f`.
pub const CURVE_TOLERANCE: f64 = 1e-4;

/// Crossing `p_f*` of the predicted NFA with `epsilon` for each `(p_b, case)`.
pub fn decision_curve(ctx: &PredictionContext, columns: &[(f64, EdgeCase)], epsilon: f64) -> Result<DecisionCurve> {
    let target = epsilon.log10();
    let ctx = PredictionContext { epsilon, ..*ctx };
    let points = columns
        .iter()
        .map(|&(p_b, case)| {
            let f = |p_f: f64| predicted_nfa(&ctx, DegradationParams { p_b, p_f }, case);
            check_monotone(&ctx, p_b, case)?;
            let p_f_star = if f(1.0)? > target {
                None
            } else if f(0.0)? <= target {
                Some(0.0)
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                while hi - lo > CURVE_TOLERANCE {
                    let mid = 0.5 * (lo + hi);
                    if f(mid)? <= target {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            };
            Ok(CurvePoint { p_b, case, p_f_star })
        })
        .collect::<Result<_>>()?;
    Ok(DecisionCurve {
        width: ctx.candidate_width,
        epsilon,
        points,
    })
}

/// Bisection needs the tail factor to be nonincreasing in `p_f`. The tests
/// factor only adds the sawtooth described on [`nfa_factors`].
fn check_monotone(ctx: &PredictionContext, p_b: f64, case: EdgeCase) -> Result<()> {
    let mut prev = f64::INFINITY;
    for i in 0..=200 {
        let (_, tail) = nfa_factors(ctx, DegradationParams { p_b, p_f: i as f64 / 200.0 }, case)?;
        if tail > prev {
            return Err(Error::InvalidParameter(format!(
                "predicted tail is not monotone in p_f at p_b = {p_b}"
            )));
        }
        prev = tail;
    }
    Ok(())
}

/// Columns `(p_b, Static)`.
pub fn static_columns(p_bs: &[f64]) -> Vec<(f64, EdgeCase)> {
    p_bs.iter().map(|&p| (p, EdgeCase::Static)).collect()
}

/// Columns of a moving edge merged over `t` frames of single-frame
/// background density `p_b1`.
pub fn dynamic_columns(p_b1: f64, ts: impl IntoIterator<Item = u32>) -> Vec<(f64, EdgeCase)> {
    ts.into_iter()
        .map(|t| (union_probability(p_b1, t), EdgeCase::Dynamic { frames: t }))
        .collect()
}

/// Smallest `k` with `n_tests P(Bin(len, p) >= k) <= epsilon`, or `len + 1`
/// when no count is rare enough.
pub fn bitstring_threshold(n_tests: f64, len: u64, p: f64, epsilon: f64) -> Result<u64> {
    if len == 0 {
        return Err(Error::InvalidParameter("bit string must be nonempty".into()));
    }
    if !(epsilon > 0.0) || !(n_tests >= 0.0) {
        return Err(Error::InvalidParameter("epsilon must be positive and n_tests nonnegative".into()));
    }
    if n_tests == 0.0 {
        return Ok(0);
    }
    let bound = epsilon.log10() - n_tests.log10();
    for k in 0..=len {
        if log_binomial_tail(k, len, p)? <= bound {
            return Ok(k);
        }
    }
    Ok(len + 1)
}

/// Probability that a degraded string of `len` foreground bits reaches the
/// detection threshold.
pub fn bitstring_success_probability(n_tests: f64, len: u64, params: DegradationParams, epsilon: f64) -> Result<f64> {
    let k = bitstring_threshold(n_tests, len, params.p_b, epsilon)?;
    Ok(10f64.powf(log_binomial_tail(k, len, params.foreground_density())?))
}

/// Predicted decision for the bit string: NFA of the expected count.
pub fn bitstring_predicted_nfa(n_tests: f64, len: u64, params: DegradationParams) -> Result<f64> {
    let k_hat = (len as f64 * params.foreground_density()).ceil() as u64;
    Ok(n_tests.log10() + log_binomial_tail(k_hat.min(len + 1), len, params.p_b)?)
}

/// Number of tests of the bit-string example with `len`-bit windows.
pub fn bitstring_tests(m_white: u64) -> f64 {
    n_tests(m_white, 1)
}
