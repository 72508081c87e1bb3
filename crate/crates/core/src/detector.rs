//! A contrario line detection on merged binary frames.
//!
//! A candidate is a rectangle of length `L_e` and width `w` whose axis passes
//! through two white support pixels. Its count `k` of other white pixels is
//! compared against `Binomial(round(L_e w) - 2, p_b)`; the number of tests is
//! one per white pair and width.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binomial::{log10_nfa, n_tests};
use crate::error::{Error, Result};
use crate::geometry::{pixel_center, OrientedRect, Point};
use crate::image::{BinaryImage, Pixel};
use crate::merge::{merge_frames, union_probability, MergeWindow};
use crate::rng::{stream, Domain};

/// How support pairs are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSampling {
    /// That many pairs drawn uniformly among white pairs at distance `<= L_e`.
    Random(usize),
    /// Every white pair at distance `<= L_e`.
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Tolerated expected number of false alarms.
    pub epsilon: f64,
    pub edge_length: f64,
    pub widths: Vec<u32>,
    /// Frames merged before detection.
    pub n_f: usize,
    pub sampling: PairSampling,
    /// Background density of a single frame.
    pub oracle_p_b: f64,
    pub seed: u64,
}

impl DetectorConfig {
    pub const DEFAULT_ITERATIONS: usize = 20_000;

    pub fn new(edge_length: f64, widths: Vec<u32>, oracle_p_b: f64) -> Self {
        Self {
            epsilon: 1.0,
            edge_length,
            widths,
            n_f: 1,
            sampling: PairSampling::Random(Self::DEFAULT_ITERATIONS),
            oracle_p_b,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.edge_length >= 2.0) {
            return bad(format!("edge length must be at least 2, got {}", self.edge_length));
        }
        if self.widths.is_empty() || self.widths.contains(&0) {
            return bad("widths must be a nonempty set of positive integers".into());
        }
        if self.n_f == 0 {
            return bad("n_f must be at least 1".into());
        }
        crate::params::check_probability("oracle p_b", self.oracle_p_b)
    }

    /// Background density of an `n_f`-frame merge.
    pub fn merged_p_b(&self) -> f64 {
        union_probability(self.oracle_p_b, self.n_f as u32)
    }

    /// Binomial trial count of a width-`w` candidate, supports excluded.
    pub fn trials(&self, width: u32) -> u64 {
        ((self.edge_length * width as f64).round() as u64).saturating_sub(2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub support: [Pixel; 2],
    /// Ends of the rectangle's axis.
    pub axis: [Point; 2],
    pub width: u32,
    pub rect: OrientedRect,
    pub k: u64,
    pub n: u64,
    pub log10_nfa: f64,
}

impl Candidate {
    pub fn nfa(&self) -> f64 {
        10f64.powf(self.log10_nfa)
    }

    pub fn angle(&self) -> f64 {
        self.rect.angle()
    }
}

/// Best candidate of one width, reported whether or not it is meaningful.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSummary {
    pub width: u32,
    pub k: u64,
    pub log10_nfa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub candidate: Option<Candidate>,
    pub n_tests: f64,
    pub white_count: u64,
    pub time_index: usize,
    pub per_width: Vec<WidthSummary>,
}

/// Number of white pixels whose centers lie in `rect`, not counting the two
/// supports.
pub fn count_in_rect(image: &BinaryImage, rect: &OrientedRect, exclude: [Pixel; 2]) -> u64 {
    rect.pixels(image.width(), image.height())
        .into_iter()
        .filter(|&p| image.get(p.0 as usize, p.1 as usize) && p != exclude[0] && p != exclude[1])
        .count() as u64
}

/// Offsets of the rectangle start relative to the first support, from "first
/// support at the start" to "second support at the end", in 1 px steps.
pub fn slide_starts(distance: f64, length: f64) -> impl Iterator<Item = f64> {
    let slack = (length - distance).max(0.0);
    (0..=slack.ceil() as usize).map(move |j| -(j as f64).min(slack))
}

#[inline]
fn support_distance(a: Pixel, b: Pixel) -> f64 {
    (b.0 as f64 - a.0 as f64).hypot(b.1 as f64 - a.1 as f64)
}

/// Ordering key of candidates: NFA, then count, then supports, then width.
#[derive(Clone, Copy, Debug)]
struct Scored {
    log10_nfa: f64,
    k: u64,
    a: Pixel,
    b: Pixel,
    width: u32,
    start: f64,
}

impl Scored {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.log10_nfa
            .total_cmp(&other.log10_nfa)
            .then(self.k.cmp(&other.k))
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
            .then(self.width.cmp(&other.width))
    }
}

/// Per-width best: largest count, then smallest supports.
#[derive(Clone, Copy, Debug)]
struct PairBest {
    k: u64,
    a: Pixel,
    b: Pixel,
    start: f64,
}

fn better_count(x: &PairBest, y: &PairBest) -> bool {
    (std::cmp::Reverse(x.k), x.a, x.b) < (std::cmp::Reverse(y.k), y.a, y.b)
}

/// Largest count over the slides of the pair `a < b` at one width, with the
/// middle slide reaching it.
fn best_slide(image: &BinaryImage, a: Pixel, b: Pixel, length: f64, width: u32, alongs: &mut Vec<f64>) -> PairBest {
    let d = support_distance(a, b);
    let hull_start = d - length;
    let frame = OrientedRect::through(a, b, hull_start, 2.0 * length - d, width as f64);
    alongs.clear();
    for_each_band_pixel(image, &frame, |p| {
        if p == a || p == b {
            return;
        }
        let (along, across) = frame.project(pixel_center(p));
        if frame.contains_across(across) {
            alongs.push(along);
        }
    });
    alongs.sort_unstable_by(f64::total_cmp);
    let mut best_k = 0;
    let mut ties: Vec<f64> = Vec::new();
    for start in slide_starts(d, length) {
        let slide = OrientedRect { start, length, ..frame };
        let lo = alongs.partition_point(|&x| !(slide.start <= x));
        let hi = alongs.partition_point(|&x| x < slide.start + slide.length);
        let k = (hi - lo) as u64;
        if ties.is_empty() || k > best_k {
            best_k = k;
            ties.clear();
        }
        if k == best_k {
            ties.push(start);
        }
    }
    PairBest { k: best_k, a, b, start: middle_slide(&ties) }
}

/// Middle of the slides sharing the largest count, the earlier of two middles.
fn middle_slide(ties: &[f64]) -> f64 {
    ties[(ties.len() - 1) / 2]
}

/// Calls `f` on the white pixels near `rect`: a superset of those whose
/// centers lie in it, visited column by column (or row by row for steep
/// axes).
fn for_each_band_pixel(image: &BinaryImage, rect: &OrientedRect, mut f: impl FnMut(Pixel)) {
    let Some((x0, y0, x1, y1)) = rect.pixel_bounds(image.width(), image.height()) else {
        return;
    };
    let (ux, uy) = rect.dir;
    let half = 0.5 * rect.width;
    let o = rect.origin;
    let w = image.width();
    let bits = image.bits();
    if ux.abs() >= uy.abs() {
        // across = (cy - oy) ux - (cx - ox) uy, solved for the row center cy.
        for x in x0..=x1 {
            let cx = x as f64 + 0.5;
            let base = o.y + (cx - o.x) * uy / ux;
            let spread = half / ux.abs();
            let lo = ((base - spread - 0.5).floor() - 1.0).max(y0 as f64) as usize;
            let hi = ((base + spread - 0.5).ceil() + 1.0).min(y1 as f64);
            if hi < lo as f64 {
                continue;
            }
            for y in lo..=hi as usize {
                if bits[y * w + x] {
                    f((x as u32, y as u32));
                }
            }
        }
    } else {
        for y in y0..=y1 {
            let cy = y as f64 + 0.5;
            let base = o.x + (cy - o.y) * ux / uy;
            let spread = half / uy.abs();
            let lo = ((base - spread - 0.5).floor() - 1.0).max(x0 as f64) as usize;
            let hi = ((base + spread - 0.5).ceil() + 1.0).min(x1 as f64);
            if hi < lo as f64 {
                continue;
            }
            let row = &bits[y * w..(y + 1) * w];
            for x in lo..=hi as usize {
                if row[x] {
                    f((x as u32, y as u32));
                }
            }
        }
    }
}

/// Support pairs to score, each ordered so that the first pixel is smaller.
fn support_pairs<R: Rng + ?Sized>(whites: &[Pixel], config: &DetectorConfig, rng: &mut R) -> Vec<(Pixel, Pixel)> {
    let order = |p: Pixel, q: Pixel| if p < q { (p, q) } else { (q, p) };
    let m = whites.len();
    match config.sampling {
        PairSampling::Exhaustive => {
            let mut pairs = Vec::new();
            for i in 0..m {
                for j in i + 1..m {
                    if support_distance(whites[i], whites[j]) <= config.edge_length {
                        pairs.push(order(whites[i], whites[j]));
                    }
                }
            }
            pairs
        }
        PairSampling::Random(iterations) => {
            // Rejection attempts per iteration before giving up on an image
            // with almost no close pairs.
            const MAX_ATTEMPTS: usize = 1000;
            let mut pairs = Vec::with_capacity(iterations);
            for _ in 0..iterations {
                for _ in 0..MAX_ATTEMPTS {
                    let i = rng.random_range(0..m);
                    let j = rng.random_range(0..m - 1);
                    let j = if j >= i { j + 1 } else { j };
                    if support_distance(whites[i], whites[j]) <= config.edge_length {
                        pairs.push(order(whites[i], whites[j]));
                        break;
                    }
                }
            }
            pairs
        }
    }
}

/// Runs the detector on one merged frame.
///
/// The background density of the image is taken to be
/// [`DetectorConfig::merged_p_b`].
pub fn detect_in_merged<R: Rng + ?Sized>(image: &BinaryImage, config: &DetectorConfig, rng: &mut R) -> Result<Detection> {
    config.validate()?;
    let whites = image.white_pixels();
    let m = whites.len() as u64;
    let n_t = n_tests(m, config.widths.len());
    let mut detection = Detection {
        candidate: None,
        n_tests: n_t,
        white_count: m,
        time_index: 0,
        per_width: Vec::new(),
    };
    if m < 2 {
        return Ok(detection);
    }
    let p_b = config.merged_p_b();
    let pairs = support_pairs(&whites, config, rng);
    if pairs.is_empty() {
        return Ok(detection);
    }

    let mut overall: Option<Scored> = None;
    for &width in &config.widths {
        let best = pairs
            .par_chunks(256)
            .map(|chunk| {
                let mut alongs = Vec::new();
                chunk
                    .iter()
                    .map(|&(a, b)| best_slide(image, a, b, config.edge_length, width, &mut alongs))
                    .reduce(|x, y| if better_count(&y, &x) { y } else { x })
                    .expect("nonempty chunk")
            })
            .reduce_with(|x, y| if better_count(&y, &x) { y } else { x })
            .expect("nonempty pairs");
        let n = config.trials(width);
        let log10 = log10_nfa(best.k.min(n + 1), n, p_b, n_t)?;
        detection.per_width.push(WidthSummary { width, k: best.k, log10_nfa: log10 });
        let scored = Scored {
            log10_nfa: log10,
            k: best.k,
            a: best.a,
            b: best.b,
            width,
            start: best.start,
        };
        if overall.is_none_or(|o| scored.cmp_key(&o).is_lt()) {
            overall = Some(scored);
        }
    }

    let best = overall.expect("at least one width");
    if best.log10_nfa <= config.epsilon.log10() {
        let rect = OrientedRect::through(best.a, best.b, best.start, config.edge_length, best.width as f64);
        let (p, q) = rect.axis_endpoints();
        detection.candidate = Some(Candidate {
            support: [best.a, best.b],
            axis: [p, q],
            width: best.width,
            rect,
            k: best.k,
            n: config.trials(best.width),
            log10_nfa: best.log10_nfa,
        });
    }
    Ok(detection)
}

/// Merges windows of `n_f` frames every `stride` frames and runs the
/// detector on each merge. Window `i` draws its pairs from its own stream of
/// `config.seed`.
pub fn detect_in_video(frames: &[BinaryImage], config: &DetectorConfig, stride: usize, window: MergeWindow) -> Result<Vec<Detection>> {
    config.validate()?;
    if window.n_f != config.n_f {
        return Err(Error::InvalidParameter(format!(
            "window of {} frames does not match n_f = {}",
            window.n_f, config.n_f
        )));
    }
    if frames.len() < config.n_f {
        return Err(Error::InvalidParameter(format!(
            "{} frames are fewer than n_f = {}",
            frames.len(),
            config.n_f
        )));
    }
    window
        .starts(frames.len(), stride)
        .enumerate()
        .map(|(i, start)| {
            let merged = merge_frames(&frames[start..start + config.n_f])?;
            let mut rng = stream(config.seed, Domain::Detector, i as u64);
            let mut det = detect_in_merged(&merged, config, &mut rng)?;
            det.time_index = window.time_index(start);
            Ok(det)
        })
        .collect()
}
