//! The four stimulus sets and their manifests.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::image::BinaryImage;
use crate::merge::union_probability;
use crate::params::DegradationParams;
use crate::pbm;
use crate::rng::{stream, Domain};
use crate::synthesis::{degrade_image, degrade_video, rasterize_edge, sample_pose, EdgeSpec, VideoSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

pub const CANVAS: (usize, usize) = (300, 300);
pub const EDGE_LENGTH: f64 = 200.0;
/// Single-frame background density of the moving-edge and video sets.
pub const VIDEO_P_B: f64 = 0.005;
const STATIC_P_B_MILLI: [u32; 6] = [5, 10, 20, 30, 40, 50];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    StaticImage,
    DynamicMergedImage,
    StaticVideo,
    DynamicVideo,
}

impl DatasetKind {
    pub const ALL: [DatasetKind; 4] = [
        DatasetKind::StaticImage,
        DatasetKind::DynamicMergedImage,
        DatasetKind::StaticVideo,
        DatasetKind::DynamicVideo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::StaticImage => "static-image",
            DatasetKind::DynamicMergedImage => "dynamic-merged-image",
            DatasetKind::StaticVideo => "static-video",
            DatasetKind::DynamicVideo => "dynamic-video",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_video(self) -> bool {
        matches!(self, DatasetKind::StaticVideo | DatasetKind::DynamicVideo)
    }

    /// Stimuli per parameter configuration in the full-size set.
    pub fn paper_per_config(self) -> usize {
        if self.is_video() {
            20
        } else {
            5
        }
    }

    fn id_prefix(self) -> &'static str {
        match self {
            DatasetKind::StaticImage => "si",
            DatasetKind::DynamicMergedImage => "dm",
            DatasetKind::StaticVideo => "sv",
            DatasetKind::DynamicVideo => "dv",
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Relative to the manifest: a bitmap for images, a frame directory for
    /// videos.
    pub path: String,
    /// Degradation of the stored stimulus (per frame for videos).
    pub params: DegradationParams,
    /// Ground truth; for videos the pose of the first jump segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<EdgeSpec>,
    /// Video poses, one per jump segment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub poses: Vec<EdgeSpec>,
    /// Frames merged into the stored image (1 for single frames).
    pub merge_count: u32,
    pub has_edge: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub kind: DatasetKind,
    pub seed: u64,
    pub canvas: (usize, usize),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video: Option<VideoSpec>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "manifest schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::Schema(format!("duplicate stimulus id {}", e.id)));
            }
            if !e.has_edge && (e.edge.is_some() || !e.poses.is_empty()) {
                return Err(Error::Schema(format!("noise stimulus {} carries an edge", e.id)));
            }
            if e.has_edge && e.edge.is_none() {
                return Err(Error::Schema(format!("edge stimulus {} has no ground truth", e.id)));
            }
            e.params.validate().map_err(|err| Error::Schema(format!("{}: {err}", e.id)))?;
        }
        Ok(())
    }

    pub fn entry(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// One stimulus to synthesize.
#[derive(Clone, Debug, PartialEq)]
pub struct StimulusPlan {
    pub index: u64,
    pub id: String,
    pub params: DegradationParams,
    pub merge_count: u32,
    pub has_edge: bool,
}

fn milli(v: u32) -> f64 {
    f64::from(v) / 1000.0
}

/// `p_f` grid of the moving-edge and video sets: 0.015 to 0.07 by 0.005.
pub fn video_p_f_grid() -> Vec<f64> {
    (15..=70).step_by(5).map(milli).collect()
}

/// `p_f` grid of the static-image set: 0.02 to 0.25 by 0.01.
pub fn static_p_f_grid() -> Vec<f64> {
    (20..=250).step_by(10).map(milli).collect()
}

pub fn static_p_b_grid() -> Vec<f64> {
    STATIC_P_B_MILLI.iter().copied().map(milli).collect()
}

/// Sampling plan of `kind` with `per_config` stimuli per configuration (per
/// edge configuration and as many noise videos for the video sets).
pub fn plan(kind: DatasetKind, per_config: usize) -> Vec<StimulusPlan> {
    let mut configs: Vec<(DegradationParams, u32, bool)> = Vec::new();
    match kind {
        DatasetKind::StaticImage => {
            for p_b in STATIC_P_B_MILLI {
                for p_f in (20..=250u32).step_by(10).filter(|&p_f| p_f >= 2 * p_b) {
                    configs.push((DegradationParams { p_b: milli(p_b), p_f: milli(p_f) }, 1, true));
                }
            }
        }
        DatasetKind::DynamicMergedImage => {
            for t in 1..=10 {
                for p_f in video_p_f_grid() {
                    let p_b = union_probability(VIDEO_P_B, t);
                    configs.push((DegradationParams { p_b, p_f }, t, true));
                }
            }
        }
        DatasetKind::StaticVideo | DatasetKind::DynamicVideo => {
            for p_f in video_p_f_grid() {
                configs.push((DegradationParams { p_b: VIDEO_P_B, p_f }, 1, true));
            }
            let noise = configs.len();
            for _ in 0..noise {
                configs.push((DegradationParams { p_b: VIDEO_P_B, p_f: 0.0 }, 1, false));
            }
        }
    }
    let mut out = Vec::with_capacity(configs.len() * per_config);
    for (params, merge_count, has_edge) in configs {
        for _ in 0..per_config {
            let index = out.len() as u64;
            out.push(StimulusPlan {
                index,
                id: format!("{}-{:04}", kind.id_prefix(), index),
                params,
                merge_count,
                has_edge,
            });
        }
    }
    out
}

/// A synthesized stimulus.
#[derive(Clone, Debug, PartialEq)]
pub enum Stimulus {
    Image(BinaryImage),
    Video(Vec<BinaryImage>),
}

/// Synthesizes one planned stimulus from its own random stream of `seed`.
pub fn synthesize(kind: DatasetKind, plan: &StimulusPlan, seed: u64) -> Result<(Stimulus, ManifestEntry)> {
    let mut rng = stream(seed, Domain::Stimulus, plan.index);
    let mut entry = ManifestEntry {
        id: plan.id.clone(),
        path: String::new(),
        params: plan.params,
        edge: None,
        poses: Vec::new(),
        merge_count: plan.merge_count,
        has_edge: plan.has_edge,
    };
    let center = Point::new(CANVAS.0 as f64 / 2.0, CANVAS.1 as f64 / 2.0);
    let stimulus = match kind {
        DatasetKind::StaticImage | DatasetKind::DynamicMergedImage => {
            let template = EdgeSpec::fixed(center, 0.0, EDGE_LENGTH, f64::from(plan.merge_count));
            let edge = sample_pose(&template, CANVAS, 1, &mut rng)?;
            let clean = rasterize_edge(&edge, CANVAS, 0)?;
            entry.edge = Some(edge);
            entry.path = format!("images/{}.pbm", plan.id);
            Stimulus::Image(degrade_image(&clean, plan.params, &mut rng))
        }
        DatasetKind::StaticVideo | DatasetKind::DynamicVideo => {
            let video = VideoSpec::PAPER;
            let first = if plan.has_edge {
                let mut template = EdgeSpec::fixed(center, 0.0, EDGE_LENGTH, 1.0);
                if kind == DatasetKind::DynamicVideo {
                    template.velocity = 1.0;
                }
                let frames = video.jump_period.min(video.frame_count() as u32);
                Some(sample_pose(&template, CANVAS, frames, &mut rng)?)
            } else {
                None
            };
            let v = degrade_video(first.as_ref(), video, plan.params, CANVAS, &mut rng)?;
            entry.edge = first;
            entry.poses = v.poses;
            entry.path = format!("frames/{}", plan.id);
            Stimulus::Video(v.frames)
        }
    };
    Ok((stimulus, entry))
}

/// Synthesizes every stimulus of the plan and writes the files plus the
/// manifest under `out_dir`.
pub fn generate_dataset(kind: DatasetKind, seed: u64, per_config: usize, out_dir: &Path) -> Result<DatasetManifest> {
    let sub = if kind.is_video() { "frames" } else { "images" };
    fs::create_dir_all(out_dir.join(sub)).map_err(|e| Error::io(out_dir.join(sub), e))?;
    let entries = plan(kind, per_config)
        .par_iter()
        .map(|p| {
            let (stimulus, entry) = synthesize(kind, p, seed)?;
            write_stimulus(&out_dir.join(&entry.path), &stimulus)?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        schema_version: SCHEMA_VERSION,
        kind,
        seed,
        canvas: CANVAS,
        video: kind.is_video().then_some(VideoSpec::PAPER),
        entries,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// File name of frame `i` inside a video directory.
pub fn frame_file(i: usize) -> String {
    format!("{i:03}.pbm")
}

pub fn write_stimulus(path: &Path, stimulus: &Stimulus) -> Result<()> {
    match stimulus {
        Stimulus::Image(img) => pbm::write(path, img),
        Stimulus::Video(frames) => {
            fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
            frames
                .iter()
                .enumerate()
                .try_for_each(|(i, f)| pbm::write(&path.join(frame_file(i)), f))
        }
    }
}

/// Loads the stimulus of `entry` from a dataset rooted at `root`.
pub fn load_stimulus(root: &Path, kind: DatasetKind, entry: &ManifestEntry, max_frames: Option<usize>) -> Result<Stimulus> {
    let path = root.join(&entry.path);
    if !kind.is_video() {
        return Ok(Stimulus::Image(pbm::read(&path)?));
    }
    let mut frames = Vec::new();
    loop {
        if max_frames.is_some_and(|m| frames.len() >= m) {
            break;
        }
        let f = path.join(frame_file(frames.len()));
        if !f.exists() {
            break;
        }
        frames.push(pbm::read(&f)?);
    }
    if frames.is_empty() {
        return Err(Error::io(&path, std::io::Error::new(std::io::ErrorKind::NotFound, "no frames")));
    }
    Ok(Stimulus::Video(frames))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_sizes() {
        assert_eq!(plan(DatasetKind::StaticImage, 5).len(), 620);
        assert_eq!(plan(DatasetKind::DynamicMergedImage, 5).len(), 600);
        for kind in [DatasetKind::StaticVideo, DatasetKind::DynamicVideo] {
            let p = plan(kind, 20);
            assert_eq!(p.len(), 480);
            assert_eq!(p.iter().filter(|s| s.has_edge).count(), 240);
        }
    }

    #[test]
    fn skip_rule() {
        for s in plan(DatasetKind::StaticImage, 5) {
            assert!(s.params.p_f >= 2.0 * s.params.p_b - 1e-12, "{s:?}");
        }
    }

    #[test]
    fn grids() {
        assert_eq!(static_p_f_grid().len(), 24);
        assert_eq!(video_p_f_grid().len(), 12);
        assert_eq!(video_p_f_grid()[11], 0.07);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in DatasetKind::ALL {
            assert_eq!(DatasetKind::parse(k.name()), Some(k));
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn manifest_validation() {
        let (_, mut entry) = synthesize(DatasetKind::StaticImage, &plan(DatasetKind::StaticImage, 1)[0], 3).unwrap();
        let mut m = DatasetManifest {
            schema_version: SCHEMA_VERSION,
            kind: DatasetKind::StaticImage,
            seed: 3,
            canvas: CANVAS,
            video: None,
            entries: vec![entry.clone(), entry.clone()],
        };
        assert!(m.validate().is_err());
        m.entries.pop();
        assert!(m.validate().is_ok());
        entry.has_edge = false;
        m.entries = vec![entry];
        assert!(m.validate().is_err());
        m.entries.clear();
        m.schema_version = 99;
        assert!(matches!(m.validate(), Err(Error::Schema(_))));
    }
}
