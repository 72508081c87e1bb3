use std::path::Path;

use dotedge::dataset::{load_stimulus, DatasetManifest, Stimulus, MANIFEST_FILE};
use dotedge::detector::{detect_in_merged, detect_in_video, Detection, DetectorConfig, PairSampling};
use dotedge::merge::MergeWindow;
use dotedge::rng::{derive_seed, stream, Domain};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{DetectArgs, WindowsArg};
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir, write_csv, write_jsonl, Provenance};

/// One line of `detections.jsonl`: the full detector output of one merge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub stimulus_id: String,
    pub window: usize,
    pub detection: Detection,
}

#[derive(Serialize)]
struct Row<'a> {
    stimulus_id: &'a str,
    window: usize,
    time_index: usize,
    detected: u8,
    width: Option<u32>,
    k: Option<u64>,
    n: Option<u64>,
    log10_nfa: Option<f64>,
    x0: Option<f64>,
    y0: Option<f64>,
    x1: Option<f64>,
    y1: Option<f64>,
    n_tests: f64,
    white_count: u64,
}

const HEADERS: [&str; 14] = [
    "stimulus_id",
    "window",
    "time_index",
    "detected",
    "width",
    "k",
    "n",
    "log10_nfa",
    "x0",
    "y0",
    "x1",
    "y1",
    "n_tests",
    "white_count",
];

/// Detector settings recorded in the output provenance.
#[derive(Serialize)]
struct Settings<'a> {
    epsilon: f64,
    edge_length: f64,
    widths: &'a [u32],
    n_f: usize,
    sampling: PairSampling,
    windows: &'static str,
    stride: usize,
}

pub fn run(args: &DetectArgs) -> Result<String> {
    let manifest = DatasetManifest::read(&args.data.join(MANIFEST_FILE))?;
    let video = manifest.kind.is_video();
    if !video && args.nf != 1 {
        return Err(CliError::Usage("--nf applies to video datasets only; images are already merged".into()));
    }
    let sampling = if args.exhaustive {
        PairSampling::Exhaustive
    } else {
        PairSampling::Random(args.iters)
    };
    let base = DetectorConfig {
        epsilon: args.eps,
        edge_length: args.length,
        widths: args.widths.clone(),
        n_f: args.nf,
        sampling,
        oracle_p_b: 0.0,
        seed: args.seed,
    };
    base.validate()?;
    let stride = match args.windows {
        WindowsArg::First => args.nf,
        WindowsArg::All => args.stride.unwrap_or(args.nf),
    };
    if stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }

    let records: Vec<Vec<DetectionRecord>> = manifest
        .entries
        .par_iter()
        .enumerate()
        .map(|(i, entry)| {
            let config = DetectorConfig {
                oracle_p_b: entry.params.p_b,
                ..base.clone()
            };
            detect_entry(&args.data, &manifest, i, entry, config, args.windows, stride)
        })
        .collect::<Result<_>>()?;
    let records: Vec<DetectionRecord> = records.into_iter().flatten().collect();

    let dir = out_dir(args.common.out.as_deref(), &format!("detect-{}-seed{}", manifest.kind.name(), args.seed));
    create_dir(&dir)?;
    let mut prov = Provenance::new("detect");
    prov.push("dataset_kind", manifest.kind.name())
        .push("dataset_seed", manifest.seed)
        .push("seed", args.seed)
        .push_json(
            "detector",
            &Settings {
                epsilon: args.eps,
                edge_length: args.length,
                widths: &args.widths,
                n_f: args.nf,
                sampling,
                windows: match args.windows {
                    WindowsArg::First => "first",
                    WindowsArg::All => "all",
                },
                stride,
            },
        );
    let rows: Vec<Row> = records.iter().map(row).collect();
    write_csv(&dir.join("detections.csv"), &prov, &HEADERS, &rows)?;
    write_jsonl(&dir.join("detections.jsonl"), &records)?;
    let found = records.iter().filter(|r| r.detection.candidate.is_some()).count();
    Ok(format!(
        "{found} detections in {} merges of {} stimuli, written to {}",
        records.len(),
        manifest.entries.len(),
        dir.display()
    ))
}

fn detect_entry(
    root: &Path,
    manifest: &DatasetManifest,
    index: usize,
    entry: &dotedge::dataset::ManifestEntry,
    mut config: DetectorConfig,
    windows: WindowsArg,
    stride: usize,
) -> Result<Vec<DetectionRecord>> {
    let max_frames = (windows == WindowsArg::First).then_some(config.n_f);
    let detections = match load_stimulus(root, manifest.kind, entry, max_frames)? {
        Stimulus::Image(img) => {
            let mut rng = stream(config.seed, Domain::Detector, index as u64);
            vec![detect_in_merged(&img, &config, &mut rng)?]
        }
        Stimulus::Video(frames) => {
            config.seed = derive_seed(config.seed, Domain::Detector, index as u64);
            detect_in_video(&frames, &config, stride, MergeWindow::centered(config.n_f))?
        }
    };
    Ok(detections
        .into_iter()
        .enumerate()
        .map(|(window, detection)| DetectionRecord {
            stimulus_id: entry.id.clone(),
            window,
            detection,
        })
        .collect())
}

fn row(r: &DetectionRecord) -> Row<'_> {
    let d = &r.detection;
    let c = d.candidate.as_ref();
    Row {
        stimulus_id: &r.stimulus_id,
        window: r.window,
        time_index: d.time_index,
        detected: u8::from(c.is_some()),
        width: c.map(|c| c.width),
        k: c.map(|c| c.k),
        n: c.map(|c| c.n),
        log10_nfa: c.map(|c| c.log10_nfa),
        x0: c.map(|c| c.axis[0].x),
        y0: c.map(|c| c.axis[0].y),
        x1: c.map(|c| c.axis[1].x),
        y1: c.map(|c| c.axis[1].y),
        n_tests: d.n_tests,
        white_count: d.white_count,
    }
}
