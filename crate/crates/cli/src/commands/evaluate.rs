use std::collections::BTreeMap;
use std::path::PathBuf;

use dotedge::dataset::{DatasetKind, DatasetManifest, MANIFEST_FILE};
use dotedge::evaluation::{
    build_grid, build_tpr_curve, empirical_threshold, read_response_log, score_click, score_detection, Response,
    ScoringCase,
};
use serde::{Deserialize, Serialize};

use crate::args::EvaluateArgs;
use crate::commands::DetectionRecord;
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir, read_jsonl, write_csv, Provenance};

#[derive(Serialize)]
struct GridRow {
    p_b: f64,
    p_f: f64,
    hits: u64,
    count: u64,
    hit_rate: f64,
}

#[derive(Serialize)]
struct ThresholdRow {
    p_b: f64,
    v: f64,
}

/// Row of `tpr.csv`; also what `fit` reads back.
#[derive(Serialize, Deserialize)]
pub struct TprRow {
    pub p_f: f64,
    pub tpr: f64,
    pub count: u64,
}

#[derive(Serialize)]
struct ConfusionRow {
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
    fpr: f64,
}

fn scoring_case(kind: DatasetKind) -> ScoringCase {
    match kind {
        DatasetKind::DynamicMergedImage => ScoringCase::DynamicMerged,
        _ => ScoringCase::Static,
    }
}

pub fn run(args: &EvaluateArgs) -> Result<String> {
    let manifest = DatasetManifest::read(&args.data.join(MANIFEST_FILE))?;
    let kind = manifest.kind;
    let mut prov = Provenance::new("evaluate");
    prov.push("dataset_kind", kind.name()).push("dataset_seed", manifest.seed);

    // (stimulus id, 0-1 outcome): hit for images, "yes" for videos.
    let outcomes: Vec<(String, bool)> = if let Some(path) = &args.detections {
        prov.push("source", "detections");
        detection_outcomes(path, &manifest)?
    } else {
        let path = args.responses.as_ref().expect("clap requires one source");
        prov.push("source", "responses");
        if let Some(s) = &args.subject {
            prov.push("subject", s);
        }
        response_outcomes(path, &manifest, args.subject.as_deref())?
    };

    let dir = out_dir(args.common.out.as_deref(), &format!("evaluate-{}", kind.name()));
    create_dir(&dir)?;
    if kind.is_video() {
        let curve = build_tpr_curve(&outcomes, &manifest)?;
        let rows: Vec<TprRow> = curve
            .points
            .iter()
            .map(|p| TprRow {
                p_f: p.p_f,
                tpr: p.tpr,
                count: p.count,
            })
            .collect();
        write_csv(&dir.join("tpr.csv"), &prov, &["p_f", "tpr", "count"], &rows)?;
        let c = curve.confusion;
        let confusion = [ConfusionRow {
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            fpr: curve.fpr,
        }];
        write_csv(&dir.join("confusion.csv"), &prov, &["tp", "fp", "tn", "fn", "fpr"], &confusion)?;
        Ok(format!(
            "TPR over {} p_f values, FPR {:.4}, written to {}",
            rows.len(),
            curve.fpr,
            dir.display()
        ))
    } else {
        let grid = build_grid(&outcomes, &manifest)?;
        let rows: Vec<GridRow> = grid
            .rows()
            .map(|(p_b, p_f, hits, count, hit_rate)| GridRow {
                p_b,
                p_f,
                hits,
                count,
                hit_rate,
            })
            .collect();
        write_csv(&dir.join("grid.csv"), &prov, &["p_b", "p_f", "hits", "count", "hit_rate"], &rows)?;
        let thresholds = grid
            .p_b_values()
            .into_iter()
            .map(|p_b| Ok(ThresholdRow { p_b, v: empirical_threshold(&grid, p_b)? }))
            .collect::<Result<Vec<_>>>()?;
        write_csv(&dir.join("thresholds.csv"), &prov, &["p_b", "v"], &thresholds)?;
        Ok(format!("{} grid cells and {} thresholds in {}", rows.len(), thresholds.len(), dir.display()))
    }
}

fn detection_outcomes(path: &std::path::Path, manifest: &DatasetManifest) -> Result<Vec<(String, bool)>> {
    let file: PathBuf = if path.is_dir() { path.join("detections.jsonl") } else { path.to_path_buf() };
    let records: Vec<DetectionRecord> = read_jsonl(&file)?;
    let mut by_id: BTreeMap<&str, Vec<&DetectionRecord>> = BTreeMap::new();
    for r in &records {
        by_id.entry(&r.stimulus_id).or_default().push(r);
    }
    let case = scoring_case(manifest.kind);
    by_id
        .into_iter()
        .map(|(id, recs)| {
            let outcome = if manifest.kind.is_video() {
                recs.iter().any(|r| r.detection.candidate.is_some())
            } else {
                let [r] = recs.as_slice() else {
                    return Err(CliError::Schema(format!("{} detections for image {id}", recs.len())));
                };
                let entry = manifest
                    .entry(id)
                    .ok_or_else(|| CliError::Schema(format!("detection for unknown stimulus {id}")))?;
                score_detection(&r.detection, entry.edge.as_ref().filter(|_| entry.has_edge), case)
            };
            Ok((id.to_string(), outcome))
        })
        .collect()
}

fn response_outcomes(
    path: &std::path::Path,
    manifest: &DatasetManifest,
    subject: Option<&str>,
) -> Result<Vec<(String, bool)>> {
    let case = scoring_case(manifest.kind);
    let mut out = Vec::new();
    for record in read_response_log(path)? {
        if subject.is_some_and(|s| s != record.subject) || !record.response.is_final() {
            continue;
        }
        let id = record.response.stimulus_id().to_string();
        let entry = manifest
            .entry(&id)
            .ok_or_else(|| CliError::Schema(format!("response to unknown stimulus {id}")))?;
        let outcome = match (&record.response, manifest.kind.is_video()) {
            (Response::Click(c), false) => score_click(c, entry.edge.as_ref().filter(|_| entry.has_edge), case)?,
            (Response::YesNo(y), true) => y.answer.is_yes(),
            _ => {
                return Err(CliError::Schema(format!(
                    "response to {id} does not match the {} task",
                    manifest.kind.name()
                )))
            }
        };
        out.push((id, outcome));
    }
    Ok(out)
}
