use std::fs;

use dotedge::merge::{merge_frames, Alignment, MergeWindow};
use dotedge::pbm;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AlignArg, MergeArgs};
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir, write_csv, Provenance};

#[derive(Serialize)]
struct WindowRow {
    window: usize,
    start: usize,
    time_index: usize,
    white_count: usize,
    file: String,
}

pub fn run(args: &MergeArgs) -> Result<String> {
    if args.nf == 0 || args.stride == 0 {
        return Err(CliError::Usage("--nf and --stride must be at least 1".into()));
    }
    let mut paths: Vec<_> = fs::read_dir(&args.input)
        .map_err(|e| CliError::io(&args.input, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(&args.input, err)))
        .collect::<Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|x| x == "pbm"));
    paths.sort();
    if paths.len() < args.nf {
        return Err(CliError::Usage(format!(
            "{} holds {} frames, fewer than --nf {}",
            args.input.display(),
            paths.len(),
            args.nf
        )));
    }
    let frames = paths.par_iter().map(|p| pbm::read(p)).collect::<dotedge::Result<Vec<_>>>()?;
    let alignment = match args.align {
        AlignArg::Past => Alignment::PastOnly,
        AlignArg::Centered => Alignment::Centered,
        AlignArg::Future => Alignment::FutureOnly,
    };
    let window = MergeWindow { n_f: args.nf, alignment };
    let dir = out_dir(args.common.out.as_deref(), "merge");
    create_dir(&dir)?;
    let starts: Vec<usize> = window.starts(frames.len(), args.stride).collect();
    let rows = starts
        .par_iter()
        .enumerate()
        .map(|(i, &start)| {
            let merged = merge_frames(&frames[start..start + args.nf])?;
            let time_index = window.time_index(start);
            let file = format!("merged-{time_index:04}.pbm");
            pbm::write(&dir.join(&file), &merged)?;
            Ok(WindowRow {
                window: i,
                start,
                time_index,
                white_count: merged.count_ones(),
                file,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut prov = Provenance::new("merge");
    prov.push("nf", args.nf).push("stride", args.stride).push("align", format!("{:?}", args.align).to_lowercase());
    write_csv(
        &dir.join("windows.csv"),
        &prov,
        &["window", "start", "time_index", "white_count", "file"],
        &rows,
    )?;
    Ok(format!("{} merged frames in {}", rows.len(), dir.display()))
}
