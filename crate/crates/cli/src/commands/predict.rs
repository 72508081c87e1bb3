use dotedge::merge::union_probability;
use dotedge::prediction::{decision_curve, dynamic_columns, predicted_nfa, static_columns, EdgeCase, PredictionContext};
use dotedge::DegradationParams;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{CaseArg, PredictArgs};
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir, write_csv, Provenance};

/// `p_f` samples of the NFA grid: 0 to 0.5 by 0.005.
const GRID_STEPS: u32 = 100;
const GRID_MAX: f64 = 0.5;

#[derive(Serialize)]
struct ContourRow {
    case: &'static str,
    frames: u32,
    p_b: f64,
    p_f_star: Option<f64>,
}

#[derive(Serialize)]
struct GridRow {
    case: &'static str,
    frames: u32,
    p_b: f64,
    p_f: f64,
    log10_nfa: f64,
}

fn describe(case: EdgeCase) -> (&'static str, u32) {
    match case {
        EdgeCase::Static => ("static", 1),
        EdgeCase::Dynamic { frames } => ("dynamic", frames),
    }
}

pub fn run(args: &PredictArgs) -> Result<String> {
    let ctx = PredictionContext {
        epsilon: args.eps,
        ..PredictionContext::paper(args.w)
    };
    ctx.validate()?;
    let columns = match args.case {
        CaseArg::Static => {
            if args.pb.is_empty() {
                return Err(CliError::Usage("--pb needs at least one value".into()));
            }
            static_columns(&args.pb)
        }
        CaseArg::Dynamic => {
            if args.tmax == 0 {
                return Err(CliError::Usage("--tmax must be at least 1".into()));
            }
            DegradationParams::new(args.pb1, 0.0)?;
            dynamic_columns(args.pb1, 1..=args.tmax)
        }
    };
    let curve = decision_curve(&ctx, &columns, args.eps)?;
    let contour: Vec<ContourRow> = curve
        .points
        .iter()
        .map(|p| {
            let (case, frames) = describe(p.case);
            ContourRow {
                case,
                frames,
                p_b: p.p_b,
                p_f_star: p.p_f_star,
            }
        })
        .collect();
    let grid: Vec<GridRow> = columns
        .par_iter()
        .map(|&(p_b, case)| {
            let (name, frames) = describe(case);
            (0..=GRID_STEPS)
                .map(|i| {
                    let p_f = GRID_MAX * f64::from(i) / f64::from(GRID_STEPS);
                    Ok(GridRow {
                        case: name,
                        frames,
                        p_b,
                        p_f,
                        log10_nfa: predicted_nfa(&ctx, DegradationParams::new(p_b, p_f)?, case)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let name = match args.case {
        CaseArg::Static => "static",
        CaseArg::Dynamic => "dynamic",
    };
    let dir = out_dir(args.common.out.as_deref(), &format!("predict-{name}-w{}", args.w));
    create_dir(&dir)?;
    let mut prov = Provenance::new("predict");
    prov.push("case", name).push("width", args.w).push("epsilon", args.eps).push_json("context", &ctx);
    if args.case == CaseArg::Dynamic {
        prov.push("single_frame_p_b", args.pb1)
            .push("merged_p_b_at_tmax", union_probability(args.pb1, args.tmax));
    }
    write_csv(&dir.join("contour.csv"), &prov, &["case", "frames", "p_b", "p_f_star"], &contour)?;
    write_csv(&dir.join("nfa_grid.csv"), &prov, &["case", "frames", "p_b", "p_f", "log10_nfa"], &grid)?;
    Ok(format!("{} curve points and {} grid values in {}", contour.len(), grid.len(), dir.display()))
}
