use std::collections::BTreeMap;
use std::path::Path;

use dotedge::evaluation::{fit_integration, Confusion, TprCurve, TprPoint};
use serde::Serialize;

use super::evaluate::TprRow;
use crate::args::FitArgs;
use crate::error::{CliError, Result};
use crate::output::{create_dir, out_dir, read_csv, write_csv, Provenance};

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    n_f: usize,
    l2: f64,
}

/// Only the TPR points take part in the distance; rates and confusion are
/// left empty.
fn read_curve(path: &Path) -> Result<TprCurve> {
    let rows: Vec<TprRow> = read_csv(path)?;
    if rows.is_empty() {
        return Err(CliError::Schema(format!("{} has no rows", path.display())));
    }
    Ok(TprCurve {
        points: rows
            .into_iter()
            .map(|r| TprPoint {
                p_f: r.p_f,
                tpr: r.tpr,
                count: r.count,
            })
            .collect(),
        fpr: 0.0,
        confusion: Confusion::default(),
    })
}

pub fn run(args: &FitArgs) -> Result<String> {
    let subject = read_curve(&args.subject)?;
    let mut family = BTreeMap::new();
    for (n_f, path) in &args.family {
        if family.insert(*n_f, read_curve(path)?).is_some() {
            return Err(CliError::Usage(format!("frame count {n_f} given twice")));
        }
    }
    let ranked = fit_integration(&subject, &family)?;
    let rows: Vec<RankRow> = ranked
        .iter()
        .enumerate()
        .map(|(i, &(n_f, l2))| RankRow { rank: i + 1, n_f, l2 })
        .collect();
    let dir = out_dir(args.common.out.as_deref(), "fit");
    create_dir(&dir)?;
    let mut prov = Provenance::new("fit");
    prov.push("family", family.keys().map(|k| k.to_string()).collect::<Vec<_>>().join(","));
    write_csv(&dir.join("ranks.csv"), &prov, &["rank", "n_f", "l2"], &rows)?;
    Ok(format!("best n_f = {} (L2 {:.4}), ranks in {}", rows[0].n_f, rows[0].l2, dir.display()))
}
