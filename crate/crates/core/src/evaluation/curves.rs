use std::collections::{BTreeMap, HashMap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TprPoint {
    pub p_f: f64,
    pub tpr: f64,
    pub count: u64,
}

/// True-positive rate per `p_f` on edge stimuli, false-positive rate on
/// noise stimuli.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TprCurve {
    pub points: Vec<TprPoint>,
    pub fpr: f64,
    pub confusion: Confusion,
}

impl TprCurve {
    pub fn tpr_at(&self, p_f: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.p_f - p_f).abs() < 1e-9).map(|p| p.tpr)
    }
}

/// Builds the curve from yes/no outcomes (timeouts already mapped to "no").
/// Every manifest entry must have exactly one outcome.
pub fn build_tpr_curve(outcomes: &[(String, bool)], manifest: &DatasetManifest) -> Result<TprCurve> {
    let mut by_id: HashMap<&str, bool> = HashMap::with_capacity(outcomes.len());
    for (id, yes) in outcomes {
        if by_id.insert(id.as_str(), *yes).is_some() {
            return Err(Error::ManifestMismatch(format!("stimulus {id} answered twice")));
        }
    }
    if by_id.len() != manifest.entries.len() {
        return Err(Error::ManifestMismatch(format!(
            "{} outcomes for {} manifest entries",
            by_id.len(),
            manifest.entries.len()
        )));
    }
    let mut confusion = Confusion::default();
    let mut per_p_f: BTreeMap<OrderedFloat<f64>, (u64, u64)> = BTreeMap::new();
    for e in &manifest.entries {
        let yes = *by_id
            .get(e.id.as_str())
            .ok_or_else(|| Error::ManifestMismatch(format!("stimulus {} has no outcome", e.id)))?;
        match (e.has_edge, yes) {
            (true, true) => confusion.tp += 1,
            (true, false) => confusion.fn_ += 1,
            (false, true) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
        }
        if e.has_edge {
            let cell = per_p_f.entry(OrderedFloat(e.params.p_f)).or_default();
            cell.0 += u64::from(yes);
            cell.1 += 1;
        }
    }
    let negatives = confusion.fp + confusion.tn;
    Ok(TprCurve {
        points: per_p_f
            .into_iter()
            .map(|(p_f, (yes, count))| TprPoint {
                p_f: p_f.0,
                tpr: yes as f64 / count as f64,
                count,
            })
            .collect(),
        fpr: if negatives == 0 { 0.0 } else { confusion.fp as f64 / negatives as f64 },
        confusion,
    })
}

/// Euclidean distance between the TPR vectors of two curves on one grid.
pub fn l2_curve_distance(a: &TprCurve, b: &TprCurve) -> Result<f64> {
    let same_grid =
        a.points.len() == b.points.len() && a.points.iter().zip(&b.points).all(|(x, y)| (x.p_f - y.p_f).abs() < 1e-9);
    if !same_grid {
        return Err(Error::InvalidParameter("curves are sampled on different p_f grids".into()));
    }
    Ok(a.points.iter().zip(&b.points).map(|(x, y)| (x.tpr - y.tpr).powi(2)).sum::<f64>().sqrt())
}

/// Family members by increasing distance to `subject`, ties by smaller `n_f`.
pub fn fit_integration(subject: &TprCurve, family: &BTreeMap<usize, TprCurve>) -> Result<Vec<(usize, f64)>> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("empty detector family".into()));
    }
    let mut ranked = family
        .iter()
        .map(|(&n_f, curve)| Ok((n_f, l2_curve_distance(subject, curve)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Labels of subjects whose false-positive rate exceeds `max_fpr`.
pub fn false_alarm_screen<'a>(subjects: impl IntoIterator<Item = (&'a str, &'a TprCurve)>, max_fpr: f64) -> Vec<&'a str> {
    subjects
        .into_iter()
        .filter(|(_, c)| c.fpr > max_fpr)
        .map(|(label, _)| label)
        .collect()
}
