use std::collections::{BTreeMap, HashMap};

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCell {
    pub hits: u64,
    pub count: u64,
}

impl GridCell {
    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.hits as f64 / self.count as f64
        }
    }
}

/// Hit rate per `(p_b, p_f)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerformanceGrid {
    pub cells: BTreeMap<(OrderedFloat<f64>, OrderedFloat<f64>), GridCell>,
}

impl PerformanceGrid {
    pub fn get(&self, p_b: f64, p_f: f64) -> Option<GridCell> {
        self.cells.get(&(OrderedFloat(p_b), OrderedFloat(p_f))).copied()
    }

    pub fn p_b_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.cells.keys().map(|k| k.0 .0).collect();
        v.dedup();
        v
    }

    /// `(p_f, mean)` pairs at `p_b`, by increasing `p_f`.
    pub fn column(&self, p_b: f64) -> Vec<(f64, f64)> {
        self.cells
            .range((OrderedFloat(p_b), OrderedFloat(f64::NEG_INFINITY))..=(OrderedFloat(p_b), OrderedFloat(f64::INFINITY)))
            .map(|(k, c)| (k.1 .0, c.mean()))
            .collect()
    }

    /// Rows `(p_b, p_f, hits, count, mean)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, u64, u64, f64)> + '_ {
        self.cells.iter().map(|(k, c)| (k.0 .0, k.1 .0, c.hits, c.count, c.mean()))
    }
}

/// Averages 0-1 scores per degradation pair. Every manifest entry must be
/// scored exactly once.
pub fn build_grid(scored: &[(String, bool)], manifest: &DatasetManifest) -> Result<PerformanceGrid> {
    let mut by_id: HashMap<&str, bool> = HashMap::with_capacity(scored.len());
    for (id, hit) in scored {
        if by_id.insert(id.as_str(), *hit).is_some() {
            return Err(Error::ManifestMismatch(format!("stimulus {id} scored twice")));
        }
    }
    if by_id.len() != manifest.entries.len() {
        return Err(Error::ManifestMismatch(format!(
            "{} scores for {} manifest entries",
            by_id.len(),
            manifest.entries.len()
        )));
    }
    let mut grid = PerformanceGrid::default();
    for e in &manifest.entries {
        let hit = *by_id
            .get(e.id.as_str())
            .ok_or_else(|| Error::ManifestMismatch(format!("stimulus {} has no score", e.id)))?;
        let cell = grid.cells.entry((OrderedFloat(e.params.p_b), OrderedFloat(e.params.p_f))).or_default();
        cell.count += 1;
        cell.hits += u64::from(hit);
    }
    Ok(grid)
}

/// Decision threshold `v` at `p_b`: the sampled `p_f` (or one step past the
/// last) minimising `|sum_{p_f >= v} (1 - P_h) - sum_{p_f < v} P_h|`, with
/// `P_h = 1` past the sampled range. Ties go to the smaller `v`.
pub fn empirical_threshold(grid: &PerformanceGrid, p_b: f64) -> Result<f64> {
    let column = grid.column(p_b);
    if column.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "column p_b = {p_b} has {} samples, at least 2 needed",
            column.len()
        )));
    }
    let step = column.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min);
    let mut candidates: Vec<f64> = column.iter().map(|c| c.0).collect();
    candidates.push(column.last().expect("nonempty").0 + step);

    let mut best: Option<(f64, f64)> = None;
    for &v in &candidates {
        let misses_above: f64 = column.iter().filter(|c| c.0 >= v).map(|c| 1.0 - c.1).sum();
        let hits_below: f64 = column.iter().filter(|c| c.0 < v).map(|c| c.1).sum();
        let gap = (misses_above - hits_below).abs();
        if best.is_none_or(|(g, _)| gap < g - 1e-12) {
            best = Some((gap, v));
        }
    }
    Ok(best.expect("candidates").1)
}
