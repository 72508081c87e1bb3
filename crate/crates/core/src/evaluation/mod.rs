//! Scoring of algorithmic and human responses, performance grids and curves.

mod curves;
mod grid;
mod responses;
mod scoring;

pub use curves::{
    build_tpr_curve, false_alarm_screen, fit_integration, l2_curve_distance, Confusion, TprCurve, TprPoint,
};
pub use grid::{build_grid, empirical_threshold, GridCell, PerformanceGrid};
pub use responses::{
    read_response_log, Answer, ClickResponse, Response, ResponseRecord, YesNoResponse, ELAPSED_CAP, RESPONSE_SCHEMA_VERSION,
    TIME_LIMIT,
};
pub use scoring::{score_click, score_detection, score_segment, ScoringCase, Tolerances};
