//! Evaluation harness: scenario traces, replay with accuracy metrics, and
//! CSV/SVG output.

pub mod replay;
pub mod report;
pub mod scenario;
pub mod trace;

/// One input event of a trace; same shape as an [`Observation`](crate::model::Observation).
pub type TraceRecord = crate::model::Observation;

pub use replay::{
    compare_engines, final_cum_accuracy, replay, replay_scored, run_trace, tail_accuracy,
    trace_vocabulary, Comparison, MetricsRow, ReplayError, DEFAULT_ROLL_WINDOW,
};
pub use report::{csv_string, render_svg, write_csv};
pub use scenario::{generate, ComponentType, ScenarioError, ScenarioKind, ScenarioSpec};
pub use trace::{format_record, parse_record, parse_trace, read_trace, write_trace, TraceError};
