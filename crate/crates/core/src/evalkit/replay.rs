use std::collections::VecDeque;

use thiserror::Error;

use crate::lookupdb::Entry;
use crate::model::{ObservationWindow, StepId, Vocabulary};
use crate::predictor::{EngineError, EngineMode, PredictorConfig};
use crate::Engine;

use super::TraceRecord;

pub const DEFAULT_ROLL_WINDOW: usize = 25;

/// Outcome of one scored prediction during replay.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// 1-based prediction index.
    pub t: usize,
    pub observed: StepId,
    pub predicted: Option<StepId>,
    pub correct: bool,
    pub cum_correct: usize,
    pub cum_accuracy: f64,
    /// Accuracy over the trailing `roll_window` rows (fewer at the start).
    pub roll_accuracy: f64,
}

#[derive(Debug, Error)]
#[error("trace record {index}: {source}")]
pub struct ReplayError {
    /// 0-based position in the trace.
    pub index: usize,
    #[source]
    pub source: EngineError,
}

/// Smallest vocabulary that admits every record of `trace`.
pub fn trace_vocabulary(trace: &[TraceRecord]) -> Vocabulary {
    let steps = trace.iter().map(|r| r.step.0 + 1).max().unwrap_or(1);
    let classifications = trace
        .iter()
        .filter_map(|r| r.contexts.keys().next_back())
        .map(|cc| cc.0 + 1)
        .max()
        .unwrap_or(0);
    Vocabulary::new(steps, classifications)
}

struct Tally {
    t: usize,
    correct: usize,
    recent: VecDeque<bool>,
    roll_window: usize,
}

impl Tally {
    fn new(roll_window: usize) -> Self {
        Self {
            t: 0,
            correct: 0,
            recent: VecDeque::with_capacity(roll_window),
            roll_window: roll_window.max(1),
        }
    }

    fn row(&mut self, observed: StepId, predicted: Option<StepId>) -> MetricsRow {
        let correct = predicted == Some(observed);
        self.t += 1;
        self.correct += correct as usize;
        if self.recent.len() == self.roll_window {
            self.recent.pop_front();
        }
        self.recent.push_back(correct);
        let hits = self.recent.iter().filter(|&&c| c).count();
        MetricsRow {
            t: self.t,
            observed,
            predicted,
            correct,
            cum_correct: self.correct,
            cum_accuracy: self.correct as f64 / self.t as f64,
            roll_accuracy: hits as f64 / self.recent.len() as f64,
        }
    }
}

/// Replays `trace` through `engine`: every record after the first is
/// predicted, scored, then learned. A missing prediction counts as wrong.
pub fn replay(
    engine: &mut Engine,
    trace: &[TraceRecord],
    roll_window: usize,
) -> Result<Vec<MetricsRow>, ReplayError> {
    let config = engine.config().clone();
    replay_scored(engine, trace, roll_window, move |e, w| {
        crate::predictor::actual_p(e, w, &config)
    })
}

/// [`replay`] with a custom rule-scoring function.
pub fn replay_scored<F>(
    engine: &mut Engine,
    trace: &[TraceRecord],
    roll_window: usize,
    score: F,
) -> Result<Vec<MetricsRow>, ReplayError>
where
    F: Fn(&Entry, &ObservationWindow) -> f64,
{
    let mut tally = Tally::new(roll_window);
    let mut rows = Vec::with_capacity(trace.len().saturating_sub(1));
    for (index, record) in trace.iter().enumerate() {
        if index > 0 {
            let predicted = engine.predict_scored(&score).step;
            rows.push(tally.row(record.step, predicted));
        }
        engine
            .learn(record.clone())
            .map_err(|source| ReplayError { index, source })?;
    }
    Ok(rows)
}

/// Replays `trace` on a fresh engine sized to the trace.
pub fn run_trace(
    trace: &[TraceRecord],
    config: &PredictorConfig,
    roll_window: usize,
) -> Result<Vec<MetricsRow>, ReplayError> {
    let mut engine = Engine::new(config.clone(), trace_vocabulary(trace))
        .map_err(|source| ReplayError { index: 0, source })?;
    replay(&mut engine, trace, roll_window)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub context: Vec<MetricsRow>,
    pub baseline: Vec<MetricsRow>,
}

/// Runs the context engine and the baseline engine side by side on `trace`.
pub fn compare_engines(
    trace: &[TraceRecord],
    config: &PredictorConfig,
    roll_window: usize,
) -> Result<Comparison, ReplayError> {
    let ctx_cfg = config.clone().with_mode(EngineMode::Context);
    let base_cfg = config.clone().with_mode(EngineMode::Baseline);
    let (context, baseline) = std::thread::scope(|s| {
        let base = s.spawn(|| run_trace(trace, &base_cfg, roll_window));
        let ctx = run_trace(trace, &ctx_cfg, roll_window);
        (ctx, base.join().expect("baseline replay panicked"))
    });
    Ok(Comparison {
        context: context?,
        baseline: baseline?,
    })
}

/// Accuracy over the last `fraction` of rows (at least one row when non-empty).
pub fn tail_accuracy(rows: &[MetricsRow], fraction: f64) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let n = ((rows.len() as f64 * fraction).ceil() as usize).clamp(1, rows.len());
    let tail = &rows[rows.len() - n..];
    tail.iter().filter(|r| r.correct).count() as f64 / n as f64
}

pub fn final_cum_accuracy(rows: &[MetricsRow]) -> f64 {
    rows.last().map_or(0.0, |r| r.cum_accuracy)
}
