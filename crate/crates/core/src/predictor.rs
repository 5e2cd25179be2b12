//! Prediction and learning over a [`LookupDb`].
//!
//! Prediction scores every rule whose condition matches the newest steps by
//! `fit * p`, where `fit` is the mean of the rule's learned context weights
//! (above the relevance threshold) for the contexts currently observed. The
//! best-scoring rule's prediction wins.
//!
//! Learning runs after each observation: probabilities of the rules that
//! applied one step ago are boosted or decayed, their context counters are
//! updated, a one-step rule for the last transition is created if missing,
//! and after a correct prediction the applicable rules are extended.

use std::cmp::Ordering;
use std::fmt;
use std::io;
use std::str::FromStr;

use thiserror::Error;

use crate::lookupdb::{Entry, EntryId, ExtensionDirection, LookupDb, SnapshotHeader};
use crate::model::{
    ClassificationId, ContextId, ModelError, Observation, ObservationWindow, StepId, Vocabulary,
    WindowIndex,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EngineMode {
    /// Rules are ranked by `fit * p`.
    #[default]
    Context,
    /// Context fit is ignored; rules are ranked by `p` alone.
    Baseline,
}

/// Which of the rules that applied one step ago take part in an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateScope {
    /// Only rules whose prediction equals the observed step.
    CorrectOnly,
    /// Every applicable rule.
    AllMatching,
}

macro_rules! str_enum {
    ($ty:ty { $($variant:path => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

str_enum!(EngineMode { EngineMode::Context => "context", EngineMode::Baseline => "baseline" });
str_enum!(UpdateScope { UpdateScope::CorrectOnly => "correct-only", UpdateScope::AllMatching => "all-matching" });

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Decay factor of the probability update, in (0, 1).
    pub alpha: f64,
    /// Relevance threshold for context weights, in [0, 1).
    pub theta: f64,
    /// Observation window length; also the maximum condition length.
    pub window_capacity: usize,
    pub engine_mode: EngineMode,
    pub context_update_scope: UpdateScope,
    pub extension_scope: UpdateScope,
    pub extension_direction: ExtensionDirection,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            theta: 0.5,
            window_capacity: 10,
            engine_mode: EngineMode::Context,
            context_update_scope: UpdateScope::CorrectOnly,
            extension_scope: UpdateScope::AllMatching,
            extension_direction: ExtensionDirection::AppendObservation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must lie in (0, 1), got {0}")]
    Alpha(f64),
    #[error("theta must lie in [0, 1), got {0}")]
    Theta(f64),
    #[error("window capacity must be at least 2, got {0}")]
    Window(usize),
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if !(self.theta >= 0.0 && self.theta < 1.0) {
            return Err(ConfigError::Theta(self.theta));
        }
        if self.window_capacity < 2 {
            return Err(ConfigError::Window(self.window_capacity));
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: EngineMode) -> Self {
        self.engine_mode = mode;
        self
    }

    pub fn with_direction(mut self, direction: ExtensionDirection) -> Self {
        self.extension_direction = direction;
        self
    }
}

impl fmt::Display for PredictorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "engine={} alpha={} theta={} window={} context-update={} extension-scope={} extension-direction={}",
            self.engine_mode,
            self.alpha,
            self.theta,
            self.window_capacity,
            self.context_update_scope,
            self.extension_scope,
            self.extension_direction
        )
    }
}

/// One context weight consulted while scoring a rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitTuple {
    pub index: WindowIndex,
    pub cc: ClassificationId,
    pub ctx: ContextId,
    pub weight: f64,
}

/// Learned weights of `entry` for the contexts currently in `window`
/// (condition index `i` reads window index `i`). Positions without an
/// observed context, or without any learned counts, contribute nothing.
pub fn context_fit(entry: &Entry, window: &ObservationWindow) -> Vec<FitTuple> {
    let mut out = Vec::new();
    for index in entry.cond_indices() {
        let Some(obs) = window.get(index) else {
            continue;
        };
        for (&cc, &ctx) in &obs.contexts {
            let Some(weight) = entry.slot(cc, index).and_then(|s| s.weight(ctx)) else {
                continue;
            };
            out.push(FitTuple {
                index,
                cc,
                ctx,
                weight,
            });
        }
    }
    out
}

/// Mean of the weights strictly above `theta`. No weights at all gives the
/// neutral 1.0; weights that are all at or below `theta` give 0.0.
pub fn mean_relevant_weight(tuples: &[FitTuple], theta: f64) -> f64 {
    if tuples.is_empty() {
        return 1.0;
    }
    let (sum, n) = tuples
        .iter()
        .filter(|t| t.weight > theta)
        .fold((0.0, 0usize), |(s, n), t| (s + t.weight, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// `fit * p` in context mode, `p` in baseline mode.
pub fn actual_p(entry: &Entry, window: &ObservationWindow, config: &PredictorConfig) -> f64 {
    match config.engine_mode {
        EngineMode::Baseline => entry.p(),
        EngineMode::Context => {
            mean_relevant_weight(&context_fit(entry, window), config.theta) * entry.p()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub entry: EntryId,
    pub actual_p: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionResult {
    pub step: Option<StepId>,
    pub actual_p: Option<f64>,
    pub entry: Option<EntryId>,
    /// Every matching rule with its score, ascending id.
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LearnReport {
    /// Whether the last prediction equalled the observed step; `None` when
    /// nothing was predicted.
    pub correct: Option<bool>,
    pub entries_added: usize,
    pub entries_updated: usize,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid observation: {0}")]
    Observation(#[from] ModelError),
    #[error("database incompatible with this engine: {0}")]
    IncompatibleDb(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// The online predictor: observation window, rule database and the last
/// prediction made.
#[derive(Debug, Clone)]
pub struct Engine {
    config: PredictorConfig,
    window: ObservationWindow,
    db: LookupDb,
    last_prediction: Option<StepId>,
}

impl Engine {
    pub fn new(config: PredictorConfig, vocabulary: Vocabulary) -> Result<Self, EngineError> {
        config.validate()?;
        let window = ObservationWindow::new(config.window_capacity, vocabulary)?;
        Ok(Self {
            config,
            window,
            db: LookupDb::new(),
            last_prediction: None,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    pub fn window(&self) -> &ObservationWindow {
        &self.window
    }

    pub fn db(&self) -> &LookupDb {
        &self.db
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.window.vocabulary()
    }

    pub fn last_prediction(&self) -> Option<StepId> {
        self.last_prediction
    }

    /// Predicts the next step and remembers it for the following `learn`.
    pub fn predict(&mut self) -> PredictionResult {
        let config = self.config.clone();
        self.predict_scored(|entry, window| actual_p(entry, window, &config))
    }

    /// Like [`predict`](Self::predict) with a caller-supplied scoring function
    /// in place of `actual_p`.
    pub fn predict_scored<F>(&mut self, score: F) -> PredictionResult
    where
        F: Fn(&Entry, &ObservationWindow) -> f64,
    {
        let candidates: Vec<Candidate> = self
            .db
            .matching(&self.window, 0)
            .into_iter()
            .map(|id| Candidate {
                entry: id,
                actual_p: score(self.db.get(id).expect("matched id exists"), &self.window),
            })
            .collect();
        let best = candidates.iter().copied().max_by(|a, b| self.rank(a, b));
        let result = match best {
            Some(c) => PredictionResult {
                step: Some(
                    self.db
                        .get(c.entry)
                        .expect("matched id exists")
                        .prediction(),
                ),
                actual_p: Some(c.actual_p),
                entry: Some(c.entry),
                candidates,
            },
            None => PredictionResult {
                candidates,
                ..Default::default()
            },
        };
        self.last_prediction = result.step;
        result
    }

    // score, then longer condition, then higher p, then smaller id
    fn rank(&self, a: &Candidate, b: &Candidate) -> Ordering {
        let ea = self.db.get(a.entry).expect("candidate exists");
        let eb = self.db.get(b.entry).expect("candidate exists");
        a.actual_p
            .total_cmp(&b.actual_p)
            .then(ea.len_cond().cmp(&eb.len_cond()))
            .then(ea.p().total_cmp(&eb.p()))
            .then(b.entry.cmp(&a.entry))
    }

    /// Observes `obs` and updates the rule database. An invalid observation is
    /// rejected without touching any state.
    pub fn learn(&mut self, obs: Observation) -> Result<LearnReport, EngineError> {
        self.vocabulary().check(&obs)?;
        let alpha = self.config.alpha;
        let observed = obs.step;
        self.window.push(obs)?;

        let correct = self.last_prediction.map(|p| p == observed);

        // rules that applied one step ago
        let applied = self.db.matching(&self.window, 1);
        for &id in &applied {
            let entry = self.db.get_mut(id).expect("matched id exists");
            let hit = entry.prediction() == observed;
            entry.apply_p_update(hit, alpha);
            if hit || self.config.context_update_scope == UpdateScope::AllMatching {
                entry.apply_context_update(&self.window, 1);
            }
        }

        let mut added = 0;
        if self.window.len() >= 2
            && self
                .db
                .add_entry_from_window(&self.window, 1.0 - alpha)
                .is_some()
        {
            added += 1;
        }

        if correct == Some(true) {
            let q: Vec<EntryId> = match self.config.extension_scope {
                UpdateScope::AllMatching => applied.clone(),
                UpdateScope::CorrectOnly => applied
                    .iter()
                    .copied()
                    .filter(|&id| self.db.get(id).map(|e| e.prediction()) == Some(observed))
                    .collect(),
            };
            let inherit_p = self.longest_current_p().unwrap_or(1.0 - alpha);
            added += self
                .db
                .extend_entries(&self.window, &q, inherit_p, self.config.extension_direction)
                .len();
        }

        self.last_prediction = None;
        Ok(LearnReport {
            correct,
            entries_added: added,
            entries_updated: applied.len(),
        })
    }

    // p of the longest rule matching now with p > 0
    fn longest_current_p(&self) -> Option<f64> {
        self.db
            .matching(&self.window, 0)
            .into_iter()
            .filter_map(|id| self.db.get(id))
            .filter(|e| e.p() > 0.0)
            .max_by(|a, b| {
                a.len_cond()
                    .cmp(&b.len_cond())
                    .then(a.p().total_cmp(&b.p()))
                    .then(b.id().cmp(&a.id()))
            })
            .map(|e| e.p())
    }

    /// Empties window and database; the configuration is kept.
    pub fn reset(&mut self) {
        self.window.clear();
        self.db.clear();
        self.last_prediction = None;
    }

    pub fn snapshot_header(&self) -> SnapshotHeader {
        SnapshotHeader {
            alpha: self.config.alpha,
            theta: self.config.theta,
        }
    }

    pub fn save_snapshot<W: io::Write>(&self, out: W) -> io::Result<()> {
        self.db.write_snapshot(out, self.snapshot_header())
    }

    pub fn snapshot_string(&self) -> String {
        self.db.snapshot_string(self.snapshot_header())
    }

    /// Replaces the rule database. The snapshot's alpha and theta become the
    /// engine's; the window is kept.
    pub fn load_db(&mut self, header: SnapshotHeader, db: LookupDb) -> Result<(), EngineError> {
        let config = PredictorConfig {
            alpha: header.alpha,
            theta: header.theta,
            ..self.config.clone()
        };
        config.validate()?;
        let vocab = self.vocabulary();
        for e in db.iter() {
            for &s in e.cond().iter().chain(std::iter::once(&e.prediction())) {
                vocab.check_step(s).map_err(|err| {
                    EngineError::IncompatibleDb(format!("entry {}: {err}", e.id()))
                })?;
            }
            if e.len_cond() > config.window_capacity {
                return Err(EngineError::IncompatibleDb(format!(
                    "entry {} has a condition of length {} but the window holds {}",
                    e.id(),
                    e.len_cond(),
                    config.window_capacity
                )));
            }
            for ((cc, _), _) in e.slots() {
                if cc.0 >= vocab.classifications {
                    return Err(EngineError::IncompatibleDb(format!(
                        "entry {} uses undeclared classification {cc}",
                        e.id()
                    )));
                }
            }
        }
        self.config = config;
        self.db = db;
        self.last_prediction = None;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lookupdb::{detached_entry, ContextSlot};

    const IN: ClassificationId = ClassificationId(0);

    fn vocab() -> Vocabulary {
        Vocabulary::new(10, 2)
    }

    fn engine(config: PredictorConfig) -> Engine {
        Engine::new(config, vocab()).unwrap()
    }

    fn slot(total: u64, counts: &[(u32, u64)]) -> ContextSlot {
        let mut s = ContextSlot::default();
        for &(c, n) in counts {
            for _ in 0..n {
                s.observe(ContextId(c));
            }
        }
        assert_eq!(s.total(), total);
        s
    }

    fn window_with_in(ctx: u32) -> ObservationWindow {
        let mut w = ObservationWindow::new(10, vocab()).unwrap();
        w.push(Observation::new(2).with_context(IN, ctx)).unwrap();
        w
    }

    fn tuple(weight: f64) -> FitTuple {
        FitTuple {
            index: 0,
            cc: IN,
            ctx: ContextId(0),
            weight,
        }
    }

    #[test]
    fn config_validation() {
        assert!(PredictorConfig::default().validate().is_ok());
        let bad = |f: fn(&mut PredictorConfig)| {
            let mut c = PredictorConfig::default();
            f(&mut c);
            c.validate().unwrap_err()
        };
        assert_eq!(bad(|c| c.alpha = 1.5), ConfigError::Alpha(1.5));
        assert_eq!(bad(|c| c.alpha = 0.0), ConfigError::Alpha(0.0));
        assert_eq!(bad(|c| c.theta = 1.0), ConfigError::Theta(1.0));
        assert_eq!(bad(|c| c.window_capacity = 1), ConfigError::Window(1));
    }

    #[test]
    fn context_fit_examples() {
        let e = detached_entry(vec![StepId(2)], StepId(3), 0.9).with_slot(
            IN,
            0,
            slot(4, &[(6, 3), (4, 1)]),
        );
        let fit = context_fit(&e, &window_with_in(6));
        assert_eq!(fit.len(), 1);
        assert_eq!(fit[0].weight, 0.75);

        let fresh = detached_entry(vec![StepId(2)], StepId(3), 0.9);
        assert!(context_fit(&fresh, &window_with_in(6)).is_empty());

        let fit = context_fit(&e, &window_with_in(8));
        assert_eq!(fit[0].weight, 0.0);
    }

    #[test]
    fn mean_relevant_weight_examples() {
        let m = mean_relevant_weight(&[tuple(0.9), tuple(0.6), tuple(0.3)], 0.5);
        assert!((m - 0.75).abs() < 1e-12);
        assert_eq!(mean_relevant_weight(&[], 0.5), 1.0);
        assert_eq!(mean_relevant_weight(&[tuple(0.2), tuple(0.4)], 0.5), 0.0);
        // strictly greater than theta
        assert_eq!(mean_relevant_weight(&[tuple(0.5)], 0.5), 0.0);
    }

    #[test]
    fn actual_p_examples() {
        let cfg = PredictorConfig::default();
        let fresh = detached_entry(vec![StepId(2)], StepId(1), 0.9);
        assert!((actual_p(&fresh, &window_with_in(6), &cfg) - 0.9).abs() < 1e-12);

        let e = fresh.clone().with_slot(IN, 0, slot(4, &[(6, 3), (4, 1)]));
        assert!((actual_p(&e, &window_with_in(6), &cfg) - 0.675).abs() < 1e-12);

        let base = cfg.with_mode(EngineMode::Baseline);
        assert!((actual_p(&e, &window_with_in(4), &base) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn predict_on_empty_db_is_none() {
        let mut eng = engine(PredictorConfig::default());
        let r = eng.predict();
        assert_eq!(r, PredictionResult::default());
        assert_eq!(eng.last_prediction(), None);
    }

    #[test]
    fn predict_takes_argmax_of_actual_p() {
        let mut eng = engine(PredictorConfig::default());
        let a = eng.db.add_entry(StepId(2), StepId(3), 0.54).unwrap();
        eng.db.add_entry(StepId(2), StepId(2), 0.30).unwrap();
        eng.db.add_entry(StepId(5), StepId(1), 0.99).unwrap();
        eng.window.push(Observation::new(2)).unwrap();
        let r = eng.predict();
        assert_eq!(r.step, Some(StepId(3)));
        assert_eq!(r.entry, Some(a));
        assert_eq!(r.candidates.len(), 2);
        assert_eq!(eng.last_prediction(), Some(StepId(3)));
    }

    #[test]
    fn ties_prefer_longer_then_higher_p_then_smaller_id() {
        let mut eng = engine(PredictorConfig::default());
        eng.window.push(Observation::new(1)).unwrap();
        eng.window.push(Observation::new(2)).unwrap();
        eng.db.add_entry(StepId(2), StepId(3), 0.5).unwrap();
        eng.db.add_entry(StepId(2), StepId(4), 0.5).unwrap();
        let long = eng
            .db
            .insert(
                vec![StepId(1), StepId(2)],
                StepId(5),
                0.5,
                Default::default(),
            )
            .unwrap();
        assert_eq!(eng.predict().entry, Some(long));
        // all scores equal, equal lengths: higher p then smaller id
        let r = eng.predict_scored(|e, _| if e.len_cond() == 1 { 1.0 } else { 0.5 });
        assert_eq!(r.entry, Some(EntryId(0)));
        eng.db
            .get_mut(EntryId(1))
            .unwrap()
            .apply_p_update(true, 0.8);
        let r = eng.predict_scored(|e, _| if e.len_cond() == 1 { 1.0 } else { 0.5 });
        assert_eq!(r.entry, Some(EntryId(1)));
    }

    #[test]
    fn cold_start_and_first_rule() {
        let mut eng = engine(PredictorConfig::default());
        eng.predict();
        let r = eng.learn(Observation::new(2)).unwrap();
        assert_eq!(
            r,
            LearnReport {
                correct: None,
                entries_added: 0,
                entries_updated: 0
            }
        );
        assert!(eng.db().is_empty());
        eng.predict();
        let r = eng.learn(Observation::new(3)).unwrap();
        assert_eq!(r.entries_added, 1);
        assert_eq!(eng.db().len(), 1);
        let e = eng.db().get(EntryId(0)).unwrap();
        assert_eq!((e.cond(), e.prediction()), (&[StepId(2)][..], StepId(3)));
        assert!((e.p() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn invalid_observation_leaves_state_unchanged() {
        let mut eng = engine(PredictorConfig::default());
        eng.learn(Observation::new(2)).unwrap();
        eng.predict();
        let before = (
            eng.window().clone(),
            eng.snapshot_string(),
            eng.last_prediction(),
        );
        assert!(eng.learn(Observation::new(42)).is_err());
        assert!(eng.learn(Observation::new(1).with_context(7, 1)).is_err());
        assert_eq!(
            before,
            (
                eng.window().clone(),
                eng.snapshot_string(),
                eng.last_prediction()
            )
        );
    }

    #[test]
    fn alternating_stream_confirms_rule_in_closed_form() {
        // k-th confirmation of [2] -> 3 gives 1 - 0.8^k * 0.8
        let mut eng = engine(PredictorConfig::default());
        let mut confirmations = 0;
        for i in 0..30 {
            let s = if i % 2 == 0 { 2 } else { 3 };
            eng.predict();
            eng.learn(Observation::new(s)).unwrap();
            if s == 3 && i > 1 {
                confirmations += 1;
                let p = eng.db().find(&[StepId(2)], StepId(3)).unwrap().p();
                let expect = 1.0 - 0.8f64.powi(confirmations) * 0.8;
                assert!(
                    (p - expect).abs() < 1e-12,
                    "k={confirmations}: {p} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn predict_is_a_pure_read() {
        let mut eng = engine(PredictorConfig::default());
        for s in [1, 2, 3, 1, 2, 3, 1, 2] {
            eng.predict();
            eng.learn(Observation::new(s)).unwrap();
        }
        let snap = eng.snapshot_string();
        let first = eng.predict();
        for _ in 0..5 {
            assert_eq!(eng.predict(), first);
        }
        assert_eq!(eng.snapshot_string(), snap);
    }

    #[test]
    fn reset_keeps_config_and_replays_identically() {
        let cfg = PredictorConfig {
            alpha: 0.6,
            theta: 0.3,
            ..Default::default()
        }
        .with_direction(ExtensionDirection::ExtendIntoPast);
        let trace = [1, 2, 3, 2, 3, 1, 2, 3];
        let run = |eng: &mut Engine| {
            let mut out = Vec::new();
            for s in trace {
                out.push(eng.predict().step);
                out.push(
                    eng.learn(Observation::new(s))
                        .ok()
                        .map(|r| StepId(r.entries_added as u32)),
                );
            }
            (out, eng.snapshot_string())
        };
        let mut eng = engine(cfg.clone());
        let first = run(&mut eng);
        eng.reset();
        assert_eq!(eng.predict().step, None);
        assert!(eng.db().is_empty() && eng.window().is_empty());
        assert_eq!(eng.config(), &cfg);
        assert_eq!(run(&mut eng), first);
    }

    #[test]
    fn load_db_adopts_parameters_and_checks_vocabulary() {
        let mut eng = engine(PredictorConfig::default());
        let mut db = LookupDb::new();
        db.add_entry(StepId(1), StepId(2), 0.5);
        eng.load_db(
            SnapshotHeader {
                alpha: 0.5,
                theta: 0.25,
            },
            db,
        )
        .unwrap();
        assert_eq!((eng.config().alpha, eng.config().theta), (0.5, 0.25));
        assert_eq!(eng.db().len(), 1);

        let mut db = LookupDb::new();
        db.add_entry(StepId(1), StepId(20), 0.5);
        assert!(matches!(
            eng.load_db(
                SnapshotHeader {
                    alpha: 0.5,
                    theta: 0.25
                },
                db
            ),
            Err(EngineError::IncompatibleDb(_))
        ));
        assert!(eng
            .load_db(
                SnapshotHeader {
                    alpha: 2.0,
                    theta: 0.25
                },
                LookupDb::new()
            )
            .is_err());
        assert_eq!(eng.db().len(), 1);
    }
}
