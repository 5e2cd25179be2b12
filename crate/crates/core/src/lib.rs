//! Online next-step prediction for software process enactment.
//!
//! An [`Engine`] watches a stream of process steps, each tagged with the
//! contexts it happened in, and suggests which step the user will start next.
//! It keeps a database of conditional rules (`after these steps, this step
//! follows with probability p`), learns per-rule which contexts are relevant,
//! and grows longer rules as shorter ones prove themselves.
//!
//! ```
//! use stepcast::{Engine, Observation, PredictorConfig, Vocabulary};
//!
//! let mut engine = Engine::new(PredictorConfig::default(), Vocabulary::new(5, 1)).unwrap();
//! for step in [1, 2, 3, 1, 2, 3, 1, 2] {
//!     engine.predict();
//!     engine.learn(Observation::new(step).with_context(0, 7)).unwrap();
//! }
//! assert_eq!(engine.predict().step.map(|s| s.0), Some(3));
//! ```
//!
//! The [`evalkit`] module replays traces through engines and compares the
//! context-aware engine against a context-blind baseline; [`cli`] drives all
//! of it from the `stepcast` binary.

pub mod cli;
pub mod evalkit;
pub mod lookupdb;
pub mod model;
pub mod predictor;

pub use lookupdb::{ContextSlot, Entry, EntryId, ExtensionDirection, LookupDb, SnapshotHeader};
pub use model::{
    ClassificationId, ContextId, ModelError, Observation, ObservationWindow, StepId, Vocabulary,
    WindowIndex,
};
pub use predictor::{
    Engine, EngineError, EngineMode, LearnReport, PredictionResult, PredictorConfig, UpdateScope,
};
