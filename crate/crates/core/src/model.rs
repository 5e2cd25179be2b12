//! Identifier spaces and the sliding observation window.
//!
//! Window indices follow the convention `0` = newest observation, `-1` = the
//! one before it, down to `-(len - 1)` for the oldest retained observation.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                Self(v)
            }
        }
    };
}

id_newtype!(
    /// A process step. Steps come from a fixed set declared up front.
    StepId
);
id_newtype!(
    /// An opaque context identifier. New contexts may appear at any time.
    ContextId
);
id_newtype!(
    /// A context classification (a row of the context table, e.g. IN / OUT).
    ClassificationId
);

/// Window index: `0` is the newest observation, negative values go back in time.
pub type WindowIndex = i32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("step {step} is not declared (vocabulary has {declared} steps)")]
    UndeclaredStep { step: StepId, declared: u32 },
    #[error("classification {cc} is not declared (vocabulary has {declared} classifications)")]
    UndeclaredClassification { cc: ClassificationId, declared: u32 },
    #[error("window index {index} is outside the populated range [{oldest}, 0]")]
    OutOfRange {
        index: WindowIndex,
        oldest: WindowIndex,
    },
    #[error("window capacity must be positive")]
    ZeroCapacity,
}

/// The declared step and classification universes: ids `0..steps` and
/// `0..classifications`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    pub steps: u32,
    pub classifications: u32,
}

impl Vocabulary {
    pub fn new(steps: u32, classifications: u32) -> Self {
        Self {
            steps,
            classifications,
        }
    }

    pub fn check_step(&self, step: StepId) -> Result<(), ModelError> {
        if step.0 < self.steps {
            Ok(())
        } else {
            Err(ModelError::UndeclaredStep {
                step,
                declared: self.steps,
            })
        }
    }

    pub fn check(&self, obs: &Observation) -> Result<(), ModelError> {
        self.check_step(obs.step)?;
        for &cc in obs.contexts.keys() {
            if cc.0 >= self.classifications {
                return Err(ModelError::UndeclaredClassification {
                    cc,
                    declared: self.classifications,
                });
            }
        }
        Ok(())
    }

    pub fn classification_ids(&self) -> impl Iterator<Item = ClassificationId> {
        (0..self.classifications).map(ClassificationId)
    }
}

/// One observed step together with at most one context per classification.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Observation {
    pub step: StepId,
    pub contexts: BTreeMap<ClassificationId, ContextId>,
}

impl Observation {
    pub fn new(step: impl Into<StepId>) -> Self {
        Self {
            step: step.into(),
            contexts: BTreeMap::new(),
        }
    }

    pub fn with_context(
        mut self,
        cc: impl Into<ClassificationId>,
        ctx: impl Into<ContextId>,
    ) -> Self {
        self.contexts.insert(cc.into(), ctx.into());
        self
    }

    pub fn context(&self, cc: ClassificationId) -> Option<ContextId> {
        self.contexts.get(&cc).copied()
    }
}

/// Bounded history of observations, newest at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationWindow {
    capacity: usize,
    vocabulary: Vocabulary,
    // front = oldest, back = newest
    entries: VecDeque<Observation>,
}

impl ObservationWindow {
    pub fn new(capacity: usize, vocabulary: Vocabulary) -> Result<Self, ModelError> {
        if capacity == 0 {
            return Err(ModelError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            vocabulary,
            entries: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn vocabulary(&self) -> Vocabulary {
        self.vocabulary
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Appends `obs` as the new index 0, evicting the oldest observation when full.
    pub fn push(&mut self, obs: Observation) -> Result<(), ModelError> {
        self.vocabulary.check(&obs)?;
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(obs);
        Ok(())
    }

    /// The observation at window index `i`, or `None` if unpopulated.
    pub fn get(&self, i: WindowIndex) -> Option<&Observation> {
        if i > 0 {
            return None;
        }
        let back = i.unsigned_abs() as usize;
        if back >= self.entries.len() {
            return None;
        }
        self.entries.get(self.entries.len() - 1 - back)
    }

    fn at(&self, i: WindowIndex) -> Result<&Observation, ModelError> {
        self.get(i).ok_or(ModelError::OutOfRange {
            index: i,
            oldest: 1 - self.entries.len() as WindowIndex,
        })
    }

    /// The step observed at index `i`.
    pub fn observation(&self, i: WindowIndex) -> Result<StepId, ModelError> {
        self.at(i).map(|o| o.step)
    }

    /// The context observed at index `i` for classification `cc`; `Ok(None)`
    /// when that observation carries no context of this classification.
    pub fn observation2(
        &self,
        i: WindowIndex,
        cc: ClassificationId,
    ) -> Result<Option<ContextId>, ModelError> {
        let obs = self.at(i)?;
        if cc.0 >= self.vocabulary.classifications {
            return Err(ModelError::UndeclaredClassification {
                cc,
                declared: self.vocabulary.classifications,
            });
        }
        Ok(obs.context(cc))
    }

    /// Steps from oldest to newest.
    pub fn steps(&self) -> impl DoubleEndedIterator<Item = StepId> + ExactSizeIterator + '_ {
        self.entries.iter().map(|o| o.step)
    }

    /// Observations from oldest to newest.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = &Observation> + '_ {
        self.entries.iter()
    }
}
