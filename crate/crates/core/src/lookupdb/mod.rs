//! The experience database: conditional rules `cond -> prediction` with a
//! probability and per-position context counters.
//!
//! Condition indices run from `-(len_cond - 1)` (oldest) to `0` (most recent
//! step of the condition). An entry matched at offset `k` aligns its condition
//! index `i` with window index `i - k`.

mod snapshot;

pub use snapshot::{SnapshotError, SnapshotErrorKind, SnapshotHeader};

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::model::{ClassificationId, ContextId, ObservationWindow, StepId, WindowIndex};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntryId(pub u32);

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Occurrence counters for one (classification, condition index) position.
///
/// `counts[c]` is how often context `c` was observed there, `total` how many
/// contexts were observed there at all. The two always agree: the counts sum
/// to `total`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContextSlot {
    total: u64,
    counts: BTreeMap<ContextId, u64>,
}

impl ContextSlot {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, ctx: ContextId) -> u64 {
        self.counts.get(&ctx).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (ContextId, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }

    pub fn observe(&mut self, ctx: ContextId) {
        self.total += 1;
        *self.counts.entry(ctx).or_insert(0) += 1;
    }

    /// Relative frequency of `ctx` at this slot, `None` while the slot is empty.
    pub fn weight(&self, ctx: ContextId) -> Option<f64> {
        (self.total > 0).then(|| self.count(ctx) as f64 / self.total as f64)
    }

    /// Most frequent context (smallest id on ties) with its weight.
    pub fn top(&self) -> Option<(ContextId, f64)> {
        let (&ctx, _) = self
            .counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))?;
        self.weight(ctx).map(|w| (ctx, w))
    }

    pub fn is_consistent(&self) -> bool {
        self.counts.values().sum::<u64>() == self.total
    }

    pub(crate) fn from_parts(total: u64, counts: BTreeMap<ContextId, u64>) -> Self {
        Self { total, counts }
    }
}

/// Position of a [`ContextSlot`] inside an entry: classification and condition index.
pub type SlotKey = (ClassificationId, WindowIndex);

/// How `extend_entries` grows a condition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExtensionDirection {
    /// Append the newest observation as the new condition index 0; the
    /// prediction is copied unchanged.
    #[default]
    AppendObservation,
    /// Prepend the step just before the matched condition; the condition's
    /// most recent index keeps its position.
    ExtendIntoPast,
}

impl ExtensionDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::AppendObservation => "append-observation",
            Self::ExtendIntoPast => "extend-into-past",
        }
    }
}

impl fmt::Display for ExtensionDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtensionDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "append-observation" | "append" => Ok(Self::AppendObservation),
            "extend-into-past" | "past" => Ok(Self::ExtendIntoPast),
            other => Err(format!("unknown extension direction `{other}`")),
        }
    }
}

/// One rule of the experience database.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    id: EntryId,
    // oldest first; the last element is condition index 0
    cond: Vec<StepId>,
    prediction: StepId,
    p: f64,
    slots: BTreeMap<SlotKey, ContextSlot>,
}

impl Entry {
    pub fn id(&self) -> EntryId {
        self.id
    }

    /// Condition steps, oldest first.
    pub fn cond(&self) -> &[StepId] {
        &self.cond
    }

    pub fn len_cond(&self) -> usize {
        self.cond.len()
    }

    pub fn prediction(&self) -> StepId {
        self.prediction
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Condition step at condition index `i` (`0` = most recent).
    pub fn cond_at(&self, i: WindowIndex) -> Option<StepId> {
        if i > 0 {
            return None;
        }
        let back = i.unsigned_abs() as usize;
        (back < self.cond.len()).then(|| self.cond[self.cond.len() - 1 - back])
    }

    /// Condition indices from oldest to `0`.
    pub fn cond_indices(&self) -> impl Iterator<Item = WindowIndex> {
        let n = self.cond.len() as WindowIndex;
        (1 - n)..=0
    }

    pub fn slot(&self, cc: ClassificationId, i: WindowIndex) -> Option<&ContextSlot> {
        self.slots.get(&(cc, i))
    }

    pub fn slots(&self) -> impl Iterator<Item = (SlotKey, &ContextSlot)> + '_ {
        self.slots.iter().map(|(&k, v)| (k, v))
    }

    /// True iff the condition equals the window's steps ending at index `-offset`.
    /// Insufficient history is a non-match.
    pub fn matches(&self, window: &ObservationWindow, offset: usize) -> bool {
        let offset = offset as WindowIndex;
        self.cond_indices()
            .all(|i| window.observation(i - offset).ok() == self.cond_at(i))
    }

    /// Probability update: boost towards 1 when the entry predicted the
    /// observed step, decay towards 0 otherwise.
    pub fn apply_p_update(&mut self, correct: bool, alpha: f64) {
        self.p = if correct {
            alpha * self.p + (1.0 - alpha)
        } else {
            alpha * self.p
        };
    }

    /// Counts the contexts observed at the positions this entry matched
    /// (condition index `i` reads window index `i - offset`). Absent contexts
    /// leave their slot untouched.
    pub fn apply_context_update(&mut self, window: &ObservationWindow, offset: usize) {
        let offset = offset as WindowIndex;
        let n = self.cond.len() as WindowIndex;
        for i in (1 - n)..=0 {
            let Some(obs) = window.get(i - offset) else {
                continue;
            };
            for (&cc, &ctx) in &obs.contexts {
                self.slots.entry((cc, i)).or_default().observe(ctx);
            }
        }
    }

    pub(crate) fn from_parts(
        id: EntryId,
        cond: Vec<StepId>,
        prediction: StepId,
        p: f64,
        slots: BTreeMap<SlotKey, ContextSlot>,
    ) -> Self {
        Self {
            id,
            cond,
            prediction,
            p,
            slots,
        }
    }
}

/// Builds a one-step entry without registering it anywhere; for tests and
/// tooling that need to score a rule in isolation.
pub fn detached_entry(cond: Vec<StepId>, prediction: StepId, p: f64) -> Entry {
    Entry::from_parts(EntryId(0), cond, prediction, p, BTreeMap::new())
}

impl Entry {
    pub fn with_slot(mut self, cc: ClassificationId, i: WindowIndex, slot: ContextSlot) -> Self {
        self.slots.insert((cc, i), slot);
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct LookupDb {
    entries: Vec<Entry>,
    // most recent condition step -> entries, ascending id
    by_last: HashMap<StepId, Vec<EntryId>>,
    keys: HashMap<(Vec<StepId>, StepId), EntryId>,
}

impl PartialEq for LookupDb {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl LookupDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }

    pub fn get(&self, id: EntryId) -> Option<&Entry> {
        self.entries.get(id.0 as usize)
    }

    pub fn get_mut(&mut self, id: EntryId) -> Option<&mut Entry> {
        self.entries.get_mut(id.0 as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry> + '_ {
        self.entries.iter()
    }

    pub fn find(&self, cond: &[StepId], prediction: StepId) -> Option<&Entry> {
        self.keys
            .get(&(cond.to_vec(), prediction))
            .and_then(|&id| self.get(id))
    }

    /// Ids of entries matching `window` at `offset`, ascending.
    pub fn matching(&self, window: &ObservationWindow, offset: usize) -> Vec<EntryId> {
        let Ok(last) = window.observation(-(offset as WindowIndex)) else {
            return Vec::new();
        };
        self.by_last
            .get(&last)
            .into_iter()
            .flatten()
            .copied()
            .filter(|&id| self.entries[id.0 as usize].matches(window, offset))
            .collect()
    }

    /// Registers a new rule unless `(cond, prediction)` already exists.
    pub(crate) fn insert(
        &mut self,
        cond: Vec<StepId>,
        prediction: StepId,
        p: f64,
        slots: BTreeMap<SlotKey, ContextSlot>,
    ) -> Option<EntryId> {
        debug_assert!(!cond.is_empty());
        let key = (cond, prediction);
        if self.keys.contains_key(&key) {
            return None;
        }
        let id = EntryId(self.entries.len() as u32);
        let last = *key.0.last().expect("non-empty condition");
        self.by_last.entry(last).or_default().push(id);
        self.entries
            .push(Entry::from_parts(id, key.0.clone(), prediction, p, slots));
        self.keys.insert(key, id);
        Some(id)
    }

    /// Adds the one-step rule `[prev] -> next` with probability `initial_p`.
    /// Returns `None` (and changes nothing) if that rule already exists.
    pub fn add_entry(&mut self, prev: StepId, next: StepId, initial_p: f64) -> Option<EntryId> {
        self.insert(vec![prev], next, initial_p, BTreeMap::new())
    }

    /// Like [`add_entry`](Self::add_entry), with the condition drawn from window
    /// index -1 and the prediction from index 0. The new rule's index-0 slots
    /// are seeded with the contexts of the condition observation.
    pub fn add_entry_from_window(
        &mut self,
        window: &ObservationWindow,
        initial_p: f64,
    ) -> Option<EntryId> {
        let prev = window.get(-1)?;
        let next = window.observation(0).ok()?;
        let slots = prev
            .contexts
            .iter()
            .map(|(&cc, &ctx)| {
                let mut slot = ContextSlot::default();
                slot.observe(ctx);
                ((cc, 0), slot)
            })
            .collect();
        self.insert(vec![prev.step], next, initial_p, slots)
    }

    /// Creates one longer rule for each entry in `q` (all matched at offset 1),
    /// each with probability `inherit_p`. Entries already at the window's
    /// capacity, and rules that would duplicate an existing one, are skipped.
    pub fn extend_entries(
        &mut self,
        window: &ObservationWindow,
        q: &[EntryId],
        inherit_p: f64,
        direction: ExtensionDirection,
    ) -> Vec<EntryId> {
        let mut added = Vec::new();
        for &id in q {
            let src = &self.entries[id.0 as usize];
            if src.len_cond() >= window.capacity() {
                continue;
            }
            let (cond, slots) = match direction {
                ExtensionDirection::AppendObservation => {
                    let Ok(newest) = window.observation(0) else {
                        continue;
                    };
                    let mut cond = src.cond.clone();
                    cond.push(newest);
                    let slots = src
                        .slots
                        .iter()
                        .map(|(&(cc, i), slot)| ((cc, i - 1), slot.clone()))
                        .collect();
                    (cond, slots)
                }
                ExtensionDirection::ExtendIntoPast => {
                    // matched at offset 1: the condition covers window indices
                    // -1 ..= -len, so the step before it sits at -(len + 1)
                    let before = -(src.len_cond() as WindowIndex) - 1;
                    let Ok(step) = window.observation(before) else {
                        continue;
                    };
                    let mut cond = Vec::with_capacity(src.cond.len() + 1);
                    cond.push(step);
                    cond.extend_from_slice(&src.cond);
                    (cond, src.slots.clone())
                }
            };
            let prediction = src.prediction;
            if let Some(new_id) = self.insert(cond, prediction, inherit_p, slots) {
                added.push(new_id);
            }
        }
        added
    }

    /// Checks the structural invariants: dense ids, unique rules, probabilities
    /// in range, slot indices inside the condition, counters that add up.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (pos, e) in self.entries.iter().enumerate() {
            if e.id.0 as usize != pos {
                return Err(format!("entry at position {pos} has id {}", e.id));
            }
            if e.cond.is_empty() {
                return Err(format!("entry {} has an empty condition", e.id));
            }
            if !(0.0..=1.0).contains(&e.p) {
                return Err(format!("entry {} has p={} outside [0,1]", e.id, e.p));
            }
            for (&(cc, i), slot) in &e.slots {
                if e.cond_at(i).is_none() {
                    return Err(format!(
                        "entry {} has slot ({cc},{i}) outside its condition",
                        e.id
                    ));
                }
                if !slot.is_consistent() {
                    return Err(format!(
                        "entry {} slot ({cc},{i}) counts do not sum to total",
                        e.id
                    ));
                }
            }
            if self.keys.get(&(e.cond.clone(), e.prediction)) != Some(&e.id) {
                return Err(format!("entry {} is a duplicate rule", e.id));
            }
        }
        Ok(())
    }
}
