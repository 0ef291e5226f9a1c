//! The incremental-recommender contract shared by all algorithms, plus the
//! ranking primitives (scored-list type, seen-item filtering, deterministic
//! top-N selection) they build on.

use std::collections::HashSet;

use thiserror::Error;

pub type UserId = u32;
pub type ItemId = u32;

/// Ranked list of at most N items with scores.
///
/// Invariants: scores are non-increasing and item indices are distinct.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecommendationList {
    entries: Vec<(ItemId, f64)>,
}

impl RecommendationList {
    pub fn new(entries: Vec<(ItemId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].1 >= w[1].1));
        debug_assert_eq!(
            entries.iter().map(|(i, _)| i).collect::<HashSet<_>>().len(),
            entries.len()
        );
        RecommendationList { entries }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// 1-based position of `item`, if present.
    pub fn rank_of(&self, item: ItemId) -> Option<usize> {
        self.entries.iter().position(|&(i, _)| i == item).map(|p| p + 1)
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.rank_of(item).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(ItemId, f64)] {
        &self.entries
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(
        "{model}: non-finite value while updating user {user}, item {item} \
         (learning rate too high?)"
    )]
    NonFinite {
        model: String,
        user: UserId,
        item: ItemId,
    },
}

/// Capability every incremental algorithm provides. `recommend` never mutates
/// state; `update` is the only mutating entry point and processes exactly one
/// event. `state_digest` must be a deterministic function of model state.
pub trait Recommender: Send {
    fn name(&self) -> &str;
    fn knows_user(&self, user: UserId) -> bool;
    fn knows_item(&self, item: ItemId) -> bool;
    fn recommend(&self, user: UserId, n: usize) -> RecommendationList;
    fn update(&mut self, user: UserId, item: ItemId) -> Result<(), ModelError>;
    fn state_digest(&self) -> u64;
}

/// Removes items already in the user's observed history, preserving order.
pub fn filter_seen(
    candidates: Vec<(ItemId, f64)>,
    history: &HashSet<ItemId>,
) -> Vec<(ItemId, f64)> {
    if history.is_empty() {
        return candidates;
    }
    candidates
        .into_iter()
        .filter(|(item, _)| !history.contains(item))
        .collect()
}

/// Ranks scored candidates by descending score, breaking ties by ascending
/// item index, and truncates to `n`. Scores must be finite.
pub fn top_n(mut scored: Vec<(ItemId, f64)>, n: usize) -> RecommendationList {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores must be finite")
            .then(a.0.cmp(&b.0))
    });
    scored.truncate(n);
    RecommendationList::new(scored)
}

/// FNV-1a hasher used for model-state digests. Deterministic across runs and
/// platforms, unlike the std `DefaultHasher` contract.
#[derive(Debug, Clone)]
pub struct StateDigest(u64);

impl StateDigest {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;

    pub fn new() -> Self {
        StateDigest(Self::OFFSET)
    }

    pub fn write_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(Self::PRIME);
        }
    }

    pub fn write_u32(&mut self, v: u32) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_u64(&mut self, v: u64) {
        self.write_bytes(&v.to_le_bytes());
    }

    pub fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }

    pub fn write_f64(&mut self, v: f64) {
        self.write_u64(v.to_bits());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }
}

impl Default for StateDigest {
    fn default() -> Self {
        Self::new()
    }
}
