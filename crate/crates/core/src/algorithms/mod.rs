//! The three incremental item-prediction algorithms: ISGD-style matrix
//! factorization, incremental BPR-MF, and incremental user-based KNN.

mod bpr;
mod factor;
mod isgd;
mod knn;

pub use bpr::Bpr;
pub use factor::FactorModel;
pub use isgd::Isgd;
pub use knn::UserKnn;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::recommender::{ItemId, Recommender, StateDigest, UserId};

/// Per-user sets of observed items, grown on demand.
#[derive(Debug, Default, Clone)]
pub struct UserHistories {
    sets: Vec<HashSet<ItemId>>,
}

impl UserHistories {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records (user, item); returns true if the pair was new.
    pub fn insert(&mut self, user: UserId, item: ItemId) -> bool {
        let u = user as usize;
        if u >= self.sets.len() {
            self.sets.resize_with(u + 1, HashSet::new);
        }
        self.sets[u].insert(item)
    }

    pub fn contains(&self, user: UserId, item: ItemId) -> bool {
        self.sets
            .get(user as usize)
            .is_some_and(|s| s.contains(&item))
    }

    pub fn get(&self, user: UserId) -> Option<&HashSet<ItemId>> {
        self.sets.get(user as usize).filter(|s| !s.is_empty())
    }

    pub fn size_of(&self, user: UserId) -> usize {
        self.sets.get(user as usize).map_or(0, HashSet::len)
    }

    pub fn knows_user(&self, user: UserId) -> bool {
        self.size_of(user) > 0
    }

    pub fn num_users(&self) -> usize {
        self.sets.len()
    }

    pub(crate) fn digest_into(&self, digest: &mut StateDigest) {
        digest.write_usize(self.sets.len());
        for set in &self.sets {
            let mut items: Vec<ItemId> = set.iter().copied().collect();
            items.sort_unstable();
            digest.write_usize(items.len());
            for item in items {
                digest.write_u32(item);
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum AlgorithmError {
    #[error("unknown algorithm kind {0:?} (expected one of: isgd, bprmf, userknn)")]
    UnknownKind(String),
}

fn default_factors() -> usize {
    20
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_regularization() -> f64 {
    0.01
}
fn default_negative_samples() -> usize {
    1
}
fn default_neighbors() -> usize {
    50
}
fn default_exclude_seen() -> bool {
    true
}

/// Config-facing description of one algorithm instance. Fields irrelevant to
/// a kind (e.g. `neighbors` for isgd) are ignored by `build`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    /// Output label; defaults to `kind`.
    #[serde(default)]
    pub name: Option<String>,
    pub kind: String,
    #[serde(default = "default_factors")]
    pub factors: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    /// Bootstrap-sampled pairwise steps per event (bprmf only).
    #[serde(default = "default_negative_samples")]
    pub negative_samples: usize,
    /// Neighborhood size (userknn only).
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
    /// Exclude items already observed for the user from recommendations.
    #[serde(default = "default_exclude_seen")]
    pub exclude_seen: bool,
}

impl AlgorithmSpec {
    pub fn of_kind(kind: &str) -> Self {
        AlgorithmSpec {
            name: None,
            kind: kind.to_string(),
            factors: default_factors(),
            learning_rate: default_learning_rate(),
            regularization: default_regularization(),
            negative_samples: default_negative_samples(),
            neighbors: default_neighbors(),
            exclude_seen: default_exclude_seen(),
        }
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.kind)
    }
}

/// Instantiates the model described by `spec`, seeding its RNG with `seed`.
pub fn build(spec: &AlgorithmSpec, seed: u64) -> Result<Box<dyn Recommender>, AlgorithmError> {
    let label = spec.label().to_string();
    match spec.kind.as_str() {
        "isgd" => Ok(Box::new(Isgd::new(
            label,
            spec.factors,
            spec.learning_rate,
            spec.regularization,
            seed,
            spec.exclude_seen,
        ))),
        "bprmf" => Ok(Box::new(Bpr::new(
            label,
            spec.factors,
            spec.learning_rate,
            spec.regularization,
            spec.negative_samples,
            seed,
            spec.exclude_seen,
        ))),
        "userknn" => Ok(Box::new(UserKnn::new(label, spec.neighbors, spec.exclude_seen))),
        other => Err(AlgorithmError::UnknownKind(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_rejects_unknown_kind() {
        let spec = AlgorithmSpec::of_kind("funk-svd");
        assert!(matches!(
            build(&spec, 1),
            Err(AlgorithmError::UnknownKind(_))
        ));
    }

    #[test]
    fn build_constructs_all_three_kinds() {
        for kind in ["isgd", "bprmf", "userknn"] {
            let spec = AlgorithmSpec::of_kind(kind);
            let model = build(&spec, 42).unwrap();
            assert_eq!(model.name(), kind);
        }
    }

    #[test]
    fn histories_track_insert_and_membership() {
        let mut h = UserHistories::new();
        assert!(h.insert(3, 7));
        assert!(!h.insert(3, 7));
        assert!(h.contains(3, 7));
        assert!(!h.contains(2, 7));
        assert!(h.knows_user(3));
        assert!(!h.knows_user(0));
        assert_eq!(h.size_of(3), 1);
    }

    use proptest::prelude::*;

    fn hist_digest(h: &UserHistories) -> u64 {
        let mut d = StateDigest::new();
        h.digest_into(&mut d);
        d.finish()
    }

    proptest! {
        #[test]
        fn history_digest_is_insertion_order_independent_per_user(
            mut items in proptest::collection::vec(0u32..50, 1..30),
        ) {
            let mut a = UserHistories::new();
            for &i in &items {
                a.insert(0, i);
            }
            items.reverse();
            let mut b = UserHistories::new();
            for &i in &items {
                b.insert(0, i);
            }
            prop_assert_eq!(hist_digest(&a), hist_digest(&b));
        }
    }
}
