//! Incremental user-based neighborhood model. Pairwise intersection counts
//! are maintained on every event, so cosine similarities are available in
//! O(partners) at recommendation time.

use std::collections::HashMap;

use crate::recommender::{
    filter_seen, top_n, ItemId, ModelError, RecommendationList, Recommender, StateDigest, UserId,
};

use super::UserHistories;

pub struct UserKnn {
    name: String,
    histories: UserHistories,
    /// Inverted index: users whose history contains the item, in arrival order.
    item_users: Vec<Vec<UserId>>,
    /// Sparse symmetric |history(u) ∩ history(v)| counters, keyed per user.
    overlaps: Vec<HashMap<UserId, u32>>,
    neighborhood: usize,
    exclude_seen: bool,
}

impl UserKnn {
    pub fn new(name: String, neighborhood: usize, exclude_seen: bool) -> Self {
        UserKnn {
            name,
            histories: UserHistories::new(),
            item_users: Vec::new(),
            overlaps: Vec::new(),
            neighborhood,
            exclude_seen,
        }
    }

    fn ensure_user_slot(&mut self, user: UserId) {
        let u = user as usize;
        if u >= self.overlaps.len() {
            self.overlaps.resize_with(u + 1, HashMap::new);
        }
    }

    /// cosine(u, v) = |H_u ∩ H_v| / sqrt(|H_u| · |H_v|), in [0, 1].
    pub fn cosine(&self, u: UserId, v: UserId) -> f64 {
        let overlap = self
            .overlaps
            .get(u as usize)
            .and_then(|m| m.get(&v))
            .copied()
            .unwrap_or(0);
        if overlap == 0 {
            return 0.0;
        }
        let hu = self.histories.size_of(u);
        let hv = self.histories.size_of(v);
        overlap as f64 / ((hu as f64) * (hv as f64)).sqrt()
    }

    /// Up to `neighborhood` users with positive cosine, ordered by descending
    /// similarity then ascending user index.
    pub fn neighbors(&self, user: UserId) -> Vec<(UserId, f64)> {
        let Some(partners) = self.overlaps.get(user as usize) else {
            return Vec::new();
        };
        let mut scored: Vec<(UserId, f64)> = partners
            .keys()
            .map(|&v| (v, self.cosine(user, v)))
            .filter(|&(_, c)| c > 0.0)
            .collect();
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("cosine is finite")
                .then(a.0.cmp(&b.0))
        });
        scored.truncate(self.neighborhood);
        scored
    }

    pub fn intersection(&self, u: UserId, v: UserId) -> u32 {
        self.overlaps
            .get(u as usize)
            .and_then(|m| m.get(&v))
            .copied()
            .unwrap_or(0)
    }

    pub fn histories(&self) -> &UserHistories {
        &self.histories
    }
}

impl Recommender for UserKnn {
    fn name(&self) -> &str {
        &self.name
    }

    fn knows_user(&self, user: UserId) -> bool {
        self.histories.knows_user(user)
    }

    fn knows_item(&self, item: ItemId) -> bool {
        self.item_users
            .get(item as usize)
            .is_some_and(|users| !users.is_empty())
    }

    fn recommend(&self, user: UserId, n: usize) -> RecommendationList {
        let neighbors = self.neighbors(user);
        if neighbors.is_empty() {
            return RecommendationList::empty();
        }
        // Σ over neighbors v containing the item of cosine(u, v). Outer loop
        // order is fixed by the sorted neighbor list, keeping sums and
        // tie-breaks reproducible.
        let mut scores: HashMap<ItemId, f64> = HashMap::new();
        for &(v, cos) in &neighbors {
            if let Some(history) = self.histories.get(v) {
                for &item in history {
                    *scores.entry(item).or_insert(0.0) += cos;
                }
            }
        }
        let scored: Vec<(ItemId, f64)> = scores.into_iter().collect();
        let scored = if self.exclude_seen {
            match self.histories.get(user) {
                Some(history) => filter_seen(scored, history),
                None => scored,
            }
        } else {
            scored
        };
        top_n(scored, n)
    }

    fn update(&mut self, user: UserId, item: ItemId) -> Result<(), ModelError> {
        if self.histories.contains(user, item) {
            return Ok(()); // repeated pair leaves all counts unchanged
        }
        self.ensure_user_slot(user);
        let i = item as usize;
        if i >= self.item_users.len() {
            self.item_users.resize_with(i + 1, Vec::new);
        }
        for idx in 0..self.item_users[i].len() {
            let v = self.item_users[i][idx];
            if v == user {
                continue;
            }
            self.ensure_user_slot(v);
            *self.overlaps[user as usize].entry(v).or_insert(0) += 1;
            *self.overlaps[v as usize].entry(user).or_insert(0) += 1;
        }
        self.item_users[i].push(user);
        self.histories.insert(user, item);
        Ok(())
    }

    fn state_digest(&self) -> u64 {
        let mut digest = StateDigest::new();
        self.histories.digest_into(&mut digest);
        digest.write_usize(self.item_users.len());
        for users in &self.item_users {
            digest.write_usize(users.len());
            for &u in users {
                digest.write_u32(u);
            }
        }
        digest.write_usize(self.overlaps.len());
        for map in &self.overlaps {
            let mut entries: Vec<(UserId, u32)> = map.iter().map(|(&v, &c)| (v, c)).collect();
            entries.sort_unstable();
            digest.write_usize(entries.len());
            for (v, c) in entries {
                digest.write_u32(v);
                digest.write_u32(c);
            }
        }
        digest.write_usize(self.neighborhood);
        digest.finish()
    }
}
