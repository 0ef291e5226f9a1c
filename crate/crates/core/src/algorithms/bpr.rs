//! Incremental BPR matrix factorization: each event triggers `s`
//! bootstrap-sampled pairwise SGD steps against uniformly drawn negatives.

use rand::Rng;

use crate::recommender::{
    filter_seen, top_n, ItemId, ModelError, RecommendationList, Recommender, StateDigest, UserId,
};

use super::{FactorModel, UserHistories};

/// Rejection-sampling cap when drawing a negative item outside the user's
/// history; near-complete histories skip the sample after this many attempts.
const MAX_SAMPLE_ATTEMPTS: usize = 100;

pub struct Bpr {
    name: String,
    model: FactorModel,
    histories: UserHistories,
    samples_per_event: usize,
    exclude_seen: bool,
}

impl Bpr {
    pub fn new(
        name: String,
        factors: usize,
        learning_rate: f64,
        regularization: f64,
        samples_per_event: usize,
        seed: u64,
        exclude_seen: bool,
    ) -> Self {
        Bpr {
            name,
            model: FactorModel::new(factors, learning_rate, regularization, seed),
            histories: UserHistories::new(),
            samples_per_event,
            exclude_seen,
        }
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }

    /// Draws an item uniformly from the known catalog outside the user's
    /// history, or None after the attempt cap. The positive of the current
    /// event is already in the history by the time this runs.
    fn sample_negative(&mut self, user: UserId) -> Option<ItemId> {
        let pool = self.model.num_known_items();
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let idx = self.model.rng_mut().gen_range(0..pool);
            let j = self.model.known_items()[idx];
            if !self.histories.contains(user, j) {
                return Some(j);
            }
        }
        None
    }

    fn pairwise_step(&mut self, user: UserId, pos: ItemId, neg: ItemId) {
        let eta = self.model.learning_rate();
        let lambda = self.model.regularization();
        let p_old = self.model.user_row(user).to_vec();
        let q_pos_old = self.model.item_row(pos).to_vec();
        let q_neg_old = self.model.item_row(neg).to_vec();

        let x = super::factor::dot(&p_old, &q_pos_old) - super::factor::dot(&p_old, &q_neg_old);
        let g = 1.0 / (1.0 + x.exp());

        let p = self.model.user_row_mut(user);
        for f in 0..p.len() {
            p[f] += eta * (g * (q_pos_old[f] - q_neg_old[f]) - lambda * p[f]);
        }
        let q_pos = self.model.item_row_mut(pos);
        for f in 0..q_pos.len() {
            q_pos[f] += eta * (g * p_old[f] - lambda * q_pos[f]);
        }
        let q_neg = self.model.item_row_mut(neg);
        for f in 0..q_neg.len() {
            q_neg[f] += eta * (-g * p_old[f] - lambda * q_neg[f]);
        }
    }
}

impl Recommender for Bpr {
    fn name(&self) -> &str {
        &self.name
    }

    fn knows_user(&self, user: UserId) -> bool {
        self.model.knows_user(user)
    }

    fn knows_item(&self, item: ItemId) -> bool {
        self.model.knows_item(item)
    }

    fn recommend(&self, user: UserId, n: usize) -> RecommendationList {
        let scored = self.model.scored_items(user);
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
        self.model.ensure_user(user);
        self.model.ensure_item(item);
        self.histories.insert(user, item);

        // No negative candidate exists when the user's history covers the
        // whole known catalog; the event is still recorded above.
        if self.model.num_known_items() <= self.histories.size_of(user) {
            return Ok(());
        }
        let mut touched = vec![item];
        for _ in 0..self.samples_per_event {
            if let Some(neg) = self.sample_negative(user) {
                self.pairwise_step(user, item, neg);
                touched.push(neg);
            }
        }
        self.model.check_finite(&self.name, user, &touched)
    }

    fn state_digest(&self) -> u64 {
        let mut digest = StateDigest::new();
        self.model.digest_into(&mut digest);
        self.histories.digest_into(&mut digest);
        digest.write_usize(self.samples_per_event);
        digest.finish()
    }
}


#[cfg(test)]
impl Bpr {
    fn pairwise_step_forced(&mut self, user: UserId, pos: ItemId, neg: ItemId) {
        self.pairwise_step(user, pos, neg);
    }
}
