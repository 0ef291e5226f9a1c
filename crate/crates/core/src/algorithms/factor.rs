//! Latent-factor state shared by the ISGD and BPR-MF models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::recommender::{ItemId, ModelError, StateDigest, UserId};

const INIT_RANGE: f64 = 0.01;

/// User/item factor matrices with lazily created rows. A row is created on
/// the first update touching its index, initialized uniformly on
/// [-0.01, 0.01] from the seeded RNG; an empty row means "unknown".
#[derive(Debug, Clone)]
pub struct FactorModel {
    factors: usize,
    learning_rate: f64,
    regularization: f64,
    user_factors: Vec<Vec<f64>>,
    item_factors: Vec<Vec<f64>>,
    /// Item ids with a row, in creation order; the negative-sampling pool.
    known_items: Vec<ItemId>,
    rng: ChaCha8Rng,
}

impl FactorModel {
    pub fn new(factors: usize, learning_rate: f64, regularization: f64, seed: u64) -> Self {
        assert!(factors >= 1, "factor count must be at least 1");
        FactorModel {
            factors,
            learning_rate,
            regularization,
            user_factors: Vec::new(),
            item_factors: Vec::new(),
            known_items: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn regularization(&self) -> f64 {
        self.regularization
    }

    pub fn knows_user(&self, user: UserId) -> bool {
        self.user_factors
            .get(user as usize)
            .is_some_and(|row| !row.is_empty())
    }

    pub fn knows_item(&self, item: ItemId) -> bool {
        self.item_factors
            .get(item as usize)
            .is_some_and(|row| !row.is_empty())
    }

    pub fn num_known_items(&self) -> usize {
        self.known_items.len()
    }

    pub fn known_items(&self) -> &[ItemId] {
        &self.known_items
    }

    fn init_row(rng: &mut ChaCha8Rng, factors: usize) -> Vec<f64> {
        (0..factors)
            .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
            .collect()
    }

    /// Creates the user row if absent. Rows are created in update order, so
    /// the RNG consumption sequence is a deterministic function of the stream.
    pub fn ensure_user(&mut self, user: UserId) {
        let u = user as usize;
        if u >= self.user_factors.len() {
            self.user_factors.resize_with(u + 1, Vec::new);
        }
        if self.user_factors[u].is_empty() {
            self.user_factors[u] = Self::init_row(&mut self.rng, self.factors);
        }
    }

    pub fn ensure_item(&mut self, item: ItemId) {
        let i = item as usize;
        if i >= self.item_factors.len() {
            self.item_factors.resize_with(i + 1, Vec::new);
        }
        if self.item_factors[i].is_empty() {
            self.item_factors[i] = Self::init_row(&mut self.rng, self.factors);
            self.known_items.push(item);
        }
    }

    pub fn user_row(&self, user: UserId) -> &[f64] {
        &self.user_factors[user as usize]
    }

    pub fn item_row(&self, item: ItemId) -> &[f64] {
        &self.item_factors[item as usize]
    }

    pub fn user_row_mut(&mut self, user: UserId) -> &mut Vec<f64> {
        &mut self.user_factors[user as usize]
    }

    pub fn item_row_mut(&mut self, item: ItemId) -> &mut Vec<f64> {
        &mut self.item_factors[item as usize]
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn score(&self, user: UserId, item: ItemId) -> f64 {
        dot(self.user_row(user), self.item_row(item))
    }

    /// Scores every known item for `user` as P[u]·Q[i].
    pub fn scored_items(&self, user: UserId) -> Vec<(ItemId, f64)> {
        let p = self.user_row(user);
        self.item_factors
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_empty())
            .map(|(i, q)| (i as ItemId, dot(p, q)))
            .collect()
    }

    /// Verifies the rows touched by an update stayed finite.
    pub fn check_finite(
        &self,
        model: &str,
        user: UserId,
        items: &[ItemId],
    ) -> Result<(), ModelError> {
        let finite = self.user_row(user).iter().all(|v| v.is_finite())
            && items
                .iter()
                .all(|&i| self.item_row(i).iter().all(|v| v.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(ModelError::NonFinite {
                model: model.to_string(),
                user,
                item: items.first().copied().unwrap_or(0),
            })
        }
    }

    pub(crate) fn digest_into(&self, digest: &mut StateDigest) {
        digest.write_usize(self.factors);
        digest.write_usize(self.user_factors.len());
        for row in &self.user_factors {
            digest.write_usize(row.len());
            for &v in row {
                digest.write_f64(v);
            }
        }
        digest.write_usize(self.item_factors.len());
        for row in &self.item_factors {
            digest.write_usize(row.len());
            for &v in row {
                digest.write_f64(v);
            }
        }
        // RNG position distinguishes states that would diverge on the next draw.
        digest.write_u64(self.rng.get_word_pos() as u64);
    }

    #[cfg(test)]
    pub(crate) fn set_rows_for_test(
        &mut self,
        user: UserId,
        user_row: Vec<f64>,
        item_rows: Vec<(ItemId, Vec<f64>)>,
    ) {
        let u = user as usize;
        if u >= self.user_factors.len() {
            self.user_factors.resize_with(u + 1, Vec::new);
        }
        self.user_factors[u] = user_row;
        for (item, row) in item_rows {
            let i = item as usize;
            if i >= self.item_factors.len() {
                self.item_factors.resize_with(i + 1, Vec::new);
            }
            if self.item_factors[i].is_empty() {
                self.known_items.push(item);
            }
            self.item_factors[i] = row;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
