//! Incremental SGD matrix factorization over positive-only feedback: each
//! event takes a single gradient step on the squared error toward target 1.

use crate::recommender::{
    filter_seen, top_n, ItemId, ModelError, RecommendationList, Recommender, StateDigest, UserId,
};

use super::{FactorModel, UserHistories};

pub struct Isgd {
    name: String,
    model: FactorModel,
    histories: UserHistories,
    exclude_seen: bool,
}

impl Isgd {
    pub fn new(
        name: String,
        factors: usize,
        learning_rate: f64,
        regularization: f64,
        seed: u64,
        exclude_seen: bool,
    ) -> Self {
        Isgd {
            name,
            model: FactorModel::new(factors, learning_rate, regularization, seed),
            histories: UserHistories::new(),
            exclude_seen,
        }
    }

    pub fn model(&self) -> &FactorModel {
        &self.model
    }
}

impl Recommender for Isgd {
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
        let eta = self.model.learning_rate();
        let lambda = self.model.regularization();

        // Both row updates read pre-update copies.
        let p_old = self.model.user_row(user).to_vec();
        let q_old = self.model.item_row(item).to_vec();
        let err = 1.0 - super::factor::dot(&p_old, &q_old);

        let p = self.model.user_row_mut(user);
        for (pf, &qf) in p.iter_mut().zip(q_old.iter()) {
            *pf += eta * (err * qf - lambda * *pf);
        }
        let q = self.model.item_row_mut(item);
        for (qf, &pf) in q.iter_mut().zip(p_old.iter()) {
            *qf += eta * (err * pf - lambda * *qf);
        }

        self.model.check_finite(&self.name, user, &[item])?;
        self.histories.insert(user, item);
        Ok(())
    }

    fn state_digest(&self) -> u64 {
        let mut digest = StateDigest::new();
        self.model.digest_into(&mut digest);
        self.histories.digest_into(&mut digest);
        digest.finish()
    }
}
