//! The test-then-learn loop. For each event, in order: recommend with the
//! current model state (if the user is known), score the list against the
//! observed item, then update the model. A model never sees event t before
//! its record for event t is emitted.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ids::IdMap;
use crate::recommender::{ItemId, ModelError, RecommendationList, Recommender, UserId};
use crate::stream::InteractionEvent;

/// One stream event with interned user/item indices; `seq` is the position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseEvent {
    pub user: UserId,
    pub item: ItemId,
}

/// A loaded stream with all external keys interned to dense indices in
/// first-seen order.
#[derive(Debug, Clone)]
pub struct DenseStream {
    pub events: Vec<DenseEvent>,
    pub users: IdMap,
    pub items: IdMap,
}

impl DenseStream {
    pub fn from_events(events: &[InteractionEvent]) -> Self {
        let mut users = IdMap::new();
        let mut items = IdMap::new();
        let dense = events
            .iter()
            .map(|ev| DenseEvent {
                user: users.intern(&ev.user),
                item: items.intern(&ev.item),
            })
            .collect();
        DenseStream {
            events: dense,
            users,
            items,
        }
    }
}

fn default_cutoff() -> usize {
    10
}
fn default_update_every() -> usize {
    1
}
fn default_timing() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Recommendation list cut-off N.
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Number of previous recommendation lists a hit may come from;
    /// 0 means strict single-list scoring.
    #[serde(default)]
    pub relaxed_window: usize,
    /// Update the model only on every m-th event (those with seq % m == 0).
    #[serde(default = "default_update_every")]
    pub update_every: usize,
    /// Exclude unknown-user events from the recall denominator.
    #[serde(default)]
    pub known_users_only: bool,
    /// Measure recommend/update wall-clock durations. Disable for
    /// byte-reproducible outputs.
    #[serde(default = "default_timing")]
    pub timing: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            cutoff: default_cutoff(),
            relaxed_window: 0,
            update_every: default_update_every(),
            known_users_only: false,
            timing: default_timing(),
        }
    }
}

/// Per-event outcome for one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationRecord {
    pub seq: usize,
    pub user_known: bool,
    pub item_known: bool,
    pub hit: bool,
    /// 1-based rank of the observed item in the scored list; present iff hit.
    pub rank: Option<usize>,
    pub recommend_micros: u64,
    pub update_micros: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The model reached a non-finite state; records up to and including
    /// `seq` are retained.
    Aborted { seq: usize, reason: String },
}

/// Everything one model produced over one stream.
pub struct ModelRun {
    pub name: String,
    pub records: Vec<EvaluationRecord>,
    pub status: RunStatus,
    /// Durations of updates actually performed (respects `update_every`).
    pub update_times_us: Vec<u64>,
    /// Hits that came from a previous list rather than the current one;
    /// always 0 in strict mode.
    pub relaxed_extra_hits: usize,
}

impl ModelRun {
    pub fn hits(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.hit).collect()
    }

    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

/// Scores a recommendation list against the observed item. In relaxed mode
/// the previous lists are consulted newest-first; the rank comes from the
/// most recent list containing the item. Returns (hit, rank, from_previous).
pub fn score_event(
    list: &RecommendationList,
    true_item: ItemId,
    previous: &VecDeque<RecommendationList>,
) -> (bool, Option<usize>, bool) {
    if let Some(rank) = list.rank_of(true_item) {
        return (true, Some(rank), false);
    }
    for prev in previous.iter().rev() {
        if let Some(rank) = prev.rank_of(true_item) {
            return (true, Some(rank), true);
        }
    }
    (false, None, false)
}

/// Drives one model through a stream one event at a time. Exposed so tests
/// can interleave steps with state-digest checks.
pub struct ModelEvaluator {
    model: Box<dyn Recommender>,
    config: EngineConfig,
    previous_lists: HashMap<UserId, VecDeque<RecommendationList>>,
    records: Vec<EvaluationRecord>,
    update_times_us: Vec<u64>,
    relaxed_extra_hits: usize,
    seq: usize,
}

impl ModelEvaluator {
    pub fn new(model: Box<dyn Recommender>, config: EngineConfig) -> Self {
        ModelEvaluator {
            model,
            config,
            previous_lists: HashMap::new(),
            records: Vec::new(),
            update_times_us: Vec::new(),
            relaxed_extra_hits: 0,
            seq: 0,
        }
    }

    pub fn model_name(&self) -> &str {
        self.model.name()
    }

    pub fn state_digest(&self) -> u64 {
        self.model.state_digest()
    }

    pub fn events_processed(&self) -> usize {
        self.seq
    }

    /// Processes one event: recommend (if user known), score, update.
    /// On a model error the record for this event is still emitted before
    /// the error is returned.
    pub fn step(&mut self, event: DenseEvent) -> Result<(), ModelError> {
        let seq = self.seq;
        self.seq += 1;
        let user_known = self.model.knows_user(event.user);
        let item_known = self.model.knows_item(event.item);

        let mut record = EvaluationRecord {
            seq,
            user_known,
            item_known,
            hit: false,
            rank: None,
            recommend_micros: 0,
            update_micros: 0,
        };

        if user_known {
            let started = self.config.timing.then(Instant::now);
            let list = self.model.recommend(event.user, self.config.cutoff);
            if let Some(t) = started {
                record.recommend_micros = t.elapsed().as_micros() as u64;
            }
            let empty = VecDeque::new();
            let previous = self.previous_lists.get(&event.user).unwrap_or(&empty);
            let (hit, rank, from_previous) = score_event(&list, event.item, previous);
            record.hit = hit;
            record.rank = rank;
            if from_previous {
                self.relaxed_extra_hits += 1;
            }
            if self.config.relaxed_window > 0 {
                let deque = self.previous_lists.entry(event.user).or_default();
                deque.push_back(list);
                while deque.len() > self.config.relaxed_window {
                    deque.pop_front();
                }
            }
        }

        let result = if seq.is_multiple_of(self.config.update_every) {
            let started = self.config.timing.then(Instant::now);
            let result = self.model.update(event.user, event.item);
            if let Some(t) = started {
                record.update_micros = t.elapsed().as_micros() as u64;
            }
            if result.is_ok() {
                self.update_times_us.push(record.update_micros);
            }
            result
        } else {
            Ok(())
        };

        self.records.push(record);
        result
    }

    pub fn finish(self, status: RunStatus) -> ModelRun {
        ModelRun {
            name: self.model.name().to_string(),
            records: self.records,
            status,
            update_times_us: self.update_times_us,
            relaxed_extra_hits: self.relaxed_extra_hits,
        }
    }
}

/// Runs one model over the whole stream, stopping early if it aborts.
pub fn run_model(
    model: Box<dyn Recommender>,
    events: &[DenseEvent],
    config: &EngineConfig,
) -> ModelRun {
    let mut evaluator = ModelEvaluator::new(model, *config);
    for &event in events {
        if let Err(err) = evaluator.step(event) {
            let seq = evaluator.events_processed() - 1;
            return evaluator.finish(RunStatus::Aborted {
                seq,
                reason: err.to_string(),
            });
        }
    }
    evaluator.finish(RunStatus::Completed)
}

/// Evaluates several models over the same stream. Models run in parallel;
/// each owns its state and record sink, so results equal the sequential run
/// and are returned in input order.
pub fn evaluate_stream(
    models: Vec<Box<dyn Recommender>>,
    events: &[DenseEvent],
    config: &EngineConfig,
) -> Vec<ModelRun> {
    models
        .into_par_iter()
        .map(|model| run_model(model, events, config))
        .collect()
}
