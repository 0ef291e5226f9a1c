//! recstream: a prequential (test-then-learn) evaluation harness for
//! incremental top-N recommenders on chronologically ordered event streams.
//!
//! Every incoming event is first scored against the current model's
//! recommendations, then used to update the model. The harness records
//! per-event outcomes and update timings, derives windowed accuracy series,
//! and compares algorithms with a signed McNemar test over sliding windows.

pub mod algorithms;
pub mod cli;
pub mod config;
pub mod engine;
pub mod ids;
pub mod pipeline;
pub mod recommender;
pub mod report;
pub mod stats;
pub mod stream;
pub mod synth;
