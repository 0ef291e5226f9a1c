//! End-to-end run orchestration: load the stream, evaluate every configured
//! model prequentially, derive statistics, and write the output directory.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::algorithms;
use crate::config::{ConfigError, RunConfig};
use crate::engine::{evaluate_stream, DenseStream};
use crate::report::{
    self, Artifact, ModelStatus, ReportError, RunManifest, StreamCounts, MANIFEST_SCHEMA,
};
use crate::stats::{self, StatsError, SummaryRow};
use crate::stream::{deduplicate, load_stream, LoadCounts, StreamError, StreamSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot create output directory {path}: {source}")]
    OutputDir {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// What a finished run produced, for callers that need exit codes or
/// follow-up checks without re-reading the artifacts.
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: Vec<SummaryRow>,
    pub aborted_models: Vec<String>,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn fully_completed(&self) -> bool {
        self.aborted_models.is_empty()
    }
}

/// Runs the whole pipeline for `config`. The stream is loaded before the
/// output directory is created, so configuration and input errors leave no
/// partial outputs behind.
pub fn execute_run(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate()?;
    let started = Instant::now();

    let loaded = load_stream(&config.stream)?;
    let mut events = loaded.events;
    if let Some(limit) = config.limit {
        events.truncate(limit);
        if events.is_empty() {
            return Err(StreamError::Empty.into());
        }
    }
    let dense = DenseStream::from_events(&events);

    let models: Result<Vec<_>, _> = config
        .algorithms
        .iter()
        .map(|spec| algorithms::build(spec, config.seed))
        .collect();
    let models = models.map_err(|e| match e {
        algorithms::AlgorithmError::UnknownKind(kind) => ConfigError::UnknownAlgorithm(kind),
    })?;

    let runs = evaluate_stream(models, &dense.events, &config.engine);

    let summary = stats::overall_summary(&runs, config.engine.known_users_only)?;
    let level = config.stats.level().expect("validated");

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::OutputDir {
        path: dir.clone(),
        source,
    })?;
    let mut artifacts: Vec<PathBuf> = Vec::new();

    let config_path = dir.join("config.toml");
    std::fs::write(&config_path, config.to_toml_string()).map_err(|source| {
        PipelineError::OutputDir {
            path: config_path.clone(),
            source,
        }
    })?;
    artifacts.push(config_path);

    let summary_path = dir.join("summary.csv");
    report::write_summary(&summary_path, &summary)?;
    artifacts.push(summary_path);

    for run in &runs {
        let hits = run.hits();
        let series = stats::moving_average(&hits, config.stats.window)?;
        let path = dir.join(format!("{}_ma.csv", run.name));
        report::write_ma_series(&path, &series)?;
        artifacts.push(report::meta_path(&path));
        artifacts.push(path);

        if config.dump_records {
            let path = dir.join(format!("{}_records.csv", run.name));
            report::write_records(&path, &run.records)?;
            artifacts.push(path);
        }
    }

    let pairs = config.mcnemar_pairs();
    let mut comparisons_written = 0u64;
    for (a, b) in &pairs {
        let run_a = runs.iter().find(|r| &r.name == a);
        let run_b = runs.iter().find(|r| &r.name == b);
        let (Some(run_a), Some(run_b)) = (run_a, run_b) else {
            continue;
        };
        // An aborted model has a truncated record sequence; the pairwise
        // test needs aligned outcomes, so such pairs are left out and the
        // abort is visible in the manifest.
        if !run_a.completed() || !run_b.completed() {
            continue;
        }
        let points = stats::mcnemar_signed(&run_a.hits(), &run_b.hits(), config.stats.window, level)?;
        let path = dir.join(format!("mcnemar_{a}_vs_{b}.csv"));
        report::write_mcnemar_series(&path, &points, config.stats.window, level)?;
        artifacts.push(report::meta_path(&path));
        artifacts.push(path);
        comparisons_written += 1;
    }

    let aborted_models: Vec<String> = runs
        .iter()
        .filter(|r| !r.completed())
        .map(|r| r.name.clone())
        .collect();

    let mut artifact_entries = Vec::with_capacity(artifacts.len());
    artifacts.sort();
    for path in &artifacts {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        artifact_entries.push(Artifact {
            path: name,
            sha256: report::sha256_file(path)?,
        });
    }

    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        mcnemar_comparisons: comparisons_written,
        stream: stream_counts(&loaded.counts, &dense),
        models: runs.iter().map(ModelStatus::from_run).collect(),
        artifacts: artifact_entries,
        config: config.clone(),
    };
    report::write_manifest(dir, &manifest)?;

    Ok(RunOutcome {
        output_dir: dir.clone(),
        summary,
        aborted_models,
        manifest,
    })
}

fn stream_counts(counts: &LoadCounts, dense: &DenseStream) -> StreamCounts {
    StreamCounts {
        lines_read: counts.lines_read,
        parse_skipped: counts.parse_skipped,
        rating_filtered: counts.rating_filtered,
        dedup_removed: counts.dedup_removed,
        events: dense.events.len() as u64,
        users: dense.users.len() as u64,
        items: dense.items.len() as u64,
    }
}

/// Table-style dataset statistics, with sparsity under both definitions
/// (raw event count and deduplicated event count).
#[derive(Debug, Clone, PartialEq)]
pub struct StreamInspection {
    pub counts: LoadCounts,
    pub events: u64,
    pub users: u64,
    pub items: u64,
    pub sparsity_raw: f64,
    pub dedup_events: u64,
    pub sparsity_dedup: f64,
}

/// Loads the stream (with deduplication forced off so both figures can be
/// reported) and computes Table-style statistics.
pub fn inspect_stream(spec: &StreamSpec) -> Result<StreamInspection, PipelineError> {
    let mut load_spec = spec.clone();
    load_spec.dedup = false;
    let loaded = load_stream(&load_spec)?;
    let dense = DenseStream::from_events(&loaded.events);
    let events = loaded.events.len() as u64;
    let users = dense.users.len() as u64;
    let items = dense.items.len() as u64;
    let dedup_events = deduplicate(loaded.events).len() as u64;
    Ok(StreamInspection {
        counts: loaded.counts,
        events,
        users,
        items,
        sparsity_raw: sparsity(events, users, items),
        dedup_events,
        sparsity_dedup: sparsity(dedup_events, users, items),
    })
}

/// sparsity = 1 - events / (users * items)
pub fn sparsity(events: u64, users: u64, items: u64) -> f64 {
    if users == 0 || items == 0 {
        return 1.0;
    }
    1.0 - events as f64 / (users as f64 * items as f64)
}

/// Recomputes a signed McNemar series from two record dumps produced by a
/// run with `dump_records` enabled.
pub fn mcnemar_from_records(
    path_a: &Path,
    path_b: &Path,
    window: usize,
    level: stats::SignificanceLevel,
) -> Result<Vec<stats::McNemarPoint>, PipelineError> {
    let hits_a = report::read_record_hits(path_a)?;
    let hits_b = report::read_record_hits(path_b)?;
    Ok(stats::mcnemar_signed(&hits_a, &hits_b, window, level)?)
}
