//! Output artifacts: the summary table, plot-ready series CSVs with their
//! `.meta` companions, optional raw per-event record dumps, and the run
//! manifest (config snapshot, stream counts, per-model status, checksums).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::RunConfig;
use crate::engine::{EvaluationRecord, ModelRun, RunStatus};
use crate::stats::{McNemarPoint, MovingAverageSeries, SignificanceLevel, SummaryRow};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot read records from {path}: {reason}")]
    BadRecords { path: PathBuf, reason: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(source),
    }
}

/// `model,recall_at_N,mean_update_ms,median_update_ms,events_scored,events_total`
/// with floats at 6 decimal places, one row per model in config order.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record([
            "model",
            "recall_at_N",
            "mean_update_ms",
            "median_update_ms",
            "events_scored",
            "events_total",
        ])
        .map_err(csv_err(path))?;
    for row in rows {
        writer
            .write_record([
                row.model.clone(),
                format!("{:.6}", row.recall_at_n),
                format!("{:.6}", row.mean_update_ms),
                format!("{:.6}", row.median_update_ms),
                row.events_scored.to_string(),
                row.events_total.to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn write_meta(path: &Path, lines: &[(&str, String)]) -> Result<(), ReportError> {
    let body: String = lines
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    fs::write(path, body).map_err(io_err(path))
}

pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta")
}

/// `seq,value` rows plus a `.meta` companion recording the window size and
/// warm-up boundary, so plots can reproduce the warm-up delimiter.
pub fn write_ma_series(path: &Path, series: &MovingAverageSeries) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer.write_record(["seq", "value"]).map_err(csv_err(path))?;
    for (seq, value) in series.values.iter().enumerate() {
        writer
            .write_record([seq.to_string(), format!("{value:.6}")])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    write_meta(
        &meta_path(path),
        &[
            ("kind", "moving_average".into()),
            ("window", series.window.to_string()),
            ("warmup_boundary", series.warmup_boundary().to_string()),
        ],
    )
}

/// `seq,value,significant` rows plus a `.meta` companion carrying the window,
/// warm-up boundary, significance level, and the count of windows that held
/// no disagreement at all (statistic 0 by definition).
pub fn write_mcnemar_series(
    path: &Path,
    points: &[McNemarPoint],
    window: usize,
    level: SignificanceLevel,
) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record(["seq", "value", "significant"])
        .map_err(csv_err(path))?;
    for point in points {
        writer
            .write_record([
                point.seq.to_string(),
                format!("{:.6}", point.statistic),
                point.significant.to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    let degenerate = points.iter().filter(|p| p.no_disagreement()).count();
    write_meta(
        &meta_path(path),
        &[
            ("kind", "mcnemar_signed".into()),
            ("window", window.to_string()),
            ("warmup_boundary", window.to_string()),
            ("level", format!("{}", level.alpha())),
            ("critical_value", format!("{}", level.critical_value())),
            ("no_disagreement_points", degenerate.to_string()),
        ],
    )
}

/// Raw per-event dump:
/// `seq,user_known,item_known,hit,rank,recommend_us,update_us`.
pub fn write_records(path: &Path, records: &[EvaluationRecord]) -> Result<(), ReportError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    writer
        .write_record([
            "seq",
            "user_known",
            "item_known",
            "hit",
            "rank",
            "recommend_us",
            "update_us",
        ])
        .map_err(csv_err(path))?;
    for r in records {
        writer
            .write_record([
                r.seq.to_string(),
                r.user_known.to_string(),
                r.item_known.to_string(),
                r.hit.to_string(),
                r.rank.map(|v| v.to_string()).unwrap_or_default(),
                r.recommend_micros.to_string(),
                r.update_micros.to_string(),
            ])
            .map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads the per-seq hit flags back from a record dump.
pub fn read_record_hits(path: &Path) -> Result<Vec<bool>, ReportError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let seq_idx = headers.iter().position(|h| h == "seq");
    let hit_idx = headers.iter().position(|h| h == "hit");
    let (Some(seq_idx), Some(hit_idx)) = (seq_idx, hit_idx) else {
        return Err(ReportError::BadRecords {
            path: path.to_path_buf(),
            reason: "missing seq/hit columns".into(),
        });
    };
    let mut hits = Vec::new();
    for (row_no, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err(path))?;
        let seq: usize = row
            .get(seq_idx)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ReportError::BadRecords {
                path: path.to_path_buf(),
                reason: format!("bad seq at data row {row_no}"),
            })?;
        if seq != row_no {
            return Err(ReportError::BadRecords {
                path: path.to_path_buf(),
                reason: format!("non-contiguous seq {seq} at data row {row_no}"),
            });
        }
        let hit: bool = row
            .get(hit_idx)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| ReportError::BadRecords {
                path: path.to_path_buf(),
                reason: format!("bad hit flag at data row {row_no}"),
            })?;
        hits.push(hit);
    }
    Ok(hits)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StreamCounts {
    pub lines_read: u64,
    pub parse_skipped: u64,
    pub rating_filtered: u64,
    pub dedup_removed: u64,
    pub events: u64,
    pub users: u64,
    pub items: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelStatus {
    pub name: String,
    pub status: String,
    pub events_processed: u64,
}

impl ModelStatus {
    pub fn from_run(run: &ModelRun) -> Self {
        let status = match &run.status {
            RunStatus::Completed => "completed".to_string(),
            RunStatus::Aborted { seq, reason } => {
                format!("aborted at seq {seq}: {reason}")
            }
        };
        ModelStatus {
            name: run.name.clone(),
            status,
            events_processed: run.records.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

/// Written last; lists every other artifact with its checksum. Wall-clock
/// fields are the only run-to-run varying content in an output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub created_unix: u64,
    pub wall_clock_seconds: f64,
    pub mcnemar_comparisons: u64,
    pub stream: StreamCounts,
    pub models: Vec<ModelStatus>,
    pub artifacts: Vec<Artifact>,
    pub config: RunConfig,
}

pub const MANIFEST_SCHEMA: &str = "recstream/manifest/v1";
pub const MANIFEST_FILE: &str = "manifest.toml";

pub fn sha256_file(path: &Path) -> Result<String, ReportError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let digest = Sha256::digest(&bytes);
    Ok(hex::encode(digest))
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf, ReportError> {
    let path = dir.join(MANIFEST_FILE);
    let text = toml::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, ReportError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    toml::from_str(&text).map_err(|e| ReportError::BadRecords {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EvaluationRecord;

    fn record(seq: usize, hit: bool) -> EvaluationRecord {
        EvaluationRecord {
            seq,
            user_known: seq > 0,
            item_known: seq > 0,
            hit,
            rank: hit.then_some(2),
            recommend_micros: 5,
            update_micros: 9,
        }
    }

    #[test]
    fn summary_has_fixed_header_and_six_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.csv");
        let rows = vec![SummaryRow {
            model: "isgd".into(),
            recall_at_n: 0.11,
            mean_update_ms: 84.927,
            median_update_ms: 80.0,
            events_scored: 4,
            events_total: 4,
        }];
        write_summary(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "model,recall_at_N,mean_update_ms,median_update_ms,events_scored,events_total"
        );
        assert_eq!(lines.next().unwrap(), "isgd,0.110000,84.927000,80.000000,4,4");
    }

    #[test]
    fn ma_series_has_one_row_per_event_and_meta_echoes_window() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("isgd_ma.csv");
        let series = MovingAverageSeries {
            window: 3,
            values: vec![1.0, 0.5, 2.0 / 3.0],
        };
        write_ma_series(&path, &series).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4); // header + 3 points
        let meta = fs::read_to_string(meta_path(&path)).unwrap();
        assert!(meta.contains("window = 3"));
        assert!(meta.contains("warmup_boundary = 3"));
    }

    #[test]
    fn mcnemar_series_has_significant_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mcnemar_a_vs_b.csv");
        let points = vec![
            McNemarPoint {
                seq: 0,
                n01: 0,
                n10: 0,
                statistic: 0.0,
                significant: false,
            },
            McNemarPoint {
                seq: 1,
                n01: 1,
                n10: 8,
                statistic: 49.0 / 9.0,
                significant: true,
            },
        ];
        write_mcnemar_series(&path, &points, 2, SignificanceLevel::P01).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "seq,value,significant");
        assert!(lines.next().unwrap().ends_with(",false"));
        assert!(lines.next().unwrap().ends_with(",true"));
        let meta = fs::read_to_string(meta_path(&path)).unwrap();
        assert!(meta.contains("level = 0.01"));
        assert!(meta.contains("no_disagreement_points = 1"));
    }

    #[test]
    fn record_dump_roundtrips_hits() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m_records.csv");
        let records: Vec<EvaluationRecord> =
            [false, true, false, true, true]
                .iter()
                .enumerate()
                .map(|(seq, &hit)| record(seq, hit))
                .collect();
        write_records(&path, &records).unwrap();
        let hits = read_record_hits(&path).unwrap();
        assert_eq!(hits, vec![false, true, false, true, true]);
    }

    #[test]
    fn sha256_matches_known_vector() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f");
        fs::write(&path, b"abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
