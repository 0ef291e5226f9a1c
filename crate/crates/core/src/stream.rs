//! Loading of chronologically ordered user-item interaction streams from
//! delimited text files: parsing, optional rating filtering, optional
//! deduplication, and stable timestamp ordering.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One timestamp-ordered feedback record; the stream atom.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    /// 0-based position in the loaded stream, assigned after sorting and filtering.
    pub seq: usize,
    pub user: String,
    pub item: String,
    pub rating: Option<f64>,
    pub timestamp: Option<i64>,
}

/// Input column roles. Each may be named at most once in a [`StreamSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Column {
    User,
    Item,
    Rating,
    Timestamp,
}

fn default_delimiter() -> String {
    "\t".to_string()
}

/// Describes how to read one event file.
///
/// The delimiter is normally a single character; multi-character delimiters
/// (e.g. `"::"` for MovieLens-1M `ratings.dat`) are accepted as a documented
/// exception.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub path: PathBuf,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    pub columns: Vec<Column>,
    /// Keep only events with `rating >= threshold`; the rating is dropped
    /// from retained events (downstream is positive-only).
    #[serde(default)]
    pub rating_threshold: Option<f64>,
    /// Keep only the first occurrence of each (user, item) pair.
    #[serde(default)]
    pub dedup: bool,
    #[serde(default)]
    pub has_header: bool,
    /// Skip malformed lines (counting them) instead of aborting the load.
    #[serde(default)]
    pub skip_bad_lines: bool,
}

impl StreamSpec {
    pub fn new(path: impl Into<PathBuf>, columns: Vec<Column>) -> Self {
        StreamSpec {
            path: path.into(),
            delimiter: default_delimiter(),
            columns,
            rating_threshold: None,
            dedup: false,
            has_header: false,
            skip_bad_lines: false,
        }
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        if self.delimiter.is_empty() || self.delimiter.contains('\n') {
            return Err(StreamError::BadSpec(
                "delimiter must be a non-empty string without newlines".into(),
            ));
        }
        for col in [Column::User, Column::Item, Column::Rating, Column::Timestamp] {
            let n = self.columns.iter().filter(|c| **c == col).count();
            if n > 1 {
                return Err(StreamError::BadSpec(format!(
                    "column {col:?} named {n} times; each column may be named once"
                )));
            }
        }
        if !self.columns.contains(&Column::User) || !self.columns.contains(&Column::Item) {
            return Err(StreamError::BadSpec(
                "column order must include both user and item".into(),
            ));
        }
        if self.rating_threshold.is_some() && !self.columns.contains(&Column::Rating) {
            return Err(StreamError::BadSpec(
                "rating threshold configured but no rating column in column order".into(),
            ));
        }
        Ok(())
    }

    fn has_timestamp(&self) -> bool {
        self.columns.contains(&Column::Timestamp)
    }
}

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("stream is empty after filtering")]
    Empty,
    #[error("invalid stream spec: {0}")]
    BadSpec(String),
    #[error("rating filter configured but event at line {line} has no rating")]
    MissingRating { line: usize },
}

/// Per-load bookkeeping. `lines_read` counts data lines (header excluded) and
/// always equals `parse_skipped + rating_filtered + dedup_removed + retained`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadCounts {
    pub lines_read: u64,
    pub parse_skipped: u64,
    pub rating_filtered: u64,
    pub dedup_removed: u64,
    pub retained: u64,
}

#[derive(Debug, Clone)]
pub struct LoadedStream {
    pub events: Vec<InteractionEvent>,
    pub counts: LoadCounts,
}

/// Parses one delimited line into an event. `line_no` is 1-based and only
/// used for error reporting. Extra trailing columns are ignored; missing
/// columns or non-numeric rating/timestamp fields are malformed.
pub fn parse_event_line(
    line: &str,
    spec: &StreamSpec,
    line_no: usize,
) -> Result<InteractionEvent, StreamError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let fields: Vec<&str> = line.split(spec.delimiter.as_str()).collect();
    if fields.len() < spec.columns.len() {
        return Err(StreamError::Malformed {
            line: line_no,
            reason: format!(
                "expected {} columns, found {}",
                spec.columns.len(),
                fields.len()
            ),
        });
    }
    let mut event = InteractionEvent {
        seq: 0,
        user: String::new(),
        item: String::new(),
        rating: None,
        timestamp: None,
    };
    for (col, field) in spec.columns.iter().zip(fields.iter()) {
        match col {
            Column::User => event.user = (*field).to_string(),
            Column::Item => event.item = (*field).to_string(),
            Column::Rating => {
                let value: f64 = field.parse().map_err(|_| StreamError::Malformed {
                    line: line_no,
                    reason: format!("invalid rating {field:?}"),
                })?;
                event.rating = Some(value);
            }
            Column::Timestamp => {
                let value: i64 = field.parse().map_err(|_| StreamError::Malformed {
                    line: line_no,
                    reason: format!("invalid timestamp {field:?}"),
                })?;
                event.timestamp = Some(value);
            }
        }
    }
    if event.user.is_empty() || event.item.is_empty() {
        return Err(StreamError::Malformed {
            line: line_no,
            reason: "empty user or item key".into(),
        });
    }
    Ok(event)
}

/// Retains the event iff its rating reaches the threshold; the rating is
/// dropped from the retained event. `None` threshold passes events through.
pub fn apply_rating_filter(
    mut event: InteractionEvent,
    threshold: Option<f64>,
) -> Result<Option<InteractionEvent>, StreamError> {
    let Some(threshold) = threshold else {
        return Ok(Some(event));
    };
    match event.rating {
        Some(r) if r >= threshold => {
            event.rating = None;
            Ok(Some(event))
        }
        Some(_) => Ok(None),
        None => Err(StreamError::MissingRating { line: event.seq }),
    }
}

/// Keeps only the first occurrence of each (user, item) pair, preserving order.
pub fn deduplicate(events: Vec<InteractionEvent>) -> Vec<InteractionEvent> {
    let mut seen: HashSet<(String, String)> = HashSet::with_capacity(events.len());
    events
        .into_iter()
        .filter(|ev| seen.insert((ev.user.clone(), ev.item.clone())))
        .collect()
}

/// Loads, filters, orders, and numbers a stream according to `spec`.
///
/// Pipeline: parse each line (abort or skip-with-count per `skip_bad_lines`),
/// apply the rating filter, stable-sort by timestamp when a timestamp column
/// is configured (ties keep file order), deduplicate when requested, then
/// assign contiguous `seq` values.
pub fn load_stream(spec: &StreamSpec) -> Result<LoadedStream, StreamError> {
    spec.validate()?;
    let file = File::open(&spec.path).map_err(|source| StreamError::Io {
        path: spec.path.clone(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut counts = LoadCounts::default();
    let mut events: Vec<InteractionEvent> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| StreamError::Io {
            path: spec.path.clone(),
            source,
        })?;
        let line_no = idx + 1;
        if spec.has_header && idx == 0 {
            continue;
        }
        counts.lines_read += 1;
        let event = match parse_event_line(&line, spec, line_no) {
            Ok(ev) => ev,
            Err(err) if spec.skip_bad_lines => {
                let _ = err;
                counts.parse_skipped += 1;
                continue;
            }
            Err(err) => return Err(err),
        };
        match apply_rating_filter(event, spec.rating_threshold)? {
            Some(ev) => events.push(ev),
            None => counts.rating_filtered += 1,
        }
    }

    if spec.has_timestamp() {
        events.sort_by_key(|ev| ev.timestamp);
    }
    if spec.dedup {
        let before = events.len() as u64;
        events = deduplicate(events);
        counts.dedup_removed = before - events.len() as u64;
    }
    if events.is_empty() {
        return Err(StreamError::Empty);
    }
    for (seq, ev) in events.iter_mut().enumerate() {
        ev.seq = seq;
    }
    counts.retained = events.len() as u64;
    debug_assert_eq!(
        counts.lines_read,
        counts.parse_skipped + counts.rating_filtered + counts.dedup_removed + counts.retained
    );
    Ok(LoadedStream { events, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn spec_with(columns: Vec<Column>) -> StreamSpec {
        StreamSpec::new("unused", columns)
    }

    fn write_temp(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f
    }

    fn ev(user: &str, item: &str) -> InteractionEvent {
        InteractionEvent {
            seq: 0,
            user: user.into(),
            item: item.into(),
            rating: None,
            timestamp: None,
        }
    }

    #[test]
    fn parses_four_column_movielens_line() {
        let spec = spec_with(vec![
            Column::User,
            Column::Item,
            Column::Rating,
            Column::Timestamp,
        ]);
        let event = parse_event_line("42\t1193\t5\t978300760", &spec, 1).unwrap();
        assert_eq!(event.user, "42");
        assert_eq!(event.item, "1193");
        assert_eq!(event.rating, Some(5.0));
        assert_eq!(event.timestamp, Some(978300760));
    }

    #[test]
    fn parses_minimal_two_column_line() {
        let mut spec = spec_with(vec![Column::User, Column::Item]);
        spec.delimiter = ",".into();
        let event = parse_event_line("a,b", &spec, 1).unwrap();
        assert_eq!(event.user, "a");
        assert_eq!(event.item, "b");
        assert_eq!(event.rating, None);
        assert_eq!(event.timestamp, None);
    }

    #[test]
    fn non_numeric_rating_is_malformed_with_line_number() {
        let spec = spec_with(vec![Column::User, Column::Item, Column::Rating]);
        let err = parse_event_line("42\t1193\tX", &spec, 7).unwrap_err();
        match err {
            StreamError::Malformed { line, .. } => assert_eq!(line, 7),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn missing_columns_are_malformed() {
        let spec = spec_with(vec![Column::User, Column::Item, Column::Rating]);
        assert!(matches!(
            parse_event_line("42\t1193", &spec, 3),
            Err(StreamError::Malformed { line: 3, .. })
        ));
    }

    #[test]
    fn multi_character_delimiter_splits_movielens_format() {
        let mut spec = spec_with(vec![
            Column::User,
            Column::Item,
            Column::Rating,
            Column::Timestamp,
        ]);
        spec.delimiter = "::".into();
        let event = parse_event_line("1::1193::5::978300760", &spec, 1).unwrap();
        assert_eq!(event.user, "1");
        assert_eq!(event.item, "1193");
    }

    #[test]
    fn rating_filter_keeps_threshold_and_drops_below() {
        let mut event = ev("u", "i");
        event.rating = Some(5.0);
        let kept = apply_rating_filter(event.clone(), Some(5.0)).unwrap();
        let kept = kept.expect("rating 5 at threshold 5 is retained");
        assert_eq!(kept.rating, None, "rating column dropped after filtering");

        event.rating = Some(4.0);
        assert!(apply_rating_filter(event, Some(5.0)).unwrap().is_none());
    }

    #[test]
    fn rating_filter_disabled_passes_event_unchanged() {
        let mut event = ev("u", "i");
        event.rating = Some(2.0);
        let out = apply_rating_filter(event.clone(), None).unwrap().unwrap();
        assert_eq!(out, event);
    }

    #[test]
    fn rating_filter_without_rating_is_config_error() {
        let event = ev("u", "i");
        assert!(matches!(
            apply_rating_filter(event, Some(5.0)),
            Err(StreamError::MissingRating { .. })
        ));
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let events = vec![ev("u1", "i1"), ev("u1", "i1"), ev("u1", "i2")];
        let out = deduplicate(events);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].item, "i1");
        assert_eq!(out[1].item, "i2");
    }

    #[test]
    fn dedup_without_repeats_is_identity() {
        let events = vec![ev("u1", "i1"), ev("u2", "i1"), ev("u1", "i2")];
        assert_eq!(deduplicate(events.clone()), events);
    }

    #[test]
    fn dedup_matches_distinct_pair_count_on_planted_repeats() {
        // Oracle: a hash-set count of distinct pairs over the same stream.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let events: Vec<InteractionEvent> = (0..10_000)
            .map(|_| {
                ev(
                    &format!("u{}", rng.gen_range(0..40u32)),
                    &format!("i{}", rng.gen_range(0..60u32)),
                )
            })
            .collect();
        let distinct: HashSet<(String, String)> = events
            .iter()
            .map(|e| (e.user.clone(), e.item.clone()))
            .collect();
        let out = deduplicate(events);
        assert_eq!(out.len(), distinct.len());
    }

    #[test]
    fn load_assigns_contiguous_seq_in_file_order() {
        let file = write_temp(&["a\tx", "b\ty", "c\tz"]);
        let spec = StreamSpec::new(file.path(), vec![Column::User, Column::Item]);
        let loaded = load_stream(&spec).unwrap();
        assert_eq!(loaded.events.len(), 3);
        for (i, ev) in loaded.events.iter().enumerate() {
            assert_eq!(ev.seq, i);
        }
        assert_eq!(loaded.events[0].user, "a");
        assert_eq!(loaded.events[2].user, "c");
    }

    #[test]
    fn load_sorts_by_timestamp_stably() {
        // Oracle: an independent stable sort of the same (timestamp, file order) rows.
        let file = write_temp(&[
            "a\tx\t30",
            "b\ty\t10",
            "c\tz\t20",
            "d\tw\t10", // tie with line 2; must stay after it
        ]);
        let spec = StreamSpec::new(
            file.path(),
            vec![Column::User, Column::Item, Column::Timestamp],
        );
        let loaded = load_stream(&spec).unwrap();
        let got: Vec<&str> = loaded.events.iter().map(|e| e.user.as_str()).collect();

        let mut oracle = vec![("a", 30i64, 0usize), ("b", 10, 1), ("c", 20, 2), ("d", 10, 3)];
        oracle.sort_by_key(|&(_, ts, file_order)| (ts, file_order));
        let expect: Vec<&str> = oracle.iter().map(|&(u, _, _)| u).collect();
        assert_eq!(got, expect);
        let stamps: Vec<i64> = loaded.events.iter().map(|e| e.timestamp.unwrap()).collect();
        assert!(stamps.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn load_counts_sum_exactly() {
        let file = write_temp(&[
            "a\tx\t5",
            "bad line",
            "a\tx\t5", // duplicate pair
            "b\ty\t2", // filtered
            "c\tz\t5",
        ]);
        let mut spec = StreamSpec::new(
            file.path(),
            vec![Column::User, Column::Item, Column::Rating],
        );
        spec.rating_threshold = Some(5.0);
        spec.dedup = true;
        spec.skip_bad_lines = true;
        let loaded = load_stream(&spec).unwrap();
        let c = loaded.counts;
        assert_eq!(c.lines_read, 5);
        assert_eq!(c.parse_skipped, 1);
        assert_eq!(c.rating_filtered, 1);
        assert_eq!(c.dedup_removed, 1);
        assert_eq!(c.retained, 2);
        assert_eq!(
            c.lines_read,
            c.parse_skipped + c.rating_filtered + c.dedup_removed + c.retained
        );
    }

    #[test]
    fn malformed_line_aborts_by_default() {
        let file = write_temp(&["a\tx", "oops"]);
        let spec = StreamSpec::new(file.path(), vec![Column::User, Column::Item]);
        assert!(matches!(
            load_stream(&spec),
            Err(StreamError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let spec = StreamSpec::new("/nonexistent/stream.tsv", vec![Column::User, Column::Item]);
        assert!(matches!(load_stream(&spec), Err(StreamError::Io { .. })));
    }

    #[test]
    fn empty_after_filtering_is_explicit_error() {
        let file = write_temp(&["a\tx\t1", "b\ty\t2"]);
        let mut spec = StreamSpec::new(
            file.path(),
            vec![Column::User, Column::Item, Column::Rating],
        );
        spec.rating_threshold = Some(5.0);
        assert!(matches!(load_stream(&spec), Err(StreamError::Empty)));
    }

    #[test]
    fn header_row_skipped_via_flag() {
        let file = write_temp(&["user\titem", "a\tx"]);
        let mut spec = StreamSpec::new(file.path(), vec![Column::User, Column::Item]);
        spec.has_header = true;
        let loaded = load_stream(&spec).unwrap();
        assert_eq!(loaded.events.len(), 1);
        assert_eq!(loaded.counts.lines_read, 1);
    }

    #[test]
    fn loading_twice_is_byte_identical() {
        let file = write_temp(&["a\tx\t3", "b\ty\t1", "c\tz\t2"]);
        let spec = StreamSpec::new(
            file.path(),
            vec![Column::User, Column::Item, Column::Timestamp],
        );
        let first = load_stream(&spec).unwrap();
        let second = load_stream(&spec).unwrap();
        assert_eq!(first.events, second.events);
        assert_eq!(first.counts, second.counts);
    }

    #[test]
    fn duplicate_column_role_rejected() {
        let spec = spec_with(vec![Column::User, Column::User, Column::Item]);
        assert!(matches!(spec.validate(), Err(StreamError::BadSpec(_))));
    }

    #[test]
    fn threshold_without_rating_column_rejected() {
        let mut spec = spec_with(vec![Column::User, Column::Item]);
        spec.rating_threshold = Some(5.0);
        assert!(matches!(spec.validate(), Err(StreamError::BadSpec(_))));
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent(pairs in proptest::collection::vec((0u8..8, 0u8..8), 0..200)) {
            let events: Vec<InteractionEvent> = pairs
                .iter()
                .map(|(u, i)| ev(&format!("u{u}"), &format!("i{i}")))
                .collect();
            let once = deduplicate(events);
            let twice = deduplicate(once.clone());
            prop_assert_eq!(once, twice);
        }
    }
}
