//! Run configuration: a single TOML file describing the stream, the
//! algorithms with their hyperparameters, the engine, and the statistics to
//! produce. The effective config is written back into every output directory
//! and embedded in the run manifest, so any run can be reproduced from its
//! artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::AlgorithmSpec;
use crate::engine::EngineConfig;
use crate::stats::SignificanceLevel;
use crate::stream::StreamSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: Box<toml::de::Error>,
    },
    #[error("unknown algorithm kind {0:?} (expected one of: isgd, bprmf, userknn)")]
    UnknownAlgorithm(String),
    #[error("duplicate algorithm label {0:?}; labels must be unique")]
    DuplicateLabel(String),
    #[error("algorithm label {0:?} contains characters outside [A-Za-z0-9._-]")]
    BadLabel(String),
    #[error("bad window size: {0}")]
    BadWindow(String),
    #[error("recommendation cut-off must be at least 1")]
    BadCutoff,
    #[error("update_every must be at least 1")]
    BadUpdateEvery,
    #[error("mcnemar significance level must be 0.05, 0.01, or 0.001 (got {0})")]
    BadLevel(f64),
    #[error("mcnemar pair references unknown model {0:?}")]
    UnknownPairModel(String),
    #[error("at least one algorithm must be configured")]
    NoAlgorithms,
    #[error("invalid stream spec: {0}")]
    Stream(#[from] crate::stream::StreamError),
}

fn default_seed() -> u64 {
    42
}
fn default_ma_window() -> usize {
    5000
}
fn default_level() -> f64 {
    0.01
}

/// Statistics settings: the moving-average window (also used for the
/// McNemar sliding window) and the pairwise comparisons to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSettings {
    #[serde(default = "default_ma_window")]
    pub window: usize,
    #[serde(default = "default_level")]
    pub mcnemar_level: f64,
    /// Pairs of algorithm labels to compare; when absent, the first
    /// algorithm is compared against each of the others.
    #[serde(default)]
    pub mcnemar_pairs: Option<Vec<[String; 2]>>,
}

impl Default for StatsSettings {
    fn default() -> Self {
        StatsSettings {
            window: default_ma_window(),
            mcnemar_level: default_level(),
            mcnemar_pairs: None,
        }
    }
}

impl StatsSettings {
    pub fn level(&self) -> Option<SignificanceLevel> {
        SignificanceLevel::from_alpha(self.mcnemar_level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Evaluate only the first `limit` events of the loaded stream.
    #[serde(default)]
    pub limit: Option<usize>,
    /// Dump per-event records to `<model>_records.csv`.
    #[serde(default)]
    pub dump_records: bool,
    pub stream: StreamSpec,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default)]
    pub stats: StatsSettings,
    pub algorithms: Vec<AlgorithmSpec>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_path_buf(),
            source: Box::new(source),
        })
    }

    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Labels in config order.
    pub fn labels(&self) -> Vec<String> {
        self.algorithms.iter().map(|a| a.label().to_string()).collect()
    }

    /// The McNemar comparisons to run: configured pairs, or first-vs-rest.
    pub fn mcnemar_pairs(&self) -> Vec<(String, String)> {
        if let Some(pairs) = &self.stats.mcnemar_pairs {
            return pairs.iter().map(|[a, b]| (a.clone(), b.clone())).collect();
        }
        let labels = self.labels();
        labels
            .iter()
            .skip(1)
            .map(|other| (labels[0].clone(), other.clone()))
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.stream.validate()?;
        if self.algorithms.is_empty() {
            return Err(ConfigError::NoAlgorithms);
        }
        let mut seen = std::collections::HashSet::new();
        for spec in &self.algorithms {
            if !matches!(spec.kind.as_str(), "isgd" | "bprmf" | "userknn") {
                return Err(ConfigError::UnknownAlgorithm(spec.kind.clone()));
            }
            let label = spec.label();
            if !label
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
                || label.is_empty()
            {
                return Err(ConfigError::BadLabel(label.to_string()));
            }
            if !seen.insert(label.to_string()) {
                return Err(ConfigError::DuplicateLabel(label.to_string()));
            }
        }
        if self.engine.cutoff < 1 {
            return Err(ConfigError::BadCutoff);
        }
        if self.engine.update_every < 1 {
            return Err(ConfigError::BadUpdateEvery);
        }
        if self.stats.window < 1 {
            return Err(ConfigError::BadWindow(
                "stats.window must be at least 1".into(),
            ));
        }
        if self.stats.level().is_none() {
            return Err(ConfigError::BadLevel(self.stats.mcnemar_level));
        }
        if let Some(pairs) = &self.stats.mcnemar_pairs {
            let labels = self.labels();
            for [a, b] in pairs {
                for name in [a, b] {
                    if !labels.contains(name) {
                        return Err(ConfigError::UnknownPairModel(name.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Column;

    fn minimal_config() -> RunConfig {
        RunConfig {
            seed: 42,
            output_dir: "out".into(),
            limit: None,
            dump_records: false,
            stream: StreamSpec::new("stream.tsv", vec![Column::User, Column::Item]),
            engine: EngineConfig::default(),
            stats: StatsSettings::default(),
            algorithms: vec![
                AlgorithmSpec::of_kind("isgd"),
                AlgorithmSpec::of_kind("userknn"),
            ],
        }
    }

    #[test]
    fn toml_roundtrip_preserves_config() {
        let config = minimal_config();
        let text = config.to_toml_string();
        let parsed = RunConfig::from_toml_str(&text, Path::new("inline")).unwrap();
        assert_eq!(parsed, config);
    }

    #[test]
    fn parses_minimal_toml_with_defaults() {
        let text = r#"
            output_dir = "out"

            [stream]
            path = "events.tsv"
            columns = ["user", "item"]

            [[algorithms]]
            kind = "isgd"
        "#;
        let config = RunConfig::from_toml_str(text, Path::new("inline")).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.engine.cutoff, 10);
        assert_eq!(config.engine.update_every, 1);
        assert_eq!(config.stats.window, 5000);
        assert_eq!(config.stats.mcnemar_level, 0.01);
        assert_eq!(config.algorithms[0].factors, 20);
        assert_eq!(config.algorithms[0].learning_rate, 0.05);
        assert_eq!(config.algorithms[0].regularization, 0.01);
        assert!(config.algorithms[0].exclude_seen);
        config.validate().unwrap();
    }

    #[test]
    fn unknown_algorithm_kind_has_distinct_error() {
        let mut config = minimal_config();
        config.algorithms[0].kind = "svdpp".into();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::UnknownAlgorithm(_))
        ));
    }

    #[test]
    fn zero_window_has_distinct_error() {
        let mut config = minimal_config();
        config.stats.window = 0;
        assert!(matches!(config.validate(), Err(ConfigError::BadWindow(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let mut config = minimal_config();
        config.algorithms = vec![AlgorithmSpec::of_kind("isgd"), AlgorithmSpec::of_kind("isgd")];
        assert!(matches!(
            config.validate(),
            Err(ConfigError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn pair_with_unknown_model_rejected() {
        let mut config = minimal_config();
        config.stats.mcnemar_pairs = Some(vec![["isgd".into(), "nope".into()]]);
        assert!(matches!(
            config.validate(),
            Err(ConfigError::UnknownPairModel(_))
        ));
    }

    #[test]
    fn default_pairs_are_first_versus_rest() {
        let mut config = minimal_config();
        config.algorithms.push(AlgorithmSpec::of_kind("bprmf"));
        let pairs = config.mcnemar_pairs();
        assert_eq!(
            pairs,
            vec![
                ("isgd".to_string(), "userknn".to_string()),
                ("isgd".to_string(), "bprmf".to_string()),
            ]
        );
    }

    #[test]
    fn invalid_level_rejected() {
        let mut config = minimal_config();
        config.stats.mcnemar_level = 0.2;
        assert!(matches!(config.validate(), Err(ConfigError::BadLevel(_))));
    }
}
