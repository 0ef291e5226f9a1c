//! Command-line interface: `run` executes a configured evaluation,
//! `inspect-stream` prints dataset statistics, and `mcnemar` recomputes
//! pairwise tests from dumped per-event records.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::pipeline;
use crate::report;
use crate::stats::SignificanceLevel;
use crate::stream::{Column, StreamSpec};

#[derive(Debug, Parser)]
#[command(
    name = "recstream",
    version,
    about = "Prequential evaluation of incremental top-N recommenders on event streams"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a configured evaluation and write summary, series, and manifest.
    Run(RunArgs),
    /// Print dataset statistics (events, users, items, sparsity) for a stream.
    InspectStream(InspectArgs),
    /// Recompute a signed McNemar series from two record dumps.
    Mcnemar(McnemarArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long, env = "RECSTREAM_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
    /// Evaluate only the first N events.
    #[arg(long)]
    limit: Option<usize>,
    /// Dump per-event records (needed by the mcnemar subcommand).
    #[arg(long)]
    dump_records: bool,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Stream file to inspect.
    #[arg(long)]
    path: PathBuf,
    /// Field delimiter; multi-character delimiters like "::" are allowed.
    #[arg(long, default_value = "\t")]
    delimiter: String,
    /// Comma-separated column roles, e.g. user,item,rating,timestamp.
    #[arg(long, default_value = "user,item")]
    columns: String,
    /// Keep only events with rating >= this value.
    #[arg(long)]
    rating_threshold: Option<f64>,
    /// Skip the first line.
    #[arg(long)]
    has_header: bool,
    /// Skip malformed lines instead of aborting.
    #[arg(long)]
    skip_bad_lines: bool,
}

#[derive(Debug, Args)]
struct McnemarArgs {
    /// Record dump of the first model (positive statistic favors it).
    #[arg(long)]
    a: PathBuf,
    /// Record dump of the second model.
    #[arg(long)]
    b: PathBuf,
    /// Sliding-window size.
    #[arg(long)]
    window: usize,
    /// Significance level: 0.05, 0.01, or 0.001.
    #[arg(long, default_value_t = 0.01)]
    level: f64,
    /// Output CSV path; prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_columns(text: &str) -> Result<Vec<Column>, String> {
    text.split(',')
        .map(|c| match c.trim() {
            "user" => Ok(Column::User),
            "item" => Ok(Column::Item),
            "rating" => Ok(Column::Rating),
            "timestamp" => Ok(Column::Timestamp),
            other => Err(format!(
                "unknown column role {other:?} (expected user, item, rating, timestamp)"
            )),
        })
        .collect()
}

/// Exit codes: 0 full success, 1 configuration or I/O error, 2 when at least
/// one model aborted but the run otherwise completed.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version through this path with status 0.
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::InspectStream(args) => inspect_command(args),
        Command::Mcnemar(args) => mcnemar_command(args),
    }
}

fn run_command(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = RunConfig::from_toml_file(&args.config)?;
    if let Some(dir) = args.output_dir {
        config.output_dir = dir;
    }
    if let Some(limit) = args.limit {
        config.limit = Some(limit);
    }
    if args.dump_records {
        config.dump_records = true;
    }

    let outcome = pipeline::execute_run(&config)?;
    println!(
        "{:<12} {:>10} {:>16} {:>18} {:>14} {:>13}",
        "model", "recall@N", "mean_update_ms", "median_update_ms", "events_scored", "events_total"
    );
    for row in &outcome.summary {
        println!(
            "{:<12} {:>10.6} {:>16.6} {:>18.6} {:>14} {:>13}",
            row.model,
            row.recall_at_n,
            row.mean_update_ms,
            row.median_update_ms,
            row.events_scored,
            row.events_total
        );
    }
    for name in &outcome.aborted_models {
        eprintln!("warning: model {name} aborted; see manifest.toml");
    }
    println!("outputs written to {}", outcome.output_dir.display());
    if outcome.fully_completed() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn inspect_command(args: InspectArgs) -> anyhow::Result<ExitCode> {
    let columns = parse_columns(&args.columns).map_err(|e| anyhow::anyhow!(e))?;
    let spec = StreamSpec {
        path: args.path,
        delimiter: args.delimiter,
        columns,
        rating_threshold: args.rating_threshold,
        dedup: false,
        has_header: args.has_header,
        skip_bad_lines: args.skip_bad_lines,
    };
    let info = pipeline::inspect_stream(&spec)?;
    println!(
        "{:>10} {:>8} {:>8} {:>10}",
        "events", "users", "items", "sparsity"
    );
    println!(
        "{:>10} {:>8} {:>8} {:>9.4}%",
        info.events,
        info.users,
        info.items,
        info.sparsity_raw * 100.0
    );
    println!(
        "deduplicated: events {} sparsity {:.4}%",
        info.dedup_events,
        info.sparsity_dedup * 100.0
    );
    let c = info.counts;
    println!(
        "load counts: lines_read={} parse_skipped={} rating_filtered={} retained={}",
        c.lines_read, c.parse_skipped, c.rating_filtered, c.retained
    );
    Ok(ExitCode::SUCCESS)
}

fn mcnemar_command(args: McnemarArgs) -> anyhow::Result<ExitCode> {
    let level = SignificanceLevel::from_alpha(args.level).ok_or_else(|| {
        anyhow::anyhow!(
            "mcnemar significance level must be 0.05, 0.01, or 0.001 (got {})",
            args.level
        )
    })?;
    if args.window < 1 {
        anyhow::bail!("bad window size: --window must be at least 1");
    }
    let points = pipeline::mcnemar_from_records(&args.a, &args.b, args.window, level)?;
    match args.out {
        Some(path) => {
            report::write_mcnemar_series(&path, &points, args.window, level)?;
            println!("wrote {} points to {}", points.len(), path.display());
        }
        None => {
            println!("seq,value,significant");
            for p in &points {
                println!("{},{:.6},{}", p.seq, p.statistic, p.significant);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_parsing_accepts_known_roles() {
        let cols = parse_columns("user,item,rating,timestamp").unwrap();
        assert_eq!(
            cols,
            vec![Column::User, Column::Item, Column::Rating, Column::Timestamp]
        );
        assert!(parse_columns("user,score").is_err());
    }

    #[test]
    fn cli_parses_run_subcommand() {
        let cli = Cli::try_parse_from(["recstream", "run", "--config", "c.toml", "--limit", "100"])
            .unwrap();
        match cli.command {
            Command::Run(args) => {
                assert_eq!(args.config, PathBuf::from("c.toml"));
                assert_eq!(args.limit, Some(100));
            }
            _ => panic!("expected run"),
        }
    }
}
