//! Configuration-driven runner for the rdlab verification suites.

pub mod config;
pub mod error;
pub mod plots;
pub mod report;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::RunReport;
use crate::suites::{holder_from_data, holder_from_suite, Context, Suite};

/// What to run and where to put the results.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Replaces `rng_seed` from the configuration.
    pub seed: Option<u64>,
    /// Earlier report whose smoothing suite supplies the Hölder constants for net transport.
    pub smoothing_report: Option<PathBuf>,
}

/// A subcommand: one suite, or every configured suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Suite(Suite),
    All,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Suite(s) => s.name(),
            Command::All => "all",
        }
    }
}

fn read_holder(path: &Path, gamma: f64) -> Result<(f64, f64), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let malformed = |reason: &str| CliError::Report {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| malformed(&e.to_string()))?;
    let suites = value.get("suites").and_then(Value::as_array).ok_or_else(|| malformed("no suites array"))?;
    let smoothing = suites
        .iter()
        .find(|s| s.get("name").and_then(Value::as_str) == Some("smoothing"))
        .ok_or_else(|| malformed("no smoothing suite"))?;
    let data = smoothing.get("data").ok_or_else(|| malformed("smoothing suite without data"))?;
    holder_from_data(data, gamma).ok_or_else(|| malformed(&format!("no constants for gamma = {gamma}")))
}

/// Runs `command`, writing `report.json`, `timings.json` and the suites' data
/// files into `opts.out`.
pub fn run(command: Command, opts: &RunOptions) -> Result<RunReport, CliError> {
    let loaded = config::load(&opts.config)?;
    let mut cfg = loaded.config;
    if let Some(seed) = opts.seed {
        cfg.rng_seed = seed;
    }
    std::fs::create_dir_all(&opts.out).map_err(|e| CliError::io(&opts.out, e))?;
    let gamma = cfg.suites.attractor.as_ref().map(|a| a.transport_gamma);
    let mut holder = match (&opts.smoothing_report, gamma) {
        (Some(path), Some(g)) => Some(read_holder(path, g)?),
        _ => None,
    };
    let selected: Vec<Suite> = match command {
        Command::Suite(s) => {
            if !s.configured(&cfg) {
                return Err(CliError::MissingSuite(s.name()));
            }
            vec![s]
        }
        Command::All => Suite::ORDER.iter().copied().filter(|s| s.configured(&cfg)).collect(),
    };
    let mut reports = Vec::new();
    let mut timings = serde_json::Map::new();
    for suite in selected {
        let ctx = Context {
            config: &cfg,
            seed: cfg.rng_seed,
            out: &opts.out,
            holder,
        };
        info!("running {}", suite.name());
        let start = Instant::now();
        let report = suite.run(&ctx)?;
        let seconds = start.elapsed().as_secs_f64();
        info!("{} finished in {seconds:.1} s, pass = {}", suite.name(), report.pass());
        timings.insert(suite.name().to_string(), json!(seconds));
        if suite == Suite::Smoothing && holder.is_none() {
            holder = gamma.and_then(|g| holder_from_suite(&report, g));
        }
        reports.push(report);
    }
    let report = RunReport::new(command.name(), cfg, loaded.hash, reports);
    let path = opts.out.join("report.json");
    std::fs::write(&path, report.to_json()).map_err(|e| CliError::io(&path, e))?;
    let path = opts.out.join("timings.json");
    let mut text = serde_json::to_string_pretty(&Value::Object(timings)).expect("timings serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}
