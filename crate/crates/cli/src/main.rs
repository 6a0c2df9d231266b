use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rdlab_cli::error::{CliError, SchemaError};
use rdlab_cli::suites::{AttractorPart, Suite};
use rdlab_cli::{plots, run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "rdlab", version, about = "Verification suites for dissipative reaction-diffusion equations")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `rng_seed` from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Report whose smoothing suite supplies the Hölder constants for net transport.
    #[arg(long, global = true)]
    smoothing_report: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one initial datum, optionally against the linear oracle.
    Solve,
    /// Certify the structural conditions on the nonlinearity.
    CertifyNonlinearity,
    /// Split the nonlinearity and check the monotone part.
    Decompose,
    /// Tabulate the exponent recursion.
    Exponents,
    /// Energy inequality constants along random runs.
    EnergyMonitor,
    /// Exponential bound on differences of solutions.
    Gronwall,
    /// Weighted difference quotients across initial distances.
    AkBk,
    /// Higher integrability independent of the initial Lebesgue norm.
    LpBound,
    /// Lebesgue smoothing constants of the time-one map.
    Smoothing,
    /// Gradient smoothing constants of the time-one map.
    H1Smoothing,
    /// Sample the attractor and run every attractor check.
    Attractor,
    /// Dimension estimates and bounds on the sampled attractor.
    Dimension,
    /// Transport of epsilon-nets by the time-one map.
    NetTransport,
    /// Every suite with a section in the configuration.
    All,
    /// Extract two-column data files from a report.
    Plots {
        #[arg(long)]
        report: PathBuf,
    },
}

fn command(cmd: &Cmd) -> Option<Command> {
    let suite = match cmd {
        Cmd::Solve => Suite::Solve,
        Cmd::CertifyNonlinearity => Suite::Certify,
        Cmd::Decompose => Suite::Decompose,
        Cmd::Exponents => Suite::Exponents,
        Cmd::EnergyMonitor => Suite::Energy,
        Cmd::Gronwall => Suite::Gronwall,
        Cmd::AkBk => Suite::AkBk,
        Cmd::LpBound => Suite::LpBound,
        Cmd::Smoothing => Suite::Smoothing,
        Cmd::H1Smoothing => Suite::H1Smoothing,
        Cmd::Attractor => Suite::Attractor(AttractorPart::All),
        Cmd::Dimension => Suite::Attractor(AttractorPart::Dimension),
        Cmd::NetTransport => Suite::Attractor(AttractorPart::Transport),
        Cmd::All => return Some(Command::All),
        Cmd::Plots { .. } => return None,
    };
    Some(Command::Suite(suite))
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    if let Cmd::Plots { report } = &cli.command {
        for path in plots::emit_plots(report, &cli.out)? {
            log::info!("wrote {}", path.display());
        }
        return Ok(true);
    }
    let config = cli.config.clone().ok_or_else(|| SchemaError {
        line: None,
        field: "--config".into(),
        message: "a configuration file is required".into(),
    })?;
    let opts = RunOptions {
        config,
        out: cli.out.clone(),
        seed: cli.seed,
        smoothing_report: cli.smoothing_report.clone(),
    };
    let report = run(command(&cli.command).expect("not plots"), &opts)?;
    for name in &report.summary.failed {
        log::warn!("FAIL {name}");
    }
    println!(
        "{}: {} ({} gated checks, {} failed)",
        report.command,
        if report.summary.pass { "PASS" } else { "FAIL" },
        report.summary.gated_checks,
        report.summary.failed.len()
    );
    Ok(report.summary.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
