use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cclab::config::{load_scenario, ConfigError};
use cclab::emit::{self, OutputFormat};
use cclab::sweep::run_sweep;
use cclab_core::scenario::{ScenarioError, ScenarioSpec};
use cclab_core::sim::{run_scenario, RunReport};

#[derive(Parser)]
#[command(
    name = "cclab",
    version,
    about = "Trace-driven congestion control laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its report artifacts.
    Run {
        /// Scenario file (TOML; see scenarios/ for examples).
        scenario: PathBuf,
        /// Output directory for report artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// csv (metrics + timeseries), json, or svg.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Simulate the scenario once per value of a swept parameter.
    Sweep {
        scenario: PathBuf,
        /// c2tcp.target_ms, c2tcp.interval_ms, or loss_prob.
        #[arg(long)]
        key: String,
        /// Comma-separated values, e.g. 50,60,70,80,90,100.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Parse and validate a scenario file without simulating.
    Validate { scenario: PathBuf },
}

enum CliError {
    /// Bad scenario, bad flag value, unreadable trace: the user's input.
    Config(String),
    /// The run itself failed, e.g. artifacts could not be written.
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Prints one line to stdout, swallowing write failures: a closed pipe
/// (`cclab run ... | head`) must end the output, not panic the run.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn print_flow_summaries(report: &RunReport) {
    for fr in &report.flows {
        let m = &fr.metrics;
        say!(
            "flow {} {}: {:.3} Mbps, avg delay {:.1} ms, p95 {:.1} ms, \
             delivered {} (drops: aqm {}, tail {}, random {})",
            fr.id,
            fr.algorithm,
            m.throughput_mbps,
            m.avg_delay.as_millis_f64(),
            m.p95_delay.as_millis_f64(),
            m.delivered,
            m.aqm_drops,
            m.tail_drops,
            m.stochastic_losses
        );
    }
    match report.jain {
        Some(j) => say!(
            "total {:.3} Mbps, fairness {:.3}, digest {:016x}",
            report.total_throughput_mbps, j, report.digest
        ),
        None => say!(
            "total {:.3} Mbps, digest {:016x}",
            report.total_throughput_mbps, report.digest
        ),
    }
}

fn cmd_run(
    scenario: &Path,
    out: &Path,
    seed: Option<u64>,
    format: &str,
) -> Result<(), CliError> {
    let format = OutputFormat::parse(format)
        .ok_or_else(|| CliError::Config(format!("unknown format {format:?}")))?;
    let mut spec = load_scenario(scenario)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let report = run_scenario(&spec)?;
    print_flow_summaries(&report);
    for path in emit::write_run_outputs(&report, out, format)? {
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_sweep(scenario: &Path, key: &str, values: &[f64], out: &Path) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(CliError::Config(String::from(
            "--values must list at least one value",
        )));
    }
    let spec: ScenarioSpec = load_scenario(scenario)?;
    let results = run_sweep(&spec, key, values)?;
    for (value, report) in &results {
        say!(
            "{key} = {value}: total {:.3} Mbps, digest {:016x}",
            report.total_throughput_mbps, report.digest
        );
    }
    for path in emit::write_sweep_outputs(key, &results, out)? {
        say!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(scenario: &Path) -> Result<(), CliError> {
    let spec = load_scenario(scenario)?;
    say!(
        "ok: {} flow(s), {:.1} s, trace {:.2} Mbps mean over a {} ms period, \
         queue cap {:?}, seed {}",
        spec.flows.len(),
        spec.duration.as_secs_f64(),
        spec.trace.mean_rate_mbps(),
        spec.trace.period_ms(),
        spec.resolved_queue_cap(),
        spec.seed
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run { scenario, out, seed, format } => cmd_run(scenario, out, *seed, format),
        Command::Sweep { scenario, key, values, out } => cmd_sweep(scenario, key, values, out),
        Command::Validate { scenario } => cmd_validate(scenario),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; anything else is a
            // configuration problem, same exit code as a bad scenario.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            let _ = writeln!(std::io::stderr(), "error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            let _ = writeln!(std::io::stderr(), "error: {msg}");
            ExitCode::from(2)
        }
    }
}
