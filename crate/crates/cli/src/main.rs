//! `hetfx`: fit latent-variable outcome models to trial data, estimate
//! treatment benefit and harm rates, and run simulation studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hetfx_cli::config::{RawConfig, Settings};
use hetfx_cli::error::{exit, CliError, CliResult};
use hetfx_cli::{commands, report};

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "HETFX_WORKERS";

#[derive(Parser)]
#[command(name = "hetfx", version, about = "Treatment benefit and harm rates from trial data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the outcome model and report coefficients and Wald tests.
    Fit(Flags),
    /// Estimate benefit and harm rates (a sweep over c for continuous outcomes).
    Estimate(Flags),
    /// Run a Monte Carlo study on the reference design.
    Simulate(Flags),
}

/// Every flag overrides the key of the same name in the config file.
#[derive(Args)]
struct Flags {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Delimited input file with a header row.
    #[arg(long)]
    input: Option<String>,
    /// Field delimiter: one character or `tab`. Defaults to `,` (tab for .tsv).
    #[arg(long)]
    delimiter: Option<String>,
    #[arg(long, value_name = "continuous|binary")]
    outcome_kind: Option<String>,
    /// Treatment column (literal 0/1). Default `t`.
    #[arg(long)]
    treatment: Option<String>,
    /// Outcome column. Default `y`.
    #[arg(long)]
    outcome: Option<String>,
    /// Comma-separated covariate columns. Default: every other column.
    #[arg(long)]
    covariates: Option<String>,
    /// Margins: `0,1,2` or `start:stop:step`.
    #[arg(long = "c", value_name = "LIST", allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    ci_level: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated latent families: normal, t:DF, chisq:DF, poisson:RATE, bernoulli:P.
    #[arg(long, value_name = "FAMILY[:PARAM]")]
    latent: Option<String>,
    /// Sample size per replication (simulate).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    treat_prob: Option<String>,
    #[arg(long)]
    truth_draws: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    #[arg(long)]
    gradient_tolerance: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    jitter: Option<String>,
    /// Also write one simulated dataset as CSV (simulate).
    #[arg(long)]
    emit_data: Option<String>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn settings(&self) -> CliResult<Settings> {
        let mut raw = match &self.config {
            Some(path) => RawConfig::load(path)?,
            None => RawConfig::default(),
        };
        let overrides = [
            ("input", &self.input),
            ("delimiter", &self.delimiter),
            ("outcome_kind", &self.outcome_kind),
            ("treatment", &self.treatment),
            ("outcome", &self.outcome),
            ("covariates", &self.covariates),
            ("c", &self.c),
            ("ci_level", &self.ci_level),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("latent", &self.latent),
            ("n", &self.n),
            ("treat_prob", &self.treat_prob),
            ("truth_draws", &self.truth_draws),
            ("max_iterations", &self.max_iterations),
            ("gradient_tolerance", &self.gradient_tolerance),
            ("restarts", &self.restarts),
            ("jitter", &self.jitter),
            ("emit_data", &self.emit_data),
            ("out", &self.out),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                raw.set(key, v.clone());
            }
        }
        Settings::from_raw(&raw)
    }
}

fn configure_workers() -> CliResult<()> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("{WORKERS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::io(format!("cannot start worker pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_workers()?;
    let (flags, command): (&Flags, fn(&Settings) -> CliResult<commands::Output>) = match &cli.command {
        Command::Fit(f) => (f, commands::cmd_fit),
        Command::Estimate(f) => (f, commands::cmd_estimate),
        Command::Simulate(f) => (f, commands::cmd_simulate),
    };
    let settings = flags.settings()?;
    let output = command(&settings)?;

    if let (Some(path), Some(csv)) = (&settings.emit_data, &output.emitted_data) {
        report::write_atomic(path, csv)?;
    }
    let text = output.report.render();
    match &settings.out {
        Some(path) => report::write_atomic(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
