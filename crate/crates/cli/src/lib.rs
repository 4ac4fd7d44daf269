//! Command-line front end for the arbsim simulator.
//!
//! Every command resolves its parameters from built-in defaults, the
//! `ARBSIM_SEED` environment variable (seed only), an optional
//! `--config` file and finally command-line flags, then writes CSV tables
//! (and SVG plots with `--plot`) into the output directory.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod output;
pub mod plot;
pub mod settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "arbsim", version, about = "AMM arbitrage and fee simulations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Master seed; falls back to ARBSIM_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Also write per-run results as JSON lines.
    #[arg(long, global = true)]
    pub jsonl: bool,
    /// Override any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Additive random walk path.
    Walk(WalkArgs),
    /// Geometric Brownian motion path.
    Gbm(GbmArgs),
    /// Hitting time against a threshold grid.
    HitSweep(HitArgs),
    /// One arbitrage against a mispriced pool, optionally followed by a trace.
    ArbStep(ArbArgs),
    /// Fee revenue and arbitrage frequency over a fee grid.
    FeeSweep(SweepArgs),
    /// Ensemble under a configurable fee policy.
    PolicySim(PolicyArgs),
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub p_up: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GbmArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// binary or gaussian
    #[arg(long)]
    pub increment: Option<String>,
}

#[derive(Debug, Args)]
pub struct HitArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub p_up: Option<f64>,
    /// symmetric, upper, lower or one_sided
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub max_steps: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ArbArgs {
    /// Venue price over pool spot price.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub fee: Option<f64>,
    /// optimal or match
    #[arg(long)]
    pub strategy: Option<String>,
    /// Length of the follow-up trace; 0 disables it.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Venue volatility of the trace.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub strategy: Option<String>,
    /// Comma-separated fee list, replacing the generated grid.
    #[arg(long)]
    pub fees: Option<String>,
    #[arg(long)]
    pub increment: Option<String>,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// static_symmetric, static_asymmetric or directional_adaptive
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub fee: Option<f64>,
    #[arg(long)]
    pub strategy: Option<String>,
}

/// Collects `Some` flag values as `(key, value)` assignments.
macro_rules! assignments {
    ($($key:literal => $value:expr),* $(,)?) => {{
        let mut v: Vec<(String, String)> = Vec::new();
        $(if let Some(x) = &$value {
            v.push(($key.to_string(), x.to_string()));
        })*
        v
    }};
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Walk(_) => "walk",
            Self::Gbm(_) => "gbm",
            Self::HitSweep(_) => "hit-sweep",
            Self::ArbStep(_) => "arb-step",
            Self::FeeSweep(_) => "fee-sweep",
            Self::PolicySim(_) => "policy-sim",
        }
    }

    /// Configuration sections the command reads.
    pub fn sections(&self) -> &'static [&'static str] {
        match self {
            Self::Walk(_) => &["walk"],
            Self::Gbm(_) => &["gbm"],
            Self::HitSweep(_) => &["hit"],
            Self::ArbStep(_) => &["pool", "arb"],
            Self::FeeSweep(_) => &["gbm", "pool", "sweep"],
            Self::PolicySim(_) => &["gbm", "pool", "policy"],
        }
    }

    fn assignments(&self) -> Vec<(String, String)> {
        match self {
            Self::Walk(a) => assignments! {
                "walk.runs" => a.runs, "walk.steps" => a.steps,
                "walk.sigma" => a.sigma, "walk.p_up" => a.p_up,
            },
            Self::Gbm(a) => assignments! {
                "gbm.runs" => a.runs, "gbm.steps" => a.steps, "gbm.sigma" => a.sigma,
                "gbm.mu" => a.mu, "gbm.increment" => a.increment,
            },
            Self::HitSweep(a) => assignments! {
                "hit.runs" => a.runs, "hit.sigma" => a.sigma, "hit.p_up" => a.p_up,
                "hit.mode" => a.mode, "hit.max_steps" => a.max_steps,
            },
            Self::ArbStep(a) => assignments! {
                "arb.alpha" => a.alpha, "arb.fee" => a.fee, "arb.strategy" => a.strategy,
                "arb.trace_steps" => a.steps, "arb.trace_sigma" => a.sigma,
            },
            Self::FeeSweep(a) => assignments! {
                "sweep.runs" => a.runs, "gbm.steps" => a.steps, "gbm.sigma" => a.sigma,
                "gbm.mu" => a.mu, "sweep.strategy" => a.strategy, "sweep.fees" => a.fees,
                "gbm.increment" => a.increment,
            },
            Self::PolicySim(a) => assignments! {
                "policy.runs" => a.runs, "gbm.steps" => a.steps, "gbm.sigma" => a.sigma,
                "gbm.mu" => a.mu, "policy.kind" => a.policy, "policy.fee" => a.fee,
                "policy.strategy" => a.strategy,
            },
        }
    }
}

/// Failure classes, mapped to distinct exit statuses.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<settings::SettingsError> for CliError {
    fn from(e: settings::SettingsError) -> Self {
        Self::Usage(e.0)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Reports go to `stdout`, diagnostics to stderr.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

/// Resolves settings for `cli` with the seed fallback taken from the
/// environment.
pub fn resolve_settings(cli: &Cli) -> Result<settings::Settings, CliError> {
    let env_seed = std::env::var(settings::SEED_ENV).ok();
    let mut assignments = Vec::new();
    for a in &cli.global.set {
        let (k, v) = a
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{a}`")))?;
        assignments.push((k.trim().to_string(), v.to_string()));
    }
    assignments.extend(cli.command.assignments());
    if let Some(seed) = cli.global.seed {
        assignments.push(("seed".into(), seed.to_string()));
    }
    Ok(settings::layered(
        env_seed.as_deref(),
        cli.global.config.as_deref(),
        &assignments,
    )?)
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let settings = resolve_settings(cli)?;
    let plan = commands::Plan::build(&cli.command, &settings)?;
    let ctx = commands::Context {
        out_dir: cli.global.out.clone(),
        plot: cli.global.plot,
        jsonl: cli.global.jsonl,
        metadata: metadata_line(cli.command.name(), &settings, cli.command.sections()),
    };
    let go = || {
        let mut report = Vec::new();
        let result = plan.run(&ctx, &mut report);
        (report, result)
    };
    let (report, result) = match cli.global.threads {
        Some(0) => return Err(CliError::Usage("--threads must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.into()))?
            .install(go),
        None => go(),
    };
    stdout
        .write_all(&report)
        .and_then(|_| stdout.flush())
        .map_err(|e| CliError::Runtime(e.into()))?;
    result.map_err(CliError::Runtime)
}

/// `arbsim <command> key=value ...` over every setting the command reads.
pub fn metadata_line(command: &str, settings: &settings::Settings, sections: &[&str]) -> String {
    let mut line = format!("arbsim {command}");
    for (k, v) in settings.describe(sections) {
        line.push_str(&format!(" {k}={v}"));
    }
    line
}
