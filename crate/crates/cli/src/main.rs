use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpmimo::experiments::{
    run_cdf, run_checks, run_compare_centralized, run_compare_distributed, run_convergence,
    ExperimentConfig, Problem, Profile,
};
use fpmimo::{Error, Scenario};
use log::info;

#[derive(Parser)]
#[command(name = "fpmimo", version, about = "Uplink power control experiments for cell-free massive MIMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenarios to run (comma separated or repeated).
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_scenario)]
    scenario: Vec<Scenario>,

    /// Parameter profile.
    #[arg(long, global = true, default_value = "desk", value_parser = parse_profile)]
    profile: Profile,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of user drops.
    #[arg(long, global = true)]
    drops: Option<usize>,

    /// Channel realizations per drop.
    #[arg(long, global = true)]
    nsim: Option<usize>,

    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// File of `key = value` overrides, applied after the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Distance to the fixed point per iteration on one drop.
    Converge {
        #[arg(long, value_parser = parse_problem)]
        problem: Problem,
    },
    /// Per-user rate samples of the joint max-min solution.
    Cdf,
    /// Long-term vs short-term power control with centralized processing.
    CompareCentralized,
    /// Joint design vs MRC with large-scale fading decoding.
    CompareDistributed,
    /// Run the invariant suite and report pass/fail per check.
    Check {
        /// Samples per SI axiom check.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Numerical(String),
    Output(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Output(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::Format { .. } => {
                Failure::Usage(e.to_string())
            }
            Error::Io { .. } => Failure::Output(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let c = &cli.common;
    let mut cfg = ExperimentConfig::new(c.profile);
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        cfg.apply_overrides(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if !c.scenario.is_empty() {
        if matches!(cli.command, Command::CompareCentralized | Command::CompareDistributed) {
            return Err(Failure::Usage("--scenario is not accepted by compare commands".into()));
        }
        cfg.scenarios = c.scenario.clone();
        cfg.scenarios.dedup();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(drops) = c.drops {
        if matches!(cli.command, Command::Converge { .. }) && drops != 1 {
            return Err(Failure::Usage("converge runs a single drop".into()));
        }
        cfg.drops = drops;
    }
    if let Some(n) = c.nsim {
        cfg.network.n_sim = n;
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(table_csv: impl FnOnce(&Path) -> fpmimo::Result<()>, path: &Path) -> Result<(), Failure> {
    table_csv(path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = build_config(cli)?;
    info!(
        "profile {:?}, {} drops, seed {}, scenarios {:?}",
        cfg.profile, cfg.drops, cfg.seed, cfg.scenarios
    );
    let out = &cfg.out_dir;
    match &cli.command {
        Command::Converge { problem } => {
            let table = run_convergence(&cfg, *problem)?;
            write(|p| table.write_csv(p), &out.join(format!("converge-{}.csv", problem.label())))
        }
        Command::Cdf => {
            let table = run_cdf(&cfg)?;
            write(|p| table.write_csv(p), &out.join("cdf.csv"))
        }
        Command::CompareCentralized => {
            let table = run_compare_centralized(&cfg)?;
            write(|p| table.write_csv(p), &out.join("compare-centralized.csv"))
        }
        Command::CompareDistributed => {
            let table = run_compare_distributed(&cfg)?;
            write(|p| table.write_csv(p), &out.join("compare-distributed.csv"))
        }
        Command::Check { samples } => {
            if *samples == 0 {
                return Err(Failure::Usage("--samples must be at least 1".into()));
            }
            let outcomes = run_checks(&cfg, *samples)?;
            let mut failed = 0;
            for o in &outcomes {
                println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                failed += usize::from(!o.passed);
            }
            if failed > 0 {
                return Err(Failure::Numerical(format!("{failed} of {} checks failed", outcomes.len())));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Numerical(msg) | Failure::Output(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
