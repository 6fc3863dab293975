use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};
use sgain::commands::{execute, Command};
use sgain::config::RunConfig;
use sgain::{ExitCode, Failure};

/// Small-gain certification and simulation for infinite networks of ODEs.
#[derive(Parser, Debug)]
#[command(name = "sgain", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Run configuration (JSON, schema "sgain/1").
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for reports, certificates and trajectory CSVs.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for randomized checks; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct Target {
    /// Built-in scenario, used when no config is given.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Derive gains and check the uniformity assumptions.
    Analyze(Target),
    /// Bracket r(Ψ) and emit a verified certificate.
    Certify(Target),
    /// Integrate the truncated network and write trajectory CSVs.
    Simulate(Target),
    /// Re-check a certificate pointwise and against fresh simulations.
    Verify {
        #[command(flatten)]
        target: Target,
        /// Certificate file; defaults to <out>/certificate.json.
        #[arg(long)]
        certificate: Option<PathBuf>,
    },
    /// Run the full pipeline on a built-in scenario.
    Scenario { name: String },
}

fn load(cli: &Cli, scenario: Option<&str>) -> Result<RunConfig, Failure> {
    let mut cfg = match (&cli.config, scenario) {
        (Some(path), None) => RunConfig::load(path)?,
        (Some(path), Some(name)) => {
            let mut cfg = RunConfig::load(path)?;
            if cfg.network.is_some() {
                return Err(Failure::input("config spells out a network; drop the scenario name"));
            }
            cfg.scenario = Some(name.into());
            cfg
        }
        (None, Some(name)) => RunConfig::for_scenario(name),
        (None, None) => return Err(Failure::input("give --config <path> or --scenario <name>")),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    let (cmd, scenario, certificate) = match &cli.command {
        Cmd::Analyze(t) => (Command::Analyze, t.scenario.as_deref(), None),
        Cmd::Certify(t) => (Command::Certify, t.scenario.as_deref(), None),
        Cmd::Simulate(t) => (Command::Simulate, t.scenario.as_deref(), None),
        Cmd::Verify { target, certificate } => (Command::Verify, target.scenario.as_deref(), certificate.clone()),
        Cmd::Scenario { name } => (Command::Scenario, Some(name.as_str()), None),
    };
    let mut cfg = load(cli, scenario)?;
    if certificate.is_some() {
        cfg.certificate = certificate;
    }
    let done = execute(cmd, &cfg, &cli.out)?;
    println!(
        "{} {}: {} [exit {}] -> {}",
        cmd.name(),
        cfg.scenario.as_deref().unwrap_or("network"),
        done.summary,
        done.code.code(),
        done.report.display()
    );
    Ok(done.code)
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    };
    process::exit(i32::from(code.code()));
}
