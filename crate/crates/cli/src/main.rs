mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::commands::Phases;
use crate::config::{Overrides, RunConfig};
use crate::error::CliError;

/// Topology and dynamics of the collective-decay boundary time crystal.
#[derive(Parser, Debug)]
#[command(name = "btc-topo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Dump the spherical tensor basis
    Basis,
    /// Eigenvalues of the coefficient generator
    Spectrum,
    /// Hopping amplitudes on the (k, q) lattice
    Hoppings,
    /// Local index and gap along the rank coordinate
    LocalizerX,
    /// Local index and gap over the complex frequency plane
    LocalizerPlane,
    /// Repeat a position or plane sweep for several kappa
    KappaSweep,
    /// Rank-resolved weights of every eigenmode
    Modes,
    /// Time evolution from coherent spin states
    Evolve,
    /// Self-consistency battery
    Validate,
    /// Print the effective configuration as JSON
    Config,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Basis => "basis",
            Command::Spectrum => "spectrum",
            Command::Hoppings => "hoppings",
            Command::LocalizerX => "localizer-x",
            Command::LocalizerPlane => "localizer-plane",
            Command::KappaSweep => "kappa-sweep",
            Command::Modes => "modes",
            Command::Evolve => "evolve",
            Command::Validate => "validate",
            Command::Config => "config",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    let faults = validate::Faults::parse(cli.overrides.inject_fault.as_deref())?;
    if cli.command == Command::Config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
        return Ok(());
    }
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;

    let start = Instant::now();
    let mut phases = Phases::default();
    let result = match cli.command {
        Command::Basis => commands::basis(&cfg, &out, &mut phases),
        Command::Spectrum => commands::spectrum_cmd(&cfg, &out, &mut phases),
        Command::Hoppings => commands::hoppings(&cfg, &out, &mut phases),
        Command::LocalizerX => commands::localizer_x(&cfg, &out, &mut phases),
        Command::LocalizerPlane => commands::localizer_plane(&cfg, &out, &mut phases),
        Command::KappaSweep => commands::kappa_sweep(&cfg, &out, &mut phases),
        Command::Modes => commands::modes(&cfg, &out, &mut phases),
        Command::Evolve => commands::evolve(&cfg, &out, &mut phases),
        Command::Validate => validate::run(&cfg, faults, &out, &mut phases),
        Command::Config => unreachable!(),
    };
    let elapsed = start.elapsed().as_secs_f64();
    log::info!("{} finished in {elapsed:.2} s", cli.command.name());
    output::write_timing(&out, cli.command.name(), elapsed, &phases.0)?;
    result
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default();
            let err = CliError::Config(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
