//! `ddm`: run diffuse-domain experiments from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ddm_core::experiment::{self, ExperimentConfig, FieldKind};
use ddm_core::oracle;
use ddm_core::{DdmError, Result};

#[derive(Parser)]
#[command(name = "ddm", version, about = "Diffuse domain solver for the heat equation with Neumann data")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Preset name or path to a TOML configuration.
    config: String,
    /// Override grid.nx (and grid.ny).
    #[arg(long)]
    nx: Option<usize>,
    /// Override time.steps.
    #[arg(long)]
    steps: Option<usize>,
    /// Override output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(nx) = self.nx {
            cfg.grid.nx = nx;
            cfg.grid.ny = None;
        }
        if let Some(steps) = self.steps {
            cfg.time.steps = steps;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        Ok(cfg)
    }
}

fn parse_epsilon(s: &str) -> std::result::Result<f64, String> {
    experiment::parse_fraction(s)
}

#[derive(Subcommand)]
enum Command {
    /// Solve at a single epsilon and print the errors at the final time.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// Epsilon, e.g. 1/16; defaults to the first sweep entry.
        #[arg(long, value_parser = parse_epsilon)]
        epsilon: Option<f64>,
    },
    /// Run the whole epsilon sweep and write sweep.csv.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Dump a nodal field (omega, solution, exact, error) as VTK or CSV.
    Field {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_parser = parse_epsilon)]
        epsilon: Option<f64>,
        #[arg(long, default_value = "solution")]
        what: String,
        /// Output file; `.csv` selects CSV, anything else VTK.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Check the discretization against brute-force oracles.
    Verify {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 20240917)]
        seed: u64,
    },
    /// List the shipped configuration presets.
    Presets,
}

fn first_epsilon(cfg: &ExperimentConfig, eps: Option<f64>) -> Result<f64> {
    eps.or_else(|| cfg.sweep.epsilons.first().copied())
        .ok_or_else(|| DdmError::config("no epsilon given"))
}

fn print_rate(r: Option<f64>) -> String {
    r.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, epsilon } => {
            let cfg = config.load()?;
            cfg.validate()?;
            let eps = first_epsilon(&cfg, epsilon)?;
            let out = experiment::run_single(&cfg, eps)?;
            let r = out.report;
            println!("epsilon={} l2_error={:.6e} h1_error={:.6e} runtime_s={:.2}", r.epsilon, r.l2_error, r.h1_error, r.runtime_s);
        }
        Command::Sweep { config } => {
            let cfg = config.load()?;
            let sweep = experiment::run_sweep(&cfg)?;
            let l2 = sweep.l2_rates();
            let h1 = sweep.h1_rates();
            println!("{:>10} {:>12} {:>6} {:>12} {:>6} {:>9}", "epsilon", "L2", "CR", "H1", "CR", "time[s]");
            for (k, r) in sweep.reports.iter().enumerate() {
                let (a, b) = if k == 0 { (None, None) } else { (l2[k - 1], h1[k - 1]) };
                println!(
                    "{:>10.6} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>9.1}",
                    r.epsilon, r.l2_error, print_rate(a), r.h1_error, print_rate(b), r.runtime_s
                );
            }
            if cfg.writes(experiment::OutputFormat::Csv) {
                println!("wrote {}", cfg.output_dir().join("sweep.csv").display());
            }
        }
        Command::Field { config, epsilon, what, file } => {
            let cfg = config.load()?;
            cfg.validate()?;
            let eps = first_epsilon(&cfg, epsilon)?;
            let kind: FieldKind = what.parse()?;
            let path = experiment::dump_field(&cfg, eps, kind, file)?;
            println!("wrote {}", path.display());
        }
        Command::Verify { samples, seed } => {
            let checks = oracle::verify_suite(samples, seed)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {:<40} measured={:.3e} limit={:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance
                );
                ok &= c.passed;
            }
            return Ok(ok);
        }
        Command::Presets => {
            for (name, _) in experiment::PRESETS {
                println!("{name}");
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
