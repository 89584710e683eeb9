use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use repsim::config::{parse_config, SweepSpec};
use repsim::experiment::{parse_point, run_replicate, run_simulate, run_sweep};
use repsim::Result;

#[derive(Parser)]
#[command(
    name = "repsim",
    version,
    about = "Reputation-scheme simulator with evolving deceptive vehicles"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write its CSV artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the initial reputation over a list of values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated values, e.g. `1,5,10`.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 1)]
        seeds: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the replicator dynamics for a payoff table.
    Replicate {
        #[arg(long)]
        payoffs: PathBuf,
        /// Starting point on the simplex, e.g. `0.2,0.5,0.3`.
        #[arg(long)]
        x0: String,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate { config, seed, out } => {
            let mut cfg = parse_config(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let outcome = run_simulate(&cfg, seed.unwrap_or(cfg.seed))?;
            print!("{}", outcome.report.render());
        }
        Cmd::Sweep {
            config,
            values,
            seeds,
            out,
        } => {
            let mut cfg = parse_config(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let spec = SweepSpec::new(SweepSpec::parse_values(&values)?, seeds)?;
            let rows = run_sweep(&cfg, &spec)?;
            println!("{} runs written to {}", rows.len(), cfg.out_dir.display());
        }
        Cmd::Replicate {
            payoffs,
            x0,
            dt,
            steps,
            out,
        } => {
            let traj = run_replicate(&payoffs, &parse_point(&x0)?, dt, steps, &out)?;
            println!("final state: {:?}", traj.last());
        }
    }
    Ok(())
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
