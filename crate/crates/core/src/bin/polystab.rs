use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polystab::cli::{run_text, write_tables, Experiment, RunConfig, OUT_ENV};
use polystab::constants::find_n0;
use polystab::Error;

#[derive(Parser)]
#[command(name = "polystab", version, about = "Radial solutions of (-Δ)^m u = e^u: integration, stability, constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Run a sweep config (experiment = "sweep").
    Sweep { config: PathBuf },
    /// Write the Hardy-constant table as CSV.
    Tables {
        #[arg(long, default_value_t = 1)]
        m_min: u32,
        #[arg(long, default_value_t = 5)]
        m_max: u32,
        #[arg(long, default_value_t = 64)]
        n_max: u32,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest N0 with P_m(N) <= λ_{N,m} for all N >= N0.
    N0 { m: u32 },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run_config(path: &PathBuf, sweep_only: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if sweep_only {
        match RunConfig::from_toml(&text) {
            Ok(c) if c.experiment != Experiment::Sweep => {
                eprintln!("error: {} is not a sweep config", path.display());
                return ExitCode::from(2);
            }
            Err(e) => return fail(&e),
            Ok(_) => {}
        }
    }
    match run_text(&text) {
        Ok(out) => {
            match &out.error {
                Some(e) => eprintln!("error: {e}"),
                None => println!("{}", out.dir.display()),
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => run_config(&config, false),
        Command::Sweep { config } => run_config(&config, true),
        Command::Tables { m_min, m_max, n_max, out } => {
            let path = out.unwrap_or_else(|| PathBuf::from("/dev/stdout"));
            let path = match (std::env::var_os(OUT_ENV), path.is_relative()) {
                (Some(root), true) => PathBuf::from(root).join(path),
                _ => path,
            };
            match write_tables(&path, m_min..=m_max, 3..=n_max) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => fail(&e),
            }
        }
        Command::N0 { m } => match find_n0(m) {
            Ok(scan) => {
                println!("m = {}: N0 = {} (verified through N = {})", scan.m, scan.n0, scan.window_end);
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
