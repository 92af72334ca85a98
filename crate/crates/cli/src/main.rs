use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use isac_cli::{cmd_design, cmd_montecarlo, cmd_verify, CliError, Overrides};
use isac_core::simkit::OutputFormat;

/// Robust ISAC waveform design and Monte-Carlo characterization.
///
/// Exit codes: 0 ok, 1 invariant violation, 2 config error, 3 solver failure.
/// Log verbosity follows RUST_LOG.
#[derive(Parser)]
#[command(name = "isac", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Design nominal and robust waveforms and write them as artifacts.
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the Monte-Carlo evaluation over the configured radius grid.
    Montecarlo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Re-check the invariants of a design directory.
    Verify {
        /// Directory written by `design`.
        dir: PathBuf,
        /// Relative tolerance; defaults to the one recorded at design time.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { config, out, seed } => {
            let s = cmd_design(&config, &Overrides { out, seed, ..Default::default() })?;
            println!("method        {}", s.method);
            println!("theta         {}", s.theta);
            println!("cost_nominal  {:.10e}", s.cost_nominal);
            println!("cost_robust   {:.10e}", s.cost_robust);
            println!("aasr_nominal  {:.6}", s.aasr_nominal);
            println!("aasr_robust   {:.6}", s.aasr_robust);
        }
        Command::Montecarlo { config, out, seed, format } => {
            let format = format.map(|f| match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            });
            let (report, path) = cmd_montecarlo(&config, &Overrides { out, seed, format, ..Default::default() })?;
            for block in &report.blocks {
                println!("# {} rho = {} nominal AASR {:.6}", report.method, block.rho, block.aasr_nominal);
                println!("theta\taasr_robust\tcoverage");
                for p in &block.points {
                    match (p.aasr_robust, p.coverage) {
                        (Some(a), Some(c)) => println!("{:.4}\t{a:.6}\t{c:.4}", p.theta),
                        _ => println!("{:.4}\tfailed\t{}", p.theta, p.error.as_deref().unwrap_or("")),
                    }
                }
            }
            println!("report: {}", path.display());
            if report.failures > 0 {
                return Err(CliError::Solver(format!("{} design(s) failed", report.failures)));
            }
        }
        Command::Verify { dir, tol } => {
            cmd_verify(&dir, tol)?;
            println!("all checks passed");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
