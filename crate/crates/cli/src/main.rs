use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use erc_cli::error::{CliError, Result};
use erc_cli::{load_config, oracle, output_dir, plot, run_to_dir, thread_budget};

#[derive(Parser)]
#[command(
    name = "erc",
    version,
    about = "Ensemble reservoir computing experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment in a TOML config or a previous run's manifest.json.
    Run {
        config: PathBuf,
        /// Write outputs here instead of the configured output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Render SVG charts for the CSVs in a run directory.
    Plot { dir: PathBuf },
    /// Parse and validate a config, then print it with every default filled in.
    Validate { config: PathBuf },
    /// Run a reference check: crc, hamming, narma, rk4, stuart-landau, tipc, lyapunov-linear, or all.
    Oracle { name: String },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            output_dir: dir,
        } => {
            let cfg = load_config(&config)?;
            let threads = thread_budget(cfg.threads)?;
            let dir = output_dir(&cfg, dir);
            let manifest = run_to_dir(&cfg, &dir, threads)?;
            for note in &manifest.notes {
                eprintln!("{}", serde_json::json!({"level": "warn", "message": note}));
            }
            for f in &manifest.outputs {
                println!("{}", dir.join(f).display());
            }
            println!("{}", dir.join(erc_cli::output::MANIFEST_FILE).display());
        }
        Command::Plot { dir } => {
            for p in plot::plot_dir(&dir)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { config } => {
            print!("{}", load_config(&config)?.to_toml_string()?);
        }
        Command::Oracle { name } => {
            let names: Vec<&str> = if name == "all" {
                oracle::ORACLES.to_vec()
            } else {
                vec![name.as_str()]
            };
            let mut failed = Vec::new();
            for n in names {
                let report = oracle::run(n)?;
                for line in report.lines() {
                    println!("{line}");
                }
                if !report.passed() {
                    failed.push(n);
                }
            }
            if !failed.is_empty() {
                return Err(CliError::Numerical(format!(
                    "oracle checks failed: {}",
                    failed.join(", ")
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            eprintln!("{}", CliError::Config(e.kind().to_string()).structured());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.structured());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
