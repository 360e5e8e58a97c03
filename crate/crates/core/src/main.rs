use clap::{Parser, Subcommand};
use robin_lab::{check, config, run};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "robin-lab", about = "Robin p-Laplacian experiments on masked grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a run config and write results/<name>/.
    Run { config: PathBuf },
    /// Run the deterministic property-check suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarize a results directory and verify its artifacts.
    Report { results_dir: PathBuf },
}

fn main() -> ExitCode {
    // ROBIN_LAB_THREADS caps worker parallelism; solves are currently
    // sequential, so this only bounds future parallel sweeps.
    let _threads: usize = std::env::var("ROBIN_LAB_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);

    let cli = Cli::parse();
    match cli.command {
        Command::Run { config: path } => {
            let cfg = match config::load_config(&path) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run::run(&cfg) {
                Ok(art) => {
                    print!("{}", art.report);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Check { seed } => {
            let summary = check::check_suite(seed);
            print!("{}", summary.text);
            if summary.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Report { results_dir } => match run::report_summary(&results_dir) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("report failed: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
