use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mpass_cli::Command;

/// Mountain-pass and max-min critical levels for scaling-invariant functionals.
#[derive(Debug, Parser)]
#[command(name = "mpass", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Constraint level for `minimize` (default 1).
    #[arg(long)]
    lambda: Option<f64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Ok(raw) = std::env::var("TOOL_THREADS") {
        let threads = match raw.trim().parse::<usize>() {
            Ok(t) if t > 0 => t,
            _ => {
                eprintln!("error: TOOL_THREADS must be a positive integer, got {raw:?}");
                return ExitCode::from(2);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot size the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let code = mpass_cli::run(cli.command, &cli.config, cli.lambda, cli.out);
    ExitCode::from(code as u8)
}
