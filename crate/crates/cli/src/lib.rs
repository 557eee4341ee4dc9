//! Library half of the `mpass` binary: configuration, command
//! implementations and artifact writing.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use log::{error, info, warn};

pub use commands::{
    cmd_maxmin, cmd_minimize, cmd_mpa, cmd_sweep, cmd_toy, cmd_verify, Comparison, Envelope,
    MaxminSummary, MinimizeSummary, MpaSummary, SweepSummary, ToySummary, VerifySummary,
};
pub use config::{Context, RunConfig, SweepConfig};
pub use error::{CliError, ErrorReport};
pub use output::OutputDir;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Minimize,
    Sweep,
    Maxmin,
    Mpa,
    Verify,
    Toy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Minimize => "minimize",
            Command::Sweep => "sweep",
            Command::Maxmin => "maxmin",
            Command::Mpa => "mpa",
            Command::Verify => "verify",
            Command::Toy => "toy",
        }
    }
}

/// Runs one command and returns the process exit code. On failure an
/// `error.json` is left in the output directory whenever it can be created.
pub fn run(command: Command, config_path: &Path, lambda: Option<f64>, out: Option<PathBuf>) -> i32 {
    let fallback_dir = out.clone();
    let outcome = RunConfig::load(config_path)
        .and_then(|cfg| Context::new(cfg, out))
        .and_then(|ctx| {
            let dir = OutputDir::create(&ctx.output_dir)?;
            Ok((ctx, dir))
        });
    let (ctx, dir) = match outcome {
        Ok(v) => v,
        Err(e) => {
            return fail(
                &e,
                fallback_dir
                    .and_then(|d| OutputDir::create(&d).ok())
                    .as_ref(),
            )
        }
    };
    if lambda.is_some() && command != Command::Minimize {
        warn!("--lambda only applies to minimize; ignored");
    }
    let result = match command {
        Command::Minimize => cmd_minimize(&ctx, &dir, lambda.unwrap_or(1.0)).map(|_| ()),
        Command::Sweep => cmd_sweep(&ctx, &dir).map(|_| ()),
        Command::Maxmin => cmd_maxmin(&ctx, &dir).map(|_| ()),
        Command::Mpa => cmd_mpa(&ctx, &dir).map(|_| ()),
        Command::Verify => cmd_verify(&ctx, &dir).map(|_| ()),
        Command::Toy => cmd_toy(&ctx, &dir).map(|_| ()),
    };
    match result {
        Ok(()) => {
            info!(
                "{} finished; artifacts in {}",
                command.name(),
                ctx.output_dir.display()
            );
            println!(
                "{}",
                dir.path(&format!("{}.json", command.name())).display()
            );
            0
        }
        Err(e) => fail(&e, Some(&dir)),
    }
}

fn fail(e: &CliError, dir: Option<&OutputDir>) -> i32 {
    error!("{e}");
    eprintln!("error: {e}");
    if let Some(d) = dir {
        if let Err(w) = d.write_json("error.json", &e.report()) {
            eprintln!("error: {w}");
        }
    }
    e.exit_code()
}
