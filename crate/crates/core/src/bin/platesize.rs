use clap::{Parser, ValueEnum};
use platesize::config::ExperimentConfig;
use platesize::experiment::{run_command, Command};
use platesize::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Size estimates of inclusions in anisotropic plates: hypothesis audits,
/// finite-element solves and empirical constant calibration.
#[derive(Parser, Debug)]
#[command(name = "platesize", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the target element size of every experiment.
    #[arg(long, value_name = "FLOAT")]
    mesh_h: Option<f64>,
    /// Suppresses the JSON summary on standard output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    CheckTensor,
    Solve,
    Bounds,
    Scan,
    Calibrate,
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::CheckTensor => Command::CheckTensor,
            Cmd::Solve => Command::Solve,
            Cmd::Bounds => Command::Bounds,
            Cmd::Scan => Command::Scan,
            Cmd::Calibrate => Command::Calibrate,
            Cmd::All => Command::All,
        }
    }
}

fn load(cli: &Cli) -> platesize::Result<ExperimentConfig> {
    let src = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Config(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = ExperimentConfig::from_json(&src).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", cli.config.display())),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(h) = cli.mesh_h {
        cfg.mesh.h = h;
        for o in &mut cfg.experiments {
            if let Some(mesh) = o.get_mut("mesh").and_then(|m| m.as_object_mut()) {
                mesh.remove("h");
            }
        }
        cfg.validate()?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| run_command(cli.command.into(), &cfg, &cli.out));
    match result {
        Ok(summary) => {
            if !cli.quiet {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).expect("summary serialises")
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("platesize: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
