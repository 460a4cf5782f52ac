use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fblab_core::commands::{exit_code, run, Outcome};
use fblab_core::config::{parse_config_as, with_estimate, Command, FieldSource};
use fblab_core::estimates::EstimateId;
use fblab_core::report::write_atomic;
use fblab_core::{parallel, Error, Result};

/// Variable-exponent Fourier-Besov experiments on the periodic torus.
///
/// Exit codes: 0 pass, 1 verdict failure, 2 config or input error,
/// 3 numeric divergence.
#[derive(Parser)]
#[command(name = "fblab", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Fourier-Besov norm of a field.
    Norm(Common),
    /// Per-block norms and radial spectrum.
    Decompose(Common),
    /// Calibration/holdout check of one estimate.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Estimate id, e.g. bernstein-i, embedding, product-2.9.
        #[arg(long)]
        estimate: Option<String>,
    },
    /// Heat estimate sweep.
    Heat(Common),
    /// Small-data incompressible Navier-Stokes.
    SolveNs(Common),
    /// Small-data parabolic-elliptic Keller-Segel.
    SolveKs(Common),
    /// Smallness threshold calibration.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Field snapshot; overrides the config's [data] source.
    #[arg(long)]
    snapshot: Option<PathBuf>,
    /// Disable data parallelism.
    #[arg(long)]
    sequential: bool,
}

fn execute(cmd: Command, common: &Common, estimate: Option<&str>) -> Result<Outcome> {
    parallel::set_sequential(common.sequential);
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", common.config.display())]))?;
    let mut cfg = parse_config_as(&text, Some(cmd))?;
    if let Some(id) = estimate {
        let id = EstimateId::parse(id).ok_or_else(|| {
            Error::Config(vec![format!(
                "--estimate: unknown '{id}' (expected one of {})",
                EstimateId::ALL.map(|i| i.as_str()).join(", ")
            )])
        })?;
        cfg.estimate = Some(with_estimate(&cfg, id));
    }
    if let Some(path) = &common.snapshot {
        cfg.data.source = FieldSource::Snapshot { path: path.clone() };
    }
    run(&cfg)
}

fn write_outputs(out: &Path, outcome: &Outcome) -> Result<()> {
    for (name, bytes) in &outcome.files {
        write_atomic(&out.join(name), bytes)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common, estimate) = match &cli.command {
        Sub::Norm(c) => (Command::Norm, c, None),
        Sub::Decompose(c) => (Command::Decompose, c, None),
        Sub::Verify { common, estimate } => (Command::Verify, common, estimate.as_deref()),
        Sub::Heat(c) => (Command::Heat, c, None),
        Sub::SolveNs(c) => (Command::SolveNs, c, None),
        Sub::SolveKs(c) => (Command::SolveKs, c, None),
        Sub::Sweep(c) => (Command::Sweep, c, None),
    };
    let mut result = execute(cmd, common, estimate);
    if let Ok(outcome) = &result {
        if let Err(e) = write_outputs(&common.out, outcome) {
            result = Err(e);
        }
    }
    match &result {
        Ok(o) => {
            println!("{}", o.summary);
            for (name, _) in &o.files {
                println!("wrote {}", common.out.join(name).display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
