//! Command-line front end: one JSON job file in, one JSON report out.
//!
//! Exit codes: 0 all verdicts pass, 2 verdict failure, 3 input error,
//! 4 numerical non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kcontract::job::{run_job, JobFile, RunOverrides};

#[derive(Parser)]
#[command(name = "kcontract", version, about = "Verification jobs for contractive tuple models")]
struct Cli {
    /// Path to the JSON job file.
    #[arg(long)]
    job: PathBuf,

    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for corpus runs (default: all cores).
    #[arg(long)]
    threads: Option<usize>,

    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,

    /// Override the kernel horizon of built-in families.
    #[arg(long)]
    horizon: Option<usize>,
}

fn run(cli: &Cli) -> Result<i32, kcontract::Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| kcontract::Error::BadJob(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&cli.job)?;
    let job: JobFile = serde_json::from_str(&text)
        .map_err(|e| kcontract::Error::BadJob(format!("{}: {e}", cli.job.display())))?;
    let seed = match std::env::var("KCONTRACT_SEED") {
        Ok(s) => Some(s.parse::<u64>().map_err(|e| {
            kcontract::Error::BadJob(format!("KCONTRACT_SEED must be an integer: {e}"))
        })?),
        Err(_) => None,
    };
    let overrides = RunOverrides {
        tol_scale: cli.tol_scale,
        horizon: cli.horizon,
        seed,
    };
    let report = run_job(&job, &overrides)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &cli.out {
        Some(path) => std::fs::write(path, json.as_bytes())?,
        None => println!("{json}"),
    }
    Ok(if report.verdict { 0 } else { 2 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
