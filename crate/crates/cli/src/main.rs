use clap::Parser;
use htl_cli::{resolve, run, Failure, Overrides, StudyName};
use std::path::PathBuf;
use std::process::ExitCode;

/// Spectral kernel regression studies and adaptive hypothesis transfer.
#[derive(Debug, Parser)]
#[command(name = "htl", version)]
struct Args {
    /// Study to run: rates, adaptive-rates, transfer, phase, fit or selfcheck.
    /// Overrides the `study` field of the config file.
    study: Option<StudyName>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for CSV, SVG and the resolved config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Two-column x,y CSV for `fit`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Print the resolved configuration and exit without running.
    #[arg(long)]
    print_config: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), Failure> {
    let document =
        match &args.config {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("cannot read config {}: {e}", path.display()))
            })?),
            None => None,
        };
    let overrides = Overrides {
        study: args.study,
        seed: args.seed,
        threads: args.threads,
        out_dir: args.out.clone(),
        data: args.data.clone(),
    };
    let cfg = resolve(document.as_deref(), &overrides)?;
    if args.print_config {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let outcome = run(&cfg)?;
    for line in &outcome.report {
        println!("{line}");
    }
    for file in &outcome.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
