//! Command-line front end for the surface-code memory laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use surfmem::config::RunConfig;
use surfmem::runner::{run_oracle_checks, run_report, Pipeline};
use surfmem::Error;

#[derive(Parser)]
#[command(name = "surfmem", about = "Surface-code quantum-memory experiments: sample, decode, train, fit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override [run] seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override worker thread count (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Override [run] out directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate shot batches for every (rounds, bitstring) leg.
    Sample(Common),
    /// Train the recurrent decoder on freshly generated data.
    Train(Common),
    /// Decode sampled batches and write corrections + a summary table.
    Decode(Common),
    /// Fit the logical fidelity decay of a decode summary.
    Fit(Common),
    /// Produce fit CSVs and SVG plots; multiple configs give a suppression fit.
    Report {
        /// Configuration files (one per distance/decoder).
        #[arg(long, required = true)]
        config: Vec<PathBuf>,
        /// Combine artifacts even when digests disagree.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the detector error model in text form.
    DemDump(Common),
    /// Run the deterministic cross-validation oracles.
    OracleCheck {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> surfmem::Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    Ok(cfg)
}

fn set_threads(threads: usize) {
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

fn run() -> surfmem::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample(common) => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let paths = Pipeline::new(cfg).run_sample()?;
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Train(common) => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let (model_path, best) = Pipeline::new(cfg).run_train()?;
            println!("wrote {} (best validation loss {best:.6})", model_path.display());
        }
        Command::Decode(common) => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let pipeline = Pipeline::new(cfg);
            let points = pipeline.run_decode()?;
            println!("wrote {}", pipeline.summary_path().display());
            for p in &points {
                println!(
                    "rounds {:4}  F_L = {:.5} +- {:.5}  ({} shots)",
                    p.rounds, p.fidelity, p.stderr, p.shots
                );
            }
        }
        Command::Fit(common) => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let fit = Pipeline::new(cfg).run_fit()?;
            println!(
                "eps_L = {:.6e} +- {:.6e}   r0 = {:.3} (fit from round {})",
                fit.eps, fit.eps_err, fit.r0, fit.start
            );
        }
        Command::Report { config, force, seed, threads, out } => {
            set_threads(threads.unwrap_or(0));
            let mut configs = Vec::new();
            for path in &config {
                let mut cfg = RunConfig::load(path)?;
                if let Some(seed) = seed {
                    cfg.seed = seed;
                }
                if let Some(out) = &out {
                    cfg.out = out.clone();
                }
                configs.push(cfg);
            }
            for p in run_report(&configs, force)? {
                println!("wrote {}", p.display());
            }
        }
        Command::DemDump(common) => {
            let cfg = load_config(&common)?;
            set_threads(cfg.threads);
            let path = Pipeline::new(cfg).run_dem_dump()?;
            println!("wrote {}", path.display());
        }
        Command::OracleCheck { threads, .. } => {
            set_threads(threads.unwrap_or(0));
            let report = run_oracle_checks();
            for (line, ok) in &report.lines {
                println!("[{}] {}", if *ok { "PASS" } else { "FAIL" }, line);
            }
            if !report.passed() {
                return Err(Error::Numeric("oracle checks failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidInput(_) | Error::Format(_) | Error::Mismatch(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
