use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use kryrom_bench::experiments;
use kryrom_bench::{write_report, BenchError, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "kryrom", version, about = "Krylov reduced-order model benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order solve time per level
    FomTiming(Flags),
    /// Reduced rank, wall time and final-time gap against the full-order solve
    RomAccuracy(Flags),
    /// Error and rates against the manufactured solution
    Convergence(Flags),
    /// Eigenvalues of the Krylov Gram matrix and their decay bounds
    Decay(Flags),
    /// Full-order vs reduced solve for a source made of discrete eigenfunctions
    Exactness(Flags),
}

#[derive(Args)]
struct Flags {
    /// Key-value config file; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    degree: Option<String>,
    /// Inclusive level range `a..b`, or one level
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    /// Rank tolerance
    #[arg(long)]
    tol: Option<String>,
    /// Relative singular value cut on the data matrix
    #[arg(long)]
    tol_svd: Option<String>,
    /// `h`, `h^((k+1)/2)` or a fixed step
    #[arg(long)]
    dt_rule: Option<String>,
    /// adaptive, eig or isvd
    #[arg(long)]
    method: Option<String>,
    /// polynomial or manufactured
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    repeats: Option<String>,
    /// Write the mesh of every level as text
    #[arg(long)]
    mesh_dump: bool,
    /// Write `n, t_n, L2 norm` of the reduced trajectory per level
    #[arg(long)]
    trajectory: bool,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out: Vec<(&'static str, String)> = [
            ("dim", &self.dim),
            ("degree", &self.degree),
            ("levels", &self.levels),
            ("ell", &self.ell),
            ("tol_rank", &self.tol),
            ("tol_svd", &self.tol_svd),
            ("dt_rule", &self.dt_rule),
            ("method", &self.method),
            ("source", &self.source),
            ("repeats", &self.repeats),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if let Some(dir) = &self.out {
            out.push(("out", dir.display().to_string()));
        }
        if self.mesh_dump {
            out.push(("mesh_dump", "true".into()));
        }
        if self.trajectory {
            out.push(("trajectory", "true".into()));
        }
        out
    }
}

fn configure(experiment: Experiment, flags: &Flags) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = ExperimentConfig::load(experiment, flags.config.as_deref())?;
    for (key, value) in flags.overrides() {
        cfg.set(key, &value).map_err(|e| BenchError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
    }
    Ok(cfg)
}

fn execute(experiment: Experiment, flags: &Flags) -> Result<(), BenchError> {
    let cfg = configure(experiment, flags)?;
    let start = Instant::now();
    let report = experiments::run(&cfg)?;
    let files = write_report(&cfg, &report, start.elapsed().as_secs_f64())?;
    for t in &report.tables {
        println!("{}", t.header.join(","));
        for row in &t.rows {
            println!("{}", row.join(","));
        }
    }
    for f in files.iter().chain(&report.side_files) {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, flags) = match &cli.command {
        Command::FomTiming(f) => (Experiment::FomTiming, f),
        Command::RomAccuracy(f) => (Experiment::RomAccuracy, f),
        Command::Convergence(f) => (Experiment::Convergence, f),
        Command::Decay(f) => (Experiment::Decay, f),
        Command::Exactness(f) => (Experiment::Exactness, f),
    };
    match execute(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kryrom {experiment}: {} failed: {}", e.phase(), e.detail());
            ExitCode::from(if e.phase() == "config" { 2 } else { 1 })
        }
    }
}
