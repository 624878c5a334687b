//! The five benchmark experiments. Each returns typed rows for programmatic
//! checks together with a [`Report`] for the CSV/JSON writers.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde_json::json;

use kryrom::assembly::{assemble_load, discrete_eigenpairs, error_norms};
use kryrom::krylov::{decay_report, gram_spectrum, hankel_defect, krylov_sequence, DecayReport};
use kryrom::rom::pipeline::{run_reduced, write_trajectory_csv, PhaseTimings};
use kryrom::rom::{solve_fom, Discretization, PipelineOutput, RomOptions, SeparableSource, TimeGrid};
use kryrom::spla::factorize_with;

use crate::config::{Experiment, ExperimentConfig, SourceKind};
use crate::error::BenchError;
use crate::problems::{polynomial_source, Manufactured};
use crate::report::{opt_rate, sci, secs, LevelInfo, Report, Table};

type Result<T> = std::result::Result<T, BenchError>;

/// Largest ratio `lambda_{i+1} / lambda_i` allowed for `i >= 2` in the decay check.
pub const DECAY_RATIO_LIMIT: f64 = 0.2;

/// Errors below this are treated as noise when forming rates.
pub const RATE_FLOOR: f64 = 1e-13;

/// Discretization plus assembled data for one level.
struct Prepared {
    disc: Discretization,
    source: SeparableSource,
    b0: DVector<f64>,
    grid: TimeGrid,
    source_seconds: f64,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig, level: u32) -> Result<Prepared> {
        let disc = Discretization::new(cfg.dim, level, cfg.degree).map_err(|e| e.in_phase("assembly"))?;
        let grid = TimeGrid::from_rule(cfg.dt_rule, cfg.t_final, disc.grid_spacing(), cfg.degree)
            .map_err(|e| e.in_phase("time grid"))?;
        let start = Instant::now();
        let source = match cfg.source {
            SourceKind::Polynomial => SeparableSource::stationary(assemble_load(&disc.space, &polynomial_source)),
            SourceKind::Manufactured => {
                let m = Manufactured { dim: cfg.dim };
                SeparableSource::chebyshev(&disc.space, &|t, x| m.source(t, x), cfg.nodes, cfg.t_final)
                    .map_err(|e| e.in_phase("source"))?
            }
        };
        let source_seconds = start.elapsed().as_secs_f64();
        // both built-in problems start from rest
        let b0 = DVector::zeros(disc.n_dofs());
        Ok(Prepared { disc, source, b0, grid, source_seconds })
    }

    fn info(&self, level: u32) -> LevelInfo {
        LevelInfo {
            level,
            grid_spacing: self.disc.grid_spacing(),
            mesh_size: self.disc.space.mesh().mesh_size(),
            n_dofs: self.disc.n_dofs(),
            n_steps: self.grid.n_steps,
        }
    }

    /// Full-order solve; returns the final state and the fastest solve time.
    fn fom(&self, repeats: usize, observe: &mut dyn FnMut(usize, f64, &DVector<f64>)) -> Result<(DVector<f64>, f64)> {
        let mut best = f64::INFINITY;
        let mut last = None;
        for rep in 0..repeats.max(1) {
            let start = Instant::now();
            let alpha0 = self.disc.project(&self.b0).map_err(|e| e.in_phase("initial data"))?;
            let mut noop = |_: usize, _: f64, _: &DVector<f64>| {};
            let obs: &mut dyn FnMut(usize, f64, &DVector<f64>) = if rep == 0 { &mut *observe } else { &mut noop };
            let u =
                solve_fom(&self.disc, &self.source, &alpha0, &self.grid, obs).map_err(|e| e.in_phase("fom solve"))?;
            best = best.min(start.elapsed().as_secs_f64());
            last = Some(u);
        }
        Ok((last.expect("at least one repeat"), best))
    }

    /// Reduced pipeline on this level; returns the output and the fastest
    /// basis-to-lift time.
    fn rom(&self, opts: &RomOptions, repeats: usize) -> Result<(PipelineOutput, f64)> {
        let mut best = f64::INFINITY;
        let mut last = None;
        for _ in 0..repeats.max(1) {
            let out = run_reduced(
                self.disc.clone(),
                self.source.clone(),
                self.b0.clone(),
                self.grid,
                opts,
                PhaseTimings {
                    assembly: self.disc.assembly_seconds,
                    source: self.source_seconds,
                    ..Default::default()
                },
            )?;
            best = best.min(out.diagnostics.timings.online_total());
            last = Some(out);
        }
        Ok((last.expect("at least one repeat"), best))
    }
}

fn rom_options(cfg: &ExperimentConfig) -> RomOptions {
    RomOptions {
        method: cfg.method,
        ell: cfg.ell,
        tol_rank: cfg.tol_rank,
        tol_svd: cfg.tol_svd,
        tol_scale: cfg.tol_scale,
    }
}

fn ensure_out(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out).map_err(BenchError::io(&cfg.out))
}

fn dump_mesh(cfg: &ExperimentConfig, disc: &Discretization, level: u32, report: &mut Report) -> Result<()> {
    if !cfg.mesh_dump {
        return Ok(());
    }
    ensure_out(cfg)?;
    let path = cfg.out.join(format!("mesh_level{level}.txt"));
    let file = std::fs::File::create(&path).map_err(BenchError::io(&path))?;
    disc.space.mesh().write_text(std::io::BufWriter::new(file)).map_err(BenchError::io(&path))?;
    report.side_files.push(path);
    Ok(())
}

fn dump_trajectory(cfg: &ExperimentConfig, out: &PipelineOutput, level: u32, report: &mut Report) -> Result<()> {
    if !cfg.trajectory {
        return Ok(());
    }
    ensure_out(cfg)?;
    let path: PathBuf = cfg.out.join(format!("trajectory_level{level}.csv"));
    let file = std::fs::File::create(&path).map_err(BenchError::io(&path))?;
    write_trajectory_csv(&out.l2_history(), std::io::BufWriter::new(file)).map_err(BenchError::io(&path))?;
    report.side_files.push(path);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FomTimingRow {
    pub level: u32,
    pub grid_spacing: f64,
    pub n_dofs: usize,
    pub n_steps: usize,
    /// Source assembly plus time stepping.
    pub fom_seconds: f64,
    /// Including mesh and operator assembly.
    pub total_seconds: f64,
}

pub fn run_fom_timing(cfg: &ExperimentConfig) -> Result<(Vec<FomTimingRow>, Report)> {
    let mut report = Report::default();
    let mut table =
        Table::new("fom-timing.csv", vec!["level", "h/sqrt2", "n_dofs", "n_steps", "fom_seconds", "total_seconds"]);
    let mut rows = Vec::new();
    for level in cfg.levels.iter() {
        let prep = Prepared::new(cfg, level)?;
        dump_mesh(cfg, &prep.disc, level, &mut report)?;
        let (_, solve) = prep.fom(cfg.repeats, &mut |_, _, _| {})?;
        let row = FomTimingRow {
            level,
            grid_spacing: prep.disc.grid_spacing(),
            n_dofs: prep.disc.n_dofs(),
            n_steps: prep.grid.n_steps,
            fom_seconds: prep.source_seconds + solve,
            total_seconds: prep.disc.assembly_seconds + prep.source_seconds + solve,
        };
        table.push(vec![
            level.to_string(),
            sci(row.grid_spacing),
            row.n_dofs.to_string(),
            row.n_steps.to_string(),
            secs(row.fom_seconds),
            secs(row.total_seconds),
        ]);
        report.levels.push(prep.info(level));
        rows.push(row);
    }
    report.tables.push(table);
    Ok((rows, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub level: u32,
    pub grid_spacing: f64,
    pub n_dofs: usize,
    pub r: usize,
    /// Source assembly, basis, projection, reduced stepping and lift.
    pub rom_seconds: f64,
    /// Source assembly and full-order stepping.
    pub fom_seconds: f64,
    /// Final-time `||u_h - u_r||_L2`.
    pub l2_gap: f64,
    pub fom_l2: f64,
}

impl AccuracyRow {
    pub fn time_ratio(&self) -> f64 {
        self.rom_seconds / self.fom_seconds
    }
}

pub fn run_rom_accuracy(cfg: &ExperimentConfig) -> Result<(Vec<AccuracyRow>, Report)> {
    let opts = rom_options(cfg);
    let mut report = Report::default();
    let mut table = Table::new(
        "rom-accuracy.csv",
        vec!["level", "h/sqrt2", "n_dofs", "r", "rom_seconds", "fom_seconds", "time_ratio", "l2_gap"],
    );
    let mut rows = Vec::new();
    let mut phases = Vec::new();
    for level in cfg.levels.iter() {
        let prep = Prepared::new(cfg, level)?;
        dump_mesh(cfg, &prep.disc, level, &mut report)?;
        let (fom, fom_solve) = prep.fom(cfg.repeats, &mut |_, _, _| {})?;
        let (out, rom_online) = prep.rom(&opts, cfg.repeats)?;
        dump_trajectory(cfg, &out, level, &mut report)?;
        let row = AccuracyRow {
            level,
            grid_spacing: prep.disc.grid_spacing(),
            n_dofs: prep.disc.n_dofs(),
            r: out.diagnostics.r,
            rom_seconds: prep.source_seconds + rom_online,
            fom_seconds: prep.source_seconds + fom_solve,
            l2_gap: prep.disc.l2_norm(&(&fom - &out.final_state)),
            fom_l2: prep.disc.l2_norm(&fom),
        };
        table.push(vec![
            level.to_string(),
            sci(row.grid_spacing),
            row.n_dofs.to_string(),
            row.r.to_string(),
            secs(row.rom_seconds),
            secs(row.fom_seconds),
            secs(row.time_ratio()),
            sci(row.l2_gap),
        ]);
        let t = out.diagnostics.timings;
        phases.push(json!({
            "level": level,
            "assembly": t.assembly,
            "source": t.source,
            "basis": t.basis,
            "reduce": t.reduce,
            "integrate": t.integrate,
            "lift": t.lift,
            "peak_basis_dim": out.diagnostics.peak_basis_dim,
            "linear_solves": out.diagnostics.n_solves,
        }));
        report.levels.push(prep.info(level));
        rows.push(row);
    }
    report.timings.insert("rom_phases".into(), json!(phases));
    report.summary.insert("max_l2_gap".into(), json!(rows.iter().map(|r| r.l2_gap).fold(0.0, f64::max)));
    report.summary.insert("ranks".into(), json!(rows.iter().map(|r| r.r).collect::<Vec<_>>()));
    report.tables.push(table);
    Ok((rows, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub grid_spacing: f64,
    pub n_dofs: usize,
    pub n_steps: usize,
    pub r: usize,
    pub l2_error: f64,
    pub l2_rate: Option<f64>,
    pub h1_error: f64,
    pub h1_rate: Option<f64>,
    pub wall_seconds: f64,
}

/// `log2(e_prev / e)` when both errors are above the noise floor.
pub fn rate(prev: f64, cur: f64) -> Option<f64> {
    (prev > RATE_FLOOR && cur > RATE_FLOOR).then(|| (prev / cur).log2())
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<(Vec<ConvergenceRow>, Report)> {
    if cfg.source != SourceKind::Manufactured {
        return Err(BenchError::Config("convergence needs source = manufactured (exact solution required)".into()));
    }
    let opts = rom_options(cfg);
    let exact = Manufactured { dim: cfg.dim };
    let mut report = Report::default();
    let mut table = Table::new(
        "convergence.csv",
        vec![
            "level",
            "h/sqrt2",
            "n_dofs",
            "n_steps",
            "r",
            "l2_error",
            "l2_rate",
            "h1_error",
            "h1_rate",
            "wall_seconds",
        ],
    );
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for level in cfg.levels.iter() {
        let prep = Prepared::new(cfg, level)?;
        dump_mesh(cfg, &prep.disc, level, &mut report)?;
        let (out, online) = prep.rom(&opts, cfg.repeats)?;
        dump_trajectory(cfg, &out, level, &mut report)?;
        let t = cfg.t_final;
        let (l2, h1) = error_norms(&prep.disc.space, &out.final_state, &|x| exact.u(t, x), &|x| exact.grad(t, x))
            .map_err(|e| e.in_phase("error norms"))?;
        let prev = rows.last();
        let row = ConvergenceRow {
            level,
            grid_spacing: prep.disc.grid_spacing(),
            n_dofs: prep.disc.n_dofs(),
            n_steps: prep.grid.n_steps,
            r: out.diagnostics.r,
            l2_error: l2,
            l2_rate: prev.and_then(|p| rate(p.l2_error, l2)),
            h1_error: h1,
            h1_rate: prev.and_then(|p| rate(p.h1_error, h1)),
            wall_seconds: prep.source_seconds + online,
        };
        table.push(vec![
            level.to_string(),
            sci(row.grid_spacing),
            row.n_dofs.to_string(),
            row.n_steps.to_string(),
            row.r.to_string(),
            sci(row.l2_error),
            opt_rate(row.l2_rate),
            sci(row.h1_error),
            opt_rate(row.h1_rate),
            secs(row.wall_seconds),
        ]);
        report.levels.push(prep.info(level));
        rows.push(row);
    }
    report.summary.insert("l2_rates".into(), json!(rows.iter().filter_map(|r| r.l2_rate).collect::<Vec<_>>()));
    report.summary.insert("h1_rates".into(), json!(rows.iter().filter_map(|r| r.h1_rate).collect::<Vec<_>>()));
    report.tables.push(table);
    Ok((rows, report))
}

#[derive(Debug, Clone)]
pub struct DecayOutcome {
    pub level: u32,
    pub report: DecayReport,
    /// `max |K_ij - K_(i-1)(j+1)|`.
    pub hankel_defect: f64,
    pub k00: f64,
}

impl DecayOutcome {
    pub fn all_positive(&self) -> bool {
        self.report.records.iter().all(|r| r.eigenvalue > 0.0)
    }

    /// `lambda_{i+1} / lambda_i <= limit` for every `i >= 2`.
    pub fn ratios_within(&self, limit: f64) -> bool {
        self.report.records.iter().filter(|r| r.index >= 3).all(|r| r.ratio.is_some_and(|q| q <= limit))
    }
}

pub fn run_decay(cfg: &ExperimentConfig) -> Result<(Vec<DecayOutcome>, Report)> {
    let mut report = Report::default();
    let mut outcomes = Vec::new();
    for level in cfg.levels.iter() {
        let prep = Prepared::new(cfg, level)?;
        dump_mesh(cfg, &prep.disc, level, &mut report)?;
        let disc = &prep.disc;
        let fact = factorize_with(&disc.stiff, disc.solver).map_err(|e| e.in_phase("factorization"))?;
        let seed = DMatrix::from_columns(&[prep.source.rhs(0.0)]);
        let u = krylov_sequence(&fact, &disc.mass, &seed, cfg.ell).map_err(|e| e.in_phase("krylov"))?;
        let k = u.transpose() * disc.stiff.mul_mat(&u);
        let (spec, _) = gram_spectrum(&u, &disc.stiff).map_err(|e| e.in_phase("spectrum"))?;
        let decay = decay_report(spec.values.as_slice());
        let file = if cfg.levels.len() == 1 { "decay.csv".to_string() } else { format!("decay_level{level}.csv") };
        let mut table = Table::new(file, vec!["index", "eigenvalue", "theorem_bound", "ratio"]);
        for r in &decay.records {
            table.push(vec![
                r.index.to_string(),
                sci(r.eigenvalue),
                r.theorem_bound.map(sci).unwrap_or_default(),
                r.ratio.map(sci).unwrap_or_default(),
            ]);
        }
        report.tables.push(table);
        let outcome = DecayOutcome { level, report: decay, hankel_defect: hankel_defect(&k), k00: k[(0, 0)] };
        report.summary.insert(
            format!("level{level}"),
            json!({
                "all_positive": outcome.all_positive(),
                "ratios_within_limit": outcome.ratios_within(DECAY_RATIO_LIMIT),
                "bounds_pass": outcome.report.all_pass(),
                "hankel_defect_relative": outcome.hankel_defect / outcome.k00,
            }),
        );
        report.levels.push(prep.info(level));
        outcomes.push(outcome);
    }
    Ok((outcomes, report))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessRow {
    pub level: u32,
    pub n_dofs: usize,
    pub r: usize,
    /// Eigenvalues of the modes in the source.
    pub eigenvalues: Vec<f64>,
    /// `max_n ||u_h^n - u_r^n||_L2`.
    pub max_gap: f64,
    /// `max_n ||u_h^n||_L2`.
    pub max_norm: f64,
}

impl ExactnessRow {
    pub fn relative_gap(&self) -> f64 {
        self.max_gap / self.max_norm
    }
}

/// Source spanned by a few discrete eigenfunctions; FOM and ROM should agree
/// to round-off at every step.
pub fn run_exactness(cfg: &ExperimentConfig) -> Result<(Vec<ExactnessRow>, Report)> {
    let opts = rom_options(cfg);
    let mut report = Report::default();
    let mut table =
        Table::new("exactness.csv", vec!["level", "n_dofs", "modes", "r", "max_gap", "max_fom_l2", "relative_gap"]);
    let mut rows = Vec::new();
    for level in cfg.levels.iter() {
        let mut prep = Prepared::new(cfg, level)?;
        dump_mesh(cfg, &prep.disc, level, &mut report)?;
        let count = cfg.modes.iter().max().expect("modes validated non-empty") + 1;
        let pairs = discrete_eigenpairs(&prep.disc.mass, &prep.disc.stiff, count, cfg.dense_cap)
            .map_err(|e| e.in_phase("eigenpairs"))?;
        let mut f = DVector::zeros(prep.disc.n_dofs());
        for (j, &mode) in cfg.modes.iter().enumerate() {
            let c = if j % 2 == 0 { 1.0 } else { -0.5 } * (1.0 + j as f64);
            f += &pairs[mode].1 * c;
        }
        prep.source = SeparableSource::stationary(prep.disc.mass.mul_vec(&f));
        let (out, _) = prep.rom(&opts, 1)?;
        dump_trajectory(cfg, &out, level, &mut report)?;
        let (mut max_gap, mut max_norm) = (0.0f64, 0.0f64);
        let mut lift_err = None;
        prep.fom(1, &mut |n, _, u| match out.lift_step(n) {
            Ok(ur) => {
                max_gap = max_gap.max(prep.disc.l2_norm(&(u - ur)));
                max_norm = max_norm.max(prep.disc.l2_norm(u));
            }
            Err(e) => lift_err = Some(e),
        })?;
        if let Some(e) = lift_err {
            return Err(e.in_phase("lift").into());
        }
        let row = ExactnessRow {
            level,
            n_dofs: prep.disc.n_dofs(),
            r: out.diagnostics.r,
            eigenvalues: cfg.modes.iter().map(|&m| pairs[m].0).collect(),
            max_gap,
            max_norm,
        };
        let modes: Vec<String> = cfg.modes.iter().map(|m| m.to_string()).collect();
        table.push(vec![
            level.to_string(),
            row.n_dofs.to_string(),
            modes.join(" "),
            row.r.to_string(),
            sci(row.max_gap),
            sci(row.max_norm),
            sci(row.relative_gap()),
        ]);
        report.summary.insert(format!("level{level}_eigenvalues"), json!(row.eigenvalues));
        report.levels.push(prep.info(level));
        rows.push(row);
    }
    report.tables.push(table);
    Ok((rows, report))
}

/// Runs `cfg.experiment` and returns its report.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    Ok(match cfg.experiment {
        Experiment::FomTiming => run_fom_timing(cfg)?.1,
        Experiment::RomAccuracy => run_rom_accuracy(cfg)?.1,
        Experiment::Convergence => run_convergence(cfg)?.1,
        Experiment::Decay => run_decay(cfg)?.1,
        Experiment::Exactness => run_exactness(cfg)?.1,
    })
}
