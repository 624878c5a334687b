//! End-to-end reduced solve: assemble, build the data matrix
//! `B = [b0 | b1 .. bm]`, generate a Krylov basis from it, project,
//! integrate the reduced system and lift back.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{assemble_load, assemble_operators, FemSpace};
use crate::error::{Error, Result};
use crate::isvd::{rank_cut, thin_svd, IsvdState};
use crate::krylov::{adaptive_basis, krylov_sequence, select_rank_energy, AdaptiveOptions, KrylovBasis, TolScale};
use crate::mesh::build_mesh;
use crate::rom::reduce::{lift, reduce, rom_initial, RomSystem};
use crate::rom::source::SeparableSource;
use crate::rom::time::{integrate, DenseOperators, DtRule, SparseOperators, TimeGrid};
use crate::spla::{a_norm, factorize, factorize_with, sym_eig, SolverKind, SparseSpd};

/// How the reduced basis is generated from the data matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisMethod {
    /// One data vector, grown adaptively until the Gram matrix degenerates.
    Adaptive,
    /// Block sequence of fixed length, rank from the eigenvalues of the
    /// full Gram matrix (energy criterion).
    BlockEig,
    /// Compressed source block, block sequence ingested column by column
    /// into an A-weighted incremental SVD.
    BlockIsvd,
}

impl fmt::Display for BasisMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisMethod::Adaptive => "adaptive",
            BasisMethod::BlockEig => "eig",
            BasisMethod::BlockIsvd => "isvd",
        })
    }
}

impl FromStr for BasisMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "adaptive" => Ok(BasisMethod::Adaptive),
            "eig" => Ok(BasisMethod::BlockEig),
            "isvd" => Ok(BasisMethod::BlockIsvd),
            other => {
                Err(Error::InvalidArgument(format!("unknown basis method '{other}' (expected adaptive, eig or isvd)")))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomOptions {
    pub method: BasisMethod,
    /// Krylov length (upper bound for the adaptive method).
    pub ell: usize,
    /// Rank tolerance: break threshold (adaptive), energy tolerance (eig)
    /// or relative truncation (isvd).
    pub tol_rank: f64,
    /// Relative cut on the singular values of the data matrix.
    pub tol_svd: f64,
    pub tol_scale: TolScale,
}

impl Default for RomOptions {
    fn default() -> Self {
        RomOptions {
            method: BasisMethod::Adaptive,
            ell: 10,
            tol_rank: 1e-14,
            tol_svd: 1e-14,
            tol_scale: TolScale::Absolute,
        }
    }
}

/// Mesh, space and assembled operators.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: FemSpace,
    pub mass: SparseSpd,
    pub stiff: SparseSpd,
    pub solver: SolverKind,
    pub assembly_seconds: f64,
}

impl Discretization {
    pub fn new(dim: usize, level: u32, degree: usize) -> Result<Discretization> {
        let start = Instant::now();
        let space = FemSpace::new(build_mesh(dim, level)?, degree)?;
        let (mass, stiff) = assemble_operators(&space);
        Ok(Discretization {
            space,
            mass,
            stiff,
            solver: SolverKind::for_mesh(dim, level),
            assembly_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.n()
    }

    /// Grid spacing `2^-level`.
    pub fn grid_spacing(&self) -> f64 {
        self.space.mesh().grid_spacing()
    }

    /// Load vector of the initial data (`(u0, phi_i)`), zero if absent.
    pub fn initial_load(&self, u0: Option<SpaceField<'_>>) -> DVector<f64> {
        match u0 {
            Some(g) => assemble_load(&self.space, g),
            None => DVector::zeros(self.n_dofs()),
        }
    }

    /// L2 projection `M^{-1} b0` of initial data onto the full space.
    pub fn project(&self, b0: &DVector<f64>) -> Result<DVector<f64>> {
        if b0.iter().all(|&v| v == 0.0) {
            return Ok(DVector::zeros(self.n_dofs()));
        }
        factorize(&self.mass)?.solve(b0)
    }

    /// L2 norm of a finite element function.
    pub fn l2_norm(&self, coeffs: &DVector<f64>) -> f64 {
        a_norm(&self.mass, coeffs).expect("coefficient length")
    }
}

/// Outcome of the basis phase.
#[derive(Debug, Clone)]
pub struct BasisOutcome {
    pub q: DMatrix<f64>,
    /// Number of data directions kept after compressing `B` (block methods).
    pub source_rank: usize,
    /// Largest basis dimension held during construction.
    pub peak_dim: usize,
    /// Linear solves with `A`.
    pub n_solves: usize,
    /// Spectrum used for the rank decision (eigenvalues of `K`, or squared
    /// singular values for the incremental SVD).
    pub spectrum: DVector<f64>,
    /// Full record of the adaptive method.
    pub krylov: Option<KrylovBasis>,
}

impl BasisOutcome {
    pub fn r(&self) -> usize {
        self.q.ncols()
    }

    fn empty(n: usize) -> BasisOutcome {
        BasisOutcome {
            q: DMatrix::zeros(n, 0),
            source_rank: 0,
            peak_dim: 0,
            n_solves: 0,
            spectrum: DVector::zeros(0),
            krylov: None,
        }
    }
}

fn nonzero_columns(b: &DMatrix<f64>) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> =
        b.column_iter().filter(|c| c.iter().any(|&v| v != 0.0)).map(|c| c.into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(b.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Builds the reduced basis from the data matrix `B` (columns `b0, b1..bm`).
pub fn build_basis(disc: &Discretization, data: &DMatrix<f64>, opts: &RomOptions) -> Result<BasisOutcome> {
    let n = disc.n_dofs();
    if data.nrows() != n {
        return Err(Error::mismatch("build_basis", n, data.nrows()));
    }
    if opts.ell == 0 {
        return Err(Error::InvalidArgument("ell must be at least 1".into()));
    }
    let seed = nonzero_columns(data);
    if seed.ncols() == 0 {
        return Ok(BasisOutcome::empty(n));
    }
    let fact = factorize_with(&disc.stiff, disc.solver)?;
    match opts.method {
        BasisMethod::Adaptive => {
            if seed.ncols() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "the adaptive basis takes a single data vector, got {}; use eig or isvd",
                    seed.ncols()
                )));
            }
            let b = seed.column(0).into_owned();
            let kb = adaptive_basis(
                &fact,
                &disc.mass,
                &disc.stiff,
                &b,
                &AdaptiveOptions { ell_max: opts.ell, tol: opts.tol_rank, scale: opts.tol_scale },
            )?;
            Ok(BasisOutcome {
                q: kb.q.clone(),
                source_rank: 1,
                peak_dim: kb.u.ncols(),
                n_solves: kb.u.ncols(),
                spectrum: kb.lambda.clone(),
                krylov: Some(kb),
            })
        }
        BasisMethod::BlockEig => {
            let u = krylov_sequence(&fact, &disc.mass, &seed, opts.ell)?;
            let k = u.transpose() * disc.stiff.mul_mat(&u);
            let eig = sym_eig(&k)?;
            let positive = eig.values.iter().take_while(|&&l| l > 0.0).count();
            let r = select_rank_energy(eig.values.as_slice(), opts.tol_rank)?.min(positive);
            let scale = DMatrix::from_diagonal(&eig.values.rows(0, r).map(|l| 1.0 / l.sqrt()));
            let q = &u * eig.vectors.columns(0, r) * scale;
            Ok(BasisOutcome {
                q,
                source_rank: seed.ncols(),
                peak_dim: u.ncols(),
                n_solves: u.ncols(),
                spectrum: eig.values,
                krylov: None,
            })
        }
        BasisMethod::BlockIsvd => {
            let svd = thin_svd(data)?;
            let p = rank_cut(&svd.s, opts.tol_svd);
            let qp = svd.u.columns(0, p).into_owned();
            let mut state = IsvdState::new(opts.tol_rank);
            let mut block = fact.solve_many(&qp)?;
            let mut n_solves = p;
            let mut peak = 0;
            for i in 1..=opts.ell {
                if i > 1 {
                    let reps = representatives(&block, &state, &disc.stiff, opts.tol_rank);
                    if reps.ncols() == 0 {
                        break;
                    }
                    block = fact.solve_many(&disc.mass.mul_mat(&reps))?;
                    n_solves += reps.ncols();
                }
                for c in block.column_iter() {
                    state.update(&c.into_owned(), &disc.stiff)?;
                    peak = peak.max(state.rank());
                }
            }
            Ok(BasisOutcome {
                q: state.q().clone(),
                source_rank: p,
                peak_dim: peak,
                n_solves,
                spectrum: state.sigma().map(|s| s * s),
                krylov: None,
            })
        }
    }
}

/// Directions of `block` as seen through the current incremental basis:
/// `block ~ Q C`, `C = W S Z^T`, representatives `Q W_k S_k` for the
/// singular values above `tol * s_1`.
fn representatives(block: &DMatrix<f64>, state: &IsvdState, stiff: &SparseSpd, tol: f64) -> DMatrix<f64> {
    let q = state.q();
    if q.ncols() == 0 {
        return DMatrix::zeros(block.nrows(), 0);
    }
    let c = q.transpose() * stiff.mul_mat(block);
    let svd = c.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s1 = svd.singular_values[order[0]];
    let keep: Vec<usize> = order.into_iter().filter(|&j| s1 > 0.0 && svd.singular_values[j] > tol * s1).collect();
    let mut w = DMatrix::zeros(q.ncols(), keep.len());
    for (k, &j) in keep.iter().enumerate() {
        w.set_column(k, &(u.column(j) * svd.singular_values[j]));
    }
    q * w
}

/// Full-order solve; `observe(n, t_n, u_n)`.
pub fn solve_fom(
    disc: &Discretization,
    source: &SeparableSource,
    alpha0: &DVector<f64>,
    grid: &TimeGrid,
    observe: &mut dyn FnMut(usize, f64, &DVector<f64>),
) -> Result<DVector<f64>> {
    let ops = SparseOperators { mass: &disc.mass, stiff: &disc.stiff, solver: disc.solver };
    integrate(&ops, &mut |t| source.rhs(t), alpha0, grid, observe)
}

/// Reduced solve with the source already projected (`source.loads() = Q^T B`).
pub fn solve_reduced(
    rom: &RomSystem,
    reduced_source: &SeparableSource,
    alpha0: &DVector<f64>,
    grid: &TimeGrid,
    observe: &mut dyn FnMut(usize, f64, &DVector<f64>),
) -> Result<DVector<f64>> {
    if rom.dim() == 0 {
        let empty = DVector::zeros(0);
        for n in 0..=grid.n_steps {
            observe(n, grid.t(n), &empty);
        }
        return Ok(empty);
    }
    let ops = DenseOperators { mass: &rom.mass, stiff: &rom.stiff };
    integrate(&ops, &mut |t| reduced_source.rhs(t), alpha0, grid, observe)
}

/// Shareable scalar function of position.
pub type SpaceField<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Source description for [`solve_rom_pipeline`].
#[derive(Clone, Copy)]
pub enum SourceSpec<'a> {
    None,
    /// Time-independent `f(x)`.
    Stationary(SpaceField<'a>),
    /// `f(t, x)` interpolated in time at `m` Chebyshev nodes.
    Chebyshev {
        f: &'a (dyn Fn(f64, &[f64]) -> f64 + Sync),
        m: usize,
    },
}

#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub source: SourceSpec<'a>,
    pub initial: Option<SpaceField<'a>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub dim: usize,
    pub level: u32,
    pub degree: usize,
    pub t_final: f64,
    pub dt_rule: DtRule,
    pub rom: RomOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dim: 2,
            level: 4,
            degree: 1,
            t_final: 1.0,
            dt_rule: DtRule::GridSpacing,
            rom: RomOptions::default(),
        }
    }
}

/// Wall time of each pipeline phase, seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub assembly: f64,
    pub source: f64,
    pub basis: f64,
    pub reduce: f64,
    pub integrate: f64,
    pub lift: f64,
}

impl PhaseTimings {
    /// Everything after assembly: what a reduced solve costs on top of the
    /// shared discretization.
    pub fn online_total(&self) -> f64 {
        self.basis + self.reduce + self.integrate + self.lift
    }

    pub fn total(&self) -> f64 {
        self.assembly + self.source + self.online_total()
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub r: usize,
    pub source_rank: usize,
    pub peak_basis_dim: usize,
    pub n_solves: usize,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub disc: Discretization,
    pub grid: TimeGrid,
    pub source: SeparableSource,
    pub initial_load: DVector<f64>,
    pub basis: BasisOutcome,
    pub rom: RomSystem,
    /// Reduced coefficients `alpha_n`, `n = 0..=N_T`.
    pub trajectory: Vec<DVector<f64>>,
    /// Lifted final state (FEM coefficients).
    pub final_state: DVector<f64>,
    pub diagnostics: Diagnostics,
}

impl PipelineOutput {
    /// `(n, t_n, ||u_r^n||_L2)` using `M_r`, without lifting.
    pub fn l2_history(&self) -> Vec<(usize, f64, f64)> {
        self.trajectory
            .iter()
            .enumerate()
            .map(|(n, a)| {
                let norm = if a.is_empty() { 0.0 } else { a.dot(&(&self.rom.mass * a)).max(0.0).sqrt() };
                (n, self.grid.t(n), norm)
            })
            .collect()
    }

    pub fn lift_step(&self, n: usize) -> Result<DVector<f64>> {
        lift(&self.rom.q, &self.trajectory[n])
    }
}

/// Writes `n,t_n,l2_norm` rows.
pub fn write_trajectory_csv<W: std::io::Write>(rows: &[(usize, f64, f64)], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,t_n,l2_norm")?;
    for (n, t, v) in rows {
        writeln!(out, "{n},{t:e},{v:e}")?;
    }
    Ok(())
}

/// Assembles the source and initial load for `problem` on `disc`.
pub fn build_problem_data(
    disc: &Discretization,
    problem: &Problem<'_>,
    t_final: f64,
) -> Result<(SeparableSource, DVector<f64>)> {
    let source = match problem.source {
        SourceSpec::None => SeparableSource::zero(disc.n_dofs()),
        SourceSpec::Stationary(f) => SeparableSource::stationary(assemble_load(&disc.space, f)),
        SourceSpec::Chebyshev { f, m } => SeparableSource::chebyshev(&disc.space, f, m, t_final)?,
    };
    Ok((source, disc.initial_load(problem.initial)))
}

/// `[b0 | b1 .. bm]`.
pub fn data_matrix(source: &SeparableSource, b0: &DVector<f64>) -> DMatrix<f64> {
    let n = b0.len();
    let mut b = DMatrix::zeros(n, source.n_terms() + 1);
    b.set_column(0, b0);
    if source.n_terms() > 0 {
        b.columns_mut(1, source.n_terms()).copy_from(source.loads());
    }
    b
}

/// Reduced solve on an existing discretization with prepared data.
pub fn run_reduced(
    disc: Discretization,
    source: SeparableSource,
    b0: DVector<f64>,
    grid: TimeGrid,
    opts: &RomOptions,
    mut timings: PhaseTimings,
) -> Result<PipelineOutput> {
    let start = Instant::now();
    let basis = build_basis(&disc, &data_matrix(&source, &b0), opts).map_err(|e| e.in_phase("basis"))?;
    timings.basis = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let rom = reduce(&disc.mass, &disc.stiff, &basis.q, source.loads()).map_err(|e| e.in_phase("reduce"))?;
    let reduced_source = source.with_loads(rom.loads.clone()).map_err(|e| e.in_phase("reduce"))?;
    let alpha0 = if rom.dim() == 0 {
        DVector::zeros(0)
    } else {
        rom_initial(&rom.mass, &rom.q, &b0).map_err(|e| e.in_phase("initial data"))?
    };
    timings.reduce = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let mut trajectory = Vec::with_capacity(grid.n_steps + 1);
    solve_reduced(&rom, &reduced_source, &alpha0, &grid, &mut |_, _, a| trajectory.push(a.clone()))
        .map_err(|e| e.in_phase("integrate"))?;
    timings.integrate = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let last = trajectory.last().cloned().unwrap_or_else(|| DVector::zeros(0));
    let final_state = lift(&rom.q, &last).map_err(|e| e.in_phase("lift"))?;
    timings.lift = start.elapsed().as_secs_f64();

    let diagnostics = Diagnostics {
        r: basis.r(),
        source_rank: basis.source_rank,
        peak_basis_dim: basis.peak_dim,
        n_solves: basis.n_solves,
        timings,
    };
    Ok(PipelineOutput { disc, grid, source, initial_load: b0, basis, rom, trajectory, final_state, diagnostics })
}

/// Assemble, build the basis, reduce, integrate and lift.
pub fn solve_rom_pipeline(config: &PipelineConfig, problem: &Problem<'_>) -> Result<PipelineOutput> {
    let disc = Discretization::new(config.dim, config.level, config.degree).map_err(|e| e.in_phase("assembly"))?;
    let mut timings = PhaseTimings { assembly: disc.assembly_seconds, ..Default::default() };
    let grid = TimeGrid::from_rule(config.dt_rule, config.t_final, disc.grid_spacing(), config.degree)
        .map_err(|e| e.in_phase("time grid"))?;
    let start = Instant::now();
    let (source, b0) = build_problem_data(&disc, problem, config.t_final).map_err(|e| e.in_phase("source"))?;
    timings.source = start.elapsed().as_secs_f64();
    run_reduced(disc, source, b0, grid, &config.rom, timings)
}
