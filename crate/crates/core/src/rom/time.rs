//! Uniform time grids and the backward Euler + BDF2 integrator shared by the
//! full and reduced models.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spla::{factorize_with, DenseSpd, SolverKind, SparseSpd, SpdFactorization};

/// Rule tying the time step to the grid spacing `h = 2^-level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    /// `dt = h`.
    GridSpacing,
    /// `dt = h^((k+1)/2)` for polynomial degree `k`, balancing the spatial
    /// and BDF2 errors in L2.
    BalancedOrder,
    /// A fixed step, rounded down so that it divides `T`.
    Fixed(f64),
}

impl DtRule {
    pub fn target_dt(&self, grid_spacing: f64, degree: usize) -> f64 {
        match *self {
            DtRule::GridSpacing => grid_spacing,
            DtRule::BalancedOrder => grid_spacing.powf((degree as f64 + 1.0) / 2.0),
            DtRule::Fixed(dt) => dt,
        }
    }
}

impl fmt::Display for DtRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtRule::GridSpacing => write!(f, "h"),
            DtRule::BalancedOrder => write!(f, "h^((k+1)/2)"),
            DtRule::Fixed(dt) => write!(f, "{dt}"),
        }
    }
}

impl FromStr for DtRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "h" => Ok(DtRule::GridSpacing),
            "h^((k+1)/2)" | "h^(k+1)/2" | "balanced" => Ok(DtRule::BalancedOrder),
            other => match other.parse::<f64>() {
                Ok(dt) if dt > 0.0 => Ok(DtRule::Fixed(dt)),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown time-step rule '{other}' (expected h, h^((k+1)/2), balanced or a positive number)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub n_steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<TimeGrid> {
        if !(t_final > 0.0) {
            return Err(Error::InvalidArgument(format!("final time {t_final} must be positive")));
        }
        if n_steps < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 time steps, got {n_steps}")));
        }
        Ok(TimeGrid { t_final, n_steps, dt: t_final / n_steps as f64 })
    }

    /// Smallest number of uniform steps whose size does not exceed `dt`.
    pub fn with_max_step(t_final: f64, dt: f64) -> Result<TimeGrid> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        let ratio = t_final / dt;
        // absorb rounding in ratios that are integers in exact arithmetic
        let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio { ratio.round() } else { ratio.ceil() };
        TimeGrid::new(t_final, (n as usize).max(2))
    }

    pub fn from_rule(rule: DtRule, t_final: f64, grid_spacing: f64, degree: usize) -> Result<TimeGrid> {
        TimeGrid::with_max_step(t_final, rule.target_dt(grid_spacing, degree))
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.t_final
        } else {
            n as f64 * self.dt
        }
    }
}

/// A mass/stiffness pair the integrator can step with.
pub trait StepOperators {
    type Solver;

    fn n(&self) -> usize;
    fn apply_mass(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Factors `c M + A`.
    fn factor(&self, c: f64) -> Result<Self::Solver>;
    fn solve(&self, solver: &Self::Solver, b: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Full-order operators with a sparse factorization.
pub struct SparseOperators<'a> {
    pub mass: &'a SparseSpd,
    pub stiff: &'a SparseSpd,
    pub solver: SolverKind,
}

impl StepOperators for SparseOperators<'_> {
    type Solver = SpdFactorization;

    fn n(&self) -> usize {
        self.mass.n()
    }

    fn apply_mass(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mass.mul_vec(x)
    }

    fn factor(&self, c: f64) -> Result<SpdFactorization> {
        factorize_with(&SparseSpd::linear_combination(c, self.mass, 1.0, self.stiff), self.solver)
    }

    fn solve(&self, solver: &SpdFactorization, b: &DVector<f64>) -> Result<DVector<f64>> {
        solver.solve(b)
    }
}

/// Small dense operators (reduced models, scalar tests).
pub struct DenseOperators<'a> {
    pub mass: &'a DMatrix<f64>,
    pub stiff: &'a DMatrix<f64>,
}

impl StepOperators for DenseOperators<'_> {
    type Solver = DenseSpd;

    fn n(&self) -> usize {
        self.mass.nrows()
    }

    fn apply_mass(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mass * x
    }

    fn factor(&self, c: f64) -> Result<DenseSpd> {
        DenseSpd::new(self.mass * c + self.stiff)
    }

    fn solve(&self, solver: &DenseSpd, b: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(solver.solve(b))
    }
}

/// Backward Euler for the first step, BDF2 afterwards:
///
/// ```text
/// (M/dt + A) a1       = M a0 / dt + rhs(t1)
/// (3M/(2dt) + A) an   = (M/dt)(2 a(n-1) - a(n-2)/2) + rhs(tn)
/// ```
///
/// Each step matrix is factored once. `observe(n, t_n, alpha_n)` is called
/// for `n = 0..=N_T`; the final state is returned.
pub fn integrate<O: StepOperators>(
    ops: &O,
    rhs: &mut dyn FnMut(f64) -> DVector<f64>,
    alpha0: &DVector<f64>,
    grid: &TimeGrid,
    observe: &mut dyn FnMut(usize, f64, &DVector<f64>),
) -> Result<DVector<f64>> {
    let n = ops.n();
    if alpha0.len() != n {
        return Err(Error::mismatch("integrate (initial state)", n, alpha0.len()));
    }
    if grid.n_steps < 2 {
        return Err(Error::InvalidArgument("BDF2 needs at least 2 steps".into()));
    }
    let dt = grid.dt;
    observe(0, 0.0, alpha0);

    let euler = ops.factor(1.0 / dt)?;
    let t1 = grid.t(1);
    let f1 = rhs(t1);
    if f1.len() != n {
        return Err(Error::mismatch("integrate (source)", n, f1.len()));
    }
    let mut prev = alpha0.clone();
    let mut cur = ops.solve(&euler, &(ops.apply_mass(alpha0) / dt + f1))?;
    drop(euler);
    observe(1, t1, &cur);

    let bdf2 = ops.factor(1.5 / dt)?;
    for step in 2..=grid.n_steps {
        let t = grid.t(step);
        let hist = &cur * 2.0 - &prev * 0.5;
        let b = ops.apply_mass(&hist) / dt + rhs(t);
        let next = ops.solve(&bdf2, &b)?;
        prev = std::mem::replace(&mut cur, next);
        observe(step, t, &cur);
    }
    Ok(cur)
}
