//! Separable sources `f(t, x) = sum_i f_i(t) g_i(x)`, either given exactly or
//! obtained by Lagrange interpolation in time at Chebyshev nodes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{assemble_loads, FemSpace, PointFn};
use crate::error::{Error, Result};

/// `t_i = T/2 + (T/2) cos((2i - 1) pi / (2m))`, `i = 1..=m`.
pub fn chebyshev_nodes(m: usize, t_final: f64) -> Vec<f64> {
    (1..=m)
        .map(|i| {
            let theta = (2 * i - 1) as f64 * std::f64::consts::PI / (2 * m) as f64;
            0.5 * t_final + 0.5 * t_final * theta.cos()
        })
        .collect()
}

/// Lagrange cardinal polynomial `L_i(t)` on `nodes`.
pub fn lagrange_eval(nodes: &[f64], i: usize, t: f64) -> Result<f64> {
    if i >= nodes.len() {
        return Err(Error::InvalidArgument(format!("node index {i} out of {}", nodes.len())));
    }
    let mut v = 1.0;
    for (j, &tj) in nodes.iter().enumerate() {
        if j != i {
            let d = nodes[i] - tj;
            if d == 0.0 {
                return Err(Error::DuplicateNodes);
            }
            v *= (t - tj) / d;
        }
    }
    Ok(v)
}

fn check_distinct(nodes: &[f64]) -> Result<()> {
    for i in 0..nodes.len() {
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::DuplicateNodes);
            }
        }
    }
    Ok(())
}

/// Scalar time factor `f_i(t)`.
pub type TimeFactor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum TimeFactors {
    Exact(Vec<TimeFactor>),
    Chebyshev(Vec<f64>),
}

impl std::fmt::Debug for TimeFactors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TimeFactors::Exact(v) => write!(f, "Exact({} factors)", v.len()),
            TimeFactors::Chebyshev(nodes) => f.debug_tuple("Chebyshev").field(nodes).finish(),
        }
    }
}

/// Space loads (columns, `N x m`) with their time factors.
#[derive(Debug, Clone)]
pub struct SeparableSource {
    loads: DMatrix<f64>,
    factors: TimeFactors,
}

impl SeparableSource {
    pub fn exact(loads: DMatrix<f64>, factors: Vec<TimeFactor>) -> Result<SeparableSource> {
        if loads.ncols() != factors.len() {
            return Err(Error::mismatch("separable source terms", loads.ncols(), factors.len()));
        }
        Ok(SeparableSource { loads, factors: TimeFactors::Exact(factors) })
    }

    /// A single time-independent load.
    pub fn stationary(load: DVector<f64>) -> SeparableSource {
        let n = load.len();
        SeparableSource {
            loads: DMatrix::from_column_slice(n, 1, load.as_slice()),
            factors: TimeFactors::Exact(vec![Arc::new(|_| 1.0)]),
        }
    }

    /// No source at all (`m = 0`).
    pub fn zero(n: usize) -> SeparableSource {
        SeparableSource { loads: DMatrix::zeros(n, 0), factors: TimeFactors::Exact(Vec::new()) }
    }

    /// Loads of `x -> f(t_i, x)` at `m` Chebyshev nodes on `[0, T]`, with
    /// Lagrange time factors.
    pub fn chebyshev(
        space: &FemSpace,
        f: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
        m: usize,
        t_final: f64,
    ) -> Result<SeparableSource> {
        if m == 0 {
            return Err(Error::InvalidArgument("Chebyshev source needs m >= 1".into()));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidArgument(format!("final time {t_final} must be positive")));
        }
        let nodes = chebyshev_nodes(m, t_final);
        check_distinct(&nodes)?;
        let slices: Vec<_> = nodes.iter().map(|&t| move |x: &[f64]| f(t, x)).collect();
        let refs: Vec<PointFn<'_>> = slices.iter().map(|g| g as PointFn<'_>).collect();
        let loads = assemble_loads(space, &refs);
        Ok(SeparableSource { loads, factors: TimeFactors::Chebyshev(nodes) })
    }

    pub fn n_terms(&self) -> usize {
        self.loads.ncols()
    }

    pub fn n(&self) -> usize {
        self.loads.nrows()
    }

    pub fn loads(&self) -> &DMatrix<f64> {
        &self.loads
    }

    pub fn time_factors(&self) -> &TimeFactors {
        &self.factors
    }

    /// `(f_1(t), ..., f_m(t))`.
    pub fn coefficients(&self, t: f64) -> DVector<f64> {
        match &self.factors {
            TimeFactors::Exact(fs) => DVector::from_iterator(fs.len(), fs.iter().map(|f| f(t))),
            TimeFactors::Chebyshev(nodes) => DVector::from_iterator(
                nodes.len(),
                (0..nodes.len()).map(|i| lagrange_eval(nodes, i, t).expect("nodes checked at construction")),
            ),
        }
    }

    /// `sum_i f_i(t) b_i`.
    pub fn rhs(&self, t: f64) -> DVector<f64> {
        if self.n_terms() == 0 {
            return DVector::zeros(self.n());
        }
        &self.loads * self.coefficients(t)
    }

    /// Same time factors with replacement loads (e.g. `Q^T B`).
    pub fn with_loads(&self, loads: DMatrix<f64>) -> Result<SeparableSource> {
        if loads.ncols() != self.n_terms() {
            return Err(Error::mismatch("with_loads", self.n_terms(), loads.ncols()));
        }
        Ok(SeparableSource { loads, factors: self.factors.clone() })
    }

    /// Multiplies every load by `s`.
    pub fn scaled(&self, s: f64) -> SeparableSource {
        SeparableSource { loads: &self.loads * s, factors: self.factors.clone() }
    }
}
