//! Galerkin projection onto the span of a basis `Q` and the way back.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spla::{DenseSpd, SparseSpd};

/// Reduced operators `M_r = Q^T M Q`, `A_r = Q^T A Q` and loads `Q^T B`.
#[derive(Debug, Clone)]
pub struct RomSystem {
    pub mass: DMatrix<f64>,
    pub stiff: DMatrix<f64>,
    pub loads: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl RomSystem {
    pub fn dim(&self) -> usize {
        self.q.ncols()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub fn reduce(mass: &SparseSpd, stiff: &SparseSpd, q: &DMatrix<f64>, loads: &DMatrix<f64>) -> Result<RomSystem> {
    let n = mass.n();
    if stiff.n() != n {
        return Err(Error::mismatch("reduce (stiffness)", n, stiff.n()));
    }
    if q.nrows() != n {
        return Err(Error::mismatch("reduce (basis rows)", n, q.nrows()));
    }
    if loads.nrows() != n {
        return Err(Error::mismatch("reduce (load rows)", n, loads.nrows()));
    }
    let qt = q.transpose();
    Ok(RomSystem {
        mass: symmetrize(&qt * mass.mul_mat(q)),
        stiff: symmetrize(&qt * stiff.mul_mat(q)),
        loads: &qt * loads,
        q: q.clone(),
    })
}

/// FEM coefficients `Q alpha`.
pub fn lift(q: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<DVector<f64>> {
    if alpha.len() != q.ncols() {
        return Err(Error::mismatch("lift", q.ncols(), alpha.len()));
    }
    Ok(q * alpha)
}

/// Galerkin L2 projection of the initial data: solves `M_r alpha = Q^T b0`
/// where `b0_i = (u0, phi_i)`.
pub fn rom_initial(mass_r: &DMatrix<f64>, q: &DMatrix<f64>, b0: &DVector<f64>) -> Result<DVector<f64>> {
    if b0.len() != q.nrows() {
        return Err(Error::mismatch("rom_initial", q.nrows(), b0.len()));
    }
    let rhs = q.transpose() * b0;
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(DVector::zeros(q.ncols()));
    }
    Ok(DenseSpd::new(mass_r.clone())?.solve(&rhs))
}
