//! A-weighted incremental core SVD `U = Q Sigma R^T` with `Q^T A Q = I`,
//! `R^T R = I`, built one column at a time by bordered updates, plus the
//! Euclidean thin SVD used to compress the source matrix.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spla::{a_orthonormality_defect, a_orthonormalize, jacobi_svd, DenseSvd, SparseSpd};

/// Drift in `Q^T A Q` that triggers a re-orthonormalization pass.
pub const REORTH_TRIGGER: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct IsvdState {
    q: DMatrix<f64>,
    sigma: DVector<f64>,
    r: DMatrix<f64>,
    trunc_tol: f64,
    n_rows: Option<usize>,
    reorth_count: usize,
}

impl IsvdState {
    /// Empty factorization; singular values at or below `trunc_tol * sigma_1`
    /// are dropped and columns with a residual below
    /// `trunc_tol * max(sigma_1, ||c||_A)` count as lying in the span.
    pub fn new(trunc_tol: f64) -> IsvdState {
        IsvdState {
            q: DMatrix::zeros(0, 0),
            sigma: DVector::zeros(0),
            r: DMatrix::zeros(0, 0),
            trunc_tol,
            n_rows: None,
            reorth_count: 0,
        }
    }

    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// Number of columns ingested so far.
    pub fn n_columns(&self) -> usize {
        self.r.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn trunc_tol(&self) -> f64 {
        self.trunc_tol
    }

    /// How many times the A-orthonormality repair pass ran.
    pub fn reorth_count(&self) -> usize {
        self.reorth_count
    }

    /// `Q Sigma R^T` (`N x n`); empty before the first nonzero column.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.n_rows.unwrap_or(0);
        if self.rank() == 0 {
            return DMatrix::zeros(n, self.n_columns());
        }
        &self.q * DMatrix::from_diagonal(&self.sigma) * self.r.transpose()
    }

    /// Ingests one column.
    pub fn update(&mut self, c: &DVector<f64>, stiff: &SparseSpd) -> Result<()> {
        if c.len() != stiff.n() {
            return Err(Error::mismatch("isvd_update", stiff.n(), c.len()));
        }
        if let Some(n) = self.n_rows {
            if n != c.len() {
                return Err(Error::mismatch("isvd_update (rows)", n, c.len()));
            }
        }
        self.n_rows = Some(c.len());
        let n_old = self.n_columns();
        let ac = stiff.mul_vec(c);
        let c_norm = c.dot(&ac).max(0.0).sqrt();
        let d = self.rank();

        if d == 0 {
            // keep R's row count equal to the number of ingested columns
            if c_norm == 0.0 {
                self.r = DMatrix::zeros(n_old + 1, 0);
                return Ok(());
            }
            self.q = DMatrix::from_column_slice(c.len(), 1, (c / c_norm).as_slice());
            self.sigma = DVector::from_element(1, c_norm);
            self.r = DMatrix::zeros(n_old + 1, 1);
            self.r[(n_old, 0)] = 1.0;
            return Ok(());
        }

        // two-pass classical Gram-Schmidt in the A inner product
        let mut h = self.q.transpose() * &ac;
        let mut e = c - &self.q * &h;
        let mut ae = stiff.mul_vec(&e);
        let h2 = self.q.transpose() * &ae;
        e -= &self.q * &h2;
        h += &h2;
        ae = stiff.mul_vec(&e);
        let p = e.dot(&ae).max(0.0).sqrt();

        let in_span = p <= self.trunc_tol * self.sigma[0].max(c_norm);
        let mut y = DMatrix::zeros(d + 1, d + 1);
        for i in 0..d {
            y[(i, i)] = self.sigma[i];
            y[(i, d)] = h[i];
        }
        if !in_span {
            y[(d, d)] = p;
        }
        let svd = jacobi_svd(&y);

        let mut r_ext = DMatrix::zeros(n_old + 1, d + 1);
        r_ext.view_mut((0, 0), (n_old, d)).copy_from(&self.r);
        r_ext[(n_old, d)] = 1.0;
        let r_new = r_ext * &svd.v;

        let q_new = if in_span {
            &self.q * svd.u.view((0, 0), (d, d + 1))
        } else {
            let mut q_ext = DMatrix::zeros(c.len(), d + 1);
            q_ext.columns_mut(0, d).copy_from(&self.q);
            q_ext.set_column(d, &(e / p));
            q_ext * &svd.u
        };

        let s1 = svd.s[0];
        let keep = svd.s.iter().take_while(|&&s| s > self.trunc_tol * s1 && s > 0.0).count();
        self.q = q_new.columns(0, keep).into_owned();
        self.sigma = svd.s.rows(0, keep).into_owned();
        self.r = r_new.columns(0, keep).into_owned();

        if a_orthonormality_defect(&self.q, stiff) > REORTH_TRIGGER {
            self.reorthonormalize(stiff);
        }
        Ok(())
    }

    /// Restores `Q^T A Q = I` while keeping `Q Sigma R^T` unchanged:
    /// `Q = Q' T`, then `T Sigma = W S Z^T` gives `Q' W`, `S`, `R Z`.
    fn reorthonormalize(&mut self, stiff: &SparseSpd) {
        let (q_prime, t) = a_orthonormalize(&self.q, stiff);
        let ts = t * DMatrix::from_diagonal(&self.sigma);
        let svd = jacobi_svd(&ts);
        self.q = q_prime * &svd.u;
        self.sigma = svd.s;
        self.r = &self.r * svd.v;
        self.reorth_count += 1;
    }
}

/// Euclidean thin SVD `B = Q_F Sigma_F R_F^T` (one-sided Jacobi).
pub fn thin_svd(b: &DMatrix<f64>) -> Result<DenseSvd> {
    if b.nrows() < b.ncols() {
        return Err(Error::InvalidArgument(format!(
            "thin_svd needs at least as many rows as columns, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(jacobi_svd(b))
}

/// Number of singular values strictly above `tol * sigma_1`.
pub fn rank_cut(sigma: &DVector<f64>, tol: f64) -> usize {
    match sigma.get(0) {
        Some(&s1) if s1 > 0.0 => sigma.iter().filter(|&&s| s > tol * s1).count(),
        _ => 0,
    }
}
