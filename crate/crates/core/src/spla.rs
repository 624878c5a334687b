//! Linear-algebra kernels shared by the full and reduced solvers.
//!
//! * [`SparseSpd`]: CSR storage of a symmetric matrix (both triangles stored).
//! * [`SpdFactorization`]: reusable SPD solver, sparse Cholesky with a
//!   fill-reducing ordering (backed by `faer`) or Jacobi-preconditioned CG.
//! * [`sym_eig`]: dense symmetric eigendecomposition, eigenvalues descending.
//! * [`jacobi_svd`]: one-sided Jacobi SVD. Used wherever tiny singular values
//!   of graded matrices must keep their relative accuracy.
//! * [`AOrthoBasis`]: incremental Gram-Schmidt in the `x^T A y` inner product.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric sparse matrix in CSR form. Both triangles are stored so that
/// row access is also column access.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpd {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSpd {
    /// Sums duplicate `(row, col, value)` entries. Entries sharing a position
    /// are summed in input order, so feeding exactly mirrored contributions
    /// yields a bit-exact symmetric matrix.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 4);
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i},{j}) out of range for n={n}");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSpd { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        SparseSpd { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.get(i, i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max |A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        assert_eq!(x.len(), self.n, "sparse matvec dimension");
        DVector::from_fn(self.n, |i, _| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    pub fn mul_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n, "sparse matmul dimension");
        let mut y = DMatrix::zeros(self.n, x.ncols());
        for c in 0..x.ncols() {
            let xc = x.column(c);
            let mut yc = y.column_mut(c);
            for i in 0..self.n {
                yc[i] = self.row(i).map(|(j, v)| v * xc[j]).sum();
            }
        }
        y
    }

    /// `alpha * a + beta * b`.
    pub fn linear_combination(alpha: f64, a: &SparseSpd, beta: f64, b: &SparseSpd) -> SparseSpd {
        assert_eq!(a.n, b.n, "linear combination of differently sized matrices");
        let n = a.n;
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(a.nnz().max(b.nnz()));
        let mut values = Vec::with_capacity(a.nnz().max(b.nnz()));
        for i in 0..n {
            let (mut ia, mut ib) = (a.row_ptr[i], b.row_ptr[i]);
            let (ea, eb) = (a.row_ptr[i + 1], b.row_ptr[i + 1]);
            while ia < ea || ib < eb {
                let ca = if ia < ea { a.col_idx[ia] } else { usize::MAX };
                let cb = if ib < eb { b.col_idx[ib] } else { usize::MAX };
                if ca == cb {
                    col_idx.push(ca);
                    values.push(alpha * a.values[ia] + beta * b.values[ib]);
                    ia += 1;
                    ib += 1;
                } else if ca < cb {
                    col_idx.push(ca);
                    values.push(alpha * a.values[ia]);
                    ia += 1;
                } else {
                    col_idx.push(cb);
                    values.push(beta * b.values[ib]);
                    ib += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseSpd { n, row_ptr, col_idx, values }
    }

    /// Restriction to the rows/columns listed in `keep` (in that order).
    pub fn submatrix(&self, keep: &[usize]) -> SparseSpd {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &old in keep {
            for (j, v) in self.row(old) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(v);
                }
            }
            // keep columns sorted for binary search
            let start = *row_ptr.last().unwrap();
            let mut pairs: Vec<(usize, f64)> =
                col_idx[start..].iter().copied().zip(values[start..].iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                col_idx[start + k] = c;
                values[start + k] = v;
            }
            row_ptr.push(col_idx.len());
        }
        SparseSpd { n: keep.len(), row_ptr, col_idx, values }
    }

    fn lower_triplets(&self) -> Vec<Triplet<usize, usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz() / 2 + self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if i >= j {
                    t.push(Triplet::new(i, j, v));
                }
            }
        }
        t
    }
}

/// `x^T A y`.
pub fn a_inner(a: &SparseSpd, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    if x.len() != a.n() {
        return Err(Error::mismatch("a_inner (x)", a.n(), x.len()));
    }
    if y.len() != a.n() {
        return Err(Error::mismatch("a_inner (y)", a.n(), y.len()));
    }
    let mut s = 0.0;
    for i in 0..a.n() {
        if x[i] != 0.0 {
            s += x[i] * a.row(i).map(|(j, v)| v * y[j]).sum::<f64>();
        }
    }
    Ok(s)
}

/// `sqrt(x^T A x)`; rounding-level negative quadratic forms clamp to zero.
pub fn a_norm(a: &SparseSpd, x: &DVector<f64>) -> Result<f64> {
    Ok(a_inner(a, x, x)?.max(0.0).sqrt())
}

/// Solver back end for [`SpdFactorization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    /// Sparse Cholesky with a fill-reducing ordering.
    Direct,
    /// Jacobi-preconditioned conjugate gradient.
    ConjugateGradient { rel_tol: f64, max_iter: usize },
}

impl SolverKind {
    pub const CG_DEFAULT: SolverKind = SolverKind::ConjugateGradient { rel_tol: 1e-13, max_iter: 20_000 };

    /// Direct factorization everywhere except very fine 3D meshes.
    pub fn for_mesh(dim: usize, level: u32) -> SolverKind {
        if dim == 3 && level >= 6 {
            SolverKind::CG_DEFAULT
        } else {
            SolverKind::Direct
        }
    }
}

enum Backend {
    Direct(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Cg { matrix: SparseSpd, inv_diag: DVector<f64>, rel_tol: f64, max_iter: usize },
}

/// Factored SPD operator; immutable and shareable across threads.
pub struct SpdFactorization {
    n: usize,
    backend: Backend,
}

impl std::fmt::Debug for SpdFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Direct(_) => "direct",
            Backend::Cg { .. } => "cg",
        };
        f.debug_struct("SpdFactorization").field("n", &self.n).field("backend", &kind).finish()
    }
}

pub fn factorize(a: &SparseSpd) -> Result<SpdFactorization> {
    factorize_with(a, SolverKind::Direct)
}

pub fn factorize_with(a: &SparseSpd, kind: SolverKind) -> Result<SpdFactorization> {
    let n = a.n();
    let backend = match kind {
        SolverKind::Direct => {
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &a.lower_triplets())
                .map_err(|e| Error::InvalidArgument(format!("sparse structure: {e:?}")))?;
            let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
                faer::sparse::linalg::LltError::Numeric(inner) => {
                    Error::NotPositiveDefinite(format!("non-positive pivot: {inner:?}"))
                }
                faer::sparse::linalg::LltError::Generic(inner) => {
                    Error::InvalidArgument(format!("sparse Cholesky failed: {inner:?}"))
                }
            })?;
            Backend::Direct(llt)
        }
        SolverKind::ConjugateGradient { rel_tol, max_iter } => {
            let d = a.diagonal();
            if let Some(i) = d.iter().position(|&v| v <= 0.0) {
                return Err(Error::NotPositiveDefinite(format!("diagonal entry {i} is {}", d[i])));
            }
            Backend::Cg { matrix: a.clone(), inv_diag: d.map(|v| 1.0 / v), rel_tol, max_iter }
        }
    };
    Ok(SpdFactorization { n, backend })
}

impl SpdFactorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.n {
            return Err(Error::mismatch("solve", self.n, b.len()));
        }
        match &self.backend {
            Backend::Direct(llt) => {
                let mut rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
                llt.solve_in_place(rhs.as_mut());
                Ok(DVector::from_fn(self.n, |i, _| rhs[(i, 0)]))
            }
            Backend::Cg { matrix, inv_diag, rel_tol, max_iter } => pcg(matrix, inv_diag, b, *rel_tol, *max_iter),
        }
    }

    /// Solves for every column of `b`.
    pub fn solve_many(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.n {
            return Err(Error::mismatch("solve_many", self.n, b.nrows()));
        }
        match &self.backend {
            Backend::Direct(llt) => {
                let mut rhs = faer::Mat::<f64>::from_fn(self.n, b.ncols(), |i, j| b[(i, j)]);
                llt.solve_in_place(rhs.as_mut());
                Ok(DMatrix::from_fn(self.n, b.ncols(), |i, j| rhs[(i, j)]))
            }
            Backend::Cg { .. } => {
                let mut x = DMatrix::zeros(self.n, b.ncols());
                for c in 0..b.ncols() {
                    let xc = self.solve(&b.column(c).into_owned())?;
                    x.set_column(c, &xc);
                }
                Ok(x)
            }
        }
    }
}

fn pcg(
    a: &SparseSpd,
    inv_diag: &DVector<f64>,
    b: &DVector<f64>,
    rel_tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let bnorm = b.norm();
    let mut x = DVector::zeros(b.len());
    if bnorm == 0.0 {
        return Ok(x);
    }
    let mut r = b.clone();
    let mut z = r.component_mul(inv_diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for it in 0..max_iter {
        let ap = a.mul_vec(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("p^T A p = {pap:e} at CG iteration {it}")));
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        if r.norm() <= rel_tol * bnorm {
            return Ok(x);
        }
        z = r.component_mul(inv_diag);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * p;
        rz = rz_new;
    }
    Err(Error::CgNotConverged { iterations: max_iter, residual: r.norm() / bnorm })
}

/// Eigendecomposition of a small dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Orthonormal eigenvectors as columns, matching `values`.
    pub vectors: DMatrix<f64>,
    /// Eigenvalues in descending order.
    pub values: DVector<f64>,
}

pub fn max_asymmetry(k: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..k.nrows() {
        for j in 0..i {
            worst = worst.max((k[(i, j)] - k[(j, i)]).abs());
        }
    }
    worst
}

pub fn sym_eig(k: &DMatrix<f64>) -> Result<SymEig> {
    if k.nrows() != k.ncols() {
        return Err(Error::mismatch("sym_eig (square)", k.nrows(), k.ncols()));
    }
    let scale = k.amax();
    let asym = max_asymmetry(k);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym, limit: 1e-12 * scale });
    }
    let n = k.nrows();
    if n == 0 {
        return Ok(SymEig { vectors: DMatrix::zeros(0, 0), values: DVector::zeros(0) });
    }
    let sym = (k + k.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEig { vectors, values })
}

/// Thin SVD `m = U diag(s) V^T`, singular values descending.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

/// One-sided (Hestenes) Jacobi SVD of an `m x n` matrix with `m >= n`.
///
/// Rotations are accepted until every pair of columns is orthogonal to
/// working precision relative to the product of their norms, so singular
/// values of column-graded matrices keep high relative accuracy. Left
/// vectors belonging to exactly zero singular values are returned as zero
/// columns.
pub fn jacobi_svd(m: &DMatrix<f64>) -> DenseSvd {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "jacobi_svd needs rows >= cols, got {rows}x{cols}");
    let mut g = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    let eps = f64::EPSILON;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dot(&g.column(q));
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut g, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let s = DVector::from_fn(cols, |i, _| norms[order[i]]);
    let u = DMatrix::from_fn(rows, cols, |r, c| {
        let j = order[c];
        if norms[j] > 0.0 {
            g[(r, j)] / norms[j]
        } else {
            0.0
        }
    });
    let v = DMatrix::from_fn(cols, cols, |r, c| v[(r, order[c])]);
    DenseSvd { u, s, v }
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (a, b) = (m[(r, p)], m[(r, q)]);
        m[(r, p)] = c * a - s * b;
        m[(r, q)] = s * a + c * b;
    }
}

/// Dense Cholesky solver for small SPD systems.
#[derive(Debug, Clone)]
pub struct DenseSpd {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl DenseSpd {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let chol =
            nalgebra::Cholesky::new(m).ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky failed".into()))?;
        Ok(DenseSpd { chol })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// Incrementally built A-orthonormal basis `Q` with `U = Q T`, `T` upper
/// triangular, via classical Gram-Schmidt with one reorthogonalization pass.
///
/// A column that is exactly dependent on its predecessors is stored as a
/// zero column so that `T` stays square.
#[derive(Debug, Clone)]
pub struct AOrthoBasis {
    q: Vec<DVector<f64>>,
    aq: Vec<DVector<f64>>,
    t: DMatrix<f64>,
}

impl Default for AOrthoBasis {
    fn default() -> Self {
        Self::new()
    }
}

impl AOrthoBasis {
    pub fn new() -> Self {
        AOrthoBasis { q: Vec::new(), aq: Vec::new(), t: DMatrix::zeros(0, 0) }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Appends `u`; `au` must equal `A u`. Returns the A-norm of the part of
    /// `u` orthogonal to the existing basis.
    pub fn push(&mut self, u: &DVector<f64>, au: &DVector<f64>) -> f64 {
        let k = self.q.len();
        let mut coef = DVector::zeros(k);
        let mut e = u.clone();
        let mut ae = au.clone();
        for _pass in 0..2 {
            for j in 0..k {
                let c = self.q[j].dot(&ae);
                coef[j] += c;
                e.axpy(-c, &self.q[j], 1.0);
                ae.axpy(-c, &self.aq[j], 1.0);
            }
        }
        let p = e.dot(&ae).max(0.0).sqrt();
        let mut t = DMatrix::zeros(k + 1, k + 1);
        t.view_mut((0, 0), (k, k)).copy_from(&self.t);
        t.view_mut((0, k), (k, 1)).copy_from(&coef);
        t[(k, k)] = p;
        self.t = t;
        if p > 0.0 {
            self.q.push(e / p);
            self.aq.push(ae / p);
        } else {
            self.q.push(DVector::zeros(u.len()));
            self.aq.push(DVector::zeros(u.len()));
        }
        p
    }

    pub fn triangular(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        if self.q.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        DMatrix::from_columns(&self.q)
    }

    pub fn aq_matrix(&self) -> DMatrix<f64> {
        if self.aq.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        DMatrix::from_columns(&self.aq)
    }
}

/// A-weighted modified Gram-Schmidt (two passes) on the columns of `q`.
/// Returns the re-orthonormalized matrix and the upper-triangular `T` with
/// `q = q_new * T`.
pub fn a_orthonormalize(q: &DMatrix<f64>, a: &SparseSpd) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut basis = AOrthoBasis::new();
    for c in 0..q.ncols() {
        let u = q.column(c).into_owned();
        let au = a.mul_vec(&u);
        basis.push(&u, &au);
    }
    (basis.q_matrix(), basis.triangular().clone())
}

/// `max |Q^T A Q - I|`.
pub fn a_orthonormality_defect(q: &DMatrix<f64>, a: &SparseSpd) -> f64 {
    let aq = a.mul_mat(q);
    let g = q.transpose() * aq;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}
