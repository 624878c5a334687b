//! Krylov reduced bases built from problem data.
//!
//! The sequence is `u_1 = A^{-1} b`, `u_i = A^{-1} M u_{i-1}`. Its Gram matrix
//! `K = U^T A U` is Hankel, and its eigenvalues decay so fast that forming
//! `K` and calling a symmetric eigensolver loses the trailing eigenvalues to
//! rounding. The spectrum is therefore taken from an A-weighted QR of `U`
//! followed by a one-sided Jacobi SVD of the triangular factor, which keeps
//! the small eigenvalues to high relative accuracy and yields an
//! A-orthonormal basis directly.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::assembly::discrete_eigenpairs;
use crate::error::{Error, Result};
use crate::spla::{jacobi_svd, sym_eig, AOrthoBasis, DenseSpd, DenseSvd, SparseSpd, SpdFactorization};

/// Directions whose singular value (A-norm scale) falls below this fraction
/// of the largest one are numerically indistinguishable from zero.
pub const RANK_FLOOR: f64 = 1e-12;

/// Columns of the sequence; a seed with `s` columns yields `s * ell`
/// columns, block `i` being `(A^{-1} M)^{i-1} A^{-1} seed`.
pub fn krylov_sequence(
    fact: &SpdFactorization,
    mass: &SparseSpd,
    seed: &DMatrix<f64>,
    ell: usize,
) -> Result<DMatrix<f64>> {
    if ell == 0 {
        return Err(Error::InvalidArgument("Krylov length must be at least 1".into()));
    }
    if seed.nrows() != fact.n() {
        return Err(Error::mismatch("krylov_sequence", fact.n(), seed.nrows()));
    }
    let s = seed.ncols();
    let mut u = DMatrix::zeros(seed.nrows(), s * ell);
    let mut block = fact.solve_many(seed)?;
    for i in 0..ell {
        if i > 0 {
            block = fact.solve_many(&mass.mul_mat(&block))?;
        }
        u.columns_mut(i * s, s).copy_from(&block);
    }
    Ok(u)
}

/// Extends the Gram matrix of the first `i - 1` columns of `u` to the first
/// `i` columns. Entries off the last two anti-diagonal positions are copied
/// from `k_prev` (Hankel structure), only `u_{i-1}^T A u_i` and
/// `u_i^T A u_i` are computed.
pub fn gram_extend(k_prev: &DMatrix<f64>, u: &DMatrix<f64>, stiff: &SparseSpd) -> Result<DMatrix<f64>> {
    let i = k_prev.nrows() + 1;
    if u.ncols() < i {
        return Err(Error::mismatch("gram_extend (columns)", i, u.ncols()));
    }
    if u.nrows() != stiff.n() {
        return Err(Error::mismatch("gram_extend (rows)", stiff.n(), u.nrows()));
    }
    let last = u.column(i - 1).into_owned();
    let a_last = stiff.mul_vec(&last);
    Ok(extend_with(k_prev, u, &a_last))
}

fn extend_with(k_prev: &DMatrix<f64>, u: &DMatrix<f64>, a_last: &DVector<f64>) -> DMatrix<f64> {
    let i = k_prev.nrows() + 1;
    let mut k = DMatrix::zeros(i, i);
    k.view_mut((0, 0), (i - 1, i - 1)).copy_from(k_prev);
    // 0-based: K[j][i-1] = K[j+1][i-2] for j + 1 <= i - 2
    for j in 0..i.saturating_sub(2) {
        k[(j, i - 1)] = k_prev[(j + 1, i - 2)];
        k[(i - 1, j)] = k[(j, i - 1)];
    }
    if i >= 2 {
        let v = u.column(i - 2).dot(a_last);
        k[(i - 2, i - 1)] = v;
        k[(i - 1, i - 2)] = v;
    }
    k[(i - 1, i - 1)] = u.column(i - 1).dot(a_last);
    k
}

/// `max |K[i][j] - K[i-1][j+1]|`, zero for an exact Hankel matrix.
pub fn hankel_defect(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows();
    let mut worst = 0.0f64;
    for i in 1..n {
        for j in 0..n - 1 {
            worst = worst.max((k[(i, j)] - k[(i - 1, j + 1)]).abs());
        }
    }
    worst
}

/// Minimal `r` with `sum_{i<=r} lambda_i / sum lambda_i >= 1 - tol`, negative
/// rounding noise clamped to zero.
pub fn select_rank_energy(lambda: &[f64], tol: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&tol) {
        return Err(Error::InvalidArgument(format!("energy tolerance {tol} outside [0, 1)")));
    }
    let total: f64 = lambda.iter().map(|&l| l.max(0.0)).sum();
    if total == 0.0 {
        return Err(Error::ZeroData);
    }
    let mut acc = 0.0;
    for (r, &l) in lambda.iter().enumerate() {
        acc += l.max(0.0);
        if acc / total >= 1.0 - tol {
            return Ok(r + 1);
        }
    }
    Ok(lambda.len())
}

/// Accurate spectrum of `K = U^T A U` from `U = Q_A T` and `T = W S V^T`:
/// eigenvalues `S^2`, eigenvectors `V`, and A-orthonormal directions
/// `Q_A W`.
#[derive(Debug, Clone)]
pub struct GramSpectrum {
    /// Eigenvalues of `K`, descending.
    pub values: DVector<f64>,
    /// Eigenvectors of `K` as columns.
    pub vectors: DMatrix<f64>,
    /// Singular values of `U` in the A-norm, descending.
    pub sigma: DVector<f64>,
    svd: DenseSvd,
}

impl GramSpectrum {
    fn from_triangular(t: &DMatrix<f64>) -> GramSpectrum {
        let svd = jacobi_svd(t);
        GramSpectrum { values: svd.s.map(|s| s * s), vectors: svd.v.clone(), sigma: svd.s.clone(), svd }
    }

    /// Number of directions above [`RANK_FLOOR`].
    pub fn resolved_rank(&self) -> usize {
        let s1 = self.sigma.get(0).copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > RANK_FLOOR * s1).count()
    }
}

/// A-weighted QR plus Jacobi SVD of the columns of `u`.
pub fn gram_spectrum(u: &DMatrix<f64>, stiff: &SparseSpd) -> Result<(GramSpectrum, DMatrix<f64>)> {
    if u.nrows() != stiff.n() {
        return Err(Error::mismatch("gram_spectrum", stiff.n(), u.nrows()));
    }
    let mut basis = AOrthoBasis::new();
    for c in 0..u.ncols() {
        let col = u.column(c).into_owned();
        let ac = stiff.mul_vec(&col);
        basis.push(&col, &ac);
    }
    let spec = GramSpectrum::from_triangular(basis.triangular());
    let q = basis.q_matrix() * &spec.svd.u;
    Ok((spec, q))
}

/// How the break tolerance of [`adaptive_basis`] is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TolScale {
    /// `lambda_min(K_i) <= tol`.
    #[default]
    Absolute,
    /// `lambda_min(K_i) <= tol * K[0][0]`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub ell_max: usize,
    pub tol: f64,
    pub scale: TolScale,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { ell_max: 10, tol: 1e-14, scale: TolScale::Absolute }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovBasis {
    /// Krylov vectors actually generated, as columns.
    pub u: DMatrix<f64>,
    /// Gram matrix `U^T A U` (Hankel copied).
    pub k: DMatrix<f64>,
    /// Eigenvectors of `K`, columns matching `lambda`.
    pub psi: DMatrix<f64>,
    /// Eigenvalues of `K`, descending.
    pub lambda: DVector<f64>,
    /// Eigenvalues of `K` from the dense symmetric eigensolver, kept as a
    /// cross-check; unreliable below roughly `1e-16 * K[0][0]`.
    pub lambda_dense: DVector<f64>,
    /// Selected dimension.
    pub r: usize,
    /// A-orthonormal reduced basis, `N x r`.
    pub q: DMatrix<f64>,
    /// Step at which the break test fired, if it did.
    pub break_step: Option<usize>,
}

/// Grows the sequence one vector at a time until the smallest eigenvalue of
/// `K_i` reaches the break threshold (or the sequence becomes numerically
/// dependent), or `ell_max` vectors have been generated.
///
/// On a break every direction that is still numerically resolved is kept;
/// when `ell_max` is exhausted the energy criterion picks the rank.
pub fn adaptive_basis(
    fact: &SpdFactorization,
    mass: &SparseSpd,
    stiff: &SparseSpd,
    b: &DVector<f64>,
    opts: &AdaptiveOptions,
) -> Result<KrylovBasis> {
    if opts.ell_max == 0 {
        return Err(Error::InvalidArgument("ell_max must be at least 1".into()));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be nonnegative", opts.tol)));
    }
    if b.len() != fact.n() {
        return Err(Error::mismatch("adaptive_basis", fact.n(), b.len()));
    }
    if b.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroData);
    }
    let n = b.len();
    let mut u = DMatrix::<f64>::zeros(n, 0);
    let mut k = DMatrix::<f64>::zeros(0, 0);
    let mut basis = AOrthoBasis::new();
    let mut next = fact.solve(b)?;
    let mut break_step = None;
    let mut spec = None;
    for i in 1..=opts.ell_max {
        let col = next.clone();
        let acol = stiff.mul_vec(&col);
        u = u.insert_column(i - 1, 0.0);
        u.set_column(i - 1, &col);
        k = extend_with(&k, &u, &acol);
        basis.push(&col, &acol);
        let s = GramSpectrum::from_triangular(basis.triangular());
        let threshold = match opts.scale {
            TolScale::Absolute => opts.tol,
            TolScale::Relative => opts.tol * k[(0, 0)],
        };
        let lambda_min = s.values[i - 1];
        let dependent = s.sigma[i - 1] <= RANK_FLOOR * s.sigma[0];
        spec = Some(s);
        if i >= 2 && (lambda_min <= threshold || dependent) {
            break_step = Some(i);
            break;
        }
        if i < opts.ell_max {
            next = fact.solve(&mass.mul_vec(&col))?;
        }
    }
    let spec = spec.expect("at least one step");
    if spec.sigma[0] == 0.0 {
        return Err(Error::ZeroData);
    }
    let r = match break_step {
        Some(_) => spec.resolved_rank(),
        None => select_rank_energy(spec.values.as_slice(), opts.tol)?.min(spec.resolved_rank()),
    };
    let q = basis.q_matrix() * spec.svd.u.columns(0, r);
    let lambda_dense = sym_eig(&k)?.values;
    Ok(KrylovBasis { u, k, psi: spec.vectors.clone(), lambda: spec.values.clone(), lambda_dense, r, q, break_step })
}

/// One row of a decay report.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRecord {
    /// 1-based eigenvalue index.
    pub index: usize,
    pub eigenvalue: f64,
    /// Upper bound for odd indices `2k + 1 >= 3`.
    pub theorem_bound: Option<f64>,
    /// `lambda_index / lambda_{index-1}`.
    pub ratio: Option<f64>,
}

impl DecayRecord {
    pub fn passes(&self) -> Option<bool> {
        self.theorem_bound.map(|b| self.eigenvalue <= b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub records: Vec<DecayRecord>,
}

/// Bound on odd-index eigenvalues of a Hankel Gram matrix of size `r`:
/// `lambda_{2k+1} <= 16 rho^{-2k+2} lambda_1` with
/// `rho = exp(pi^2 / (4 log(8 floor(r/2) / pi)))`.
pub fn decay_bound(lambda1: f64, r: usize, k: usize) -> f64 {
    let half = (r / 2) as f64;
    let rho = (std::f64::consts::PI.powi(2) / (4.0 * (8.0 * half / std::f64::consts::PI).ln())).exp();
    16.0 * rho.powf(-2.0 * k as f64 + 2.0) * lambda1
}

pub fn decay_report(lambda: &[f64]) -> DecayReport {
    let r = lambda.len();
    let records = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let index = i + 1;
            let theorem_bound = (index >= 3 && index % 2 == 1).then(|| decay_bound(lambda[0], r, (index - 1) / 2));
            let ratio = (i > 0).then(|| l / lambda[i - 1]);
            DecayRecord { index, eigenvalue: l, theorem_bound, ratio }
        })
        .collect();
    DecayReport { records }
}

impl DecayReport {
    pub fn bound_checks(&self) -> impl Iterator<Item = &DecayRecord> {
        self.records.iter().filter(|r| r.theorem_bound.is_some())
    }

    pub fn all_pass(&self) -> bool {
        self.bound_checks().all(|r| r.passes() == Some(true))
    }

    /// CSV with header `index,eigenvalue,theorem_bound,ratio`; absent values
    /// are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,eigenvalue,theorem_bound,ratio")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.records {
            writeln!(out, "{},{:e},{},{}", r.index, r.eigenvalue, opt(r.theorem_bound), opt(r.ratio))?;
        }
        Ok(())
    }
}

/// Result of [`vandermonde_check`].
#[derive(Debug, Clone)]
pub struct VandermondeCheck {
    /// Gram matrix of the first `r` Krylov vectors.
    pub k: DMatrix<f64>,
    /// Same matrix rebuilt from the eigen-expansion of the data.
    pub factored: DMatrix<f64>,
    /// `max |K - factored|`.
    pub discrepancy: f64,
}

/// Compares `K_r` with `(V W)(V W)^T`, where `V_ij = mu_j^i` with
/// `mu_j = 1 / lambda_j` over all discrete eigenvalues and `W` holds the
/// A-coefficients of `M^{-1} b` in the eigenbasis.
pub fn vandermonde_check(
    mass: &SparseSpd,
    stiff: &SparseSpd,
    b: &DVector<f64>,
    r: usize,
    cap: usize,
) -> Result<VandermondeCheck> {
    let n = mass.n();
    if b.len() != n {
        return Err(Error::mismatch("vandermonde_check", n, b.len()));
    }
    let pairs = discrete_eigenpairs(mass, stiff, n, cap)?;
    let b_hat = DenseSpd::new(mass.to_dense())?.solve(b);
    let ab = stiff.mul_vec(&b_hat);
    let coef: Vec<f64> = pairs.iter().map(|(_, phi)| phi.dot(&ab)).collect();
    let vw = DMatrix::from_fn(r, n, |i, j| (1.0 / pairs[j].0).powi(i as i32 + 1) * coef[j]);
    let factored = &vw * vw.transpose();

    let fact = crate::spla::factorize(stiff)?;
    let u = krylov_sequence(&fact, mass, &DMatrix::from_column_slice(n, 1, b.as_slice()), r)?;
    let k = u.transpose() * stiff.mul_mat(&u);
    let discrepancy = (&k - &factored).amax();
    Ok(VandermondeCheck { k, factored, discrepancy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_load, assemble_operators, FemSpace, DEFAULT_DENSE_CAP};
    use crate::mesh::build_mesh;
    use crate::spla::{a_orthonormality_defect, factorize};
    use proptest::prelude::*;

    fn quartic_source(x: &[f64]) -> f64 {
        1e4 * (x[0] - 0.1) * (x[1] - 0.2) * (x[0] - 0.3) * (x[1] - 0.4)
    }

    fn setup(level: u32) -> (SparseSpd, SparseSpd, DVector<f64>) {
        let s = FemSpace::new(build_mesh(2, level).unwrap(), 1).unwrap();
        let (m, a) = assemble_operators(&s);
        let b = assemble_load(&s, &quartic_source);
        (m, a, b)
    }

    #[test]
    fn zero_seed_gives_zero_columns() {
        let (m, a, _) = setup(2);
        let f = factorize(&a).unwrap();
        let u = krylov_sequence(&f, &m, &DMatrix::zeros(a.n(), 1), 4).unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn identity_operators_fix_the_seed() {
        let i = SparseSpd::identity(5);
        let f = factorize(&i).unwrap();
        let b = DMatrix::from_column_slice(5, 1, &[1.0, -2.0, 0.5, 3.0, 0.0]);
        let u = krylov_sequence(&f, &i, &b, 4).unwrap();
        for c in 0..4 {
            assert_eq!(u.column(c), b.column(0));
        }
    }

    #[test]
    fn sequence_matches_dense_solve() {
        let (m, a, b) = setup(3);
        let f = factorize(&a).unwrap();
        let u = krylov_sequence(&f, &m, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), 3).unwrap();
        let lu = a.to_dense().lu();
        let md = m.to_dense();
        let mut v = lu.solve(&b).unwrap();
        for c in 0..3 {
            if c > 0 {
                v = lu.solve(&(&md * &v)).unwrap();
            }
            assert!((u.column(c) - &v).amax() <= 1e-10 * v.amax());
        }
    }

    #[test]
    fn block_seed_blocks_are_images() {
        let (m, a, b) = setup(2);
        let f = factorize(&a).unwrap();
        let seed = DMatrix::from_columns(&[b.clone(), m.mul_vec(&b)]);
        let u = krylov_sequence(&f, &m, &seed, 3).unwrap();
        assert_eq!(u.ncols(), 6);
        let next = f.solve_many(&m.mul_mat(&u.columns(2, 2).into_owned())).unwrap();
        assert!((next - u.columns(4, 2)).amax() <= 1e-12 * u.columns(4, 2).amax());
    }

    #[test]
    fn gram_extend_small_cases_and_full_recompute() {
        let (m, a, b) = setup(3);
        let f = factorize(&a).unwrap();
        let u = krylov_sequence(&f, &m, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), 6).unwrap();
        let k1 = gram_extend(&DMatrix::zeros(0, 0), &u, &a).unwrap();
        let u1 = u.column(0).into_owned();
        let u2 = u.column(1).into_owned();
        assert_eq!(k1[(0, 0)], u1.dot(&a.mul_vec(&u1)));
        let k2 = gram_extend(&k1, &u, &a).unwrap();
        assert_eq!(k2[(0, 1)], u1.dot(&a.mul_vec(&u2)));
        assert_eq!(k2[(1, 0)], k2[(0, 1)]);
        assert_eq!(k2[(1, 1)], u2.dot(&a.mul_vec(&u2)));
        let mut k = k2;
        for _ in 3..=5 {
            k = gram_extend(&k, &u, &a).unwrap();
        }
        let u5 = u.columns(0, 5).into_owned();
        let full = u5.transpose() * a.mul_mat(&u5);
        assert!((&k - &full).amax() <= 1e-12 * full.amax());
        assert_eq!(crate::spla::max_asymmetry(&k), 0.0);
    }

    #[test]
    fn energy_rank_examples() {
        assert_eq!(select_rank_energy(&[1.0, 1e-16], 1e-14).unwrap(), 1);
        assert_eq!(select_rank_energy(&[1.0, 1.0, 1.0, 1.0], 0.0).unwrap(), 4);
        assert!(matches!(select_rank_energy(&[0.0, -1e-20], 0.1), Err(Error::ZeroData)));
        assert!(select_rank_energy(&[1.0], 1.0).is_err());
    }

    #[test]
    fn energy_rank_matches_prefix_scan() {
        let (m, a, b) = setup(3);
        let f = factorize(&a).unwrap();
        let u = krylov_sequence(&f, &m, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), 8).unwrap();
        let (spec, _) = gram_spectrum(&u, &a).unwrap();
        let l: Vec<f64> = spec.values.iter().copied().collect();
        let total: f64 = l.iter().sum();
        let brute = (1..=l.len()).find(|&r| l[..r].iter().sum::<f64>() / total >= 1.0 - 1e-14).unwrap();
        assert_eq!(select_rank_energy(&l, 1e-14).unwrap(), brute);
    }

    #[test]
    fn identity_operators_break_at_two() {
        let i = SparseSpd::identity(6);
        let f = factorize(&i).unwrap();
        let b = DVector::from_vec(vec![1.0, 2.0, 0.0, -1.0, 0.5, 0.25]);
        let kb = adaptive_basis(&f, &i, &i, &b, &AdaptiveOptions { ell_max: 5, ..Default::default() }).unwrap();
        assert_eq!(kb.break_step, Some(2));
        assert_eq!(kb.r, 1);
        assert!(a_orthonormality_defect(&kb.q, &i) < 1e-14);
    }

    #[test]
    fn zero_data_rejected() {
        let i = SparseSpd::identity(3);
        let f = factorize(&i).unwrap();
        let r = adaptive_basis(&f, &i, &i, &DVector::zeros(3), &AdaptiveOptions::default());
        assert!(matches!(r, Err(Error::ZeroData)));
    }

    #[test]
    fn quartic_setup_rank_six_and_orthonormal() {
        for level in [4, 5] {
            let (m, a, b) = setup(level);
            let f = factorize(&a).unwrap();
            let kb = adaptive_basis(&f, &m, &a, &b, &AdaptiveOptions::default()).unwrap();
            assert_eq!(kb.r, 6, "level {level}");
            assert!(a_orthonormality_defect(&kb.q, &a) < 1e-8);
            let scale = kb.k[(0, 0)];
            assert!(hankel_defect(&kb.k) <= 1e-8 * scale);
            // A-projection onto span(Q) reproduces the kept Krylov vectors
            for j in 0..kb.r {
                let uj = kb.u.column(j).into_owned();
                let proj = &kb.q * (kb.q.transpose() * a.mul_vec(&uj));
                assert!((&proj - &uj).norm() <= 1e-6 * uj.norm());
            }
        }
    }

    #[test]
    fn relative_scale_changes_the_break() {
        let (m, a, b) = setup(4);
        let f = factorize(&a).unwrap();
        let opts = AdaptiveOptions { scale: TolScale::Relative, ..Default::default() };
        let kb = adaptive_basis(&f, &m, &a, &b, &opts).unwrap();
        let scale = kb.k[(0, 0)];
        let step = kb.break_step.unwrap();
        assert!(kb.lambda[step - 1] <= 1e-14 * scale);
        assert!(kb.lambda[step - 2] > 1e-14 * scale);
    }

    #[test]
    fn accurate_spectrum_agrees_with_dense_at_the_top() {
        let (m, a, b) = setup(4);
        let f = factorize(&a).unwrap();
        let kb = adaptive_basis(&f, &m, &a, &b, &AdaptiveOptions::default()).unwrap();
        for i in 0..3 {
            assert!((kb.lambda[i] - kb.lambda_dense[i]).abs() <= 1e-12 * kb.lambda[0]);
        }
        // eigenvectors reconstruct K
        let rec = &kb.psi * DMatrix::from_diagonal(&kb.lambda) * kb.psi.transpose();
        assert!((rec - &kb.k).amax() <= 1e-12 * kb.k.amax());
    }

    #[test]
    fn decay_report_examples() {
        let rep = decay_report(&[2.0, 2.0]);
        assert_eq!(rep.bound_checks().count(), 0);
        assert_eq!(rep.records.len(), 2);

        let synthetic: Vec<f64> = (0..8).map(|i| 5.0 * 1e-3f64.powi(i)).collect();
        let rep = decay_report(&synthetic);
        assert_eq!(rep.bound_checks().count(), 3);
        assert!(rep.all_pass());
        assert!((rep.records[2].theorem_bound.unwrap() - 16.0 * 5.0).abs() < 1e-12);
        let mut csv = Vec::new();
        rep.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("index,eigenvalue,theorem_bound,ratio\n1,"));
    }

    #[test]
    fn decay_bound_fails_for_flat_spectrum() {
        let rep = decay_report(&[1.0; 8]);
        // the bound for index 7 is far below 1
        assert!(!rep.all_pass());
    }

    #[test]
    fn vandermonde_trivial_and_small_meshes() {
        let (m, a, b) = setup(1);
        let v = vandermonde_check(&m, &a, &b, 1, DEFAULT_DENSE_CAP).unwrap();
        assert!(v.discrepancy <= 1e-14 * v.k[(0, 0)].max(1.0));
        for (level, r) in [(2, 3), (3, 5)] {
            let (m, a, b) = setup(level);
            let v = vandermonde_check(&m, &a, &b, r, DEFAULT_DENSE_CAP).unwrap();
            assert!(v.discrepancy <= 1e-8 * v.k[(0, 0)], "level {level}: {}", v.discrepancy);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn hankel_constancy_for_random_data(seed in 0u64..10_000, level in 2u32..4) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = FemSpace::new(build_mesh(2, level).unwrap(), 1).unwrap();
            let (m, a) = assemble_operators(&s);
            let b = DVector::from_fn(a.n(), |_, _| rng.gen_range(-1.0..1.0));
            let f = factorize(&a).unwrap();
            let u = krylov_sequence(&f, &m, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()), 6).unwrap();
            let k = u.transpose() * a.mul_mat(&u);
            prop_assert!(hankel_defect(&k) <= 1e-8 * k[(0, 0)]);
        }
    }
}
