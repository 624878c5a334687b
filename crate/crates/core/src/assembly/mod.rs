//! Continuous P1/P2 Lagrange finite elements on a [`Mesh`] with homogeneous
//! Dirichlet conditions imposed by eliminating boundary degrees of freedom.

pub mod quadrature;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::spla::{sym_eig, DenseSpd, SparseSpd};
use quadrature::{simplex_rule, QuadRule};

/// Largest system handed to the dense eigensolver unless overridden.
pub const DEFAULT_DENSE_CAP: usize = 5000;

const EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
const EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Lagrange space of degree 1 or 2. Global DOFs are the mesh vertices
/// followed (for P2) by the edge midpoints; the free DOFs are those lying
/// strictly inside the domain, numbered in global order.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Mesh,
    degree: usize,
    cell_dofs: Vec<Vec<usize>>,
    global_coords: Vec<[f64; 3]>,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
}

impl FemSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Result<FemSpace> {
        if degree != 1 && degree != 2 {
            return Err(Error::InvalidDegree(degree));
        }
        let dim = mesh.dim();
        let mut global_coords: Vec<[f64; 3]> = mesh.vertices().to_vec();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells());
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let local_edges: &[(usize, usize)] = if dim == 2 { &EDGES_2D } else { &EDGES_3D };
        for cell in mesh.cells() {
            let mut dofs = cell.clone();
            if degree == 2 {
                for &(a, b) in local_edges {
                    let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    let id = *edge_ids.entry(key).or_insert_with(|| {
                        let (pa, pb) = (mesh.vertices()[key.0], mesh.vertices()[key.1]);
                        global_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])]);
                        global_coords.len() - 1
                    });
                    dofs.push(id);
                }
            }
            cell_dofs.push(dofs);
        }
        let mut free_index = vec![None; global_coords.len()];
        let mut free_dofs = Vec::new();
        for (g, x) in global_coords.iter().enumerate() {
            if x[..dim].iter().all(|&c| c > 0.0 && c < 1.0) {
                free_index[g] = Some(free_dofs.len());
                free_dofs.push(g);
            }
        }
        Ok(FemSpace { mesh, degree, cell_dofs, global_coords, free_index, free_dofs })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of free (interior) DOFs.
    pub fn n_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    /// Number of DOFs before Dirichlet elimination.
    pub fn n_global_dofs(&self) -> usize {
        self.global_coords.len()
    }

    pub fn dof_coords(&self) -> Vec<[f64; 3]> {
        self.free_dofs.iter().map(|&g| self.global_coords[g]).collect()
    }

    pub fn global_coords(&self) -> &[[f64; 3]] {
        &self.global_coords
    }

    fn local_count(&self) -> usize {
        let d1 = self.dim() + 1;
        if self.degree == 1 {
            d1
        } else {
            d1 * (d1 + 1) / 2
        }
    }
}

/// Affine geometry of one cell.
struct CellGeometry {
    origin: [f64; 3],
    jac: [[f64; 3]; 3],
    det: f64,
    /// Gradients of the barycentric coordinates.
    grad_lambda: Vec<[f64; 3]>,
}

fn cell_geometry(mesh: &Mesh, cell: &[usize]) -> CellGeometry {
    let dim = mesh.dim();
    let v0 = mesh.vertices()[cell[0]];
    let mut jac = [[0.0; 3]; 3];
    for k in 0..dim {
        let vk = mesh.vertices()[cell[k + 1]];
        for r in 0..dim {
            jac[r][k] = vk[r] - v0[r];
        }
    }
    let (det, inv) = if dim == 2 {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let mut inv = [[0.0; 3]; 3];
        inv[0][0] = jac[1][1] / det;
        inv[0][1] = -jac[0][1] / det;
        inv[1][0] = -jac[1][0] / det;
        inv[1][1] = jac[0][0] / det;
        (det, inv)
    } else {
        let m = DMatrix::from_fn(3, 3, |r, c| jac[r][c]);
        let det = m.determinant();
        let mi = m.try_inverse().expect("degenerate cell");
        let mut inv = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                inv[r][c] = mi[(r, c)];
            }
        }
        (det, inv)
    };
    // grad lambda_k (k >= 1) is row k-1 of J^{-1}
    let mut grad_lambda = vec![[0.0; 3]; dim + 1];
    for k in 0..dim {
        for c in 0..dim {
            grad_lambda[k + 1][c] = inv[k][c];
            grad_lambda[0][c] -= inv[k][c];
        }
    }
    CellGeometry { origin: v0, jac, det: det.abs(), grad_lambda }
}

impl CellGeometry {
    fn map(&self, xi: &[f64; 3], dim: usize) -> [f64; 3] {
        let mut x = self.origin;
        for r in 0..dim {
            for k in 0..dim {
                x[r] += self.jac[r][k] * xi[k];
            }
        }
        x
    }
}

fn barycentric(xi: &[f64; 3], dim: usize) -> [f64; 4] {
    let mut l = [0.0; 4];
    l[0] = 1.0 - xi[..dim].iter().sum::<f64>();
    l[1..=dim].copy_from_slice(&xi[..dim]);
    l
}

/// Local basis values and gradients at a point given by barycentric
/// coordinates `lam`.
fn eval_basis(
    degree: usize,
    dim: usize,
    lam: &[f64; 4],
    grad_lambda: &[[f64; 3]],
    values: &mut Vec<f64>,
    grads: &mut Vec<[f64; 3]>,
) {
    values.clear();
    grads.clear();
    let nv = dim + 1;
    let combo = |coef: &[(usize, f64)]| {
        let mut g = [0.0; 3];
        for &(k, c) in coef {
            for d in 0..dim {
                g[d] += c * grad_lambda[k][d];
            }
        }
        g
    };
    if degree == 1 {
        for a in 0..nv {
            values.push(lam[a]);
            grads.push(grad_lambda[a]);
        }
        return;
    }
    for a in 0..nv {
        values.push(lam[a] * (2.0 * lam[a] - 1.0));
        grads.push(combo(&[(a, 4.0 * lam[a] - 1.0)]));
    }
    let edges: &[(usize, usize)] = if dim == 2 { &EDGES_2D } else { &EDGES_3D };
    for &(i, j) in edges {
        values.push(4.0 * lam[i] * lam[j]);
        grads.push(combo(&[(i, 4.0 * lam[j]), (j, 4.0 * lam[i])]));
    }
}

/// Quadrature degree for data that is not a polynomial (loads, error norms).
fn data_rule(dim: usize) -> QuadRule {
    simplex_rule(dim, if dim == 2 { 6 } else { 5 })
}

fn assemble_with(space: &FemSpace, index: impl Fn(usize) -> Option<usize>, n: usize) -> (SparseSpd, SparseSpd) {
    let dim = space.dim();
    let nl = space.local_count();
    let rule = simplex_rule(dim, 2 * space.degree);
    let mut mt = Vec::with_capacity(space.cell_dofs.len() * nl * nl);
    let mut at = Vec::with_capacity(space.cell_dofs.len() * nl * nl);
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut me = vec![0.0; nl * nl];
    let mut ae = vec![0.0; nl * nl];
    for (c, dofs) in space.cell_dofs.iter().enumerate() {
        let geo = cell_geometry(&space.mesh, &space.mesh.cells()[c]);
        me.iter_mut().for_each(|v| *v = 0.0);
        ae.iter_mut().for_each(|v| *v = 0.0);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let lam = barycentric(xi, dim);
            eval_basis(space.degree, dim, &lam, &geo.grad_lambda, &mut vals, &mut grads);
            let wdet = w * geo.det;
            for a in 0..nl {
                for b in a..nl {
                    me[a * nl + b] += wdet * vals[a] * vals[b];
                    let g: f64 = (0..dim).map(|d| grads[a][d] * grads[b][d]).sum();
                    ae[a * nl + b] += wdet * g;
                }
            }
        }
        for a in 0..nl {
            let Some(ia) = index(dofs[a]) else { continue };
            for b in 0..nl {
                let Some(ib) = index(dofs[b]) else { continue };
                let k = if a <= b { a * nl + b } else { b * nl + a };
                mt.push((ia, ib, me[k]));
                at.push((ia, ib, ae[k]));
            }
        }
    }
    (SparseSpd::from_triplets(n, mt), SparseSpd::from_triplets(n, at))
}

/// Mass and stiffness matrices on the free DOFs.
pub fn assemble_operators(space: &FemSpace) -> (SparseSpd, SparseSpd) {
    assemble_with(space, |g| space.free_index[g], space.n_dofs())
}

/// Mass and stiffness matrices over all DOFs, boundary included.
pub fn assemble_full_operators(space: &FemSpace) -> (SparseSpd, SparseSpd) {
    assemble_with(space, Some, space.n_global_dofs())
}

/// Load vector `b_i = int g phi_i` over the free DOFs.
pub fn assemble_load(space: &FemSpace, g: &dyn Fn(&[f64]) -> f64) -> DVector<f64> {
    assemble_loads(space, &[g]).column(0).into_owned()
}

/// Scalar function of position.
pub type PointFn<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Several load vectors in one sweep over the mesh; column `j` belongs to
/// `gs[j]`.
pub fn assemble_loads(space: &FemSpace, gs: &[PointFn<'_>]) -> DMatrix<f64> {
    let dim = space.dim();
    let rule = data_rule(dim);
    let mut b = DMatrix::zeros(space.n_dofs(), gs.len());
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    let mut gv = vec![0.0; gs.len()];
    for (c, dofs) in space.cell_dofs.iter().enumerate() {
        if dofs.iter().all(|&g| space.free_index[g].is_none()) {
            continue;
        }
        let geo = cell_geometry(&space.mesh, &space.mesh.cells()[c]);
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let lam = barycentric(xi, dim);
            let x = geo.map(xi, dim);
            for (j, g) in gs.iter().enumerate() {
                gv[j] = g(&x[..dim]) * w * geo.det;
            }
            eval_basis(space.degree, dim, &lam, &geo.grad_lambda, &mut vals, &mut grads);
            for (a, &dof) in dofs.iter().enumerate() {
                if let Some(i) = space.free_index[dof] {
                    for j in 0..gs.len() {
                        b[(i, j)] += gv[j] * vals[a];
                    }
                }
            }
        }
    }
    b
}

/// Nodal interpolant on the free DOFs.
pub fn interpolate(space: &FemSpace, u: &dyn Fn(&[f64]) -> f64) -> DVector<f64> {
    let dim = space.dim();
    DVector::from_iterator(space.n_dofs(), space.free_dofs.iter().map(|&g| u(&space.global_coords[g][..dim])))
}

/// Exact gradient callback used by [`error_norms`].
pub type GradFn<'a> = &'a dyn Fn(&[f64]) -> [f64; 3];

/// `(||u - u_h||_L2, ||grad(u - u_h)||_L2)` by element quadrature.
pub fn error_norms(
    space: &FemSpace,
    coeffs: &DVector<f64>,
    u: &dyn Fn(&[f64]) -> f64,
    grad_u: GradFn<'_>,
) -> Result<(f64, f64)> {
    if coeffs.len() != space.n_dofs() {
        return Err(Error::mismatch("error_norms", space.n_dofs(), coeffs.len()));
    }
    let dim = space.dim();
    let rule = data_rule(dim);
    let (mut l2, mut h1) = (0.0, 0.0);
    let (mut vals, mut grads) = (Vec::new(), Vec::new());
    for (c, dofs) in space.cell_dofs.iter().enumerate() {
        let geo = cell_geometry(&space.mesh, &space.mesh.cells()[c]);
        let local: Vec<f64> = dofs.iter().map(|&g| space.free_index[g].map_or(0.0, |i| coeffs[i])).collect();
        for (xi, &w) in rule.points.iter().zip(&rule.weights) {
            let lam = barycentric(xi, dim);
            let x = geo.map(xi, dim);
            eval_basis(space.degree, dim, &lam, &geo.grad_lambda, &mut vals, &mut grads);
            let mut uh = 0.0;
            let mut guh = [0.0; 3];
            for a in 0..local.len() {
                uh += local[a] * vals[a];
                for d in 0..dim {
                    guh[d] += local[a] * grads[a][d];
                }
            }
            let ue = u(&x[..dim]);
            let ge = grad_u(&x[..dim]);
            let wd = w * geo.det;
            l2 += wd * (ue - uh).powi(2);
            h1 += wd * (0..dim).map(|d| (ge[d] - guh[d]).powi(2)).sum::<f64>();
        }
    }
    Ok((l2.sqrt(), h1.sqrt()))
}

/// `sqrt(v^T M v)`, the L2 norm of a finite element function.
pub fn l2_norm(mass: &SparseSpd, v: &DVector<f64>) -> f64 {
    crate::spla::a_norm(mass, v).expect("l2_norm dimension")
}

/// Generalized eigenpairs `A phi = lambda M phi` with the `count` smallest
/// eigenvalues, ascending, eigenvectors normalized so that
/// `phi_i^T A phi_j = delta_ij`. Dense; refuses systems larger than `cap`.
pub fn discrete_eigenpairs(
    mass: &SparseSpd,
    stiff: &SparseSpd,
    count: usize,
    cap: usize,
) -> Result<Vec<(f64, DVector<f64>)>> {
    let n = mass.n();
    if stiff.n() != n {
        return Err(Error::mismatch("discrete_eigenpairs", n, stiff.n()));
    }
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    if count > n {
        return Err(Error::InvalidArgument(format!("requested {count} eigenpairs of a size-{n} problem")));
    }
    let chol = DenseSpd::new(mass.to_dense())?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::NotPositiveDefinite("mass factor is singular".into()))?;
    let c = &l_inv * stiff.to_dense() * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = sym_eig(&c)?;
    let lt_inv = l_inv.transpose();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let col = n - 1 - k;
        let lambda = eig.values[col];
        let mut phi = &lt_inv * eig.vectors.column(col);
        let anorm = crate::spla::a_norm(stiff, &phi)?;
        phi /= anorm;
        out.push((lambda, phi));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;
    use crate::spla::a_inner;
    use std::f64::consts::PI;

    fn space(dim: usize, level: u32, degree: usize) -> FemSpace {
        FemSpace::new(build_mesh(dim, level).unwrap(), degree).unwrap()
    }

    #[test]
    fn level_one_center_node() {
        let s = space(2, 1, 1);
        assert_eq!(s.n_dofs(), 1);
        let (m, a) = assemble_operators(&s);
        assert!((a.get(0, 0) - 4.0).abs() < 1e-14);
        // six incident triangles of area 1/8, diagonal mass |T|/6 each
        assert!((m.get(0, 0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn dof_counts() {
        for level in 1..5u32 {
            let n = 1usize << level;
            assert_eq!(space(2, level, 1).n_dofs(), (n - 1) * (n - 1));
            assert_eq!(space(2, level, 2).n_dofs(), (2 * n - 1) * (2 * n - 1));
        }
        for level in 1..3u32 {
            let n = 1usize << level;
            assert_eq!(space(3, level, 1).n_dofs(), (n - 1).pow(3));
        }
        for s in [space(2, 2, 2), space(3, 2, 2)] {
            for x in s.dof_coords() {
                assert!(x[..s.dim()].iter().all(|&c| c > 0.0 && c < 1.0));
            }
        }
        assert!(matches!(FemSpace::new(build_mesh(2, 1).unwrap(), 3), Err(Error::InvalidDegree(3))));
    }

    #[test]
    fn partition_of_unity_and_constant_kernel() {
        for (dim, level, degree) in [(2, 3, 1), (2, 3, 2), (3, 2, 1), (3, 2, 2)] {
            let s = space(dim, level, degree);
            let (m, a) = assemble_full_operators(&s);
            let ones = DVector::from_element(s.n_global_dofs(), 1.0);
            let total = ones.dot(&m.mul_vec(&ones));
            assert!((total - 1.0).abs() < 1e-12, "{dim} {level} {degree}: {total}");
            assert!(a.mul_vec(&ones).amax() < 1e-11);
        }
    }

    #[test]
    fn operators_exactly_symmetric() {
        for (dim, level, degree) in [(2, 4, 1), (2, 3, 2), (3, 2, 2)] {
            let (m, a) = assemble_operators(&space(dim, level, degree));
            assert_eq!(m.max_asymmetry(), 0.0);
            assert_eq!(a.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn operators_positive_definite() {
        for (dim, level, degree) in [(2, 3, 1), (2, 2, 2), (3, 2, 1)] {
            let (m, a) = assemble_operators(&space(dim, level, degree));
            assert!(DenseSpd::new(m.to_dense()).is_ok());
            assert!(DenseSpd::new(a.to_dense()).is_ok());
        }
    }

    #[test]
    fn p2_reference_mass_matrix() {
        // Oracle: P2 mass matrix on the reference triangle (area 1/2) is
        // (1/360) [[6,-1,-1,0,-4,0] ...] in vertex/edge ordering; we compare
        // against the closed form entries for vertex-vertex, vertex-edge and
        // edge-edge couplings.
        let mesh = build_mesh(2, 0).unwrap();
        let s = FemSpace::new(mesh, 2).unwrap();
        let (m, _) = assemble_full_operators(&s);
        // cell 0 = [v00, v10, v11]; its two triangles share the diagonal, so
        // read couplings from a vertex that belongs only to cell 0 (v10 = 1).
        let area = 0.5;
        assert!((m.get(1, 1) - area * 6.0 / 180.0).abs() < 1e-15);
        // vertex 1 with the opposite edge midpoint (0,0)-(1,1): -area/45
        let diag_mid = s.global_coords().iter().position(|p| p[0] == 0.5 && p[1] == 0.5).unwrap();
        assert!((m.get(1, diag_mid) + area * 4.0 / 180.0).abs() < 1e-15);
        // vertex-vertex inside one cell: -area/180
        assert!((m.get(1, 3) + area / 180.0).abs() < 1e-15);
        // edge-edge diagonal in one cell: 32 area/180; edge (1,2) is unshared
        let e12 = s.global_coords().iter().position(|p| p[0] == 1.0 && p[1] == 0.5).unwrap();
        assert!((m.get(e12, e12) - 32.0 * area / 180.0).abs() < 1e-15);
        assert!((m.get(e12, diag_mid) - 16.0 * area / 180.0).abs() < 1e-15);
    }

    #[test]
    fn constant_load_is_support_over_three() {
        let s = space(2, 3, 1);
        let b = assemble_load(&s, &|_| 1.0);
        let h = 1.0 / 8.0;
        // every interior vertex touches six triangles of area h^2/2
        for v in b.iter() {
            assert!((v - 6.0 * 0.5 * h * h / 3.0).abs() < 1e-15);
        }
        assert_eq!(assemble_load(&s, &|_| 0.0).amax(), 0.0);
    }

    /// Gauss-Legendre nodes from the Jacobi matrix eigenproblem, an
    /// independent construction from the Newton iteration in the library.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let j = DMatrix::from_fn(n, n, |r, c| {
            if r + 1 == c || c + 1 == r {
                let k = r.max(c) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let e = nalgebra::SymmetricEigen::new(j);
        let x = e.eigenvalues.iter().map(|z| 0.5 * (z + 1.0)).collect();
        let w = (0..n).map(|i| e.eigenvectors[(0, i)].powi(2)).collect();
        (x, w)
    }

    #[test]
    fn quartic_source_load_matches_high_order_oracle() {
        let f = |x: &[f64]| 1e4 * (x[0] - 0.1) * (x[1] - 0.2) * (x[0] - 0.3) * (x[1] - 0.4);
        let s = space(2, 2, 1);
        let b = assemble_load(&s, &f);
        // oracle: collapsed degree-10 Gauss rule built from Golub-Welsch nodes
        let (gx, gw) = golub_welsch(6);
        let mut oracle = DVector::zeros(s.n_dofs());
        for cell in s.mesh().cells() {
            let p: Vec<&[f64]> = cell.iter().map(|&v| s.mesh().vertex(v)).collect();
            let det = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
            for (&v, &wv) in gx.iter().zip(&gw) {
                for (&u, &wu) in gx.iter().zip(&gw) {
                    let (x1, x2) = (u * (1.0 - v), v);
                    let w = wu * wv * (1.0 - v) * det;
                    let lam = [1.0 - x1 - x2, x1, x2];
                    let x = [
                        p[0][0] + x1 * (p[1][0] - p[0][0]) + x2 * (p[2][0] - p[0][0]),
                        p[0][1] + x1 * (p[1][1] - p[0][1]) + x2 * (p[2][1] - p[0][1]),
                    ];
                    for k in 0..3 {
                        if let Some(i) = s.free_index[cell[k]] {
                            oracle[i] += w * f(&x) * lam[k];
                        }
                    }
                }
            }
        }
        assert!((&b - &oracle).amax() <= 1e-10 * oracle.amax());
    }

    #[test]
    fn p1_hat_represented_exactly() {
        // centre hat of the level-1 mesh, written out per triangle
        let hat = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            let v = if a <= 0.5 && b <= 0.5 {
                (2.0 * a).min(2.0 * b)
            } else if a >= 0.5 && b >= 0.5 {
                (2.0 - 2.0 * a).min(2.0 - 2.0 * b)
            } else if a > b {
                (1.0 - 2.0 * (a - b)).min(if a < 0.5 { 2.0 * b } else { 2.0 - 2.0 * a })
            } else {
                (1.0 - 2.0 * (b - a)).min(if b < 0.5 { 2.0 * a } else { 2.0 - 2.0 * b })
            };
            v.max(0.0)
        };
        let hat_grad = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            // the six triangles around (1/2, 1/2)
            if a <= 0.5 && b <= 0.5 {
                if a >= b {
                    [0.0, 2.0, 0.0]
                } else {
                    [2.0, 0.0, 0.0]
                }
            } else if a >= 0.5 && b >= 0.5 {
                if a >= b {
                    [-2.0, 0.0, 0.0]
                } else {
                    [0.0, -2.0, 0.0]
                }
            } else if 1.0 - 2.0 * (a - b).abs() <= 0.0 {
                [0.0; 3]
            } else if a > b {
                [-2.0, 2.0, 0.0]
            } else {
                [2.0, -2.0, 0.0]
            }
        };
        let s = space(2, 1, 1);
        let c = interpolate(&s, &hat);
        assert_eq!(c[0], 1.0);
        let (l2, h1) = error_norms(&s, &c, &hat, &hat_grad).unwrap();
        assert!(l2 < 1e-12 && h1 < 1e-12, "{l2} {h1}");
    }

    #[test]
    fn p2_bubble_represented_exactly() {
        // level 0: the only free P2 DOF is the midpoint of the diagonal,
        // basis 4 (1-x) y below the diagonal and 4 x (1-y) above it
        let u = |x: &[f64]| if x[0] >= x[1] { 4.0 * (1.0 - x[0]) * x[1] } else { 4.0 * x[0] * (1.0 - x[1]) };
        let gu = |x: &[f64]| {
            if x[0] >= x[1] {
                [-4.0 * x[1], 4.0 * (1.0 - x[0]), 0.0]
            } else {
                [4.0 * (1.0 - x[1]), -4.0 * x[0], 0.0]
            }
        };
        let s = space(2, 0, 2);
        assert_eq!(s.n_dofs(), 1);
        let c = interpolate(&s, &u);
        let (l2, h1) = error_norms(&s, &c, &u, &gu).unwrap();
        assert!(l2 < 1e-12 && h1 < 1e-12, "{l2} {h1}");
    }

    #[test]
    fn error_norms_closed_forms() {
        let s = space(2, 4, 1);
        let zero = DVector::zeros(s.n_dofs());
        let (l2, h1) = error_norms(&s, &zero, &|_| 0.0, &|_| [0.0; 3]).unwrap();
        assert_eq!((l2, h1), (0.0, 0.0));
        let u = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let gu =
            |x: &[f64]| [PI * (PI * x[0]).cos() * (PI * x[1]).sin(), PI * (PI * x[0]).sin() * (PI * x[1]).cos(), 0.0];
        let (l2, h1) = error_norms(&s, &zero, &u, &gu).unwrap();
        assert!((l2 - 0.5).abs() < 1e-8, "{l2}");
        assert!((h1 - PI / 2f64.sqrt()).abs() < 1e-7, "{h1}");
        assert!(error_norms(&s, &DVector::zeros(3), &u, &gu).is_err());
    }

    #[test]
    fn poisson_l2_rate_is_two() {
        // -Delta u = f with u = x(x-1) y(y-1)
        let u = |x: &[f64]| x[0] * (x[0] - 1.0) * x[1] * (x[1] - 1.0);
        let gu = |x: &[f64]| [(2.0 * x[0] - 1.0) * x[1] * (x[1] - 1.0), x[0] * (x[0] - 1.0) * (2.0 * x[1] - 1.0), 0.0];
        let f = |x: &[f64]| -2.0 * (x[1] * (x[1] - 1.0) + x[0] * (x[0] - 1.0));
        let mut errs = Vec::new();
        for level in 3..=6 {
            let s = space(2, level, 1);
            let (_, a) = assemble_operators(&s);
            let b = assemble_load(&s, &f);
            let x = crate::spla::factorize(&a).unwrap().solve(&b).unwrap();
            errs.push(error_norms(&s, &x, &u, &gu).unwrap().0);
        }
        for w in errs.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((1.85..=2.15).contains(&rate), "rate {rate}");
        }
    }

    #[test]
    fn eigenpairs_level_one_and_normalization() {
        let s = space(2, 1, 1);
        let (m, a) = assemble_operators(&s);
        let e = discrete_eigenpairs(&m, &a, 1, DEFAULT_DENSE_CAP).unwrap();
        assert!((e[0].0 - 32.0).abs() < 1e-12);
        assert!((a_inner(&a, &e[0].1, &e[0].1).unwrap() - 1.0).abs() < 1e-14);

        let s = space(2, 3, 1);
        let (m, a) = assemble_operators(&s);
        let e = discrete_eigenpairs(&m, &a, 6, DEFAULT_DENSE_CAP).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let g = a_inner(&a, &e[i].1, &e[j].1).unwrap();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
            if i > 0 {
                assert!(e[i].0 >= e[i - 1].0);
            }
            let r = a.mul_vec(&e[i].1) - e[i].0 * m.mul_vec(&e[i].1);
            assert!(r.amax() < 1e-10 * e[i].0);
        }
        assert!(matches!(discrete_eigenpairs(&m, &a, 2, 10), Err(Error::DenseCapExceeded { .. })));
    }

    #[test]
    fn first_eigenvalue_approaches_continuum() {
        let mut prev = f64::INFINITY;
        for level in 2..=5 {
            let s = space(2, level, 1);
            let (m, a) = assemble_operators(&s);
            let l1 = discrete_eigenpairs(&m, &a, 1, DEFAULT_DENSE_CAP).unwrap()[0].0;
            assert!(l1 < prev && l1 > 2.0 * PI * PI);
            prev = l1;
        }
        assert!((prev / (2.0 * PI * PI) - 1.0).abs() < 0.05);
    }
}
