//! Structured simplicial meshes of the unit square and unit cube.
//!
//! Vertices live on a `(2^level + 1)^dim` grid stored in lexicographic order
//! (x fastest). Squares are split into two triangles along the `(0,0)-(1,1)`
//! diagonal; cubes into six tetrahedra around the main diagonal (Kuhn split),
//! which makes neighbouring cubes conforming.

use std::io::{self, Write};

use crate::error::{Error, Result};

/// Largest supported refinement level, chosen so that vertex counts stay
/// well inside `u32` (cell connectivity is stored as `usize`, but the grids
/// above this are far outside anything assembled in memory anyway).
pub const MAX_LEVEL_2D: u32 = 14;
pub const MAX_LEVEL_3D: u32 = 9;

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    level: u32,
    vertices: Vec<[f64; 3]>,
    cells: Vec<Vec<usize>>,
    boundary_mask: Vec<bool>,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of grid intervals per axis, `2^level`.
    pub fn divisions(&self) -> usize {
        1 << self.level
    }

    /// Grid spacing `2^-level`.
    pub fn grid_spacing(&self) -> f64 {
        1.0 / self.divisions() as f64
    }

    /// Maximum cell diameter: `sqrt(dim) * 2^-level` for both splits.
    pub fn mesh_size(&self) -> f64 {
        (self.dim as f64).sqrt() * self.grid_spacing()
    }

    /// Vertex coordinates, padded with zeros beyond `dim`.
    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i][..self.dim]
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_boundary_vertices(&self) -> usize {
        self.boundary_mask.iter().filter(|&&b| b).count()
    }

    /// Signed volume of cell `c` (positive for every cell of a built mesh).
    pub fn signed_volume(&self, c: usize) -> f64 {
        let pts: Vec<&[f64]> = self.cells[c].iter().map(|&v| self.vertex(v)).collect();
        signed_simplex_volume(&pts)
    }

    /// Plain-text dump: a header comment, one vertex per line, then one cell
    /// per line as whitespace-separated vertex indices.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# dim={} level={} vertices={} cells={}",
            self.dim,
            self.level,
            self.n_vertices(),
            self.n_cells()
        )?;
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|x| format!("{x}")).collect();
            writeln!(out, "{}", coords.join(" "))?;
        }
        for c in &self.cells {
            let idx: Vec<String> = c.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{}", idx.join(" "))?;
        }
        Ok(())
    }
}

pub(crate) fn signed_simplex_volume(pts: &[&[f64]]) -> f64 {
    match pts.len() {
        3 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
        4 => {
            let d = |p: &[f64]| [p[0] - pts[0][0], p[1] - pts[0][1], p[2] - pts[0][2]];
            let (u, v, w) = (d(pts[1]), d(pts[2]), d(pts[3]));
            let det = u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
                + u[2] * (v[0] * w[1] - v[1] * w[0]);
            det / 6.0
        }
        n => panic!("simplex with {n} vertices"),
    }
}

/// Builds the structured mesh of `(0,1)^dim` at refinement `level`.
pub fn build_mesh(dim: usize, level: u32) -> Result<Mesh> {
    let max_level = match dim {
        2 => MAX_LEVEL_2D,
        3 => MAX_LEVEL_3D,
        _ => return Err(Error::InvalidDimension(dim)),
    };
    if level > max_level {
        return Err(Error::LevelTooLarge { dim, level, max: max_level });
    }
    let n = 1usize << level;
    let np = n + 1;
    let h = 1.0 / n as f64;
    let on_boundary = |i: usize| i == 0 || i == n;

    let n_vertices = np.pow(dim as u32);
    let mut vertices = Vec::with_capacity(n_vertices);
    let mut boundary_mask = Vec::with_capacity(n_vertices);
    let kmax = if dim == 3 { np } else { 1 };
    for k in 0..kmax {
        for j in 0..np {
            for i in 0..np {
                let z = if dim == 3 { k as f64 * h } else { 0.0 };
                vertices.push([i as f64 * h, j as f64 * h, z]);
                let bnd = on_boundary(i) || on_boundary(j) || (dim == 3 && on_boundary(k));
                boundary_mask.push(bnd);
            }
        }
    }

    let cells = if dim == 2 {
        let idx = |i: usize, j: usize| i + np * j;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                cells.push(vec![v00, v10, v11]);
                cells.push(vec![v00, v11, v01]);
            }
        }
        cells
    } else {
        let idx = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for perm in PERMS {
                        let mut p = [i, j, k];
                        let mut tet = vec![idx(p[0], p[1], p[2])];
                        for axis in perm {
                            p[axis] += 1;
                            tet.push(idx(p[0], p[1], p[2]));
                        }
                        cells.push(tet);
                    }
                }
            }
        }
        cells
    };

    let mut mesh = Mesh { dim, level, vertices, cells, boundary_mask };
    for c in 0..mesh.cells.len() {
        if mesh.signed_volume(c) < 0.0 {
            mesh.cells[c].swap(1, 2);
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn unit_square_level_zero() {
        let m = build_mesh(2, 0).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 2);
        assert!(m.boundary_mask().iter().all(|&b| b));
    }

    #[test]
    fn level_one_square_has_one_interior_vertex() {
        let m = build_mesh(2, 1).unwrap();
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_cells(), 8);
        let interior: Vec<usize> = (0..9).filter(|&i| !m.boundary_mask()[i]).collect();
        assert_eq!(interior, vec![4]);
        assert_eq!(m.vertex(4), &[0.5, 0.5]);
    }

    #[test]
    fn kuhn_cube_level_one_volume() {
        let m = build_mesh(3, 1).unwrap();
        assert_eq!(m.n_vertices(), 27);
        assert_eq!(m.n_cells(), 48);
        // Oracle: each of the 8 subcubes has volume 1/8 and its Kuhn split has
        // 6 tets of volume (1/2)^3 / 6.
        let expected_tet = 0.125 / 6.0;
        for c in 0..m.n_cells() {
            assert!((m.signed_volume(c) - expected_tet).abs() < 1e-15);
        }
        let total: f64 = (0..m.n_cells()).map(|c| m.signed_volume(c)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn volumes_partition_the_domain() {
        for (dim, levels) in [(2usize, 0..=6u32), (3, 0..=4)] {
            for level in levels {
                let m = build_mesh(dim, level).unwrap();
                let mut total = 0.0;
                for c in 0..m.n_cells() {
                    let v = m.signed_volume(c);
                    assert!(v > 0.0, "dim {dim} level {level} cell {c}");
                    total += v;
                }
                assert!((total - 1.0).abs() <= 1e-12, "dim {dim} level {level}: {total}");
            }
        }
    }

    #[test]
    fn boundary_marks_match_coordinates() {
        for (dim, level) in [(2, 3), (3, 2)] {
            let m = build_mesh(dim, level).unwrap();
            for i in 0..m.n_vertices() {
                let on = m.vertex(i).iter().any(|&x| x == 0.0 || x == 1.0);
                assert_eq!(on, m.boundary_mask()[i]);
            }
        }
        for level in 0..6 {
            let m = build_mesh(2, level).unwrap();
            assert_eq!(m.n_boundary_vertices(), 4 << level);
        }
    }

    #[test]
    fn interior_edges_shared_by_two_triangles() {
        let m = build_mesh(2, 3).unwrap();
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for c in m.cells() {
            assert!(c.iter().all(|&v| v < m.n_vertices()));
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let e = (c[a].min(c[b]), c[a].max(c[b]));
                *count.entry(e).or_default() += 1;
            }
        }
        for ((a, b), n) in count {
            let mid: Vec<f64> = (0..2).map(|d| 0.5 * (m.vertex(a)[d] + m.vertex(b)[d])).collect();
            let boundary_edge = mid.iter().any(|&x| x == 0.0 || x == 1.0);
            assert_eq!(n, if boundary_edge { 1 } else { 2 });
        }
    }

    #[test]
    fn mesh_size_matches_longest_edge() {
        for (dim, level) in [(2usize, 2u32), (3, 1)] {
            let m = build_mesh(dim, level).unwrap();
            let mut hmax: f64 = 0.0;
            for c in m.cells() {
                for a in 0..c.len() {
                    for b in a + 1..c.len() {
                        let d: f64 =
                            (0..dim).map(|k| (m.vertex(c[a])[k] - m.vertex(c[b])[k]).powi(2)).sum::<f64>().sqrt();
                        hmax = hmax.max(d);
                    }
                }
            }
            assert!((hmax - m.mesh_size()).abs() < 1e-15);
        }
        let m = build_mesh(2, 4).unwrap();
        assert!((m.mesh_size() - 2f64.sqrt() / 16.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(build_mesh(1, 2), Err(Error::InvalidDimension(1))));
        assert!(matches!(build_mesh(4, 2), Err(Error::InvalidDimension(4))));
        assert!(matches!(build_mesh(2, 40), Err(Error::LevelTooLarge { .. })));
        assert!(matches!(build_mesh(3, 12), Err(Error::LevelTooLarge { .. })));
    }

    #[test]
    fn text_dump_has_one_line_per_entity() {
        let m = build_mesh(2, 1).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 9 + 8);
        assert_eq!(lines[1], "0 0");
        assert_eq!(lines[10].split_whitespace().count(), 3);
    }
}
