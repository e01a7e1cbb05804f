//! Triangulations of the unit square and P1 finite element primitives.
//!
//! The built-in mesh family is the structured "crossed" triangulation: `n x n`
//! cells, each split into two right triangles along the same diagonal, with
//! nodes ordered lexicographically by (y, x). For this family `h = sqrt(2)/n`
//! and the stiffness matrix reduces to the classical 5-point stencil scaled by
//! unity, so hand-checked reference values are available.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("subdivision count must be at least 2, got {0}")]
    TooFewSubdivisions(usize),
    #[error("triangle {0} has non-positive area")]
    DegenerateTriangle(usize),
    #[error("mesh file parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coordinates within this distance of 0 or 1 count as lying on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Conforming triangulation of the unit square with cached element geometry.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Node index triples, positively oriented.
    pub triangles: Vec<[usize; 3]>,
    /// Ascending indices of nodes with a coordinate equal to 0 or 1.
    pub boundary_nodes: Vec<usize>,
    /// Maximal element diameter (longest edge over all triangles).
    pub h: f64,
    /// Subdivisions per side for structured meshes, when known.
    pub n_subdivisions: Option<usize>,
    areas: Vec<f64>,
    grads: Vec<[[f64; 2]; 3]>,
    is_boundary: Vec<bool>,
}

impl Mesh {
    /// Assembles the cached geometry for a raw node/triangle list.
    pub fn from_raw(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        n_subdivisions: Option<usize>,
    ) -> Result<Self, MeshError> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut grads = Vec::with_capacity(triangles.len());
        let mut h: f64 = 0.0;
        for (t, tri) in triangles.iter().enumerate() {
            let p = [nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]];
            let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
            if two_a <= 0.0 {
                return Err(MeshError::DegenerateTriangle(t));
            }
            let area = 0.5 * two_a;
            // grad of the hat at vertex i: rotated opposite edge / (2A)
            let mut g = [[0.0; 2]; 3];
            for i in 0..3 {
                let a = p[(i + 1) % 3];
                let b = p[(i + 2) % 3];
                g[i] = [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a];
            }
            areas.push(area);
            grads.push(g);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        let is_boundary: Vec<bool> = nodes
            .iter()
            .map(|p| {
                p.iter().any(|&c| {
                    (c - 0.0).abs() <= BOUNDARY_TOL || (c - 1.0).abs() <= BOUNDARY_TOL
                })
            })
            .collect();
        let boundary_nodes = (0..nodes.len()).filter(|&i| is_boundary[i]).collect();
        Ok(Mesh {
            nodes,
            triangles,
            boundary_nodes,
            h,
            n_subdivisions,
            areas,
            grads,
            is_boundary,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn area(&self, tri: usize) -> f64 {
        self.areas[tri]
    }

    /// Gradient of the hat function of local vertex `i` on triangle `tri`.
    pub fn grad(&self, tri: usize, i: usize) -> [f64; 2] {
        self.grads[tri][i]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Writes the mesh as two CSV files: `index,x,y,is_boundary` and `i,j,k`.
    pub fn write_csv(&self, nodes_path: &Path, triangles_path: &Path) -> Result<(), MeshError> {
        let mut nf = std::fs::File::create(nodes_path)?;
        writeln!(nf, "index,x,y,is_boundary")?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(nf, "{},{},{},{}", i, p[0], p[1], u8::from(self.is_boundary[i]))?;
        }
        let mut tf = std::fs::File::create(triangles_path)?;
        writeln!(tf, "i,j,k")?;
        for t in &self.triangles {
            writeln!(tf, "{},{},{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }

    pub fn read_csv(nodes_path: &Path, triangles_path: &Path) -> Result<Self, MeshError> {
        let mut nodes = Vec::new();
        for (ln, line) in BufReader::new(std::fs::File::open(nodes_path)?)
            .lines()
            .enumerate()
        {
            let line = line?;
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 3 {
                return Err(MeshError::Parse(format!("bad node row: {line}")));
            }
            let x: f64 = f[1].trim().parse().map_err(|e| MeshError::Parse(format!("{e}")))?;
            let y: f64 = f[2].trim().parse().map_err(|e| MeshError::Parse(format!("{e}")))?;
            nodes.push([x, y]);
        }
        let mut triangles = Vec::new();
        for (ln, line) in BufReader::new(std::fs::File::open(triangles_path)?)
            .lines()
            .enumerate()
        {
            let line = line?;
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 3 {
                return Err(MeshError::Parse(format!("bad triangle row: {line}")));
            }
            let mut t = [0usize; 3];
            for (k, s) in f[..3].iter().enumerate() {
                t[k] = s.trim().parse().map_err(|e| MeshError::Parse(format!("{e}")))?;
            }
            triangles.push(t);
        }
        Mesh::from_raw(nodes, triangles, None)
    }
}

/// Structured crossed mesh: `n x n` cells split along the (1,1) diagonal.
///
/// Node count is `(n+1)^2`, nodes ordered lexicographically by (y, x), and
/// `h = sqrt(2)/n` (the cell diagonal).
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh, MeshError> {
    if n < 2 {
        return Err(MeshError::TooFewSubdivisions(n));
    }
    let m = n + 1;
    let mut nodes = Vec::with_capacity(m * m);
    for iy in 0..m {
        for ix in 0..m {
            nodes.push([ix as f64 / n as f64, iy as f64 / n as f64]);
        }
    }
    let idx = |ix: usize, iy: usize| iy * m + ix;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            let ll = idx(ix, iy);
            let lr = idx(ix + 1, iy);
            let ur = idx(ix + 1, iy + 1);
            let ul = idx(ix, iy + 1);
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }
    Mesh::from_raw(nodes, triangles, Some(n))
}

/// Compressed sparse row matrix; symmetric when assembled from the stiffness
/// bilinear form.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds CSR from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; dim + 1];
        for &(r, _, _) in triplets {
            counts[r + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0f64; triplets.len()];
        let mut next = counts.clone();
        for &(r, c, v) in triplets {
            let slot = next[r];
            cols[slot] = c;
            vals[slot] = v;
            next[r] += 1;
        }
        // sort within each row and merge duplicates
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for r in 0..dim {
            let lo = counts[r];
            let hi = counts[r + 1];
            let mut entries: Vec<(usize, f64)> =
                (lo..hi).map(|k| (cols[k], vals[k])).collect();
            entries.sort_by_key(|e| e.0);
            for (c, v) in entries {
                if let Some(last) = col_idx.last() {
                    if *last == c && col_idx.len() > row_ptr[r] {
                        *values.last_mut().unwrap() += v;
                        continue;
                    }
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr[r + 1] = col_idx.len();
        }
        SparseMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.values[self.row_ptr[row]..self.row_ptr[row + 1]]
            .iter()
            .sum()
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn iter_row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[row]..self.row_ptr[row + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }
}

/// Stiffness matrix K[i][j] = integral of grad(phi_i) . grad(phi_j).
///
/// Symmetric positive semidefinite with constants in the kernel.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let a = mesh.area(t);
        for i in 0..3 {
            let gi = mesh.grad(t, i);
            for j in 0..3 {
                let gj = mesh.grad(t, j);
                triplets.push((tri[i], tri[j], a * (gi[0] * gj[0] + gi[1] * gj[1])));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_nodes(), &triplets)
}

/// Six-point triangle quadrature rule, exact for polynomials of degree 4
/// (the degree of the cubic bulk term tested against a P1 hat function).
/// Entries are (barycentric coordinates, weight); weights sum to 1 and scale
/// by the triangle area.
pub const QUAD_DEG4: [([f64; 3], f64); 6] = [
    (
        [0.108_103_018_168_070, 0.445_948_490_915_965, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.108_103_018_168_070, 0.445_948_490_915_965],
        0.223_381_589_678_011,
    ),
    (
        [0.445_948_490_915_965, 0.445_948_490_915_965, 0.108_103_018_168_070],
        0.223_381_589_678_011,
    ),
    (
        [0.816_847_572_980_459, 0.091_576_213_509_771, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.816_847_572_980_459, 0.091_576_213_509_771],
        0.109_951_743_655_322,
    ),
    (
        [0.091_576_213_509_771, 0.091_576_213_509_771, 0.816_847_572_980_459],
        0.109_951_743_655_322,
    ),
];

/// Integrals of (|Q|^2 - beta) Q_c phi_i over one triangle for the three local
/// hats, from nodal values of the P1 field. Returns `[[r1, r2]; 3]`.
pub fn nonlinear_element_integrals(
    area: f64,
    q11: [f64; 3],
    q12: [f64; 3],
    beta: f64,
) -> [[f64; 2]; 3] {
    let mut out = [[0.0; 2]; 3];
    for (bary, w) in QUAD_DEG4 {
        let a = q11[0] * bary[0] + q11[1] * bary[1] + q11[2] * bary[2];
        let b = q12[0] * bary[0] + q12[1] * bary[1] + q12[2] * bary[2];
        let f = (a * a + b * b - beta) * w * area;
        for i in 0..3 {
            out[i][0] += f * a * bary[i];
            out[i][1] += f * b * bary[i];
        }
    }
    out
}

/// The pair of Galerkin integrals of (|Q|^2 - beta) Q_c phi_i for one node.
pub fn quadrature_nonlinear(
    mesh: &Mesh,
    q11: &[f64],
    q12: &[f64],
    beta: f64,
    test_node: usize,
) -> (f64, f64) {
    let mut r = (0.0, 0.0);
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let Some(local) = tri.iter().position(|&n| n == test_node) else {
            continue;
        };
        let contrib = nonlinear_element_integrals(
            mesh.area(t),
            [q11[tri[0]], q11[tri[1]], q11[tri[2]]],
            [q12[tri[0]], q12[tri[1]], q12[tri[2]]],
            beta,
        );
        r.0 += contrib[local][0];
        r.1 += contrib[local][1];
    }
    r
}

/// Evaluates a boundary rule at every boundary node, in ascending node order.
pub fn interpolate_boundary<F>(mesh: &Mesh, bc: F) -> Vec<(usize, [f64; 2])>
where
    F: Fn(f64, f64) -> [f64; 2],
{
    mesh.boundary_nodes
        .iter()
        .map(|&i| {
            let p = mesh.nodes[i];
            (i, bc(p[0], p[1]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_mesh_counts_and_h() {
        let mesh = build_unit_square_mesh(2).unwrap();
        assert_eq!(mesh.n_nodes(), 9);
        assert_eq!(mesh.n_triangles(), 8);
        assert_eq!(mesh.boundary_nodes.len(), 8);
        assert!((mesh.h - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-15);

        let mesh = build_unit_square_mesh(32).unwrap();
        assert_eq!(mesh.n_nodes(), 33 * 33);
        let h = std::f64::consts::SQRT_2 / 32.0;
        assert!((mesh.h - h).abs() < 1e-15);
        assert!((mesh.h - 0.0442).abs() < 1e-4);
    }

    #[test]
    fn rejects_small_n() {
        assert!(matches!(
            build_unit_square_mesh(1),
            Err(MeshError::TooFewSubdivisions(1))
        ));
    }

    #[test]
    fn areas_partition_unit_square() {
        for n in [2, 4, 7] {
            let mesh = build_unit_square_mesh(n).unwrap();
            assert!((mesh.total_area() - 1.0).abs() < 1e-12);
            for t in 0..mesh.n_triangles() {
                assert!(mesh.area(t) > 0.0);
            }
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        for n in [2, 5, 8] {
            let mesh = build_unit_square_mesh(n).unwrap();
            let k = assemble_stiffness(&mesh);
            let ones = vec![1.0; mesh.n_nodes()];
            let mut out = vec![0.0; mesh.n_nodes()];
            k.matvec(&ones, &mut out);
            for v in out {
                assert!(v.abs() < 1e-10);
            }
            for i in 0..mesh.n_nodes() {
                assert!(k.row_sum(i).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stiffness_five_point_stencil() {
        // hand assembly on the crossed mesh: interior diagonal entry is 4
        let mesh = build_unit_square_mesh(2).unwrap();
        let k = assemble_stiffness(&mesh);
        let center = 4; // node (0.5, 0.5)
        assert!((k.get(center, center) - 4.0).abs() < 1e-12);
        assert_eq!(k.max_abs_asymmetry(), 0.0);
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        let s: f64 = QUAD_DEG4.iter().map(|(_, w)| w).sum();
        assert!((s - 1.0).abs() < 1e-14);
        for (b, _) in QUAD_DEG4 {
            assert!((b[0] + b[1] + b[2] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_quadrature_vanishes_on_constant_field() {
        let mesh = build_unit_square_mesh(4).unwrap();
        let beta: f64 = 0.7;
        let q11 = vec![beta.sqrt(); mesh.n_nodes()];
        let q12 = vec![0.0; mesh.n_nodes()];
        for i in 0..mesh.n_nodes() {
            let (r1, r2) = quadrature_nonlinear(&mesh, &q11, &q12, beta, i);
            assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14);
        }
        // zero field with beta = 1: cubic factor vanishes
        let zeros = vec![0.0; mesh.n_nodes()];
        for i in 0..mesh.n_nodes() {
            let (r1, r2) = quadrature_nonlinear(&mesh, &zeros, &zeros, 1.0, i);
            assert_eq!(r1, 0.0);
            assert_eq!(r2, 0.0);
        }
    }

    #[test]
    fn nonlinear_quadrature_reference_triangle_cubic() {
        // Q11 = x on the reference triangle, beta = 0: integral of x^3 phi_i
        // is (1/120, 1/30, 1/120) by the barycentric monomial formula.
        let contrib = nonlinear_element_integrals(0.5, [0.0, 1.0, 0.0], [0.0; 3], 0.0);
        let expected = [1.0 / 120.0, 1.0 / 30.0, 1.0 / 120.0];
        for i in 0..3 {
            assert!((contrib[i][0] - expected[i]).abs() < 1e-15, "{contrib:?}");
            assert_eq!(contrib[i][1], 0.0);
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join("ldg_mesh_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let mesh = build_unit_square_mesh(3).unwrap();
        let npath = dir.join("nodes.csv");
        let tpath = dir.join("triangles.csv");
        mesh.write_csv(&npath, &tpath).unwrap();
        let back = Mesh::read_csv(&npath, &tpath).unwrap();
        assert_eq!(back.n_nodes(), mesh.n_nodes());
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.boundary_nodes, mesh.boundary_nodes);
        assert!((back.h - mesh.h).abs() < 1e-15);
    }
}
