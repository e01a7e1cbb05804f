//! The reduced Landau-de Gennes model: order-parameter fields, parameter maps
//! between the dimensionless pair (alpha, beta) and the physical constants
//! (L, A, B, C), boundary conditions for the bistable square device, director
//! extraction, the 2D->3D tensor lift, the dielectric relation, Stokes
//! parameters and the Berreman matrix.
//!
//! Conventions: the reduced order parameter is Q = (Q11, Q12) with
//! Q11 = s cos(2 theta), Q12 = s sin(2 theta), where theta is the director
//! angle and s the scalar order parameter. The dimensionless groups are
//! alpha = L / (2 C lambda^2) and beta = B^2 / (4 C^2) at the special
//! temperature A = -B^2/(3C), or beta = |A| / (2C) in the general 2D case.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("alpha and beta must be strictly positive, got ({0}, {1})")]
    InvalidReducedParams(f64, f64),
    #[error("rescaled temperature must be negative, got {0}")]
    NonNegativeTemperature(f64),
    #[error("trapezoid parameter must lie in (0, 1/2), got {0}")]
    InvalidTrapezoid(f64),
    #[error("vortex centre ({0}, {1}) must lie strictly inside the unit square")]
    VortexCentreOnBoundary(f64, f64),
    #[error("dielectric anisotropy eps_par - eps_perp must be nonzero")]
    DegenerateAnisotropy,
    #[error("Berreman matrix undefined for eps_33 = 0")]
    SingularEps33,
    #[error("field file parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dimensionless unknowns of the inverse problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ReducedParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, ModelError> {
        if alpha > 0.0 && beta > 0.0 {
            Ok(ReducedParams { alpha, beta })
        } else {
            Err(ModelError::InvalidReducedParams(alpha, beta))
        }
    }
}

/// Physical constants encoded by (alpha, beta): elastic constant L (J/m),
/// bulk constants B, C (J/m^3), rescaled temperature A (J/m^3) and the
/// domain length scale lambda (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub l: f64,
    pub b: f64,
    pub c: f64,
    pub a: f64,
    pub lambda: f64,
}

/// Special-temperature reconstruction: C = -3A/(4 beta), B = 2C sqrt(beta),
/// L = 2 alpha C lambda^2. The returned record satisfies A = -B^2/(3C).
pub fn material_from_reduced(
    p: ReducedParams,
    lambda: f64,
    a: f64,
) -> Result<MaterialParams, ModelError> {
    if a >= 0.0 {
        return Err(ModelError::NonNegativeTemperature(a));
    }
    let c = -3.0 * a / (4.0 * p.beta);
    let b = 2.0 * c * p.beta.sqrt();
    let l = 2.0 * p.alpha * c * lambda * lambda;
    Ok(MaterialParams { l, b, c, a, lambda })
}

/// Inverse of [`material_from_reduced`]: alpha = L/(2 C lambda^2),
/// beta = B^2/(4 C^2).
pub fn reduced_from_material(m: &MaterialParams) -> ReducedParams {
    ReducedParams {
        alpha: m.l / (2.0 * m.c * m.lambda * m.lambda),
        beta: m.b * m.b / (4.0 * m.c * m.c),
    }
}

/// General 2D reconstruction at known temperature A < 0: returns (C, L) with
/// C = |A|/(2 beta) and L = 2 alpha lambda^2 C.
pub fn material_from_reduced_general(
    p: ReducedParams,
    lambda: f64,
    a: f64,
) -> Result<(f64, f64), ModelError> {
    if a >= 0.0 {
        return Err(ModelError::NonNegativeTemperature(a));
    }
    let c = a.abs() / (2.0 * p.beta);
    let l = 2.0 * p.alpha * lambda * lambda * c;
    Ok((c, l))
}

/// Trapezoidal shape function: t/d on [0,d], 1 on [d,1-d], (1-t)/d on [1-d,1].
pub fn trapezoid(d: f64, t: f64) -> f64 {
    if t <= d {
        t / d
    } else if t <= 1.0 - d {
        1.0
    } else {
        (1.0 - t) / d
    }
}

/// Dirichlet boundary rule on the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum BCSpec {
    /// Tangent conditions with trapezoidal corner regularization:
    /// Q = (T_d(x), 0) on y in {0,1}, Q = (-T_d(y), 0) on x in {0,1}.
    Tangent { d: f64 },
    /// Unit vector field of an interior point vortex at (a1, a2):
    /// Q = (x - a1, y - a2) / |(x - a1, y - a2)|.
    Vortex { a1: f64, a2: f64 },
}

impl BCSpec {
    /// Evaluates the boundary data at a point of the boundary.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 2] {
        match *self {
            BCSpec::Tangent { d } => {
                if y.abs() <= 1e-12 || (y - 1.0).abs() <= 1e-12 {
                    [trapezoid(d, x), 0.0]
                } else {
                    [-trapezoid(d, y), 0.0]
                }
            }
            BCSpec::Vortex { a1, a2 } => {
                let dx = x - a1;
                let dy = y - a2;
                let r = dx.hypot(dy);
                [dx / r, dy / r]
            }
        }
    }

    pub fn interpolate(&self, mesh: &Mesh) -> Vec<(usize, [f64; 2])> {
        crate::mesh::interpolate_boundary(mesh, |x, y| self.eval(x, y))
    }
}

pub fn tangent_bc(d: f64) -> Result<BCSpec, ModelError> {
    if d > 0.0 && d < 0.5 {
        Ok(BCSpec::Tangent { d })
    } else {
        Err(ModelError::InvalidTrapezoid(d))
    }
}

pub fn vortex_bc(a1: f64, a2: f64) -> Result<BCSpec, ModelError> {
    if a1 > 0.0 && a1 < 1.0 && a2 > 0.0 && a2 < 1.0 {
        Ok(BCSpec::Vortex { a1, a2 })
    } else {
        Err(ModelError::VortexCentreOnBoundary(a1, a2))
    }
}

/// Nodal values of the reduced order parameter on a fixed triangulation.
#[derive(Debug, Clone)]
pub struct QField {
    pub mesh: Arc<Mesh>,
    pub q11: Vec<f64>,
    pub q12: Vec<f64>,
}

impl QField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_nodes();
        QField {
            mesh,
            q11: vec![0.0; n],
            q12: vec![0.0; n],
        }
    }

    pub fn constant(mesh: Arc<Mesh>, q11: f64, q12: f64) -> Self {
        let n = mesh.n_nodes();
        QField {
            mesh,
            q11: vec![q11; n],
            q12: vec![q12; n],
        }
    }

    /// Builds nodal values from a pointwise rule (x, y) -> [q11, q12].
    pub fn from_fn<F: Fn(f64, f64) -> [f64; 2]>(mesh: Arc<Mesh>, f: F) -> Self {
        let (q11, q12): (Vec<f64>, Vec<f64>) = mesh
            .nodes
            .iter()
            .map(|p| {
                let q = f(p[0], p[1]);
                (q[0], q[1])
            })
            .unzip();
        QField { mesh, q11, q12 }
    }

    pub fn set_boundary(&mut self, values: &[(usize, [f64; 2])]) {
        for &(i, q) in values {
            self.q11[i] = q[0];
            self.q12[i] = q[1];
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.q11
            .iter()
            .chain(self.q12.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Canonical CSV: `node,x,y,q11,q12`.
    pub fn write_csv(&self, path: &Path) -> Result<(), ModelError> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "node,x,y,q11,q12")?;
        for i in 0..self.mesh.n_nodes() {
            let p = self.mesh.nodes[i];
            writeln!(f, "{},{},{},{},{}", i, p[0], p[1], self.q11[i], self.q12[i])?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path, mesh: Arc<Mesh>) -> Result<Self, ModelError> {
        let mut q11 = vec![0.0; mesh.n_nodes()];
        let mut q12 = vec![0.0; mesh.n_nodes()];
        let mut seen = 0usize;
        for (ln, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() < 5 {
                return Err(ModelError::Parse(format!("bad field row: {line}")));
            }
            let i: usize = f[0].trim().parse().map_err(|e| ModelError::Parse(format!("{e}")))?;
            if i >= mesh.n_nodes() {
                return Err(ModelError::Parse(format!("node {i} out of range")));
            }
            q11[i] = f[3].trim().parse().map_err(|e| ModelError::Parse(format!("{e}")))?;
            q12[i] = f[4].trim().parse().map_err(|e| ModelError::Parse(format!("{e}")))?;
            seen += 1;
        }
        if seen != mesh.n_nodes() {
            return Err(ModelError::Parse(format!(
                "field has {seen} rows, mesh has {} nodes",
                mesh.n_nodes()
            )));
        }
        Ok(QField { mesh, q11, q12 })
    }
}

/// Director data at a node: scalar order parameter s = |Q|, angle
/// theta = arctan2(Q12, Q11)/2 in (-pi/2, pi/2], and a defect flag where
/// s falls below 1e-14 (theta is reported as 0 there).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Director {
    pub s: f64,
    pub theta: f64,
    pub defect: bool,
}

pub fn director(q: &QField, node: usize) -> Director {
    let a = q.q11[node];
    let b = q.q12[node];
    let s = a.hypot(b);
    if s < 1e-14 {
        Director {
            s,
            theta: 0.0,
            defect: true,
        }
    } else {
        Director {
            s,
            theta: 0.5 * b.atan2(a),
            defect: false,
        }
    }
}

/// Embeds the reduced tensor into 3D with fixed eigenvalue parameter q3:
/// [[q11-q3, q12, 0], [q12, -q11-q3, 0], [0, 0, 2 q3]]; symmetric, trace free.
pub fn lift_to_3d(q11: f64, q12: f64, q3: f64) -> [[f64; 3]; 3] {
    [
        [q11 - q3, q12, 0.0],
        [q12, -q11 - q3, 0.0],
        [0.0, 0.0, 2.0 * q3],
    ]
}

/// Symmetric dielectric tensor in units of the vacuum permittivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricTensor(pub [[f64; 3]; 3]);

impl DielectricTensor {
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn isotropic(value: f64) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = value;
        }
        DielectricTensor(m)
    }
}

/// eps_ij = (tr_eps / 3) delta_ij + (eps_par - eps_perp) Q_ij.
pub fn dielectric_from_q(
    qf: &[[f64; 3]; 3],
    eps_par: f64,
    eps_perp: f64,
    tr_eps: f64,
) -> DielectricTensor {
    let da = eps_par - eps_perp;
    let iso = tr_eps / 3.0;
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = da * qf[i][j] + if i == j { iso } else { 0.0 };
        }
    }
    DielectricTensor(m)
}

/// Q_ij = (eps_ij - tr(eps)/3 delta_ij) / (eps_par - eps_perp).
pub fn q_from_dielectric(
    eps: &DielectricTensor,
    eps_par: f64,
    eps_perp: f64,
) -> Result<[[f64; 3]; 3], ModelError> {
    let da = eps_par - eps_perp;
    if da == 0.0 {
        return Err(ModelError::DegenerateAnisotropy);
    }
    let iso = eps.trace() / 3.0;
    let mut q = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            q[i][j] = (eps.0[i][j] - if i == j { iso } else { 0.0 }) / da;
        }
    }
    Ok(q)
}

/// Stokes parameters of a monochromatic field with amplitudes a, b and phase
/// difference delta: (a^2+b^2, a^2-b^2, 2ab cos delta, 2ab sin delta).
pub fn stokes(a: f64, b: f64, delta: f64) -> [f64; 4] {
    [
        a * a + b * b,
        a * a - b * b,
        2.0 * a * b * delta.cos(),
        2.0 * a * b * delta.sin(),
    ]
}

/// The 4x4 Berreman propagation matrix for a plane wave with in-plane
/// parameter xi in a medium with dielectric tensor eps.
pub fn berreman_matrix(
    eps: &DielectricTensor,
    xi: f64,
    mu0: f64,
    c: f64,
    eps0: f64,
) -> Result<[[f64; 4]; 4], ModelError> {
    let e = &eps.0;
    let e33 = e[2][2];
    if e33 == 0.0 {
        return Err(ModelError::SingularEps33);
    }
    let e11 = e[0][0];
    let e22 = e[1][1];
    let e12 = e[0][1];
    let e13 = e[0][2];
    let e23 = e[1][2];
    Ok([
        [
            -(e13 / e33) * xi,
            mu0 * c * (e33 - xi * xi) / e33,
            -(e23 / e33) * xi,
            0.0,
        ],
        [
            eps0 * c * (e11 - e13 * e13 / e33),
            -(e13 / e33) * xi,
            eps0 * c * (e12 - e13 * e23 / e33),
            0.0,
        ],
        [0.0, 0.0, 0.0, mu0 * c],
        [
            eps0 * c * (e12 - e13 * e23 / e33),
            -(e23 / e33) * xi,
            eps0 * c * (e22 - e23 * e23 / e33 - xi * xi),
            0.0,
        ],
    ])
}
