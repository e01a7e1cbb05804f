//! Newton solver for the discrete Galerkin system of the reduced model,
//!
//! ```text
//! alpha \int grad(Q) . grad(phi) + \int (|Q|^2 - beta) Q phi = 0
//! ```
//!
//! over interior nodes, with Dirichlet data imposed on the boundary, plus the
//! deterministic branch seeds that select the diagonal, rotated and
//! cross-shaped (WORS-like) equilibria.

pub mod band;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{assemble_stiffness, nonlinear_element_integrals, Mesh, SparseMatrix, QUAD_DEG4};
use crate::model::{BCSpec, QField};

use band::BandMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum LinearSolver {
    /// Banded LU with partial pivoting; robust near bifurcation points.
    Direct,
    /// Conjugate gradient; an option for large meshes, valid while the
    /// Newton systems stay positive definite.
    ConjugateGradient { tol: f64, max_iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Tolerance on the Euclidean norm of the assembled residual.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-10,
            max_iter: 30,
            linear_solver: LinearSolver::Direct,
        }
    }
}

/// Initial guesses for the known solution branches. The named seeds are the
/// fixed director fields Q = (cos 2 theta, sin 2 theta) with
/// theta = pi/4 (D1), -pi/4 (D2), pi*y (R1), -pi*y (R2), pi*x + pi/2 (R3),
/// -pi*x + pi/2 (R4); the WORS seed is the bilinear cross profile
/// Q11 = -4 (x - y)(x + y - 1), Q12 = 0.
#[derive(Debug, Clone)]
pub enum BranchSeed {
    D1,
    D2,
    R1,
    R2,
    R3,
    R4,
    Wors,
    FromField(QField),
}

impl BranchSeed {
    pub fn name(&self) -> &'static str {
        match self {
            BranchSeed::D1 => "D1",
            BranchSeed::D2 => "D2",
            BranchSeed::R1 => "R1",
            BranchSeed::R2 => "R2",
            BranchSeed::R3 => "R3",
            BranchSeed::R4 => "R4",
            BranchSeed::Wors => "WORS",
            BranchSeed::FromField(_) => "field",
        }
    }

    pub fn from_name(name: &str) -> Option<BranchSeed> {
        Some(match name {
            "D1" => BranchSeed::D1,
            "D2" => BranchSeed::D2,
            "R1" => BranchSeed::R1,
            "R2" => BranchSeed::R2,
            "R3" => BranchSeed::R3,
            "R4" => BranchSeed::R4,
            "WORS" => BranchSeed::Wors,
            _ => return None,
        })
    }

    /// The classification the seed is expected to produce, if any.
    pub fn expected_class(&self) -> Option<BranchClass> {
        match self {
            BranchSeed::D1 | BranchSeed::D2 => Some(BranchClass::Diagonal),
            BranchSeed::R1 | BranchSeed::R2 | BranchSeed::R3 | BranchSeed::R4 => {
                Some(BranchClass::Rotated)
            }
            BranchSeed::Wors | BranchSeed::FromField(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchClass {
    Diagonal,
    Rotated,
    Other,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub solution: QField,
    /// Set by [`solve_branch`].
    pub branch: Option<BranchClass>,
    /// True when the classification disagrees with the requested seed.
    pub branch_mismatch: bool,
}

impl SolveReport {
    /// JSON summary without the field data (which goes to the field CSV).
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_history": self.residual_history,
            "branch": self.branch,
            "branch_mismatch": self.branch_mismatch,
        })
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("newton did not converge in {max_iter} iterations (best residual {best_residual:.3e})")]
    NonConvergence {
        max_iter: usize,
        best_residual: f64,
        report: Box<SolveReport>,
    },
    #[error("singular Newton system at iteration {iteration} (pivot column {column})")]
    SingularLinearSolve { iteration: usize, column: usize },
    #[error("conjugate gradient stalled at iteration {0}")]
    CgBreakdown(usize),
}

/// Precomputed assembly context: stiffness matrix, interior numbering and the
/// band profile of the Newton systems. Immutable and shareable.
#[derive(Debug)]
pub struct Discretization {
    pub mesh: Arc<Mesh>,
    stiffness: SparseMatrix,
    interior: Vec<usize>,
    interior_slot: Vec<Option<usize>>,
    half_bandwidth: usize,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        let stiffness = assemble_stiffness(&mesh);
        let interior: Vec<usize> = (0..mesh.n_nodes()).filter(|&i| !mesh.is_boundary(i)).collect();
        let mut interior_slot = vec![None; mesh.n_nodes()];
        for (slot, &node) in interior.iter().enumerate() {
            interior_slot[node] = Some(slot);
        }
        // dof half-bandwidth over element couplings of interior nodes
        let mut gap = 0usize;
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if let (Some(sa), Some(sb)) = (interior_slot[a], interior_slot[b]) {
                        gap = gap.max(sa.abs_diff(sb));
                    }
                }
            }
        }
        let half_bandwidth = 2 * gap + 1;
        Discretization {
            mesh,
            stiffness,
            interior,
            interior_slot,
            half_bandwidth,
        }
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    /// Galerkin residual over interior nodes, interleaved as
    /// [r1_0, r2_0, r1_1, r2_1, ...].
    pub fn residual(&self, q: &QField, alpha: f64, beta: f64) -> Vec<f64> {
        let n = self.mesh.n_nodes();
        let mut bulk1 = vec![0.0; n];
        let mut bulk2 = vec![0.0; n];
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangles[t];
            let contrib = nonlinear_element_integrals(
                self.mesh.area(t),
                [q.q11[tri[0]], q.q11[tri[1]], q.q11[tri[2]]],
                [q.q12[tri[0]], q.q12[tri[1]], q.q12[tri[2]]],
                beta,
            );
            for i in 0..3 {
                bulk1[tri[i]] += contrib[i][0];
                bulk2[tri[i]] += contrib[i][1];
            }
        }
        let mut r = vec![0.0; 2 * self.interior.len()];
        for (slot, &node) in self.interior.iter().enumerate() {
            let mut k1 = 0.0;
            let mut k2 = 0.0;
            for (col, v) in self.stiffness.iter_row(node) {
                k1 += v * q.q11[col];
                k2 += v * q.q12[col];
            }
            r[2 * slot] = alpha * k1 + bulk1[node];
            r[2 * slot + 1] = alpha * k2 + bulk2[node];
        }
        r
    }

    /// Exact linearization at q, as interleaved 2x2 blocks over interior
    /// dofs. The bulk block couples (dQ11, dQ12) through
    /// [[3 Q11^2 + Q12^2 - beta, 2 Q11 Q12], [2 Q11 Q12, Q11^2 + 3 Q12^2 - beta]]
    /// integrated against phi_i phi_j; symmetric since it is the Hessian of
    /// the discrete energy.
    pub fn jacobian(&self, q: &QField, alpha: f64, beta: f64) -> SparseMatrix {
        let mut triplets = Vec::new();
        self.jacobian_scatter(q, alpha, beta, |i, j, v| triplets.push((i, j, v)));
        SparseMatrix::from_triplets(2 * self.interior.len(), &triplets)
    }

    fn jacobian_banded(&self, q: &QField, alpha: f64, beta: f64, band: &mut BandMatrix) {
        band.reset();
        self.jacobian_scatter(q, alpha, beta, |i, j, v| band.add(i, j, v));
    }

    fn jacobian_scatter<F: FnMut(usize, usize, f64)>(
        &self,
        q: &QField,
        alpha: f64,
        beta: f64,
        mut emit: F,
    ) {
        // elastic part from the cached stiffness matrix
        for (slot, &node) in self.interior.iter().enumerate() {
            for (col, v) in self.stiffness.iter_row(node) {
                if let Some(cslot) = self.interior_slot[col] {
                    emit(2 * slot, 2 * cslot, alpha * v);
                    emit(2 * slot + 1, 2 * cslot + 1, alpha * v);
                }
            }
        }
        // bulk part by quadrature
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangles[t];
            let slots = [
                self.interior_slot[tri[0]],
                self.interior_slot[tri[1]],
                self.interior_slot[tri[2]],
            ];
            if slots.iter().all(Option::is_none) {
                continue;
            }
            let a1 = [q.q11[tri[0]], q.q11[tri[1]], q.q11[tri[2]]];
            let a2 = [q.q12[tri[0]], q.q12[tri[1]], q.q12[tri[2]]];
            let area = self.mesh.area(t);
            for (bary, w) in QUAD_DEG4 {
                let u = a1[0] * bary[0] + a1[1] * bary[1] + a1[2] * bary[2];
                let v = a2[0] * bary[0] + a2[1] * bary[1] + a2[2] * bary[2];
                let s = u * u + v * v;
                let m11 = 3.0 * u * u + v * v - beta;
                let m22 = u * u + 3.0 * v * v - beta;
                let m12 = 2.0 * u * v;
                let _ = s;
                let wa = w * area;
                for i in 0..3 {
                    let Some(si) = slots[i] else { continue };
                    for j in 0..3 {
                        let Some(sj) = slots[j] else { continue };
                        let pp = wa * bary[i] * bary[j];
                        emit(2 * si, 2 * sj, pp * m11);
                        emit(2 * si, 2 * sj + 1, pp * m12);
                        emit(2 * si + 1, 2 * sj, pp * m12);
                        emit(2 * si + 1, 2 * sj + 1, pp * m22);
                    }
                }
            }
        }
    }

    /// Discrete reduced energy
    /// E(Q) = \int (alpha/2) |grad Q|^2 + (1/4) (|Q|^2 - beta)^2.
    pub fn energy(&self, q: &QField, alpha: f64, beta: f64) -> f64 {
        let mut e = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangles[t];
            let area = self.mesh.area(t);
            let mut g1 = [0.0; 2];
            let mut g2 = [0.0; 2];
            for i in 0..3 {
                let g = self.mesh.grad(t, i);
                g1[0] += q.q11[tri[i]] * g[0];
                g1[1] += q.q11[tri[i]] * g[1];
                g2[0] += q.q12[tri[i]] * g[0];
                g2[1] += q.q12[tri[i]] * g[1];
            }
            e += 0.5 * alpha * area * (g1[0] * g1[0] + g1[1] * g1[1] + g2[0] * g2[0] + g2[1] * g2[1]);
            for (bary, w) in QUAD_DEG4 {
                let u = q.q11[tri[0]] * bary[0] + q.q11[tri[1]] * bary[1] + q.q11[tri[2]] * bary[2];
                let v = q.q12[tri[0]] * bary[0] + q.q12[tri[1]] * bary[1] + q.q12[tri[2]] * bary[2];
                let dev = u * u + v * v - beta;
                e += 0.25 * w * area * dev * dev;
            }
        }
        e
    }

    /// Newton iteration from `seed`. Boundary values are imposed from
    /// `boundary_values` before the first step and never modified afterwards.
    /// A backtracking line search (up to 8 halvings on residual increase)
    /// guards the pre-asymptotic steps; full steps are always tried first, so
    /// the terminal convergence stays quadratic.
    pub fn newton_solve(
        &self,
        seed: &QField,
        alpha: f64,
        beta: f64,
        boundary_values: &[(usize, [f64; 2])],
        cfg: &SolverConfig,
    ) -> Result<SolveReport, SolverError> {
        let dim = 2 * self.interior.len();
        let mut q = seed.clone();
        q.set_boundary(boundary_values);
        let mut r = self.residual(&q, alpha, beta);
        let mut rn = norm(&r);
        let mut history = vec![rn];
        if rn <= cfg.residual_tol {
            return Ok(SolveReport {
                converged: true,
                iterations: 0,
                residual_history: history,
                solution: q,
                branch: None,
                branch_mismatch: false,
            });
        }
        let mut band = BandMatrix::new(dim, self.half_bandwidth, self.half_bandwidth);
        let mut best_q = q.clone();
        let mut best_rn = rn;
        for it in 1..=cfg.max_iter {
            self.jacobian_banded(&q, alpha, beta, &mut band);
            let mut delta = r.iter().map(|v| -v).collect::<Vec<f64>>();
            match cfg.linear_solver {
                LinearSolver::Direct => {
                    band.clone().solve_in_place(&mut delta).map_err(|e| {
                        SolverError::SingularLinearSolve {
                            iteration: it,
                            column: e.column,
                        }
                    })?;
                }
                LinearSolver::ConjugateGradient { tol, max_iter } => {
                    let rhs = delta.clone();
                    delta = band::conjugate_gradient(&band, &rhs, tol, max_iter)
                        .map_err(SolverError::CgBreakdown)?;
                }
            }
            // backtracking on the residual norm
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..9 {
                let mut trial = q.clone();
                for (slot, &node) in self.interior.iter().enumerate() {
                    trial.q11[node] += step * delta[2 * slot];
                    trial.q12[node] += step * delta[2 * slot + 1];
                }
                let r_trial = self.residual(&trial, alpha, beta);
                let rn_trial = norm(&r_trial);
                if rn_trial.is_finite() && rn_trial < rn {
                    q = trial;
                    r = r_trial;
                    rn = rn_trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
            history.push(rn);
            if rn < best_rn {
                best_rn = rn;
                best_q = q.clone();
            }
            if rn <= cfg.residual_tol {
                return Ok(SolveReport {
                    converged: true,
                    iterations: it,
                    residual_history: history,
                    solution: q,
                    branch: None,
                    branch_mismatch: false,
                });
            }
        }
        let report = SolveReport {
            converged: false,
            iterations: history.len() - 1,
            residual_history: history,
            solution: best_q,
            branch: None,
            branch_mismatch: false,
        };
        Err(SolverError::NonConvergence {
            max_iter: cfg.max_iter,
            best_residual: best_rn,
            report: Box::new(report),
        })
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Deterministic initial field for a solution branch; boundary nodes carry
/// the interpolated boundary data.
pub fn branch_seed(kind: &BranchSeed, mesh: &Arc<Mesh>, bc: &BCSpec) -> QField {
    let mut q = match kind {
        BranchSeed::FromField(f) => f.clone(),
        BranchSeed::Wors => QField::from_fn(mesh.clone(), |x, y| {
            [-4.0 * (x - y) * (x + y - 1.0), 0.0]
        }),
        named => {
            let theta: Box<dyn Fn(f64, f64) -> f64> = match named {
                BranchSeed::D1 => Box::new(|_, _| PI / 4.0),
                BranchSeed::D2 => Box::new(|_, _| -PI / 4.0),
                BranchSeed::R1 => Box::new(|_, y| PI * y),
                BranchSeed::R2 => Box::new(|_, y| -PI * y),
                BranchSeed::R3 => Box::new(|x, _| PI * x + PI / 2.0),
                BranchSeed::R4 => Box::new(|x, _| -PI * x + PI / 2.0),
                _ => unreachable!(),
            };
            QField::from_fn(mesh.clone(), |x, y| {
                let t = theta(x, y);
                [(2.0 * t).cos(), (2.0 * t).sin()]
            })
        }
    };
    q.set_boundary(&bc.interpolate(mesh));
    q
}

/// Classifies a solved field by its near-corner splay pattern.
///
/// The witnesses are the interior nodes closest to the four square corners. A
/// corner is a splay vertex when the director there points along the inward
/// corner bisector, which for tangent data shows up as sign(Q12) matching the
/// bisector orientation (+ at (0,0) and (1,1), - at (1,0) and (0,1)); at bend
/// vertices the sign flips. Diagonal states have a diagonally opposite pair
/// of splay vertices, rotated states an adjacent pair, and a vanishing Q12
/// throughout marks the cross-shaped WORS regime. (Q11 itself is useless as
/// a witness: diagonal states are odd in Q11 under both diagonal reflections,
/// so their corner values cancel to roundoff.)
pub fn classify_branch(q: &QField) -> BranchClass {
    let mesh = &q.mesh;
    let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    // inward-bisector orientation sign of sin(2 theta_bisector) per corner
    let bisector = [1.0, -1.0, -1.0, 1.0];
    let mut witness = [0usize; 4];
    for (k, corner) in corners.iter().enumerate() {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for i in 0..mesh.n_nodes() {
            if mesh.is_boundary(i) {
                continue;
            }
            let p = mesh.nodes[i];
            let d = (p[0] - corner[0]).hypot(p[1] - corner[1]);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        witness[k] = best;
    }
    let scale = q.max_abs().max(1e-300);
    if q.q12.iter().fold(0.0f64, |m, &v| m.max(v.abs())) < 1e-6 * scale {
        return BranchClass::Other;
    }
    let tol = 1e-8 * scale;
    let mut splay = [false; 4];
    for k in 0..4 {
        let v = q.q12[witness[k]] * bisector[k];
        if v.abs() <= tol {
            return BranchClass::Other;
        }
        splay[k] = v > 0.0;
    }
    match splay.iter().filter(|&&s| s).count() {
        2 => {
            if (splay[0] && splay[3]) || (splay[1] && splay[2]) {
                BranchClass::Diagonal
            } else {
                BranchClass::Rotated
            }
        }
        _ => BranchClass::Other,
    }
}

/// Composition of [`branch_seed`] and [`Discretization::newton_solve`], with
/// the branch classification recorded in the report.
pub fn solve_branch(
    disc: &Discretization,
    kind: &BranchSeed,
    alpha: f64,
    beta: f64,
    bc: &BCSpec,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolverError> {
    let seed = branch_seed(kind, &disc.mesh, bc);
    let bvals = bc.interpolate(&disc.mesh);
    let mut report = disc.newton_solve(&seed, alpha, beta, &bvals, cfg)?;
    let class = classify_branch(&report.solution);
    report.branch = Some(class);
    report.branch_mismatch = kind
        .expected_class()
        .map(|expected| expected != class)
        .unwrap_or(false);
    Ok(report)
}
