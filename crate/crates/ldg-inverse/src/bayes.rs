//! Priors, the Gaussian error model with empirical per-component variances,
//! the log-likelihood through the PDE forward map, profile-likelihood scans
//! and a trapezoidal quadrature oracle for posterior moments.
//!
//! All probability arithmetic is carried out in log space; ratios are
//! exponentiated as differences of log densities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcmc::Target;
use crate::model::{BCSpec, QField};
use crate::solver::{classify_branch, BranchClass, Discretization, SolverConfig};

#[derive(Debug, Error)]
pub enum BayesError {
    #[error("observation needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("degenerate observation: component {component} variance {variance:.3e} below 1e-14")]
    DegenerateObservation { component: &'static str, variance: f64 },
    #[error("prior parameters invalid: {0}")]
    InvalidPrior(String),
}

/// Prior over the positive parameters; log densities are unnormalized and
/// evaluate to -inf outside the support (any nonpositive coordinate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Prior {
    /// Improper characteristic function of (0, inf) per parameter.
    UniformPositive,
    /// Independent truncated Gaussians, one (center, sigma) pair per
    /// coordinate.
    GaussianTruncated { center: Vec<f64>, sigma: Vec<f64> },
    /// Correlated truncated Gaussian over (alpha, beta).
    BivariateGaussianTruncated {
        center: [f64; 2],
        sigma_alpha: f64,
        sigma_beta: f64,
        rho: f64,
    },
}

impl Prior {
    pub fn validate(&self) -> Result<(), BayesError> {
        match self {
            Prior::UniformPositive => Ok(()),
            Prior::GaussianTruncated { center, sigma } => {
                if center.len() != sigma.len() || sigma.iter().any(|&s| s <= 0.0) {
                    Err(BayesError::InvalidPrior(format!(
                        "gaussian prior needs matching centers and positive sigmas, got {center:?}, {sigma:?}"
                    )))
                } else {
                    Ok(())
                }
            }
            Prior::BivariateGaussianTruncated { sigma_alpha, sigma_beta, rho, .. } => {
                if *sigma_alpha > 0.0 && *sigma_beta > 0.0 && rho.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(BayesError::InvalidPrior(format!(
                        "bivariate gaussian prior needs positive sigmas and |rho| < 1, got ({sigma_alpha}, {sigma_beta}, {rho})"
                    )))
                }
            }
        }
    }
}

/// Unnormalized log prior density; 0 at the mode of the Gaussian variants.
pub fn log_prior(prior: &Prior, theta: &[f64]) -> f64 {
    if theta.iter().any(|&t| t <= 0.0) {
        return f64::NEG_INFINITY;
    }
    match prior {
        Prior::UniformPositive => 0.0,
        Prior::GaussianTruncated { center, sigma } => {
            let mut lp = 0.0;
            for ((t, c), s) in theta.iter().zip(center).zip(sigma) {
                lp -= 0.5 * ((t - c) / s).powi(2);
            }
            lp
        }
        Prior::BivariateGaussianTruncated { center, sigma_alpha, sigma_beta, rho } => {
            let u = (theta[0] - center[0]) / sigma_alpha;
            let v = (theta[1] - center[1]) / sigma_beta;
            -0.5 / (1.0 - rho * rho) * (u * u - 2.0 * rho * u * v + v * v)
        }
    }
}

/// Empirical per-component variances of the observed nodal values; the two
/// scales level out the different magnitudes of Q11 and Q12 in the misfit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub sigma11_sq: f64,
    pub sigma12_sq: f64,
}

/// Population variances of the observation components.
pub fn error_variances(obs: &Observation) -> Result<ErrorModel, BayesError> {
    let n = obs.field.mesh.n_nodes();
    if n < 2 {
        return Err(BayesError::TooFewNodes(n));
    }
    let pop_var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
    };
    let sigma11_sq = pop_var(&obs.field.q11);
    let sigma12_sq = pop_var(&obs.field.q12);
    if sigma11_sq < 1e-14 {
        return Err(BayesError::DegenerateObservation { component: "q11", variance: sigma11_sq });
    }
    if sigma12_sq < 1e-14 {
        return Err(BayesError::DegenerateObservation { component: "q12", variance: sigma12_sq });
    }
    Ok(ErrorModel { sigma11_sq, sigma12_sq })
}

/// Provenance of a synthetically generated observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub branch: String,
    pub mesh_n: usize,
    pub rng_seed: u64,
    pub bc: BCSpec,
}

/// Observed nodal field with optional synthetic provenance.
#[derive(Debug, Clone)]
pub struct Observation {
    pub field: QField,
    pub provenance: Option<Provenance>,
}

/// Gaussian misfit of a model field against the observation:
/// -(1/2) (||E1||^2 / sigma11^2 + ||E2||^2 / sigma12^2) over all nodes.
pub fn misfit_log_likelihood(obs: &Observation, err: &ErrorModel, f11: &[f64], f12: &[f64]) -> f64 {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for i in 0..obs.field.q11.len() {
        let e1 = obs.field.q11[i] - f11[i];
        let e2 = obs.field.q12[i] - f12[i];
        s1 += e1 * e1;
        s2 += e2 * e2;
    }
    -0.5 * (s1 / err.sigma11_sq + s2 / err.sigma12_sq)
}

/// Forward map (alpha[, beta]) -> Q with per-instance warm-start state.
///
/// Newton is warm-started from the solution at the last accepted parameter
/// point to stay on the observed branch. The warm result is only trusted
/// while it still classifies like the observation (warm-started iterates can
/// slide onto a different branch far from the posterior peak, which would
/// make the sampled likelihood depend on the chain path); otherwise, and on
/// failure, the solve is restarted from the observation field Q_obs, which
/// pins a path-independent branch-consistent map. Non-convergence is
/// reported as `None` and becomes log-likelihood -inf upstream.
pub struct ForwardModel<'a> {
    pub disc: &'a Discretization,
    boundary_values: Vec<(usize, [f64; 2])>,
    cfg: SolverConfig,
    /// beta to use when sampling alpha alone.
    beta_fixed: Option<f64>,
    warm: QField,
    fallback: QField,
    observed_class: BranchClass,
    candidate: Option<QField>,
    pub n_solve: usize,
    pub n_fail: usize,
}

impl<'a> ForwardModel<'a> {
    pub fn new(
        disc: &'a Discretization,
        bc: &BCSpec,
        cfg: SolverConfig,
        obs: &Observation,
        beta_fixed: Option<f64>,
    ) -> Self {
        ForwardModel {
            disc,
            boundary_values: bc.interpolate(&disc.mesh),
            cfg,
            beta_fixed,
            warm: obs.field.clone(),
            fallback: obs.field.clone(),
            observed_class: classify_branch(&obs.field),
            candidate: None,
            n_solve: 0,
            n_fail: 0,
        }
    }

    fn split(&self, theta: &[f64]) -> (f64, f64) {
        match self.beta_fixed {
            Some(beta) => (theta[0], beta),
            None => (theta[0], theta[1]),
        }
    }

    /// Solves the forward problem at theta; `None` on non-convergence.
    pub fn solve(&mut self, theta: &[f64]) -> Option<&QField> {
        let (alpha, beta) = self.split(theta);
        self.n_solve += 1;
        let warm_solution = self
            .disc
            .newton_solve(&self.warm, alpha, beta, &self.boundary_values, &self.cfg)
            .ok()
            .filter(|r| r.converged && classify_branch(&r.solution) == self.observed_class)
            .map(|r| r.solution);
        let solution = warm_solution.or_else(|| {
            self.disc
                .newton_solve(&self.fallback, alpha, beta, &self.boundary_values, &self.cfg)
                .ok()
                .filter(|r| r.converged)
                .map(|r| r.solution)
        });
        match solution {
            Some(field) => {
                self.candidate = Some(field);
                self.candidate.as_ref()
            }
            None => {
                self.n_fail += 1;
                self.candidate = None;
                None
            }
        }
    }

    /// Commits the last solved field as the warm start (called on MCMC
    /// acceptance).
    pub fn commit(&mut self) {
        if let Some(c) = self.candidate.take() {
            self.warm = c;
        }
    }
}

/// Log-likelihood through the forward map; -inf on solver failure, never an
/// error.
pub fn log_likelihood(
    obs: &Observation,
    err: &ErrorModel,
    theta: &[f64],
    fwd: &mut ForwardModel,
) -> f64 {
    match fwd.solve(theta) {
        Some(field) => misfit_log_likelihood(obs, err, &field.q11, &field.q12),
        None => f64::NEG_INFINITY,
    }
}

/// Unnormalized log posterior; a -inf prior short-circuits without a solve.
pub fn log_posterior(
    prior: &Prior,
    obs: &Observation,
    err: &ErrorModel,
    theta: &[f64],
    fwd: &mut ForwardModel,
) -> f64 {
    let lp = log_prior(prior, theta);
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    lp + log_likelihood(obs, err, theta, fwd)
}

/// Posterior target wired for the Metropolis-Hastings driver: the warm-start
/// slot is committed exactly when a candidate is accepted.
pub struct PosteriorTarget<'a> {
    pub prior: Prior,
    pub obs: &'a Observation,
    pub err: ErrorModel,
    pub fwd: ForwardModel<'a>,
}

impl Target for PosteriorTarget<'_> {
    fn log_density(&mut self, theta: &[f64]) -> f64 {
        log_posterior(&self.prior, self.obs, &self.err, theta, &mut self.fwd)
    }

    fn notify_accepted(&mut self) {
        self.fwd.commit();
    }
}

/// Normalized likelihood curve over a parameter grid, with the flatness
/// diagnostic used to detect non-identifiability: the ratio of the value at
/// the grid endpoint farthest from the peak to the peak value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileScan {
    pub grid: Vec<f64>,
    /// exp(log L - max log L) on the grid.
    pub values: Vec<f64>,
    pub flatness: f64,
}

pub fn profile_scan<F: FnMut(f64) -> f64>(grid: &[f64], mut log_likelihood: F) -> ProfileScan {
    assert!(!grid.is_empty());
    let logs: Vec<f64> = grid.iter().map(|&t| log_likelihood(t)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let peak_at = logs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let far_end = if peak_at >= grid.len() / 2 { 0 } else { grid.len() - 1 };
    ProfileScan {
        grid: grid.to_vec(),
        values: values.clone(),
        flatness: values[far_end],
    }
}

/// Trapezoidal-rule posterior moments on a 1D grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMoments {
    pub mean: f64,
    pub median: f64,
    /// Normalizing constant relative to the peak density (the computation is
    /// carried out after subtracting the maximum log density).
    pub normalizing_constant: f64,
    /// True when more than 1% of the estimated mass sits in the outermost
    /// grid cells, indicating the grid clips the posterior.
    pub mass_escape: bool,
}

pub fn quadrature_moments<F: FnMut(f64) -> f64>(grid: &[f64], mut log_posterior: F) -> QuadratureMoments {
    assert!(grid.len() >= 2, "quadrature grid needs at least 2 points");
    let logs: Vec<f64> = grid.iter().map(|&t| log_posterior(t)).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dens: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let n = grid.len();
    // trapezoid weights
    let mut z = 0.0;
    let mut first_moment = 0.0;
    let mut cell_mass = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let dx = grid[i + 1] - grid[i];
        let m = 0.5 * dx * (dens[i] + dens[i + 1]);
        cell_mass[i] = m;
        z += m;
        first_moment += 0.5 * dx * (dens[i] * grid[i] + dens[i + 1] * grid[i + 1]);
    }
    let mean = first_moment / z;
    // median from the piecewise-linear CDF
    let mut target = 0.5 * z;
    let mut median = grid[n - 1];
    for i in 0..n - 1 {
        if cell_mass[i] >= target {
            let frac = if cell_mass[i] > 0.0 { target / cell_mass[i] } else { 0.5 };
            median = grid[i] + frac * (grid[i + 1] - grid[i]);
            break;
        }
        target -= cell_mass[i];
    }
    let edge_mass = cell_mass[0] + cell_mass[n - 2];
    QuadratureMoments {
        mean,
        median,
        normalizing_constant: z,
        mass_escape: edge_mass > 0.01 * z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_mesh;
    use std::sync::Arc;

    fn toy_observation(q11: Vec<f64>, q12: Vec<f64>) -> Observation {
        // mesh only carries the node count for these tests
        let mesh = Arc::new(build_unit_square_mesh(2).unwrap());
        let mut field = QField::zeros(mesh);
        let n = field.q11.len();
        for i in 0..n {
            field.q11[i] = q11[i % q11.len()];
            field.q12[i] = q12[i % q12.len()];
        }
        Observation { field, provenance: None }
    }

    #[test]
    fn error_variances_two_node_toy() {
        let obs = toy_observation(vec![1.0, -1.0], vec![1.0, -1.0]);
        // alternating +-1 on an even node count has population variance 1
        let em = error_variances(&obs).unwrap();
        assert!((em.sigma11_sq - 1.0).abs() < 0.2);
        let obs = toy_observation(vec![1.0, -1.0], vec![0.5]);
        assert!(matches!(
            error_variances(&obs),
            Err(BayesError::DegenerateObservation { component: "q12", .. })
        ));
    }

    #[test]
    fn misfit_is_nonpositive_and_zero_at_truth() {
        let obs = toy_observation(vec![0.3, -0.7, 0.1], vec![0.2, 0.4, -0.5]);
        let em = error_variances(&obs).unwrap();
        let ll = misfit_log_likelihood(&obs, &em, &obs.field.q11, &obs.field.q12);
        assert_eq!(ll, 0.0);
        let shifted: Vec<f64> = obs.field.q11.iter().map(|v| v + 0.1).collect();
        let ll = misfit_log_likelihood(&obs, &em, &shifted, &obs.field.q12);
        assert!(ll < 0.0);
    }

    #[test]
    fn misfit_scales_inversely_with_variances() {
        let obs = toy_observation(vec![0.3, -0.7, 0.1], vec![0.2, 0.4, -0.5]);
        let em = error_variances(&obs).unwrap();
        let f11: Vec<f64> = obs.field.q11.iter().map(|v| v + 0.05).collect();
        let f12: Vec<f64> = obs.field.q12.iter().map(|v| v - 0.02).collect();
        let base = misfit_log_likelihood(&obs, &em, &f11, &f12);
        let scaled = ErrorModel {
            sigma11_sq: 3.0 * em.sigma11_sq,
            sigma12_sq: 3.0 * em.sigma12_sq,
        };
        let ll = misfit_log_likelihood(&obs, &scaled, &f11, &f12);
        assert!((ll - base / 3.0).abs() < 1e-12 * base.abs());
    }

    #[test]
    fn misfit_invariant_under_node_relabeling() {
        let obs = toy_observation(vec![0.3, -0.7, 0.1, 0.9], vec![0.2, 0.4, -0.5, 0.0]);
        let em = error_variances(&obs).unwrap();
        let f11: Vec<f64> = obs.field.q11.iter().map(|v| v + 0.08).collect();
        let f12: Vec<f64> = obs.field.q12.iter().map(|v| v * 0.9).collect();
        let base = misfit_log_likelihood(&obs, &em, &f11, &f12);
        // permute observation and model output consistently
        let n = obs.field.q11.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let mut obs2 = obs.clone();
        let apply = |xs: &[f64]| -> Vec<f64> { perm.iter().map(|&p| xs[p]).collect() };
        obs2.field.q11 = apply(&obs.field.q11);
        obs2.field.q12 = apply(&obs.field.q12);
        let ll = misfit_log_likelihood(&obs2, &em, &apply(&f11), &apply(&f12));
        assert!((ll - base).abs() < 1e-12 * base.abs().max(1.0));
    }

    #[test]
    fn log_prior_variants() {
        assert_eq!(log_prior(&Prior::UniformPositive, &[-0.1]), f64::NEG_INFINITY);
        assert_eq!(log_prior(&Prior::UniformPositive, &[0.5, 0.2]), 0.0);
        let gp = Prior::GaussianTruncated { center: vec![0.004], sigma: vec![0.0005] };
        assert_eq!(log_prior(&gp, &[0.004]), 0.0);
        assert!(log_prior(&gp, &[0.0045]) < 0.0);
        assert_eq!(log_prior(&gp, &[-0.004]), f64::NEG_INFINITY);
        let bp = Prior::BivariateGaussianTruncated {
            center: [0.004, 0.6],
            sigma_alpha: 0.0005,
            sigma_beta: 0.1,
            rho: 0.5,
        };
        assert_eq!(log_prior(&bp, &[0.004, 0.6]), 0.0);
        let at_sigma = log_prior(&bp, &[0.004 + 0.0005, 0.6]);
        assert!((at_sigma - (-2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn prior_validation() {
        assert!(Prior::GaussianTruncated { center: vec![1.0], sigma: vec![0.0] }
            .validate()
            .is_err());
        assert!(Prior::BivariateGaussianTruncated {
            center: [0.0, 0.0],
            sigma_alpha: 1.0,
            sigma_beta: 1.0,
            rho: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn profile_scan_degenerate_grid() {
        let scan = profile_scan(&[0.5], |_| -3.0);
        assert_eq!(scan.values, vec![1.0]);
        assert_eq!(scan.flatness, 1.0);
    }

    #[test]
    fn profile_scan_peaked_curve() {
        let grid: Vec<f64> = (0..101).map(|i| 0.001 + i as f64 * 0.001).collect();
        let scan = profile_scan(&grid, |t| -0.5 * ((t - 0.05) / 0.002).powi(2));
        assert!(scan.flatness < 1e-10);
        let peak = scan.values.iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn quadrature_moments_gaussian_stub() {
        // symmetric synthetic posterior: mean = median = center
        let grid: Vec<f64> = (0..401).map(|i| 1.0 + i as f64 * 0.01).collect();
        let q = quadrature_moments(&grid, |t| -0.5 * ((t - 3.0) / 0.2).powi(2));
        assert!((q.mean - 3.0).abs() < 1e-6);
        assert!((q.median - 3.0).abs() < 0.01);
        assert!(!q.mass_escape);
        // clipped grid raises the mass-escape warning
        let grid: Vec<f64> = (0..21).map(|i| 2.9 + i as f64 * 0.01).collect();
        let q = quadrature_moments(&grid, |t| -0.5 * ((t - 3.0) / 0.2).powi(2));
        assert!(q.mass_escape);
    }

    #[test]
    fn quadrature_grid_refinement_consistency() {
        let coarse: Vec<f64> = (0..200).map(|i| 2.0 + i as f64 * 0.01).collect();
        let fine: Vec<f64> = (0..400).map(|i| 2.0 + i as f64 * 0.005).collect();
        let f = |t: f64| -0.5 * ((t - 3.0) / 0.15).powi(2) - 0.3 * (t - 3.0).powi(3);
        let qc = quadrature_moments(&coarse, f);
        let qf = quadrature_moments(&fine, f);
        assert!((qc.mean - qf.mean).abs() < 1e-5);
    }
}
