//! Config-driven experiment driver: synthetic observation generation,
//! posterior sampling with full diagnostics, profile-likelihood scans and the
//! benchmark reproduction bundles with side-by-side comparisons against the
//! published reference statistics.

pub mod presets;
pub mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{
    error_variances, log_posterior, profile_scan, ErrorModel, ForwardModel, Observation,
    Prior, ProfileScan, Provenance, PosteriorTarget,
};
use crate::mcmc::{acceptance_rate, run_chain, Chain, ProposalConfig};
use crate::mesh::build_unit_square_mesh;
use crate::model::{BCSpec, QField};
use crate::solver::{
    branch_seed, solve_branch, BranchClass, BranchSeed, Discretization, SolveReport,
    SolverConfig,
};
use crate::stats::{
    bivariate_histogram, discard_burn_in, histogram, ks_stationarity, running_stats, summarize,
    ChainStats, CiLevel, KsWindow, RunningStat, DEFAULT_CLT_LAG,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("solver failure: {0}")]
    Solver(#[from] crate::solver::SolverError),
    #[error("generated field classifies as {got:?}, expected {expected:?} for branch {branch}")]
    BranchMismatch {
        branch: String,
        expected: BranchClass,
        got: BranchClass,
    },
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Bayes(#[from] crate::bayes::BayesError),
    #[error(transparent)]
    Mcmc(#[from] crate::mcmc::McmcError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One experiment: mesh, boundary condition, reference parameters, prior,
/// proposal and chain settings. Serializes as a human-editable TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub mesh_n: usize,
    pub bc: BCSpec,
    /// Branch seed name: D1, D2, R1..R4, WORS, or BC (seed from the boundary
    /// rule extended into the interior; used for the vortex runs).
    pub branch: String,
    pub alpha_star: f64,
    pub beta_star: f64,
    /// When false, beta is held at beta_star and only alpha is sampled.
    pub sample_beta: bool,
    pub prior: Prior,
    pub proposal: ProposalConfig,
    pub init: Vec<f64>,
    pub chain_length: usize,
    pub burn_in: usize,
    pub rng_seed: u64,
    #[serde(default = "default_clt_lag")]
    pub clt_lag: usize,
    #[serde(default = "default_hist_bins")]
    pub histogram_bins: usize,
}

fn default_clt_lag() -> usize {
    DEFAULT_CLT_LAG
}

fn default_hist_bins() -> usize {
    40
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.mesh_n < 2 {
            return fail(format!("mesh_n must be >= 2, got {}", self.mesh_n));
        }
        if self.alpha_star <= 0.0 || self.beta_star <= 0.0 {
            return fail(format!(
                "reference parameters must be positive, got ({}, {})",
                self.alpha_star, self.beta_star
            ));
        }
        if let BCSpec::Tangent { d } = self.bc {
            if !(d > 0.0 && d < 0.5) {
                return fail(format!("trapezoid parameter d must be in (0, 1/2), got {d}"));
            }
        }
        if let BCSpec::Vortex { a1, a2 } = self.bc {
            if !(a1 > 0.0 && a1 < 1.0 && a2 > 0.0 && a2 < 1.0) {
                return fail(format!("vortex centre ({a1}, {a2}) must be interior"));
            }
        }
        if self.branch != "BC" && BranchSeed::from_name(&self.branch).is_none() {
            return fail(format!("unknown branch '{}'", self.branch));
        }
        if self.chain_length < self.burn_in + 100 {
            return fail(format!(
                "chain_length {} must be at least burn_in + 100 = {}",
                self.chain_length,
                self.burn_in + 100
            ));
        }
        let dim = if self.sample_beta { 2 } else { 1 };
        if self.proposal.dim() != dim {
            return fail(format!(
                "proposal dimension {} does not match sample_beta={}",
                self.proposal.dim(),
                self.sample_beta
            ));
        }
        if self.init.len() != dim {
            return fail(format!("init must have {dim} coordinates"));
        }
        self.proposal.validate().map_err(ExperimentError::InvalidConfig)?;
        self.prior.validate()?;
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(s).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ExperimentError> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// FNV-1a hash of the canonical TOML encoding, for provenance records.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_toml_string().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    fn branch_seed_kind(&self, mesh: &Arc<crate::mesh::Mesh>) -> BranchSeed {
        if self.branch == "BC" {
            let bc = self.bc;
            let field = QField::from_fn(mesh.clone(), move |x, y| match bc {
                BCSpec::Vortex { a1, a2 } => {
                    let dx = x - a1;
                    let dy = y - a2;
                    let r = dx.hypot(dy);
                    if r < 1e-12 {
                        [0.0, 0.0]
                    } else {
                        [dx / r, dy / r]
                    }
                }
                BCSpec::Tangent { .. } => bc.eval(x, y),
            });
            BranchSeed::FromField(field)
        } else {
            BranchSeed::from_name(&self.branch).expect("validated branch name")
        }
    }
}

/// Deterministic per-stage seed derivation from the config root seed.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    // splitmix64 finalizer
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Shared forward-problem setup for one experiment.
pub struct ExperimentContext {
    pub config: ExperimentConfig,
    pub disc: Arc<Discretization>,
}

impl ExperimentContext {
    pub fn new(config: ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate()?;
        let mesh = Arc::new(build_unit_square_mesh(config.mesh_n)?);
        let disc = Arc::new(Discretization::new(mesh));
        Ok(ExperimentContext { config, disc })
    }

    /// Solves the forward problem at the reference parameters and packages
    /// the solution as the observation. Fails loudly when the converged field
    /// classifies differently from the requested named branch.
    pub fn generate_observation(&self) -> Result<(Observation, SolveReport), ExperimentError> {
        let cfg = &self.config;
        let kind = cfg.branch_seed_kind(&self.disc.mesh);
        let report = solve_branch(
            &self.disc,
            &kind,
            cfg.alpha_star,
            cfg.beta_star,
            &cfg.bc,
            &SolverConfig::default(),
        )?;
        if let Some(expected) = kind.expected_class() {
            let got = report.branch.unwrap_or(BranchClass::Other);
            if got != expected {
                return Err(ExperimentError::BranchMismatch {
                    branch: cfg.branch.clone(),
                    expected,
                    got,
                });
            }
        }
        let obs = Observation {
            field: report.solution.clone(),
            provenance: Some(Provenance {
                alpha_star: cfg.alpha_star,
                beta_star: cfg.beta_star,
                branch: cfg.branch.clone(),
                mesh_n: cfg.mesh_n,
                rng_seed: cfg.rng_seed,
                bc: cfg.bc,
            }),
        };
        Ok((obs, report))
    }

    fn posterior_target<'a>(&'a self, obs: &'a Observation) -> Result<PosteriorTarget<'a>, ExperimentError> {
        let err = error_variances(obs)?;
        let beta_fixed = if self.config.sample_beta {
            None
        } else {
            Some(self.config.beta_star)
        };
        Ok(PosteriorTarget {
            prior: self.config.prior.clone(),
            obs,
            err,
            fwd: ForwardModel::new(
                &self.disc,
                &self.config.bc,
                SolverConfig::default(),
                obs,
                beta_fixed,
            ),
        })
    }

    /// Runs the Metropolis-Hastings chain for this experiment.
    pub fn sample(&self, obs: &Observation) -> Result<SampleResult, ExperimentError> {
        let cfg = &self.config;
        let mut target = self.posterior_target(obs)?;
        let chain = run_chain(
            &mut target,
            &cfg.init,
            cfg.chain_length,
            cfg.proposal,
            derive_seed(cfg.rng_seed, "chain"),
        )?;
        let segment = discard_burn_in(&chain, cfg.burn_in)?;
        let stats = summarize(&segment, cfg.clt_lag, CiLevel::P95)?;
        let ks = ks_stationarity(&segment.cols[0], 1000, 10).ok();
        let err = target.err;
        let n_fail = target.fwd.n_fail;
        Ok(SampleResult {
            chain,
            stats,
            ks,
            error_model: err,
            forward_failures: n_fail,
        })
    }

    /// Normalized likelihood curve over a 1D alpha grid at fixed beta.
    pub fn profile(&self, obs: &Observation, grid: &[f64]) -> Result<ProfileResult, ExperimentError> {
        let err = error_variances(obs)?;
        let mut fwd = ForwardModel::new(
            &self.disc,
            &self.config.bc,
            SolverConfig::default(),
            obs,
            Some(self.config.beta_star),
        );
        let obs_ref = obs;
        let scan = profile_scan(grid, |alpha| {
            if alpha <= 0.0 {
                return f64::NEG_INFINITY;
            }
            crate::bayes::log_likelihood(obs_ref, &err, &[alpha], &mut fwd)
        });
        let verdict = ProfileVerdict::from_flatness(scan.flatness);
        Ok(ProfileResult { scan, verdict })
    }

    /// Posterior quadrature on a 1D alpha grid (the independent oracle for
    /// the MCMC posterior mean).
    pub fn quadrature(&self, obs: &Observation, grid: &[f64]) -> Result<crate::bayes::QuadratureMoments, ExperimentError> {
        let err = error_variances(obs)?;
        let prior = self.config.prior.clone();
        let mut fwd = ForwardModel::new(
            &self.disc,
            &self.config.bc,
            SolverConfig::default(),
            obs,
            Some(self.config.beta_star),
        );
        Ok(crate::bayes::quadrature_moments(grid, |alpha| {
            log_posterior(&prior, obs, &err, &[alpha], &mut fwd)
        }))
    }
}

#[derive(Debug)]
pub struct SampleResult {
    pub chain: Chain,
    pub stats: ChainStats,
    pub ks: Option<Vec<KsWindow>>,
    pub error_model: ErrorModel,
    pub forward_failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileVerdict {
    /// Flatness ratio above 0.5: non-identifiable.
    Plateau,
    /// Between 0.01 and 0.5: identifiable but poorly conditioned.
    FatTail,
    /// Below 0.01: identifiable.
    Peaked,
}

impl ProfileVerdict {
    pub fn from_flatness(flatness: f64) -> Self {
        if flatness > 0.5 {
            ProfileVerdict::Plateau
        } else if flatness < 0.01 {
            ProfileVerdict::Peaked
        } else {
            ProfileVerdict::FatTail
        }
    }
}

#[derive(Debug)]
pub struct ProfileResult {
    pub scan: ProfileScan,
    pub verdict: ProfileVerdict,
}

// ---------------------------------------------------------------------------
// file emission
// ---------------------------------------------------------------------------

pub fn write_observation(
    dir: &Path,
    obs: &Observation,
    report: &SolveReport,
) -> Result<PathBuf, ExperimentError> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join("observation.csv");
    obs.field.write_csv(&csv)?;
    let sidecar = serde_json::json!({
        "provenance": obs.provenance,
        "solve": report.summary_json(),
    });
    std::fs::write(dir.join("observation.json"), serde_json::to_string_pretty(&sidecar)?)?;
    Ok(csv)
}

pub fn write_sample_outputs(
    dir: &Path,
    tag: &str,
    cfg: &ExperimentConfig,
    result: &SampleResult,
) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(dir)?;
    result.chain.write_csv(&dir.join(format!("chain-{tag}.csv")))?;
    let meta = result.chain.meta_json(&format!(
        "posterior of {} for observation ({}, {})",
        if cfg.sample_beta { "(alpha, beta)" } else { "alpha" },
        cfg.alpha_star,
        cfg.beta_star
    ));
    std::fs::write(dir.join(format!("chain-{tag}.json")), serde_json::to_string_pretty(&meta)?)?;
    std::fs::write(
        dir.join(format!("stats-{tag}.json")),
        serde_json::to_string_pretty(&stats_json(cfg, result))?,
    )?;
    if let Some(ks) = &result.ks {
        let mut f = std::fs::File::create(dir.join(format!("ks-{tag}.csv")))?;
        writeln!(f, "first_start,second_start,statistic,critical,pass")?;
        for w in ks {
            writeln!(
                f,
                "{},{},{},{},{}",
                w.first_start,
                w.second_start,
                w.statistic,
                w.critical,
                u8::from(w.pass)
            )?;
        }
    }
    let segment = discard_burn_in(&result.chain, cfg.burn_in)?;
    let h = histogram(&segment.cols[0], cfg.histogram_bins);
    write_histogram_csv(&dir.join(format!("hist-alpha-{tag}.csv")), &h.edges, &h.counts)?;
    if segment.dim() == 2 {
        let h = histogram(&segment.cols[1], cfg.histogram_bins);
        write_histogram_csv(&dir.join(format!("hist-beta-{tag}.csv")), &h.edges, &h.counts)?;
        let h2 = bivariate_histogram(&segment.cols[0], &segment.cols[1], cfg.histogram_bins);
        let mut f = std::fs::File::create(dir.join(format!("hist2d-{tag}.csv")))?;
        writeln!(f, "alpha_bin,beta_bin,count")?;
        for (iy, row) in h2.counts.iter().enumerate() {
            for (ix, count) in row.iter().enumerate() {
                writeln!(f, "{ix},{iy},{count}")?;
            }
        }
    }
    Ok(())
}

fn write_histogram_csv(path: &Path, edges: &[f64], counts: &[usize]) -> Result<(), ExperimentError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "bin_lo,bin_hi,count")?;
    for (i, c) in counts.iter().enumerate() {
        writeln!(f, "{},{},{}", edges[i], edges[i + 1], c)?;
    }
    Ok(())
}

/// Stats JSON mirroring the reference-table column names.
pub fn stats_json(cfg: &ExperimentConfig, result: &SampleResult) -> serde_json::Value {
    let s = &result.stats;
    let mut map = serde_json::Map::new();
    map.insert("mean_alpha".into(), s.mean[0].into());
    map.insert("median_alpha".into(), s.median[0].into());
    map.insert("standard_deviation_alpha".into(), s.std_dev[0].into());
    map.insert("gamma_alpha".into(), s.gamma_sq[0].sqrt().into());
    map.insert(
        "ci95_alpha".into(),
        serde_json::json!([s.ci[0].0, s.ci[0].1]),
    );
    if s.mean.len() == 2 {
        map.insert("mean_beta".into(), s.mean[1].into());
        map.insert("median_beta".into(), s.median[1].into());
        map.insert("standard_deviation_beta".into(), s.std_dev[1].into());
        map.insert("gamma_beta".into(), s.gamma_sq[1].sqrt().into());
        map.insert(
            "ci95_beta".into(),
            serde_json::json!([s.ci[1].0, s.ci[1].1]),
        );
        map.insert("correlation".into(), s.correlation.into());
    }
    map.insert(
        "acceptance_rate".into(),
        acceptance_rate(&result.chain).into(),
    );
    map.insert("n_used".into(), s.n_used.into());
    map.insert("burn_in".into(), cfg.burn_in.into());
    map.insert("forward_failures".into(), result.forward_failures.into());
    if let Some(ks) = &result.ks {
        let passed = ks.iter().filter(|w| w.pass).count();
        map.insert("ks_windows".into(), ks.len().into());
        map.insert("ks_passed".into(), passed.into());
    }
    serde_json::Value::Object(map)
}

pub fn write_profile_csv(path: &Path, scan: &ProfileScan) -> Result<(), ExperimentError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "theta,normalized_likelihood")?;
    for (t, v) in scan.grid.iter().zip(&scan.values) {
        writeln!(f, "{t},{v}")?;
    }
    Ok(())
}

pub fn write_running_csv(path: &Path, rows: &[RunningStat]) -> Result<(), ExperimentError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "n,mean,median,ci_lo,ci_hi")?;
    for r in rows {
        writeln!(f, "{},{},{},{},{}", r.n, r.mean, r.median, r.ci.0, r.ci.1)?;
    }
    Ok(())
}

/// Running statistics over prefixes of the retained segment.
pub fn running_curve(
    cfg: &ExperimentConfig,
    chain: &Chain,
    checkpoints: &[usize],
) -> Result<Vec<RunningStat>, ExperimentError> {
    let segment = discard_burn_in(chain, cfg.burn_in)?;
    Ok(running_stats(
        &segment.cols[0],
        checkpoints,
        cfg.clt_lag,
        CiLevel::P95,
    )?)
}

/// Seeds the named branch and returns the initial field (exposed for tests).
pub fn seed_field(cfg: &ExperimentConfig) -> Result<QField, ExperimentError> {
    cfg.validate()?;
    let mesh = Arc::new(build_unit_square_mesh(cfg.mesh_n)?);
    let kind = cfg.branch_seed_kind(&mesh);
    Ok(branch_seed(&kind, &mesh, &cfg.bc))
}
