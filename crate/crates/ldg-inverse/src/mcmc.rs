//! Random-walk Metropolis-Hastings with a symmetric Gaussian proposal
//! (univariate or correlated bivariate) and deterministic seeding.
//!
//! The RNG is ChaCha8 keyed by an explicit 64-bit seed, so chains are
//! reproducible bit-for-bit across runs and platforms.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("log target is -inf at the initial point")]
    InvalidInit,
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("chain file parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Symmetric Gaussian proposal: q(x, y) = q(y, x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ProposalConfig {
    Univariate { sigma: f64 },
    Bivariate { sigma_alpha: f64, sigma_beta: f64, rho: f64 },
}

impl ProposalConfig {
    pub fn dim(&self) -> usize {
        match self {
            ProposalConfig::Univariate { .. } => 1,
            ProposalConfig::Bivariate { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ProposalConfig::Univariate { sigma } => {
                if sigma > 0.0 {
                    Ok(())
                } else {
                    Err(format!("proposal sigma must be positive, got {sigma}"))
                }
            }
            ProposalConfig::Bivariate { sigma_alpha, sigma_beta, rho } => {
                if sigma_alpha > 0.0 && sigma_beta > 0.0 && rho.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(format!(
                        "invalid bivariate proposal ({sigma_alpha}, {sigma_beta}, rho={rho})"
                    ))
                }
            }
        }
    }

    fn perturb(&self, from: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        match *self {
            ProposalConfig::Univariate { sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                vec![from[0] + sigma * z]
            }
            ProposalConfig::Bivariate { sigma_alpha, sigma_beta, rho } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                vec![
                    from[0] + sigma_alpha * z1,
                    from[1] + sigma_beta * (rho * z1 + (1.0 - rho * rho).sqrt() * z2),
                ]
            }
        }
    }
}

/// An unnormalized log-density to sample from. `notify_accepted` is called
/// after each accepted candidate (and once for the initial point) so that
/// stateful targets can commit per-chain warm-start data.
pub trait Target {
    fn log_density(&mut self, theta: &[f64]) -> f64;
    fn notify_accepted(&mut self) {}
}

impl<F: FnMut(&[f64]) -> f64> Target for F {
    fn log_density(&mut self, theta: &[f64]) -> f64 {
        self(theta)
    }
}

/// Ordered Metropolis-Hastings samples with acceptance bookkeeping.
/// `samples[k]` is the state after proposal k+1; the initial point is kept
/// separately in `init`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
    pub rng_seed: u64,
    pub proposal: ProposalConfig,
    pub init: Vec<f64>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.proposal.dim()
    }

    pub fn column(&self, coord: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[coord]).collect()
    }

    /// CSV rows `step,alpha[,beta],accepted`, steps starting at 1.
    pub fn write_csv(&self, path: &Path) -> Result<(), McmcError> {
        let mut f = std::fs::File::create(path)?;
        if self.dim() == 1 {
            writeln!(f, "step,alpha,accepted")?;
        } else {
            writeln!(f, "step,alpha,beta,accepted")?;
        }
        for (k, s) in self.samples.iter().enumerate() {
            let vals: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{},{},{}", k + 1, vals.join(","), u8::from(self.accepted[k]))?;
        }
        Ok(())
    }

    /// Reads back the sample columns of a chain CSV (metadata lives in the
    /// JSON sidecar).
    pub fn read_csv_samples(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<bool>), McmcError> {
        let mut samples = Vec::new();
        let mut accepted = Vec::new();
        for (ln, line) in BufReader::new(std::fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            if ln == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 {
                return Err(McmcError::Parse(format!("bad chain row: {line}")));
            }
            let coords: Result<Vec<f64>, _> = fields[1..fields.len() - 1]
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect();
            samples.push(coords.map_err(|e| McmcError::Parse(format!("{e}")))?);
            accepted.push(fields[fields.len() - 1].trim() != "0");
        }
        Ok((samples, accepted))
    }

    pub fn meta_json(&self, target_description: &str) -> serde_json::Value {
        serde_json::json!({
            "seed": self.rng_seed,
            "proposal": self.proposal,
            "init": self.init,
            "length": self.len(),
            "acceptance_rate": acceptance_rate(self),
            "target": target_description,
        })
    }
}

/// Runs a Metropolis-Hastings chain of `length` proposals from `init`.
///
/// Candidates are accepted with probability min(1, exp(log pi(eta) -
/// log pi(xi))); a -inf candidate density is always rejected, and every
/// rejected step repeats the previous sample exactly.
pub fn run_chain<T: Target>(
    target: &mut T,
    init: &[f64],
    length: usize,
    proposal: ProposalConfig,
    rng_seed: u64,
) -> Result<Chain, McmcError> {
    if length == 0 {
        return Err(McmcError::EmptyChain);
    }
    assert_eq!(init.len(), proposal.dim(), "init dimension mismatch");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut current = init.to_vec();
    let mut current_lp = target.log_density(&current);
    if current_lp == f64::NEG_INFINITY {
        return Err(McmcError::InvalidInit);
    }
    target.notify_accepted();
    let mut samples = Vec::with_capacity(length);
    let mut accepted = Vec::with_capacity(length);
    for _ in 0..length {
        let candidate = proposal.perturb(&current, &mut rng);
        let candidate_lp = target.log_density(&candidate);
        // u in (0, 1]: accept iff ln u <= log ratio, so r >= 1 always accepts
        let u: f64 = 1.0 - rng.gen::<f64>();
        let accept = u.ln() <= candidate_lp - current_lp;
        if accept {
            current = candidate;
            current_lp = candidate_lp;
            target.notify_accepted();
        }
        samples.push(current.clone());
        accepted.push(accept);
    }
    Ok(Chain {
        samples,
        accepted,
        rng_seed,
        proposal,
        init: init.to_vec(),
    })
}

/// Proportion of accepted proposals.
pub fn acceptance_rate(chain: &Chain) -> f64 {
    assert!(!chain.is_empty());
    chain.accepted.iter().filter(|&&a| a).count() as f64 / chain.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_accepts_everything() {
        let mut target = |_: &[f64]| 0.0;
        let prop = ProposalConfig::Univariate { sigma: 1.0 };
        let chain = run_chain(&mut target, &[0.0], 500, prop, 42).unwrap();
        assert_eq!(acceptance_rate(&chain), 1.0);
    }

    #[test]
    fn invalid_init_is_an_error() {
        let mut target = |t: &[f64]| if t[0] > 0.0 { 0.0 } else { f64::NEG_INFINITY };
        let prop = ProposalConfig::Univariate { sigma: 1.0 };
        assert!(matches!(
            run_chain(&mut target, &[-1.0], 10, prop, 1),
            Err(McmcError::InvalidInit)
        ));
    }

    #[test]
    fn rejected_steps_repeat_previous_sample() {
        // a target with tiny support forces frequent rejections
        let mut target = |t: &[f64]| if t[0].abs() < 0.05 { 0.0 } else { f64::NEG_INFINITY };
        let prop = ProposalConfig::Univariate { sigma: 0.5 };
        let chain = run_chain(&mut target, &[0.0], 300, prop, 7).unwrap();
        let mut prev = chain.init.clone();
        let mut saw_rejection = false;
        for (s, &a) in chain.samples.iter().zip(&chain.accepted) {
            if !a {
                assert_eq!(*s, prev);
                saw_rejection = true;
            }
            prev = s.clone();
        }
        assert!(saw_rejection);
    }

    #[test]
    fn identical_seeds_give_identical_chains() {
        let make = || {
            let mut target = |t: &[f64]| -0.5 * (t[0] * t[0] + t[1] * t[1]);
            run_chain(
                &mut target,
                &[0.3, -0.2],
                400,
                ProposalConfig::Bivariate {
                    sigma_alpha: 0.4,
                    sigma_beta: 0.7,
                    rho: 0.8,
                },
                99,
            )
            .unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(a, b);
        let mut target = |t: &[f64]| -0.5 * (t[0] * t[0] + t[1] * t[1]);
        let c = run_chain(
            &mut target,
            &[0.3, -0.2],
            400,
            ProposalConfig::Bivariate {
                sigma_alpha: 0.4,
                sigma_beta: 0.7,
                rho: 0.8,
            },
            100,
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn acceptance_rate_counts_flags() {
        let mut chain = Chain {
            samples: vec![vec![0.0]; 10],
            accepted: (0..10).map(|i| i % 2 == 0).collect(),
            rng_seed: 0,
            proposal: ProposalConfig::Univariate { sigma: 1.0 },
            init: vec![0.0],
        };
        assert_eq!(acceptance_rate(&chain), 0.5);
        chain.accepted = vec![true; 10];
        assert_eq!(acceptance_rate(&chain), 1.0);
    }

    #[test]
    fn gaussian_target_samples_have_correct_moments() {
        // long 1D chain over N(2, 0.5^2)
        let mut target = |t: &[f64]| -0.5 * ((t[0] - 2.0) / 0.5).powi(2);
        let chain = run_chain(
            &mut target,
            &[2.0],
            40_000,
            ProposalConfig::Univariate { sigma: 1.0 },
            5,
        )
        .unwrap();
        let xs = chain.column(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0).abs() < 0.03, "mean {mean}");
        assert!((var - 0.25).abs() < 0.03, "var {var}");
    }
}
