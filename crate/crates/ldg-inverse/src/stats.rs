//! Post-processing of Markov chains: burn-in removal, posterior summaries,
//! autocovariance and the long-run (CLT) variance gamma^2, confidence
//! intervals, Kolmogorov-Smirnov stationarity batches, histograms and
//! running-statistics curves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcmc::Chain;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("burn-in {m} must be smaller than the chain length {len}")]
    BurnInTooLong { m: usize, len: usize },
    #[error("segment too short: need at least {need}, got {got}")]
    InsufficientLength { need: usize, got: usize },
    #[error("empty segment")]
    Empty,
}

/// Default truncation lag for the autocovariance sum in gamma^2.
pub const DEFAULT_CLT_LAG: usize = 15;

/// Chain segment after burn-in removal, stored per coordinate.
#[derive(Debug, Clone)]
pub struct Segment {
    pub cols: Vec<Vec<f64>>,
}

impl Segment {
    pub fn n(&self) -> usize {
        self.cols.first().map_or(0, Vec::len)
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }
}

/// Drops the first `m` samples: the retained piece is samples m+1 .. end.
pub fn discard_burn_in(chain: &Chain, m: usize) -> Result<Segment, StatsError> {
    if m >= chain.len() {
        return Err(StatsError::BurnInTooLong { m, len: chain.len() });
    }
    let cols = (0..chain.dim())
        .map(|c| chain.samples[m..].iter().map(|s| s[c]).collect())
        .collect();
    Ok(Segment { cols })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Median with the midpoint convention for even-length samples.
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Sample standard deviation (denominator n-1).
pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Empirical autocovariance (1/n) sum (x_t - xbar)(x_{t+k} - xbar).
pub fn autocovariance(xs: &[f64], k: usize) -> f64 {
    assert!(k < xs.len(), "lag {} >= segment length {}", k, xs.len());
    let n = xs.len();
    let m = mean(xs);
    let mut acc = 0.0;
    for t in 0..n - k {
        acc += (xs[t] - m) * (xs[t + k] - m);
    }
    acc / n as f64
}

/// Truncated CLT long-run variance gamma^2 = c(0) + 2 sum_{k=1..k_max} c(k).
/// If the truncated sum turns nonpositive (antithetic chains), the value is
/// floored at 1e-6 * c(0) and `floored` is set.
pub fn clt_variance(xs: &[f64], k_max: usize) -> (f64, bool) {
    assert!(k_max >= 1);
    let c0 = autocovariance(xs, 0);
    let mut gamma_sq = c0;
    for k in 1..=k_max.min(xs.len().saturating_sub(1)) {
        gamma_sq += 2.0 * autocovariance(xs, k);
    }
    if gamma_sq <= 0.0 {
        (1e-6 * c0, true)
    } else {
        (gamma_sq, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CiLevel {
    P90,
    P95,
    P99,
}

impl CiLevel {
    /// Fixed standard normal quantiles (1.96 for the 95% level).
    pub fn quantile(self) -> f64 {
        match self {
            CiLevel::P90 => 1.645,
            CiLevel::P95 => 1.96,
            CiLevel::P99 => 2.576,
        }
    }
}

/// mean +- q * sqrt(gamma^2 / n).
pub fn confidence_interval(xs: &[f64], gamma_sq: f64, level: CiLevel) -> (f64, f64) {
    let m = mean(xs);
    let half = level.quantile() * (gamma_sq / xs.len() as f64).sqrt();
    (m - half, m + half)
}

/// Two-sample Kolmogorov-Smirnov statistic: max gap of the empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.total_cmp(y));
    sb.sort_by(|x, y| x.total_cmp(y));
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut gap: f64 = 0.0;
    while ia < sa.len() && ib < sb.len() {
        let va = sa[ia];
        let vb = sb[ib];
        if va <= vb {
            ia += 1;
        }
        if vb <= va {
            ib += 1;
        }
        let fa = ia as f64 / sa.len() as f64;
        let fb = ib as f64 / sb.len() as f64;
        gap = gap.max((fa - fb).abs());
    }
    gap
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsWindow {
    /// Indices (into the segment) of the two compared periods.
    pub first_start: usize,
    pub second_start: usize,
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Stationarity scan: the segment is cut into successive disjoint periods of
/// `period` samples, each thinned by step `g`, and consecutive thinned
/// batches are compared with the two-sample KS test at the 5% level
/// (critical value 1.36 sqrt(2/m) for batches of size m = period/g).
pub fn ks_stationarity(xs: &[f64], period: usize, g: usize) -> Result<Vec<KsWindow>, StatsError> {
    let n_windows = xs.len() / period;
    if n_windows < 2 {
        return Err(StatsError::InsufficientLength {
            need: 2 * period,
            got: xs.len(),
        });
    }
    let m = period / g;
    let critical = 1.36 * (2.0 / m as f64).sqrt();
    let thin = |w: usize| -> Vec<f64> {
        (0..m).map(|i| xs[w * period + i * g]).collect()
    };
    let mut out = Vec::with_capacity(n_windows - 1);
    for w in 0..n_windows - 1 {
        let statistic = ks_statistic(&thin(w), &thin(w + 1));
        out.push(KsWindow {
            first_start: w * period,
            second_start: (w + 1) * period,
            statistic,
            critical,
            pass: statistic < critical,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width histogram spanning [min, max]; counts sum to the sample size.
pub fn histogram(xs: &[f64], bins: usize) -> Histogram {
    assert!(bins >= 1);
    assert!(!xs.is_empty());
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let b = if width == 0.0 {
            0
        } else {
            (((x - lo) / width) as usize).min(bins - 1)
        };
        counts[b] += 1;
    }
    let edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major counts, `counts[iy][ix]`.
    pub counts: Vec<Vec<usize>>,
}

pub fn bivariate_histogram(xs: &[f64], ys: &[f64], bins: usize) -> Histogram2d {
    assert!(bins >= 1);
    assert_eq!(xs.len(), ys.len());
    let hx = histogram(xs, bins);
    let hy = histogram(ys, bins);
    let mut counts = vec![vec![0usize; bins]; bins];
    let (xlo, xw) = (hx.edges[0], hx.edges[1] - hx.edges[0]);
    let (ylo, yw) = (hy.edges[0], hy.edges[1] - hy.edges[0]);
    for (&x, &y) in xs.iter().zip(ys) {
        let bx = if xw == 0.0 { 0 } else { (((x - xlo) / xw) as usize).min(bins - 1) };
        let by = if yw == 0.0 { 0 } else { (((y - ylo) / yw) as usize).min(bins - 1) };
        counts[by][bx] += 1;
    }
    Histogram2d {
        x_edges: hx.edges,
        y_edges: hy.edges,
        counts,
    }
}

/// Posterior summaries for one chain segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// Pearson correlation of the two coordinates (bivariate chains).
    pub correlation: Option<f64>,
    /// CLT long-run variance per coordinate.
    pub gamma_sq: Vec<f64>,
    pub gamma_floored: Vec<bool>,
    /// Confidence interval for the mean per coordinate.
    pub ci: Vec<(f64, f64)>,
    pub ci_level: CiLevel,
    pub n_used: usize,
}

/// Mean/median/std/correlation plus gamma^2-based confidence intervals.
pub fn summarize(segment: &Segment, k_max: usize, level: CiLevel) -> Result<ChainStats, StatsError> {
    if segment.n() == 0 {
        return Err(StatsError::Empty);
    }
    let mut stats = ChainStats {
        mean: Vec::new(),
        median: Vec::new(),
        std_dev: Vec::new(),
        correlation: None,
        gamma_sq: Vec::new(),
        gamma_floored: Vec::new(),
        ci: Vec::new(),
        ci_level: level,
        n_used: segment.n(),
    };
    for col in &segment.cols {
        stats.mean.push(mean(col));
        stats.median.push(median(col));
        stats.std_dev.push(std_dev(col));
        let (g, floored) = clt_variance(col, k_max.min(col.len().saturating_sub(1)).max(1));
        stats.ci.push(confidence_interval(col, g, level));
        stats.gamma_sq.push(g);
        stats.gamma_floored.push(floored);
    }
    if segment.dim() == 2 {
        stats.correlation = Some(pearson_correlation(&segment.cols[0], &segment.cols[1]));
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningStat {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub ci: (f64, f64),
}

/// Statistics over prefixes of the segment at the given lengths.
pub fn running_stats(
    xs: &[f64],
    checkpoints: &[usize],
    k_max: usize,
    level: CiLevel,
) -> Result<Vec<RunningStat>, StatsError> {
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        if n == 0 || n > xs.len() {
            return Err(StatsError::InsufficientLength { need: n, got: xs.len() });
        }
        let prefix = &xs[..n];
        let (g, _) = clt_variance(prefix, k_max.min(n - 1).max(1));
        out.push(RunningStat {
            n,
            mean: mean(prefix),
            median: median(prefix),
            ci: confidence_interval(prefix, g, level),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::ProposalConfig;

    fn toy_chain(values: Vec<f64>) -> Chain {
        Chain {
            accepted: vec![true; values.len()],
            samples: values.into_iter().map(|v| vec![v]).collect(),
            rng_seed: 0,
            proposal: ProposalConfig::Univariate { sigma: 1.0 },
            init: vec![0.0],
        }
    }

    #[test]
    fn burn_in_boundaries() {
        let chain = toy_chain((0..100).map(f64::from).collect());
        assert_eq!(discard_burn_in(&chain, 0).unwrap().n(), 100);
        let seg = discard_burn_in(&chain, 99).unwrap();
        assert_eq!(seg.n(), 1);
        assert_eq!(seg.cols[0][0], 99.0);
        assert!(discard_burn_in(&chain, 100).is_err());
        let chain = toy_chain((0..10_000).map(f64::from).collect());
        assert_eq!(discard_burn_in(&chain, 200).unwrap().n(), 9800);
    }

    #[test]
    fn summary_basics() {
        let seg = Segment { cols: vec![vec![1.0, 2.0, 3.0]] };
        let s = summarize(&seg, 1, CiLevel::P95).unwrap();
        assert_eq!(s.mean[0], 2.0);
        assert_eq!(s.median[0], 2.0);
        assert_eq!(s.std_dev[0], 1.0);
        // even-length median: midpoint of the central order statistics
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn autocovariance_lag_zero_is_population_variance() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let m = mean(&xs);
        let pop_var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((autocovariance(&xs, 0) - pop_var).abs() < 1e-15);
    }

    #[test]
    fn iid_segment_has_small_lag_one_autocovariance() {
        // deterministic pseudo-random sequence
        let xs: Vec<f64> = (0..4000)
            .map(|i| {
                let v = (i as f64 * 12.9898).sin() * 43758.5453;
                v - v.floor() - 0.5
            })
            .collect();
        let c0 = autocovariance(&xs, 0);
        let c1 = autocovariance(&xs, 1);
        assert!(c1.abs() < 3.0 * c0 / (xs.len() as f64).sqrt());
        let (g, floored) = clt_variance(&xs, 15);
        assert!(!floored);
        assert!((g - c0).abs() < 0.3 * c0);
    }

    #[test]
    fn alternating_segment_floors_gamma() {
        let xs: Vec<f64> = (0..1000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let (g, floored) = clt_variance(&xs, 1);
        assert!(floored);
        assert!((g - 1e-6 * autocovariance(&xs, 0)).abs() < 1e-18);
    }

    #[test]
    fn constant_segment_zero_width_interval() {
        let xs = vec![3.5; 50];
        let (g, _) = clt_variance(&xs, 5);
        let (lo, hi) = confidence_interval(&xs, g, CiLevel::P95);
        assert_eq!(lo, hi);
        assert_eq!(lo, 3.5);
    }

    #[test]
    fn ci_levels_nest() {
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 * 0.71).sin()).collect();
        let (g, _) = clt_variance(&xs, 15);
        let c95 = confidence_interval(&xs, g, CiLevel::P95);
        let c99 = confidence_interval(&xs, g, CiLevel::P99);
        let c90 = confidence_interval(&xs, g, CiLevel::P90);
        assert!(c99.0 <= c95.0 && c95.1 <= c99.1);
        assert!(c95.0 <= c90.0 && c90.1 <= c95.1);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = (0..100).map(|i| 1000.0 + i as f64).collect();
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    #[test]
    fn ks_stationarity_windows() {
        let xs: Vec<f64> = (0..3000)
            .map(|i| {
                let v = (i as f64 * 7.13).sin() * 1234.5;
                v - v.floor()
            })
            .collect();
        let windows = ks_stationarity(&xs, 1000, 10).unwrap();
        assert_eq!(windows.len(), 2);
        assert!((windows[0].critical - 0.1923).abs() < 1e-3);
        assert!(windows.iter().all(|w| w.pass));
        // shifted second window fails
        let mut shifted = xs.clone();
        for v in shifted[1000..2000].iter_mut() {
            *v += 100.0;
        }
        let windows = ks_stationarity(&shifted, 1000, 10).unwrap();
        assert!(!windows[0].pass);
        assert!(ks_stationarity(&xs[..1500], 1000, 10).is_err());
    }

    #[test]
    fn histogram_conservation() {
        let xs = vec![1.0; 17];
        let h = histogram(&xs, 1);
        assert_eq!(h.counts, vec![17]);
        let xs: Vec<f64> = (0..9800).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = histogram(&xs, 40);
        assert_eq!(h.counts.iter().sum::<usize>(), 9800);
        assert_eq!(h.edges.len(), 41);
        let h2 = bivariate_histogram(&xs, &xs, 10);
        let total: usize = h2.counts.iter().flatten().sum();
        assert_eq!(total, 9800);
    }

    #[test]
    fn running_stats_prefixes() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 * 0.11).cos()).collect();
        let r = running_stats(&xs, &[1, 250, 500], 15, CiLevel::P95).unwrap();
        assert_eq!(r[0].mean, xs[0]);
        assert_eq!(r[0].median, xs[0]);
        assert_eq!(r[2].mean, mean(&xs));
        assert_eq!(r[2].median, median(&xs));
    }

    #[test]
    fn permutation_invariance() {
        let xs: Vec<f64> = (0..101).map(|i| (i as f64 * 1.7).sin()).collect();
        let mut perm = xs.clone();
        perm.reverse();
        perm.swap(3, 77);
        assert!((mean(&xs) - mean(&perm)).abs() < 1e-12);
        assert!((std_dev(&xs) - std_dev(&perm)).abs() < 1e-12);
        assert_eq!(median(&xs), median(&perm));
        assert_eq!(histogram(&xs, 13).counts, histogram(&perm, 13).counts);
    }
}
