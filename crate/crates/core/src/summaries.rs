//! Monte Carlo summaries of posterior draws and predictive checks.

use serde::{Deserialize, Serialize};

use crate::dist::{sample_poisson, DistKind, DistSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantilePoint {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    /// Denominator `S - 1`; zero for a single draw.
    pub sd: f64,
    /// In the order the levels were requested.
    pub quantiles: Vec<QuantilePoint>,
    pub n_draws: usize,
}

impl PosteriorSummary {
    pub fn quantile(&self, level: f64) -> Option<f64> {
        self.quantiles.iter().find(|q| q.level == level).map(|q| q.value)
    }
}

/// Linear interpolation between order statistics at position
/// `(S - 1) level` of the sorted draws.
pub fn empirical_quantile(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mc_summary(draws: &[f64], levels: &[f64]) -> Result<PosteriorSummary> {
    if draws.is_empty() {
        return Err(Error::Dimension("no draws to summarize".into()));
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {l}")));
    }
    if draws.iter().any(|d| d.is_nan()) {
        return Err(Error::Domain("draws contain NaN".into()));
    }
    let n = draws.len();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = levels
        .iter()
        .map(|&level| QuantilePoint {
            level,
            value: empirical_quantile(&sorted, level),
        })
        .collect();
    Ok(PosteriorSummary {
        mean,
        sd,
        quantiles,
        n_draws: n,
    })
}

/// Mean of `h` over the draws.
pub fn mc_expectation_of(h: impl Fn(f64) -> f64, draws: &[f64]) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::Dimension("no draws to average".into()));
    }
    Ok(draws.iter().map(|&x| h(x)).sum::<f64>() / draws.len() as f64)
}

/// Probability of at most two events under a Poisson rate:
/// `exp(-lambda) (1 + lambda + lambda^2 / 2)`.
pub fn at_most_two(lambda: f64) -> f64 {
    (-lambda).exp() * (1.0 + lambda + 0.5 * lambda * lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpcResult {
    #[serde(rename = "replicated")]
    pub replicated_stats: Vec<f64>,
    #[serde(rename = "observed")]
    pub observed_stat: f64,
    pub tail_area: f64,
}

/// `2 min(P(T >= obs), P(T <= obs))`, capped at 1.
pub fn two_sided_tail_area(replicated: &[f64], observed: f64) -> f64 {
    let n = replicated.len() as f64;
    let ge = replicated.iter().filter(|t| **t >= observed).count() as f64 / n;
    let le = replicated.iter().filter(|t| **t <= observed).count() as f64 / n;
    (2.0 * ge.min(le)).min(1.0)
}

/// Posterior predictive check of a Poisson sample mean: each replicate draws
/// a rate from the gamma `posterior`, then `n` Poisson counts, and records
/// their mean.
pub fn ppc_mean_check(
    posterior: &DistSpec,
    n: usize,
    reps: usize,
    observed_mean: f64,
    rng: &mut RngStream,
) -> Result<PpcResult> {
    if !matches!(posterior.kind(), DistKind::Gamma { .. }) {
        return Err(Error::Domain("predictive check expects a gamma posterior".into()));
    }
    if n == 0 || reps == 0 {
        return Err(Error::Domain("n and reps must be at least 1".into()));
    }
    let replicated_stats: Vec<f64> = (0..reps)
        .map(|_| {
            let lambda = posterior.draw(rng);
            (0..n).map(|_| sample_poisson(lambda, rng) as f64).sum::<f64>() / n as f64
        })
        .collect();
    Ok(PpcResult {
        tail_area: two_sided_tail_area(&replicated_stats, observed_mean),
        replicated_stats,
        observed_stat: observed_mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_draws(n: usize, seed: u64) -> Vec<f64> {
        DistSpec::gamma(111.0, 30.0).unwrap().sample(&mut RngStream::new(seed, 0), n)
    }

    #[test]
    fn interval_from_draws() {
        let s = mc_summary(&gamma_draws(100_000, 1), &[0.05, 0.95]).unwrap();
        assert!((s.quantile(0.05).unwrap() - 3.142).abs() < 0.02);
        assert!((s.quantile(0.95).unwrap() - 4.296).abs() < 0.02);
        let small = mc_summary(&gamma_draws(1000, 2), &[0.05, 0.95]).unwrap();
        assert!((small.quantile(0.05).unwrap() - 3.142).abs() < 0.15);
        assert!((small.quantile(0.95).unwrap() - 4.296).abs() < 0.15);
    }

    #[test]
    fn constant_draws() {
        let s = mc_summary(&[2.5; 40], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!((s.mean, s.sd), (2.5, 0.0));
        assert!(s.quantiles.iter().all(|q| q.value == 2.5));
    }

    #[test]
    fn type7_quantiles() {
        let s = mc_summary(&[4.0, 1.0, 3.0, 2.0], &[0.5, 0.25]).unwrap();
        assert_eq!(s.quantile(0.5), Some(2.5));
        assert_eq!(s.quantile(0.25), Some(1.75));
        assert!(mc_summary(&[1.0], &[1.0]).is_err());
        assert!(mc_summary(&[], &[0.5]).is_err());
    }

    #[test]
    fn at_most_two_visits() {
        let e = mc_expectation_of(at_most_two, &gamma_draws(1_000_000, 3)).unwrap();
        assert!((e - 0.293).abs() < 0.003, "{e}");
    }

    #[test]
    fn expectation_identities() {
        let d = gamma_draws(1000, 4);
        assert_eq!(mc_expectation_of(|x| x, &d).unwrap(), mc_summary(&d, &[]).unwrap().mean);
        assert_eq!(mc_expectation_of(|_| 0.75, &d).unwrap(), 0.75);
    }

    #[test]
    fn ed_check_puts_observed_in_bulk() {
        let post = DistSpec::gamma(111.0, 30.0).unwrap();
        let r = ppc_mean_check(&post, 10, 1000, 3.1, &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(r.replicated_stats.len(), 1000);
        assert!(r.tail_area > 0.10, "{}", r.tail_area);
    }

    #[test]
    fn concentrated_posterior_check() {
        let l0 = 3.0;
        let post = DistSpec::gamma(l0 * 1e6, 1e6).unwrap();
        let (n, reps) = (10, 20_000);
        let r = ppc_mean_check(&post, n, reps, l0, &mut RngStream::new(6, 0)).unwrap();
        let m = r.replicated_stats.iter().sum::<f64>() / reps as f64;
        assert!((m - l0).abs() < 3.0 * (l0 / (n * reps) as f64).sqrt());
        let one = ppc_mean_check(&post, n, 1, l0, &mut RngStream::new(6, 0)).unwrap();
        assert_eq!(one.replicated_stats.len(), 1);
    }

    #[test]
    fn tail_area_is_symmetric_and_capped() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(two_sided_tail_area(&t, 0.0), 0.0);
        assert_eq!(two_sided_tail_area(&t, 2.5), 1.0);
        assert_eq!(two_sided_tail_area(&t, 4.0), 0.5);
    }
}
