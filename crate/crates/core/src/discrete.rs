//! Discrete Bayes tables and one-dimensional grid posteriors.
//!
//! A [`BayesTable`] is the five-column tabulation (value, prior, likelihood,
//! product, posterior) for a parameter restricted to finitely many values.
//! A [`GridPosterior`] approximates a continuous one-parameter posterior on a
//! uniform grid; it is what `grid_sample` resamples from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Turn nonnegative weights into prior probabilities by dividing by their sum.
pub fn weights_to_prior(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesTable {
    pub values: Vec<f64>,
    pub prior: Vec<f64>,
    /// `exp(loglik)`, or `exp(loglik - log_scale)` when the raw likelihoods
    /// under- or overflow.
    pub likelihood: Vec<f64>,
    pub product: Vec<f64>,
    pub posterior: Vec<f64>,
    pub normalizer: f64,
    /// Natural-log factor divided out of the likelihood column; 0 when the
    /// column holds raw likelihoods.
    #[serde(default)]
    pub log_scale: f64,
}

/// Fill in a Bayes table for `values` under `prior` and a log-likelihood.
pub fn update_table(values: &[f64], prior: &[f64], loglik: impl Fn(f64) -> f64) -> Result<BayesTable> {
    if values.is_empty() {
        return Err(Error::Dimension("a Bayes table needs at least one value".into()));
    }
    if values.len() != prior.len() {
        return Err(Error::Dimension(format!(
            "{} values but {} prior probabilities",
            values.len(),
            prior.len()
        )));
    }
    if prior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::Domain("prior probabilities must be nonnegative".into()));
    }
    let prior_sum: f64 = prior.iter().sum();
    if (prior_sum - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("prior sums to {prior_sum}, expected 1")));
    }

    let ll: Vec<f64> = values.iter().map(|&v| loglik(v)).collect();
    if ll.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::Domain("log-likelihood must be finite or -inf".into()));
    }
    // only rows with positive prior can carry posterior mass
    let max_ll = ll
        .iter()
        .zip(prior)
        .filter(|(_, p)| **p > 0.0)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_ll == f64::NEG_INFINITY {
        return Err(Error::Contradiction("every value with prior mass has zero likelihood".into()));
    }

    let raw: Vec<f64> = ll.iter().map(|l| l.exp()).collect();
    let representable = raw
        .iter()
        .zip(&ll)
        .all(|(r, l)| r.is_finite() && (*r > 0.0 || *l == f64::NEG_INFINITY))
        && prior.iter().zip(&raw).map(|(p, r)| p * r).sum::<f64>() > 0.0;
    let (likelihood, log_scale) = if representable {
        (raw, 0.0)
    } else {
        (ll.iter().map(|l| (l - max_ll).exp()).collect(), max_ll)
    };

    let product: Vec<f64> = prior.iter().zip(&likelihood).map(|(p, l)| p * l).collect();
    let normalizer: f64 = product.iter().sum();
    let posterior = product.iter().map(|p| p / normalizer).collect();
    Ok(BayesTable {
        values: values.to_vec(),
        prior: prior.to_vec(),
        likelihood,
        product,
        posterior,
        normalizer,
        log_scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleSet {
    /// Members in the order they were added (decreasing posterior).
    pub values: Vec<f64>,
    pub coverage: f64,
}

/// The "probability bin": add values in decreasing posterior order until the
/// accumulated posterior reaches `level`. Equal masses go to the smaller value
/// first. Values with zero posterior are never added.
pub fn credible_set(table: &BayesTable, level: f64) -> Result<CredibleSet> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::Domain(format!("credible level must lie in (0, 1], got {level}")));
    }
    let mut order: Vec<usize> = (0..table.values.len()).collect();
    order.sort_by(|&i, &j| {
        table.posterior[j]
            .total_cmp(&table.posterior[i])
            .then(table.values[i].total_cmp(&table.values[j]))
    });
    let mut values = Vec::new();
    let mut coverage = 0.0;
    for i in order {
        // allow for roundoff so that level 1 collects every positive-mass value
        if coverage >= level - 1e-12 || table.posterior[i] <= 0.0 {
            break;
        }
        values.push(table.values[i]);
        coverage += table.posterior[i];
    }
    Ok(CredibleSet { values, coverage })
}

/// Posterior predictive mass `sum_j posterior_j * f(y* | value_j)`.
pub fn predictive_mass(table: &BayesTable, sampling_pmf: impl Fn(u64, f64) -> f64, y_star: u64) -> f64 {
    table
        .posterior
        .iter()
        .zip(&table.values)
        .map(|(p, v)| p * sampling_pmf(y_star, *v))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPosterior {
    pub grid: Vec<f64>,
    /// Unnormalized log posterior at each grid point.
    pub log_post: Vec<f64>,
    pub probs: Vec<f64>,
    pub step: f64,
}

/// Evaluate `logpost` on the inclusive uniform grid `lo, lo + step, ..., hi`
/// and normalize after subtracting the maximum.
pub fn grid_posterior(lo: f64, hi: f64, step: f64, logpost: impl Fn(f64) -> f64) -> Result<GridPosterior> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("grid needs finite lo < hi, got ({lo}, {hi})")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Domain(format!("grid step must be positive, got {step}")));
    }
    let intervals = ((hi - lo) / step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=intervals).map(|i| lo + i as f64 * step).collect();
    GridPosterior::from_log_values(grid, step, logpost)
}

impl GridPosterior {
    pub(crate) fn from_log_values(grid: Vec<f64>, step: f64, logpost: impl Fn(f64) -> f64) -> Result<Self> {
        let log_post: Vec<f64> = grid.iter().map(|&x| logpost(x)).collect();
        Self::from_log_post(grid, step, log_post)
    }

    pub(crate) fn from_log_post(grid: Vec<f64>, step: f64, log_post: Vec<f64>) -> Result<Self> {
        if log_post.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
            return Err(Error::Domain("log posterior must be finite or -inf on the grid".into()));
        }
        let max = log_post.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Contradiction("log posterior is -inf at every grid point".into()));
        }
        let w: Vec<f64> = log_post.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = w.iter().sum();
        let probs = w.iter().map(|x| x / total).collect();
        Ok(Self {
            grid,
            log_post,
            probs,
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .probs
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bp), (i, &p)| if p > bp { (i, p) } else { (bi, bp) });
        self.grid[i]
    }

    pub fn mean(&self) -> f64 {
        self.grid.iter().zip(&self.probs).map(|(x, p)| x * p).sum()
    }

    pub fn central_moment(&self, k: i32) -> f64 {
        let m = self.mean();
        self.grid.iter().zip(&self.probs).map(|(x, p)| (x - m).powi(k) * p).sum()
    }

    pub fn sd(&self) -> f64 {
        self.central_moment(2).max(0.0).sqrt()
    }

    /// `P(theta > x)`, reading each grid point's mass as spread evenly over
    /// the cell of width `step` centred on it. A grid point sitting exactly at
    /// `x` contributes half its mass.
    pub fn prob_above(&self, x: f64) -> f64 {
        self.grid
            .iter()
            .zip(&self.probs)
            .map(|(g, p)| p * ((g + 0.5 * self.step - x) / self.step).clamp(0.0, 1.0))
            .sum()
    }

    /// Smallest grid value whose cumulative probability reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let mut cum = 0.0;
        for (x, q) in self.grid.iter().zip(&self.probs) {
            cum += q;
            if cum >= p - 1e-12 {
                return *x;
            }
        }
        *self.grid.last().expect("grid is nonempty")
    }

    /// Equal-tailed interval from grid quantiles at `(1 -+ level) / 2`.
    pub fn central_interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!("interval level must lie in (0, 1), got {level}")));
        }
        let tail = 0.5 * (1.0 - level);
        Ok((self.quantile(tail), self.quantile(1.0 - tail)))
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            mean: self.mean(),
            sd: self.sd(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub mean: f64,
    pub sd: f64,
}

/// Moments of a grid posterior. Tail probabilities and intervals are the
/// [`GridPosterior::prob_above`] and [`GridPosterior::central_interval`] methods.
pub fn grid_summary(g: &GridPosterior) -> GridSummary {
    g.summary()
}

/// `s` draws with replacement from the grid values, weighted by `probs`.
pub fn grid_sample(g: &GridPosterior, rng: &mut RngStream, s: usize) -> Vec<f64> {
    let mut cum = Vec::with_capacity(g.probs.len());
    let mut acc = 0.0;
    for p in &g.probs {
        acc += p;
        cum.push(acc);
    }
    let total = acc;
    (0..s)
        .map(|_| {
            let u = rng.uniform() * total;
            let i = cum.partition_point(|c| *c <= u).min(g.grid.len() - 1);
            g.grid[i]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{binomial_loglik, poisson_loglik};

    fn ed_table() -> BayesTable {
        update_table(
            &[3.0, 3.5, 4.0, 4.5, 5.0],
            &[0.1, 0.2, 0.4, 0.2, 0.1],
            poisson_loglik(10, 31),
        )
        .unwrap()
    }

    #[test]
    fn weights_normalize() {
        assert_eq!(weights_to_prior(&[10.0, 5.0, 5.0]).unwrap(), vec![0.5, 0.25, 0.25]);
        let p = weights_to_prior(&[4.0, 2.0, 1.0, 3.0, 2.0]).unwrap();
        let expected = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 12.0, 0.25, 1.0 / 6.0];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(weights_to_prior(&[7.0]).unwrap(), vec![1.0]);
        assert_eq!(weights_to_prior(&[0.0, 0.0]), Err(Error::DegeneratePrior));
    }

    #[test]
    fn ed_table_reproduces_printed_columns() {
        let t = ed_table();
        let post = [0.241, 0.386, 0.327, 0.042, 0.004];
        let lik = [57.8, 46.3, 19.6, 5.1, 0.9];
        for i in 0..5 {
            assert!((t.posterior[i] - post[i]).abs() < 5e-4, "posterior {i}: {}", t.posterior[i]);
            assert!((t.likelihood[i] - lik[i]).abs() < 0.05, "likelihood {i}: {}", t.likelihood[i]);
            assert_eq!(t.posterior[i], t.product[i] / t.normalizer);
        }
        assert_eq!(t.log_scale, 0.0);
    }

    #[test]
    fn constant_likelihood_returns_prior() {
        let prior = [0.2, 0.5, 0.3];
        let t = update_table(&[1.0, 2.0, 3.0], &prior, |_| -3.7).unwrap();
        for (a, b) in t.posterior.iter().zip(prior) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn proportion_grid_matches_brute_force() {
        let values: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let prior = vec![1.0 / 11.0; 11];
        let t = update_table(&values, &weights_to_prior(&prior).unwrap(), binomial_loglik(13, 20)).unwrap();
        assert_eq!(t.posterior[0], 0.0);
        assert_eq!(t.posterior[10], 0.0);
        let w: Vec<f64> = values.iter().map(|p| p.powi(13) * (1.0 - p).powi(7)).collect();
        let s: f64 = w.iter().sum();
        for (a, b) in t.posterior.iter().zip(&w) {
            assert!((a - b / s).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_loglik_falls_back_to_log_space() {
        let t = update_table(&[1.0, 2.0], &[0.5, 0.5], |v| -5000.0 - v).unwrap();
        assert_eq!(t.log_scale, -5001.0);
        let e = (-1.0f64).exp();
        assert!((t.posterior[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((t.posterior.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_impossible_is_a_contradiction() {
        let r = update_table(&[1.0, 2.0], &[0.5, 0.5], |_| f64::NEG_INFINITY);
        assert!(matches!(r, Err(Error::Contradiction(_))));
    }

    #[test]
    fn mismatched_lengths_rejected() {
        assert!(matches!(update_table(&[1.0], &[0.5, 0.5], |_| 0.0), Err(Error::Dimension(_))));
    }

    #[test]
    fn probability_bin_for_ed_example() {
        let t = ed_table();
        let s95 = credible_set(&t, 0.95).unwrap();
        let mut members = s95.values.clone();
        members.sort_by(f64::total_cmp);
        assert_eq!(members, vec![3.0, 3.5, 4.0]);
        assert!((s95.coverage - 0.954).abs() < 1e-3);
        let s30 = credible_set(&t, 0.30).unwrap();
        assert_eq!(s30.values, vec![3.5]);
        assert!((s30.coverage - 0.386).abs() < 1e-3);
    }

    #[test]
    fn single_atom_credible_set() {
        let t = update_table(&[2.0], &[1.0], |_| -1.0).unwrap();
        let s = credible_set(&t, 0.5).unwrap();
        assert_eq!(s.values, vec![2.0]);
        assert_eq!(s.coverage, 1.0);
    }

    #[test]
    fn ties_prefer_smaller_value() {
        let t = update_table(&[3.0, 1.0, 2.0], &[0.25, 0.25, 0.5], |_| 0.0).unwrap();
        let s = credible_set(&t, 0.6).unwrap();
        assert_eq!(s.values, vec![2.0, 1.0]);
    }

    #[test]
    fn full_level_collects_every_positive_value() {
        let t = update_table(&[0.0, 0.5, 1.0], &[1.0 / 3.0; 3], binomial_loglik(1, 2)).unwrap();
        let s = credible_set(&t, 1.0).unwrap();
        assert_eq!(s.values, vec![0.5]);
    }

    fn poisson_pmf(y: u64, rate: f64) -> f64 {
        crate::dist::DistSpec::poisson(rate).unwrap().density(y as f64)
    }

    #[test]
    fn ed_predictive_probability_of_no_visits() {
        let f0 = predictive_mass(&ed_table(), poisson_pmf, 0);
        assert!((f0 - 0.030).abs() < 5e-4, "{f0}");
    }

    #[test]
    fn degenerate_posterior_predictive() {
        let t = update_table(&[4.0], &[1.0], |_| 0.0).unwrap();
        assert_eq!(predictive_mass(&t, poisson_pmf, 0), poisson_pmf(0, 4.0));
        assert!((poisson_pmf(0, 4.0) - (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn predictive_sums_to_one() {
        let t = ed_table();
        let total: f64 = (0..=200).map(|y| predictive_mass(&t, poisson_pmf, y)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    fn commute_lp(s: f64) -> f64 {
        -8.0 * s.ln() - 146.0 / (2.0 * s * s)
    }

    #[test]
    fn commute_grid_peaks_at_4_3() {
        let g = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap();
        assert_eq!(g.len(), 140);
        assert!((g.grid[139] - 14.0).abs() < 1e-9);
        assert!((g.argmax() - 4.3).abs() < 1e-9);
        assert!((g.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_probs_invariant_to_shift() {
        let a = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap();
        let b = grid_posterior(0.1, 14.0, 0.1, |s| commute_lp(s) + 1000.0).unwrap();
        for (x, y) in a.probs.iter().zip(&b.probs) {
            // lp + 1000 carries ~1e-13 absolute rounding into the exponent
            assert!((x - y).abs() <= 1e-12 * x.max(*y));
        }
    }

    #[test]
    fn grid_all_impossible() {
        assert!(matches!(
            grid_posterior(0.0, 1.0, 0.1, |_| f64::NEG_INFINITY),
            Err(Error::Contradiction(_))
        ));
    }

    #[test]
    fn tail_probability_close_to_fine_grid() {
        let coarse = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap();
        // trapezoid quadrature at a 10x finer step, independent of the grid code
        let trap = |a: f64, b: f64| {
            let k = ((b - a) / 0.01).round() as usize;
            let h = (b - a) / k as f64;
            (0..=k)
                .map(|i| {
                    let w = if i == 0 || i == k { 0.5 } else { 1.0 };
                    w * commute_lp(a + i as f64 * h).exp()
                })
                .sum::<f64>()
                * h
        };
        let oracle = trap(8.0, 14.05) / trap(0.05, 14.05);
        assert!((coarse.prob_above(8.0) - oracle).abs() < 1e-3, "{} vs {oracle}", coarse.prob_above(8.0));
        let (lo, hi) = coarse.central_interval(0.9).unwrap();
        assert!(lo < 4.3 && 4.3 < hi);
    }

    #[test]
    fn refining_the_grid_moves_the_mean_by_order_step() {
        let a = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap().mean();
        let b = grid_posterior(0.01, 14.0, 0.01, commute_lp).unwrap().mean();
        assert!((a - b).abs() < 0.1, "{a} vs {b}");
    }

    #[test]
    fn one_point_grid() {
        let g = GridPosterior::from_log_post(vec![2.5], 1.0, vec![0.0]).unwrap();
        assert_eq!(g.summary(), GridSummary { mean: 2.5, sd: 0.0 });
        assert_eq!(grid_sample(&g, &mut RngStream::new(1, 0), 10), vec![2.5; 10]);
    }

    #[test]
    fn resampling_frequencies_match_probs() {
        let g = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap();
        let n = 1_000_000;
        let draws = grid_sample(&g, &mut RngStream::new(3, 0), n);
        let mut counts = vec![0usize; g.len()];
        for d in draws {
            counts[((d - 0.1) / 0.1).round() as usize] += 1;
        }
        for (c, p) in counts.iter().zip(&g.probs) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.003);
        }
    }

    #[test]
    fn resampled_mean_within_clt_bound() {
        let g = grid_posterior(0.1, 14.0, 0.1, commute_lp).unwrap();
        let s = 100_000;
        let draws = grid_sample(&g, &mut RngStream::new(4, 0), s);
        let m = draws.iter().sum::<f64>() / s as f64;
        assert!((m - g.mean()).abs() < 3.0 * g.sd() / (s as f64).sqrt());
    }
}
