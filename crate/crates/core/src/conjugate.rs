//! Conjugate updates for the gamma-Poisson, beta-binomial and normal-normal
//! (known sigma) families, plus beta elicitation from two quantiles.

use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{invalid, Error, Result};
use crate::optim::{max_abs, nelder_mead, solve};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GammaPoisson,
    BetaBinomial,
    NormalNormal,
}

/// Sufficient statistics. `sum_y` is the count total for gamma-Poisson, the
/// success count for beta-binomial and the sum of observations for
/// normal-normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuffStats {
    pub n: u64,
    pub sum_y: f64,
}

/// A posterior in closed form together with what produced it.
///
/// Parameter pairs are (shape, rate) for gamma, (a, b) for beta and
/// (mean, sd) for normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugatePosterior {
    pub family: Family,
    pub prior: [f64; 2],
    pub posterior: [f64; 2],
    pub suffstats: SuffStats,
    /// Known observation sd, present only for normal-normal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

impl ConjugatePosterior {
    /// Recompute the posterior parameters from `prior` and `suffstats`.
    pub fn recompute(&self) -> [f64; 2] {
        let [p0, p1] = self.prior;
        let SuffStats { n, sum_y } = self.suffstats;
        match self.family {
            Family::GammaPoisson => [p0 + sum_y, p1 + n as f64],
            Family::BetaBinomial => [p0 + sum_y, p1 + n as f64 - sum_y],
            Family::NormalNormal => {
                let sigma = self.sigma.expect("normal-normal carries sigma");
                let prior_prec = 1.0 / (p1 * p1);
                let data_prec = n as f64 / (sigma * sigma);
                let prec = prior_prec + data_prec;
                [(prior_prec * p0 + sum_y / (sigma * sigma)) / prec, prec.sqrt().recip()]
            }
        }
    }

    pub fn prior_dist(&self) -> DistSpec {
        self.to_dist(self.prior)
    }

    pub fn posterior_dist(&self) -> DistSpec {
        self.to_dist(self.posterior)
    }

    fn to_dist(&self, [a, b]: [f64; 2]) -> DistSpec {
        match self.family {
            Family::GammaPoisson => DistSpec::gamma(a, b),
            Family::BetaBinomial => DistSpec::beta(a, b),
            Family::NormalNormal => DistSpec::normal(a, b),
        }
        .expect("conjugate updates preserve parameter constraints")
    }
}

/// Gamma(alpha, beta) prior on a Poisson rate, updated with observed counts.
pub fn gamma_poisson_update(alpha: f64, beta: f64, data: &[u64]) -> Result<ConjugatePosterior> {
    gamma_poisson_update_suffstats(alpha, beta, data.len() as u64, data.iter().sum())
}

/// As [`gamma_poisson_update`] from the sample size and count total.
pub fn gamma_poisson_update_suffstats(alpha: f64, beta: f64, n: u64, sum_y: u64) -> Result<ConjugatePosterior> {
    DistSpec::gamma(alpha, beta)?;
    let mut cp = ConjugatePosterior {
        family: Family::GammaPoisson,
        prior: [alpha, beta],
        posterior: [0.0; 2],
        suffstats: SuffStats { n, sum_y: sum_y as f64 },
        sigma: None,
    };
    cp.posterior = cp.recompute();
    Ok(cp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDecomposition {
    pub mean: f64,
    pub data_weight: f64,
    pub prior_weight: f64,
    pub sample_mean: f64,
    pub prior_mean: f64,
}

/// Write the gamma-Poisson posterior mean as
/// `n/(n+beta) * ybar + beta/(n+beta) * alpha/beta`.
pub fn posterior_mean_decomposition(cp: &ConjugatePosterior) -> Result<MeanDecomposition> {
    if cp.family != Family::GammaPoisson {
        return Err(Error::Domain(format!(
            "mean decomposition needs a gamma_poisson posterior, got {:?}",
            cp.family
        )));
    }
    let [alpha, beta] = cp.prior;
    let prior_mean = alpha / beta;
    let n = cp.suffstats.n as f64;
    if cp.suffstats.n == 0 {
        return Err(Error::DecompositionUndefined { prior_mean });
    }
    let sample_mean = cp.suffstats.sum_y / n;
    let data_weight = n / (n + beta);
    let prior_weight = beta / (n + beta);
    Ok(MeanDecomposition {
        mean: data_weight * sample_mean + prior_weight * prior_mean,
        data_weight,
        prior_weight,
        sample_mean,
        prior_mean,
    })
}

/// Gamma prior with mean `mu` worth `beta` observations: Gamma(mu * beta, beta).
pub fn prior_from_mean_and_size(mu: f64, beta: f64) -> Result<DistSpec> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("gamma", format!("prior mean must be positive, got {mu}")));
    }
    DistSpec::gamma(mu * beta, beta)
}

/// Beta(a, b) prior updated with `y` successes in `n` trials.
pub fn beta_binomial_update(a: f64, b: f64, y: u64, n: u64) -> Result<ConjugatePosterior> {
    DistSpec::beta(a, b)?;
    if y > n {
        return Err(Error::Domain(format!("{y} successes exceed {n} trials")));
    }
    let mut cp = ConjugatePosterior {
        family: Family::BetaBinomial,
        prior: [a, b],
        posterior: [0.0; 2],
        suffstats: SuffStats { n, sum_y: y as f64 },
        sigma: None,
    };
    cp.posterior = cp.recompute();
    Ok(cp)
}

/// Normal(mu0, tau0) prior on a normal mean with known sd `sigma`.
pub fn normal_normal_update(mu0: f64, tau0: f64, sigma: f64, data: &[f64]) -> Result<ConjugatePosterior> {
    DistSpec::normal(mu0, tau0)?;
    DistSpec::normal(0.0, sigma)?;
    if data.is_empty() {
        return Err(Error::Dimension("normal-normal update needs at least one observation".into()));
    }
    if data.iter().any(|y| !y.is_finite()) {
        return Err(Error::Domain("observations must be finite".into()));
    }
    let mut cp = ConjugatePosterior {
        family: Family::NormalNormal,
        prior: [mu0, tau0],
        posterior: [0.0; 2],
        suffstats: SuffStats {
            n: data.len() as u64,
            sum_y: data.iter().sum(),
        },
        sigma: Some(sigma),
    };
    cp.posterior = cp.recompute();
    Ok(cp)
}

/// Posterior predictive pmf of a new count under a gamma-Poisson posterior:
/// negative binomial with size `alpha1` and success probability
/// `beta1 / (beta1 + 1)`.
pub fn conjugate_predictive_pmf(cp: &ConjugatePosterior, y_star: u64) -> Result<f64> {
    if cp.family != Family::GammaPoisson {
        return Err(Error::Domain("predictive pmf is defined for gamma_poisson".into()));
    }
    let [a1, b1] = cp.posterior;
    Ok(DistSpec::neg_binomial(a1, b1 / (b1 + 1.0))?.density(y_star as f64))
}

/// Two stated beta quantiles: `P(p <= q1) = p1` and `P(p <= q2) = p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileAssessment {
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl QuantileAssessment {
    pub fn new(p1: f64, q1: f64, p2: f64, q2: f64) -> Result<Self> {
        let qa = Self { p1, q1, p2, q2 };
        qa.validate()?;
        Ok(qa)
    }

    /// A prior median and 90th percentile.
    pub fn median_p90(median: f64, p90: f64) -> Result<Self> {
        Self::new(0.5, median, 0.9, p90)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { p1, q1, p2, q2 } = *self;
        if !(0.0 < p1 && p1 < p2 && p2 < 1.0) {
            return Err(Error::Domain(format!("need 0 < p1 < p2 < 1, got p1 = {p1}, p2 = {p2}")));
        }
        if !(0.0 < q1 && q1 < 1.0 && 0.0 < q2 && q2 < 1.0) {
            return Err(Error::Domain(format!("quantiles must lie in (0, 1), got q1 = {q1}, q2 = {q2}")));
        }
        if q2 <= q1 {
            return Err(Error::Domain(format!("need q1 < q2, got q1 = {q1}, q2 = {q2}")));
        }
        Ok(())
    }
}

const SHAPE_MIN: f64 = 1e-3;
const SHAPE_MAX: f64 = 1e4;
const QUANTILE_TOL: f64 = 1e-6;

fn quantile_residuals(qa: &QuantileAssessment, theta: &[f64]) -> Option<[f64; 2]> {
    let (a, b) = (theta[0].exp(), theta[1].exp());
    if !(SHAPE_MIN * 0.5..=SHAPE_MAX * 2.0).contains(&a) || !(SHAPE_MIN * 0.5..=SHAPE_MAX * 2.0).contains(&b) {
        return None;
    }
    let d = DistSpec::beta(a, b).ok()?;
    Some([d.quantile(qa.p1).ok()? - qa.q1, d.quantile(qa.p2).ok()? - qa.q2])
}

/// Beta shapes `(a, b)` whose `p1` and `p2` quantiles are `q1` and `q2`.
///
/// A simplex search over `(ln a, ln b)` localizes the solution and damped
/// Newton steps on the quantile residuals finish it.
pub fn beta_from_quantiles(qa: &QuantileAssessment) -> Result<(f64, f64)> {
    qa.validate()?;
    let sq = |t: &[f64]| match quantile_residuals(qa, t) {
        Some([r1, r2]) => r1 * r1 + r2 * r2,
        None => f64::INFINITY,
    };

    // moment-style start: centre near q1..q2, spread from the normal quantiles
    let z = |p: f64| DistSpec::normal(0.0, 1.0).and_then(|d| d.quantile(p)).unwrap_or(0.0);
    let (z1, z2) = (z(qa.p1), z(qa.p2));
    let sd = ((qa.q2 - qa.q1) / (z2 - z1)).max(1e-4);
    let m = (qa.q1 - z1 * sd).clamp(0.01, 0.99);
    let total = (m * (1.0 - m) / (sd * sd) - 1.0).clamp(0.1, 1e3);
    let start = [(m * total).clamp(SHAPE_MIN, SHAPE_MAX).ln(), ((1.0 - m) * total).clamp(SHAPE_MIN, SHAPE_MAX).ln()];

    let nm = nelder_mead(sq, &start, 0.5, 1e-20, 4000);
    let mut theta = nm.x;
    let mut res = quantile_residuals(qa, &theta).ok_or(Error::InfeasibleAssessment)?;

    for _ in 0..100 {
        if max_abs(&res) <= 1e-13 {
            break;
        }
        // forward-difference Jacobian in log space
        let mut jac = nalgebra::DMatrix::zeros(2, 2);
        let mut ok = true;
        for j in 0..2 {
            let h = 1e-6 * (1.0 + theta[j].abs());
            let mut tp = theta.clone();
            tp[j] += h;
            match quantile_residuals(qa, &tp) {
                Some(rp) => {
                    jac[(0, j)] = (rp[0] - res[0]) / h;
                    jac[(1, j)] = (rp[1] - res[1]) / h;
                }
                None => ok = false,
            }
        }
        let step = if ok { solve(&jac, &res) } else { None };
        let Some(step) = step else { break };
        let norm0 = max_abs(&res);
        let mut t = 1.0;
        let mut improved = false;
        while t > 1e-6 {
            let cand = vec![theta[0] - t * step[0], theta[1] - t * step[1]];
            if let Some(rc) = quantile_residuals(qa, &cand) {
                if max_abs(&rc) < norm0 {
                    theta = cand;
                    res = rc;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let (a, b) = (theta[0].exp(), theta[1].exp());
    let in_box = (SHAPE_MIN..=SHAPE_MAX).contains(&a) && (SHAPE_MIN..=SHAPE_MAX).contains(&b);
    if !in_box || max_abs(&res) > QUANTILE_TOL {
        return Err(Error::InfeasibleAssessment);
    }
    Ok((a, b))
}
