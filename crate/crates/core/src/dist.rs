//! Probability distributions: log densities, CDFs, quantiles and seeded sampling.
//!
//! Gamma is rate-parameterized everywhere (`mean = shape / rate`). Log
//! densities carry their full normalizing constants; unnormalized model
//! log-posteriors live with the models that use them.

use std::f64::consts::PI;

use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;
use crate::special::{
    beta_reg, erf_inv, gamma_lr, gamma_ur, ln_beta, ln_choose, ln_factorial, ln_gamma,
    std_normal_cdf,
};

/// Distribution family and parameters. Build through [`DistSpec::new`] or
/// the named constructors so the parameter constraints hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistKind {
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
    Poisson { rate: f64 },
    Binomial { n: u64, p: f64 },
    Cauchy { location: f64, scale: f64 },
    Uniform { lo: f64, hi: f64 },
    NegBinomial { size: f64, prob: f64 },
}

/// A validated distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistKind", into = "DistKind")]
pub struct DistSpec(DistKind);

impl TryFrom<DistKind> for DistSpec {
    type Error = Error;

    fn try_from(kind: DistKind) -> Result<Self> {
        DistSpec::new(kind)
    }
}

impl From<DistSpec> for DistKind {
    fn from(d: DistSpec) -> Self {
        d.0
    }
}

fn positive(dist: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(dist, format!("{name} must be finite and > 0, got {v}")))
    }
}

fn finite(dist: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(dist, format!("{name} must be finite, got {v}")))
    }
}

impl DistSpec {
    pub fn new(kind: DistKind) -> Result<Self> {
        match kind {
            DistKind::Gamma { shape, rate } => {
                positive("gamma", "shape", shape)?;
                positive("gamma", "rate", rate)?;
            }
            DistKind::Beta { a, b } => {
                positive("beta", "a", a)?;
                positive("beta", "b", b)?;
            }
            DistKind::Normal { mean, sd } => {
                finite("normal", "mean", mean)?;
                positive("normal", "sd", sd)?;
            }
            DistKind::Poisson { rate } => positive("poisson", "rate", rate)?,
            DistKind::Binomial { p, .. } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid("binomial", format!("p must lie in [0, 1], got {p}")));
                }
            }
            DistKind::Cauchy { location, scale } => {
                finite("cauchy", "location", location)?;
                positive("cauchy", "scale", scale)?;
            }
            DistKind::Uniform { lo, hi } => {
                finite("uniform", "lo", lo)?;
                finite("uniform", "hi", hi)?;
                if lo >= hi {
                    return Err(invalid("uniform", format!("need lo < hi, got ({lo}, {hi})")));
                }
            }
            DistKind::NegBinomial { size, prob } => {
                positive("neg_binomial", "size", size)?;
                if !(prob > 0.0 && prob < 1.0) {
                    return Err(invalid(
                        "neg_binomial",
                        format!("prob must lie in (0, 1), got {prob}"),
                    ));
                }
            }
        }
        Ok(Self(kind))
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(DistKind::Gamma { shape, rate })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(DistKind::Beta { a, b })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(DistKind::Normal { mean, sd })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Self::new(DistKind::Poisson { rate })
    }

    pub fn binomial(n: u64, p: f64) -> Result<Self> {
        Self::new(DistKind::Binomial { n, p })
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        Self::new(DistKind::Cauchy { location, scale })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(DistKind::Uniform { lo, hi })
    }

    pub fn neg_binomial(size: f64, prob: f64) -> Result<Self> {
        Self::new(DistKind::NegBinomial { size, prob })
    }

    pub fn kind(&self) -> &DistKind {
        &self.0
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self.0,
            DistKind::Poisson { .. } | DistKind::Binomial { .. } | DistKind::NegBinomial { .. }
        )
    }

    /// Analytic mean. `None` for the Cauchy.
    pub fn mean(&self) -> Option<f64> {
        Some(match self.0 {
            DistKind::Gamma { shape, rate } => shape / rate,
            DistKind::Beta { a, b } => a / (a + b),
            DistKind::Normal { mean, .. } => mean,
            DistKind::Poisson { rate } => rate,
            DistKind::Binomial { n, p } => n as f64 * p,
            DistKind::Cauchy { .. } => return None,
            DistKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            DistKind::NegBinomial { size, prob } => size * (1.0 - prob) / prob,
        })
    }

    /// Analytic variance. `None` for the Cauchy.
    pub fn variance(&self) -> Option<f64> {
        Some(match self.0 {
            DistKind::Gamma { shape, rate } => shape / (rate * rate),
            DistKind::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            DistKind::Normal { sd, .. } => sd * sd,
            DistKind::Poisson { rate } => rate,
            DistKind::Binomial { n, p } => n as f64 * p * (1.0 - p),
            DistKind::Cauchy { .. } => return None,
            DistKind::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            DistKind::NegBinomial { size, prob } => size * (1.0 - prob) / (prob * prob),
        })
    }

    /// Exact log pdf/pmf, `-inf` off the support. Discrete families return
    /// `-inf` for non-integer `x`.
    pub fn log_density(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let ninf = f64::NEG_INFINITY;
        match self.0 {
            DistKind::Gamma { shape, rate } => {
                if x < 0.0 || (x == 0.0 && shape > 1.0) {
                    return ninf;
                }
                if x == 0.0 {
                    return if shape == 1.0 { rate.ln() } else { f64::INFINITY };
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            DistKind::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return ninf;
                }
                if (x == 0.0 && a != 1.0) || (x == 1.0 && b != 1.0) {
                    let exponent = if x == 0.0 { a } else { b };
                    return if exponent > 1.0 { ninf } else { f64::INFINITY };
                }
                let lx = if x == 0.0 { 0.0 } else { (a - 1.0) * x.ln() };
                let l1x = if x == 1.0 { 0.0 } else { (b - 1.0) * (-x).ln_1p() };
                lx + l1x - ln_beta(a, b)
            }
            DistKind::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
            }
            DistKind::Cauchy { location, scale } => {
                let z = (x - location) / scale;
                -(PI * scale).ln() - z.mul_add(z, 1.0).ln()
            }
            DistKind::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    ninf
                } else {
                    -(hi - lo).ln()
                }
            }
            DistKind::Poisson { rate } => match as_count(x) {
                Some(k) => k as f64 * rate.ln() - rate - ln_factorial(k),
                None => ninf,
            },
            DistKind::Binomial { n, p } => match as_count(x) {
                Some(k) if k <= n => {
                    let (k, nf) = (k as f64, n as f64);
                    let term = |count: f64, prob: f64| {
                        if count == 0.0 {
                            0.0
                        } else {
                            count * prob.ln()
                        }
                    };
                    ln_choose(nf, k) + term(k, p) + term(nf - k, 1.0 - p)
                }
                _ => ninf,
            },
            DistKind::NegBinomial { size, prob } => match as_count(x) {
                Some(k) => {
                    let k = k as f64;
                    ln_gamma(k + size) - ln_gamma(size) - ln_gamma(k + 1.0)
                        + size * prob.ln()
                        + k * (-prob).ln_1p()
                }
                None => ninf,
            },
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.0 {
            DistKind::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            DistKind::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            DistKind::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            DistKind::Cauchy { location, scale } => 0.5 + ((x - location) / scale).atan() / PI,
            DistKind::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            DistKind::Poisson { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    gamma_ur(x.floor() + 1.0, rate)
                }
            }
            DistKind::Binomial { n, p } => {
                if x < 0.0 {
                    0.0
                } else if x >= n as f64 {
                    1.0
                } else {
                    let k = x.floor();
                    if p == 0.0 {
                        1.0
                    } else if p == 1.0 {
                        0.0
                    } else {
                        beta_reg(n as f64 - k, k + 1.0, 1.0 - p)
                    }
                }
            }
            DistKind::NegBinomial { size, prob } => {
                if x < 0.0 {
                    0.0
                } else {
                    beta_reg(size, x.floor() + 1.0, prob)
                }
            }
        }
    }

    /// Inverse CDF. Continuous families satisfy `|cdf(q) - p| <= 1e-10`;
    /// discrete families return the smallest integer `x` with `cdf(x) >= p`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile probability must lie in (0, 1), got {p}")));
        }
        Ok(match self.0 {
            DistKind::Normal { mean, sd } => {
                let guess = mean + sd * std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
                // erf_inv is accurate to a few ulps in the bulk; polish for the tails.
                let span = 40.0 * sd;
                invert_continuous(self, p, guess, mean - span, mean + span)
            }
            DistKind::Cauchy { location, scale } => location + scale * (PI * (p - 0.5)).tan(),
            DistKind::Uniform { lo, hi } => lo + p * (hi - lo),
            DistKind::Gamma { shape, rate } => {
                let guess = wilson_hilferty(shape, p) / rate;
                let mut hi = (shape / rate) * 2.0 + 10.0 * (shape.sqrt() / rate) + 1.0 / rate;
                while self.cdf(hi) < p {
                    hi *= 2.0;
                }
                invert_continuous(self, p, guess, 0.0, hi)
            }
            DistKind::Beta { a, b } => invert_continuous(self, p, a / (a + b), 0.0, 1.0),
            DistKind::Poisson { .. } | DistKind::Binomial { .. } | DistKind::NegBinomial { .. } => {
                self.discrete_quantile(p)
            }
        })
    }

    fn discrete_quantile(&self, p: f64) -> f64 {
        let mean = self.mean().unwrap_or(0.0);
        let sd = self.variance().unwrap_or(1.0).sqrt();
        let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
        let mut k = (mean + z * sd).floor().max(0.0);
        if let DistKind::Binomial { n, .. } = self.0 {
            k = k.min(n as f64);
        }
        while k > 0.0 && self.cdf(k - 1.0) >= p {
            k -= 1.0;
        }
        while self.cdf(k) < p {
            k += 1.0;
        }
        k
    }

    /// `n` independent draws.
    pub fn sample(&self, rng: &mut RngStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    /// One draw.
    pub fn draw(&self, rng: &mut RngStream) -> f64 {
        match self.0 {
            DistKind::Gamma { shape, rate } => sample_std_gamma(shape, rng) / rate,
            DistKind::Beta { a, b } => {
                let x = sample_std_gamma(a, rng);
                let y = sample_std_gamma(b, rng);
                x / (x + y)
            }
            DistKind::Normal { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            DistKind::Poisson { rate } => sample_poisson(rate, rng) as f64,
            DistKind::Binomial { n, p } => Binomial::new(n, p)
                .expect("validated at construction")
                .sample(rng) as f64,
            DistKind::Cauchy { location, scale } => {
                location + scale * (PI * (rng.uniform_open() - 0.5)).tan()
            }
            DistKind::Uniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
            DistKind::NegBinomial { size, prob } => {
                let lambda = sample_std_gamma(size, rng) * (1.0 - prob) / prob;
                if lambda <= 0.0 {
                    0.0
                } else {
                    sample_poisson(lambda, rng) as f64
                }
            }
        }
    }
}

fn as_count(x: f64) -> Option<u64> {
    if x >= 0.0 && x.fract() == 0.0 && x < u64::MAX as f64 {
        Some(x as u64)
    } else {
        None
    }
}

/// Wilson-Hilferty starting point for the standard gamma quantile.
fn wilson_hilferty(shape: f64, p: f64) -> f64 {
    let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
    let c = 1.0 / (9.0 * shape);
    let x = shape * (1.0 - c + z * c.sqrt()).powi(3);
    if x.is_finite() && x > 0.0 {
        x
    } else {
        shape.max(1e-3)
    }
}

/// Bracketed, safeguarded Newton on `cdf(x) - p`. Newton steps that leave
/// the bracket or fail to shrink it fall back to bisection.
fn invert_continuous(d: &DistSpec, p: f64, guess: f64, lo: f64, hi: f64) -> f64 {
    const CDF_TOL: f64 = 1e-13;
    let (mut lo, mut hi) = (lo, hi);
    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..300 {
        let err = d.cdf(x) - p;
        if err.abs() <= CDF_TOL {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return x;
        }
        let pdf = d.density(x);
        let newton = x - err / pdf;
        x = if pdf.is_finite() && pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

/// Marsaglia-Tsang squeeze/rejection for shape >= 1, boosted by
/// `U^(1/shape)` below 1.
pub(crate) fn sample_std_gamma(shape: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        let u = rng.uniform_open();
        return sample_std_gamma(shape + 1.0, rng) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * z;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform_open();
        let z2 = z * z;
        if u < 1.0 - 0.0331 * z2 * z2 {
            return d * v;
        }
        if u.ln() < 0.5 * z2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Inversion by sequential search below rate 30, Hormann's transformed
/// rejection (PTRS) above.
pub(crate) fn sample_poisson(rate: f64, rng: &mut RngStream) -> u64 {
    if rate < 30.0 {
        let mut k = 0u64;
        let mut prob = (-rate).exp();
        let mut cum = prob;
        let u = rng.uniform();
        while u > cum {
            k += 1;
            prob *= rate / k as f64;
            cum += prob;
            if prob < 1e-300 && cum < u {
                // roundoff left the cumulative short of 1; restart the draw
                return sample_poisson(rate, rng);
            }
        }
        return k;
    }
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform_open();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -rate + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
