//! The single change-point Poisson model: counts `y_1..y_M` have rate
//! `lambda1`, counts `y_{M+1}..y_n` rate `lambda2`, and `M` is uniform on
//! `1..=n-1`.

use serde::{Deserialize, Serialize};

use super::metropolis::metropolis_accept;
use super::{run_chains, Chain, ChainConfig, Kernel};
use crate::dist::{sample_poisson, sample_std_gamma};
use crate::error::{invalid, Error, Result};
use crate::rng::RngStream;

/// Prior on a regime rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatePrior {
    Gamma { shape: f64, rate: f64 },
    /// Normal prior truncated to `lambda > 0`.
    Normal { mean: f64, sd: f64 },
}

impl RatePrior {
    fn validate(&self) -> Result<()> {
        match *self {
            RatePrior::Gamma { shape, rate } => {
                crate::DistSpec::gamma(shape, rate)?;
            }
            RatePrior::Normal { mean, sd } => {
                crate::DistSpec::normal(mean, sd)?;
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            RatePrior::Gamma { shape, rate } => sample_std_gamma(shape, rng) / rate,
            RatePrior::Normal { mean, sd } => {
                // rejection from the truncated prior; a prior with almost no
                // positive mass falls back to a reflected draw
                let mut x = 0.0;
                for _ in 0..64 {
                    let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                    x = mean + sd * z;
                    if x > 0.0 {
                        return x;
                    }
                }
                x.abs().max(f64::MIN_POSITIVE)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointSpec {
    pub y: Vec<u64>,
    pub prior1: RatePrior,
    /// Gamma `(shape, rate)` prior on `lambda2`.
    pub prior2: (f64, f64),
}

impl ChangePointSpec {
    pub fn new(y: Vec<u64>, prior1: RatePrior, prior2: (f64, f64)) -> Result<Self> {
        let spec = Self { y, prior1, prior2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() < 2 {
            return Err(invalid("change_point", format!("need at least 2 counts, got {}", self.y.len())));
        }
        self.prior1.validate()?;
        crate::DistSpec::gamma(self.prior2.0, self.prior2.1)?;
        Ok(())
    }
}

/// Counts with their cumulative sums, so each conditional for `M` costs O(n).
#[derive(Debug, Clone, PartialEq)]
pub struct ChangePointData {
    /// `cum[m] = y_1 + ... + y_m`, with `cum[0] = 0`.
    cum: Vec<u64>,
}

impl ChangePointData {
    pub fn new(y: &[u64]) -> Result<Self> {
        if y.len() < 2 {
            return Err(invalid("change_point", format!("need at least 2 counts, got {}", y.len())));
        }
        let mut cum = Vec::with_capacity(y.len() + 1);
        cum.push(0);
        for v in y {
            cum.push(cum.last().unwrap() + v);
        }
        Ok(Self { cum })
    }

    pub fn n(&self) -> usize {
        self.cum.len() - 1
    }

    pub fn total(&self) -> u64 {
        self.cum[self.n()]
    }

    /// Sum of the first `m` counts.
    pub fn head_sum(&self, m: usize) -> u64 {
        self.cum[m]
    }

    /// Unnormalized log conditional of `M = m` for `m = 1..=n-1`:
    /// `S_m ln(lambda1) + (T - S_m) ln(lambda2) + (lambda2 - lambda1) m`.
    pub fn m_log_weights(&self, lambda1: f64, lambda2: f64, out: &mut Vec<f64>) {
        let (l1, l2) = (lambda1.ln(), lambda2.ln());
        let t = self.total() as f64;
        out.clear();
        out.extend((1..self.n()).map(|m| {
            let s = self.cum[m] as f64;
            s * l1 + (t - s) * l2 + (lambda2 - lambda1) * m as f64
        }));
    }
}

/// Draw `M` from its full conditional, working in log space after
/// subtracting the largest log weight. Uses one uniform.
pub fn sample_m_conditional(lambda1: f64, lambda2: f64, data: &ChangePointData, rng: &mut RngStream) -> usize {
    let mut buf = Vec::with_capacity(data.n());
    sample_m_into(lambda1, lambda2, data, rng, &mut buf)
}

fn sample_m_into(lambda1: f64, lambda2: f64, data: &ChangePointData, rng: &mut RngStream, buf: &mut Vec<f64>) -> usize {
    data.m_log_weights(lambda1, lambda2, buf);
    let max = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    for w in buf.iter_mut() {
        acc += (*w - max).exp();
        *w = acc;
    }
    let u = rng.uniform() * acc;
    buf.partition_point(|c| *c <= u).min(buf.len() - 1) + 1
}

/// Optional starting values and the switch for updating `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsOptions {
    pub init_m: Option<usize>,
    pub init_lambda: Option<(f64, f64)>,
    pub update_m: bool,
}

impl Default for GibbsOptions {
    fn default() -> Self {
        Self {
            init_m: None,
            init_lambda: None,
            update_m: true,
        }
    }
}

#[derive(Debug, Clone)]
struct CpState {
    lambda1: f64,
    lambda2: f64,
    m: usize,
    buf: Vec<f64>,
}

struct CpKernel<'a> {
    spec: &'a ChangePointSpec,
    data: ChangePointData,
    opts: GibbsOptions,
    /// Uniform half-width for the lambda1 Metropolis step; `None` for Gibbs.
    half_width: Option<f64>,
}

impl CpKernel<'_> {
    fn lambda1_logtarget(&self, lambda1: f64, m: usize) -> f64 {
        let RatePrior::Normal { mean, sd } = self.spec.prior1 else {
            unreachable!("Metropolis step is only used with the normal prior")
        };
        if lambda1 <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let s = self.data.head_sum(m) as f64;
        s * lambda1.ln() - m as f64 * lambda1 - (lambda1 - mean).powi(2) / (2.0 * sd * sd)
    }
}

impl Kernel for CpKernel<'_> {
    type State = CpState;

    fn init(&self, rng: &mut RngStream) -> CpState {
        let n = self.data.n();
        let m = self.opts.init_m.unwrap_or_else(|| rng.int_inclusive(1, n - 1));
        let (lambda1, lambda2) = self.opts.init_lambda.unwrap_or_else(|| {
            let l1 = self.spec.prior1.draw(rng);
            let (a2, b2) = self.spec.prior2;
            (l1, sample_std_gamma(a2, rng) / b2)
        });
        CpState {
            lambda1,
            lambda2,
            m,
            buf: Vec::with_capacity(n),
        }
    }

    fn step(&self, st: &mut CpState, rng: &mut RngStream) -> Option<bool> {
        let n = self.data.n();
        let s_m = self.data.head_sum(st.m) as f64;
        let mut outcome = None;
        match (self.spec.prior1, self.half_width) {
            (RatePrior::Gamma { shape, rate }, _) => {
                st.lambda1 = sample_std_gamma(s_m + shape, rng) / (st.m as f64 + rate);
            }
            (RatePrior::Normal { .. }, Some(c)) => {
                let cand = st.lambda1 + c * (2.0 * rng.uniform() - 1.0);
                let acc = metropolis_accept(
                    self.lambda1_logtarget(st.lambda1, st.m),
                    self.lambda1_logtarget(cand, st.m),
                    rng,
                );
                if acc {
                    st.lambda1 = cand;
                }
                outcome = Some(acc);
            }
            (RatePrior::Normal { .. }, None) => unreachable!("validated by the sampler entry points"),
        }
        let (a2, b2) = self.spec.prior2;
        let tail = self.data.total() as f64 - s_m;
        st.lambda2 = sample_std_gamma(tail + a2, rng) / ((n - st.m) as f64 + b2);
        if self.opts.update_m {
            st.m = sample_m_into(st.lambda1, st.lambda2, &self.data, rng, &mut st.buf);
        }
        outcome
    }

    fn record(&self, st: &CpState, out: &mut Vec<f64>) {
        out.extend([st.lambda1, st.lambda2, st.m as f64]);
    }
}

const NAMES: [&str; 3] = ["lambda1", "lambda2", "M"];

fn check_opts(spec: &ChangePointSpec, opts: &GibbsOptions) -> Result<()> {
    let n = spec.y.len();
    if let Some(m) = opts.init_m {
        if !(1..n).contains(&m) {
            return Err(Error::Domain(format!("initial M = {m} outside 1..={}", n - 1)));
        }
    }
    if let Some((l1, l2)) = opts.init_lambda {
        if !(l1 > 0.0 && l2 > 0.0) {
            return Err(Error::Domain("initial rates must be positive".into()));
        }
    }
    Ok(())
}

/// Gibbs sampler with gamma priors on both rates. Each sweep draws
/// `lambda1`, then `lambda2`, then `M`.
pub fn gibbs_changepoint(spec: &ChangePointSpec, cfg: &ChainConfig) -> Result<Chain> {
    gibbs_changepoint_with(spec, cfg, GibbsOptions::default())
}

pub fn gibbs_changepoint_with(spec: &ChangePointSpec, cfg: &ChainConfig, opts: GibbsOptions) -> Result<Chain> {
    spec.validate()?;
    if !matches!(spec.prior1, RatePrior::Gamma { .. }) {
        return Err(Error::Domain("Gibbs sampling needs a gamma prior on lambda1".into()));
    }
    check_opts(spec, &opts)?;
    let kernel = CpKernel {
        spec,
        data: ChangePointData::new(&spec.y)?,
        opts,
        half_width: None,
    };
    run_chains(&kernel, cfg, &NAMES, None)
}

/// Metropolis-within-Gibbs for a normal prior on `lambda1`: one uniform
/// random-walk step of half-width `c` on `lambda1` per sweep, Gibbs draws for
/// `lambda2` and `M`. The tally is stored under `"lambda1"`.
pub fn mwg_changepoint(spec: &ChangePointSpec, c: f64, cfg: &ChainConfig) -> Result<Chain> {
    mwg_changepoint_with(spec, c, cfg, GibbsOptions::default())
}

pub fn mwg_changepoint_with(spec: &ChangePointSpec, c: f64, cfg: &ChainConfig, opts: GibbsOptions) -> Result<Chain> {
    spec.validate()?;
    if !matches!(spec.prior1, RatePrior::Normal { .. }) {
        return Err(Error::Domain("Metropolis-within-Gibbs needs a normal prior on lambda1".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("half-width must be positive, got {c}")));
    }
    check_opts(spec, &opts)?;
    let kernel = CpKernel {
        spec,
        data: ChangePointData::new(&spec.y)?,
        opts,
        half_width: Some(c),
    };
    run_chains(&kernel, cfg, &NAMES, Some("lambda1"))
}

/// Poisson counts with rate `rate1` for the first `change` entries and
/// `rate2` afterwards.
pub fn synthesize_counts(n: usize, change: usize, rate1: f64, rate2: f64, rng: &mut RngStream) -> Result<Vec<u64>> {
    if change == 0 || change >= n {
        return Err(Error::Domain(format!("change index {change} must lie in 1..={}", n.saturating_sub(1))));
    }
    crate::DistSpec::poisson(rate1)?;
    crate::DistSpec::poisson(rate2)?;
    Ok((0..n)
        .map(|i| sample_poisson(if i < change { rate1 } else { rate2 }, rng))
        .collect())
}
