use serde::{Deserialize, Serialize};

use super::{run_chains, Chain, ChainConfig, Kernel};
use crate::error::{Error, Result};
use crate::laplace::LogPosterior;
use crate::rng::RngStream;

/// Symmetric random-walk proposal around the current value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Proposal {
    /// Uniform on `(current - half_width, current + half_width)`.
    Uniform { half_width: f64 },
    Normal { sd: f64 },
}

impl Proposal {
    fn validate(&self) -> Result<()> {
        let w = match *self {
            Proposal::Uniform { half_width } => half_width,
            Proposal::Normal { sd } => sd,
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::Domain(format!("proposal scale must be positive, got {w}")));
        }
        Ok(())
    }

    pub(crate) fn propose(&self, current: f64, rng: &mut RngStream) -> f64 {
        match *self {
            Proposal::Uniform { half_width } => current + half_width * (2.0 * rng.uniform() - 1.0),
            Proposal::Normal { sd } => {
                let z: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng);
                current + sd * z
            }
        }
    }
}

/// Accept iff `U < R` with `R = exp(lp_proposed - lp_current)`. Always
/// consumes one uniform.
pub(crate) fn metropolis_accept(lp_current: f64, lp_proposed: f64, rng: &mut RngStream) -> bool {
    let u = rng.uniform();
    u < (lp_proposed - lp_current).exp()
}

struct RandomWalk<'a> {
    lp: &'a LogPosterior,
    init: f64,
    proposal: Proposal,
}

impl Kernel for RandomWalk<'_> {
    type State = (f64, f64);

    fn init(&self, _rng: &mut RngStream) -> (f64, f64) {
        (self.init, self.lp.eval(&[self.init]))
    }

    fn step(&self, state: &mut (f64, f64), rng: &mut RngStream) -> Option<bool> {
        let cand = self.proposal.propose(state.0, rng);
        let lp_cand = self.lp.eval(&[cand]);
        let acc = metropolis_accept(state.1, lp_cand, rng);
        if acc {
            *state = (cand, lp_cand);
        }
        Some(acc)
    }

    fn record(&self, state: &(f64, f64), out: &mut Vec<f64>) {
        out.push(state.0);
    }
}

/// Random-walk Metropolis on a one-parameter log posterior. The acceptance
/// tally is stored under `"theta"`.
pub fn metropolis_rw(lp: &LogPosterior, init: f64, proposal: Proposal, cfg: &ChainConfig) -> Result<Chain> {
    if lp.dim != 1 {
        return Err(Error::Dimension(format!("random-walk Metropolis needs dim 1, got {}", lp.dim)));
    }
    proposal.validate()?;
    if !lp.eval(&[init]).is_finite() {
        return Err(Error::Domain(format!("log posterior is not finite at init {init}")));
    }
    run_chains(&RandomWalk { lp, init, proposal }, cfg, &["theta"], Some("theta"))
}

/// One move of the discrete random walk over values `1..=K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkStep {
    /// May be 0 or K + 1, which carry zero weight.
    pub candidate: i64,
    #[serde(rename = "R")]
    pub ratio: f64,
    pub accepted: bool,
    pub next: usize,
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Dimension("walk needs at least one weight".into()));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Domain("walk weights must be positive".into()));
    }
    Ok(())
}

/// Heads moves the candidate one step left, tails one step right; accept iff
/// `u < weight(candidate) / weight(current)`.
pub fn walk_step(weights: &[f64], current: usize, heads: bool, u: f64) -> Result<WalkStep> {
    check_weights(weights)?;
    let k = weights.len();
    if !(1..=k).contains(&current) {
        return Err(Error::Domain(format!("current position {current} outside 1..={k}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("u must lie in [0, 1), got {u}")));
    }
    let candidate = if heads { current as i64 - 1 } else { current as i64 + 1 };
    let w_cand = if (1..=k as i64).contains(&candidate) {
        weights[candidate as usize - 1]
    } else {
        0.0
    };
    let ratio = w_cand / weights[current - 1];
    let accepted = u < ratio;
    Ok(WalkStep {
        candidate,
        ratio,
        accepted,
        next: if accepted { candidate as usize } else { current },
    })
}

/// A path of `steps` moves starting (and including) `start`. Each move uses
/// one uniform for the coin and one for the acceptance test.
pub fn discrete_metropolis(weights: &[f64], start: usize, steps: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    check_weights(weights)?;
    if !(1..=weights.len()).contains(&start) {
        return Err(Error::Domain(format!("start {start} outside 1..={}", weights.len())));
    }
    let mut path = Vec::with_capacity(steps + 1);
    path.push(start);
    let mut cur = start;
    for _ in 0..steps {
        let heads = rng.uniform() < 0.5;
        let u = rng.uniform();
        cur = walk_step(weights, cur, heads, u)?.next;
        path.push(cur);
    }
    Ok(path)
}
