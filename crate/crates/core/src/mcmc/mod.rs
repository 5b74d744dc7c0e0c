//! Markov chain samplers and their diagnostics.
//!
//! Every sampler takes a [`ChainConfig`]; chain `k` draws from
//! `RngStream::new(cfg.seed, k)`, so runs are reproducible whatever the
//! thread scheduling.

mod changepoint;
mod diagnostics;
mod metropolis;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub use changepoint::{
    gibbs_changepoint, gibbs_changepoint_with, mwg_changepoint, mwg_changepoint_with, sample_m_conditional,
    synthesize_counts, ChangePointData, ChangePointSpec, GibbsOptions, RatePrior,
};
pub use diagnostics::{autocorrelation, diagnostics, effective_sample_size, Diagnostics};
pub use metropolis::{discrete_metropolis, metropolis_rw, walk_step, Proposal, WalkStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Kept draws per chain.
    pub iter: usize,
    pub burnin: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(iter: usize, seed: u64) -> Self {
        Self {
            iter,
            burnin: 0,
            thin: 1,
            n_chains: 1,
            seed,
        }
    }

    pub fn burnin(mut self, burnin: usize) -> Self {
        self.burnin = burnin;
        self
    }

    pub fn thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn chains(mut self, n_chains: usize) -> Self {
        self.n_chains = n_chains;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iter == 0 {
            return Err(Error::Domain("iter must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Domain("thin must be at least 1".into()));
        }
        if self.n_chains == 0 {
            return Err(Error::Domain("n_chains must be at least 1".into()));
        }
        Ok(())
    }

    /// Sampler transitions per chain: `burnin + iter * thin`.
    pub fn steps_per_chain(&self) -> usize {
        self.burnin + self.iter * self.thin
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_chain().saturating_mul(self.n_chains)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptTally {
    pub accepted: u64,
    pub proposed: u64,
}

impl AcceptTally {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    fn merge(&mut self, other: &AcceptTally) {
        self.accepted += other.accepted;
        self.proposed += other.proposed;
    }
}

/// Draws from one or more chains. Rows are kept states; chain `k` owns rows
/// `k * iter .. (k + 1) * iter`. Acceptance tallies cover all chains, with
/// the per-chain split in `accept_per_chain`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    #[serde(rename = "params")]
    pub param_names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub accept: BTreeMap<String, AcceptTally>,
    pub accept_per_chain: Vec<BTreeMap<String, AcceptTally>>,
    pub config: ChainConfig,
}

impl Chain {
    pub fn n_params(&self) -> usize {
        self.param_names.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| p == name)
    }

    /// All kept values of one parameter, chains concatenated.
    pub fn column(&self, param: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[param]).collect()
    }

    /// Kept values of one parameter in chain `k`.
    pub fn chain_column(&self, param: usize, k: usize) -> Vec<f64> {
        let it = self.config.iter;
        self.draws[k * it..(k + 1) * it].iter().map(|r| r[param]).collect()
    }

    pub fn acceptance_rate(&self, target: &str) -> Option<f64> {
        self.accept.get(target).and_then(AcceptTally::rate)
    }
}

/// One sampler transition: update the state and report the outcome of its
/// Metropolis step, if it has one.
pub(crate) trait Kernel: Sync {
    type State: Send;
    fn init(&self, rng: &mut RngStream) -> Self::State;
    fn step(&self, state: &mut Self::State, rng: &mut RngStream) -> Option<bool>;
    fn record(&self, state: &Self::State, out: &mut Vec<f64>);
}

pub(crate) fn run_chains<K: Kernel>(
    kernel: &K,
    cfg: &ChainConfig,
    names: &[&str],
    target: Option<&str>,
) -> Result<Chain> {
    cfg.validate()?;
    let one = |k: usize| -> (Vec<Vec<f64>>, AcceptTally) {
        let mut rng = RngStream::new(cfg.seed, k as u64);
        let mut state = kernel.init(&mut rng);
        let mut tally = AcceptTally::default();
        let mut advance = |state: &mut K::State, rng: &mut RngStream| {
            if let Some(acc) = kernel.step(state, rng) {
                tally.record(acc);
            }
        };
        for _ in 0..cfg.burnin {
            advance(&mut state, &mut rng);
        }
        let mut rows = Vec::with_capacity(cfg.iter);
        for _ in 0..cfg.iter {
            for _ in 0..cfg.thin {
                advance(&mut state, &mut rng);
            }
            let mut row = Vec::with_capacity(names.len());
            kernel.record(&state, &mut row);
            rows.push(row);
        }
        (rows, tally)
    };

    let results: Vec<(Vec<Vec<f64>>, AcceptTally)> = if cfg.n_chains == 1 {
        vec![one(0)]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..cfg.n_chains).map(|k| s.spawn(move || one(k))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler thread panicked"))
                .collect()
        })
    };

    let mut draws = Vec::with_capacity(cfg.iter * cfg.n_chains);
    let mut accept = BTreeMap::new();
    let mut accept_per_chain = Vec::with_capacity(cfg.n_chains);
    for (rows, tally) in results {
        draws.extend(rows);
        let mut per = BTreeMap::new();
        if let Some(t) = target {
            accept.entry(t.to_string()).or_insert_with(AcceptTally::default).merge(&tally);
            per.insert(t.to_string(), tally);
        }
        accept_per_chain.push(per);
    }
    Ok(Chain {
        param_names: names.iter().map(|s| s.to_string()).collect(),
        draws,
        accept,
        accept_per_chain,
        config: *cfg,
    })
}
