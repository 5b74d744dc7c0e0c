use serde::{Deserialize, Serialize};

use super::Chain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `None` when the parameter has no Metropolis tally.
    pub acceptance_rate: Option<f64>,
    /// Lags `1..=max_lag`.
    pub autocorr: Vec<f64>,
    pub ess: f64,
}

/// Lag-k sample autocorrelations for `k = 1..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let needed = 10 * max_lag.max(1);
    if x.len() < needed {
        return Err(Error::InsufficientDraws { needed, got: x.len() });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let dev: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = dev.iter().map(|d| d * d).sum();
    if c0 <= 0.0 || !c0.is_finite() {
        return Err(Error::DegenerateChain("draws have zero variance".into()));
    }
    Ok((1..=max_lag)
        .map(|k| dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / c0)
        .collect())
}

/// `S / (1 + 2 sum rho_k)`, summing lags until the first negative one.
pub fn effective_sample_size(n_draws: usize, autocorr: &[f64]) -> f64 {
    let sum: f64 = autocorr.iter().take_while(|r| **r >= 0.0).sum();
    n_draws as f64 / (1.0 + 2.0 * sum)
}

/// Acceptance rate, autocorrelations and effective sample size for one
/// parameter. With several chains the autocorrelations are averaged over
/// chains and the ESS refers to all kept draws.
pub fn diagnostics(ch: &Chain, param: usize, max_lag: usize) -> Result<Diagnostics> {
    if param >= ch.n_params() {
        return Err(Error::Dimension(format!("parameter index {param} out of range")));
    }
    let chains = ch.config.n_chains;
    let mut acf = vec![0.0; max_lag];
    for k in 0..chains {
        let r = autocorrelation(&ch.chain_column(param, k), max_lag)?;
        for (a, v) in acf.iter_mut().zip(r) {
            *a += v / chains as f64;
        }
    }
    let acceptance_rate = ch.acceptance_rate(&ch.param_names[param]);
    Ok(Diagnostics {
        acceptance_rate,
        ess: effective_sample_size(ch.draws.len(), &acf),
        autocorr: acf,
    })
}
