//! Report builders behind each subcommand. Every function is pure given its
//! arguments and seed, so the same inputs always serialize to the same JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;

use posteriorlab::conjugate::{
    beta_from_quantiles, conjugate_predictive_pmf, gamma_poisson_update_suffstats, posterior_mean_decomposition,
    ConjugatePosterior, MeanDecomposition, QuantileAssessment,
};
use posteriorlab::discrete::{credible_set, predictive_mass, update_table, weights_to_prior, BayesTable, CredibleSet};
use posteriorlab::laplace::{grid_marginal, laplace_fit, marginal, LogPosterior, NormalApprox, LOGISTIC_BOX};
use posteriorlab::mcmc::{
    diagnostics, gibbs_changepoint, mwg_changepoint, synthesize_counts, Chain, ChainConfig, ChangePointSpec,
    Diagnostics, RatePrior,
};
use posteriorlab::models::{p_women, poisson_loglik, TwoGroupData};
use posteriorlab::mvn::mvn_sample;
use posteriorlab::summaries::{at_most_two, mc_expectation_of, mc_summary, ppc_mean_check, PosteriorSummary, QuantilePoint};
use posteriorlab::{DistKind, DistSpec, RngStream};

use crate::data::{parse_counts, read_file, CountSeries};
use crate::error::{CliError, Field};
use crate::SCHEMA_VERSION;

fn check_levels(levels: &[f64]) -> Result<(), CliError> {
    if levels.is_empty() {
        return Err(CliError::input("levels", "need at least one level"));
    }
    if let Some(l) = levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        return Err(CliError::input("levels", format!("{l} is not in (0, 1)")));
    }
    Ok(())
}

fn outer(points: &[QuantilePoint]) -> [f64; 2] {
    let lo = points.iter().min_by(|a, b| a.level.total_cmp(&b.level)).unwrap();
    let hi = points.iter().max_by(|a, b| a.level.total_cmp(&b.level)).unwrap();
    [lo.value, hi.value]
}

fn poisson_pmf(y: u64, rate: f64) -> f64 {
    DistSpec::poisson(rate).map(|d| d.density(y as f64)).unwrap_or(0.0)
}

// ---------------------------------------------------------------- ed-visits

#[derive(Debug, Clone, Args)]
pub struct EdVisitsArgs {
    /// Gamma prior shape.
    #[arg(long, default_value_t = 80.0)]
    pub alpha: f64,
    /// Gamma prior rate.
    #[arg(long, default_value_t = 20.0)]
    pub beta: f64,
    /// File of counts (comma or whitespace separated).
    #[arg(long, conflicts_with = "counts")]
    pub data: Option<PathBuf>,
    /// Inline counts, e.g. `--counts 3,2,5`.
    #[arg(long, value_delimiter = ',')]
    pub counts: Option<Vec<String>>,
    /// Number of periods, used when no counts are given.
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    /// Total count, used when no counts are given.
    #[arg(long = "sum-y", default_value_t = 31)]
    pub sum_y: u64,
    /// Posterior draws for the Monte Carlo summaries.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.95])]
    pub levels: Vec<f64>,
    /// Replicated samples in the predictive check.
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    /// Also run the discrete prior and take f(0) from it.
    #[arg(long)]
    pub discrete: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 3.5, 4.0, 4.5, 5.0])]
    pub values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.4, 0.2, 0.1])]
    pub weights: Vec<f64>,
}

impl Default for EdVisitsArgs {
    fn default() -> Self {
        Self {
            alpha: 80.0,
            beta: 20.0,
            data: None,
            counts: None,
            n: 10,
            sum_y: 31,
            draws: 10_000,
            levels: vec![0.05, 0.95],
            reps: 1000,
            discrete: false,
            values: vec![3.0, 3.5, 4.0, 4.5, 5.0],
            weights: vec![0.1, 0.2, 0.4, 0.2, 0.1],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountData {
    pub n: u64,
    pub sum_y: u64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSection {
    pub table: BayesTable,
    pub credible_95: CredibleSet,
    pub predictive_f0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PpcSection {
    pub statistic: &'static str,
    pub observed: f64,
    pub tail_area: f64,
    pub replicated: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdVisitsReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub data: CountData,
    pub posterior: ConjugatePosterior,
    pub mean_decomposition: MeanDecomposition,
    pub exact_quantiles: Vec<QuantilePoint>,
    pub exact_interval: [f64; 2],
    pub mc: PosteriorSummary,
    pub mc_interval: [f64; 2],
    /// Posterior mean of `P(y <= 2 | lambda)`.
    pub expected_at_most_two: f64,
    pub predictive_f0: f64,
    /// `conjugate` or `discrete`.
    pub predictive_source: &'static str,
    pub discrete: Option<DiscreteSection>,
    pub ppc: PpcSection,
}

fn ed_data(args: &EdVisitsArgs) -> Result<CountData, CliError> {
    let counts = match (&args.data, &args.counts) {
        (Some(path), _) => Some(("data", parse_counts(&read_file(path)?, "data")?)),
        (None, Some(tokens)) => Some(("counts", parse_counts(&tokens.join(","), "counts")?)),
        (None, None) => None,
    };
    let (n, sum_y) = match counts {
        Some((field, c)) if c.is_empty() => return Err(CliError::input(field, "no counts found")),
        Some((_, c)) => (c.len() as u64, c.iter().sum()),
        None if args.n == 0 => return Err(CliError::input("n", "need at least one period")),
        None => (args.n, args.sum_y),
    };
    Ok(CountData {
        n,
        sum_y,
        mean: sum_y as f64 / n as f64,
    })
}

pub fn ed_visits(args: &EdVisitsArgs, seed: u64) -> Result<EdVisitsReport, CliError> {
    let data = ed_data(args)?;
    check_levels(&args.levels)?;
    if args.draws == 0 {
        return Err(CliError::input("draws", "need at least one draw"));
    }
    if args.reps == 0 {
        return Err(CliError::input("reps", "need at least one replicate"));
    }
    let cp = gamma_poisson_update_suffstats(args.alpha, args.beta, data.n, data.sum_y).field("alpha/beta")?;
    let post = cp.posterior_dist();
    let exact_quantiles = args
        .levels
        .iter()
        .map(|&level| Ok(QuantilePoint { level, value: post.quantile(level)? }))
        .collect::<posteriorlab::Result<Vec<_>>>()?;

    let draws = post.sample(&mut RngStream::new(seed, 0), args.draws);
    let mc = mc_summary(&draws, &args.levels)?;
    let expected_at_most_two = mc_expectation_of(at_most_two, &draws)?;
    let ppc = ppc_mean_check(&post, data.n as usize, args.reps, data.mean, &mut RngStream::new(seed, 1))?;

    let discrete = if args.discrete {
        if args.values.len() != args.weights.len() {
            return Err(CliError::input("weights", "need one weight per value"));
        }
        if let Some(v) = args.values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(CliError::input("values", format!("rate {v} must be positive")));
        }
        let prior = weights_to_prior(&args.weights).field("weights")?;
        let table = update_table(&args.values, &prior, poisson_loglik(data.n, data.sum_y))?;
        Some(DiscreteSection {
            credible_95: credible_set(&table, 0.95)?,
            predictive_f0: predictive_mass(&table, poisson_pmf, 0),
            table,
        })
    } else {
        None
    };
    let (predictive_f0, predictive_source) = match &discrete {
        Some(d) => (d.predictive_f0, "discrete"),
        None => (conjugate_predictive_pmf(&cp, 0)?, "conjugate"),
    };

    Ok(EdVisitsReport {
        schema_version: SCHEMA_VERSION,
        command: "ed-visits",
        seed,
        mean_decomposition: posterior_mean_decomposition(&cp)?,
        exact_interval: outer(&exact_quantiles),
        exact_quantiles,
        mc_interval: outer(&mc.quantiles),
        mc,
        expected_at_most_two,
        predictive_f0,
        predictive_source,
        discrete,
        ppc: PpcSection {
            statistic: "mean",
            observed: ppc.observed_stat,
            tail_area: ppc.tail_area,
            replicated: ppc.replicated_stats,
        },
        posterior: cp,
        data,
    })
}

// ----------------------------------------------------------------- facebook

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Laplace,
    Grid,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct FacebookArgs {
    #[arg(long, default_value_t = 8)]
    pub ym: u64,
    #[arg(long, default_value_t = 30)]
    pub nm: u64,
    #[arg(long, default_value_t = 15)]
    pub yw: u64,
    #[arg(long, default_value_t = 30)]
    pub nw: u64,
    #[arg(long, value_enum, default_value_t = FitMethod::Laplace)]
    pub method: FitMethod,
    /// Normal-approximation draws used to summarize p_W.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Grid intervals per axis.
    #[arg(long, default_value_t = 400)]
    pub grid_steps: usize,
}

impl Default for FacebookArgs {
    fn default() -> Self {
        Self {
            ym: 8,
            nm: 30,
            yw: 15,
            nw: 30,
            method: FitMethod::Laplace,
            draws: 10_000,
            grid_steps: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormalMarginal {
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LaplaceSection {
    pub fit: NormalApprox,
    pub beta1: NormalMarginal,
    pub p_women: PosteriorSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMarginal {
    pub grid: Vec<f64>,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
    pub third_moment: f64,
    pub right_skewed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FacebookReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub data: TwoGroupData,
    pub method: FitMethod,
    pub laplace: Option<LaplaceSection>,
    pub grid_beta1: Option<GridMarginal>,
}

pub fn facebook(args: &FacebookArgs, seed: u64) -> Result<FacebookReport, CliError> {
    for (y, n, fy, fn_) in [(args.ym, args.nm, "ym", "nm"), (args.yw, args.nw, "yw", "nw")] {
        if n == 0 {
            return Err(CliError::input(fn_, "group size must be at least 1"));
        }
        if y > n {
            return Err(CliError::input(fy, format!("{y} successes out of {n} trials")));
        }
    }
    if args.draws < 2 {
        return Err(CliError::input("draws", "need at least two draws"));
    }
    let data = TwoGroupData::new(args.ym, args.nm, args.yw, args.nw)?;
    let lp = LogPosterior::two_group_logistic(data);

    let laplace = if args.method != FitMethod::Grid {
        let fit = laplace_fit(&lp, &[0.0, 0.0])?;
        let DistKind::Normal { mean, sd } = *marginal(&fit, &[0.0, 1.0])?.kind() else {
            unreachable!("marginal of a normal approximation is normal")
        };
        let draws = mvn_sample(&fit.mode, &fit.cov, &mut RngStream::new(seed, 0), args.draws)?;
        let pw = posteriorlab::laplace::transform_draws(&draws, p_women);
        Some(LaplaceSection {
            p_women: mc_summary(&pw, &[0.05, 0.5, 0.95])?,
            beta1: NormalMarginal { mean, sd },
            fit,
        })
    } else {
        None
    };
    let grid_beta1 = if args.method != FitMethod::Laplace {
        let g = grid_marginal(&lp, LOGISTIC_BOX, args.grid_steps, 1).field("grid_steps")?;
        let third_moment = g.central_moment(3);
        Some(GridMarginal {
            mean: g.mean(),
            sd: g.sd(),
            third_moment,
            right_skewed: third_moment > 0.0,
            grid: g.grid,
            probs: g.probs,
        })
    } else {
        None
    };
    Ok(FacebookReport {
        schema_version: SCHEMA_VERSION,
        command: "facebook",
        seed,
        data,
        method: args.method,
        laplace,
        grid_beta1,
    })
}

// ------------------------------------------------------------------- storms

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Gibbs,
    Mwg,
}

#[derive(Debug, Clone, Args)]
pub struct StormsArgs {
    /// CSV with header `year,count` (or just `count`).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = SamplerKind::Gibbs)]
    pub sampler: SamplerKind,
    /// Gamma prior on lambda1 (gibbs).
    #[arg(long, default_value_t = 1.0)]
    pub alpha1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta1: f64,
    /// Normal prior on lambda1 (mwg).
    #[arg(long, default_value_t = 4.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
    /// Gamma prior on lambda2.
    #[arg(long, default_value_t = 1.0)]
    pub alpha2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta2: f64,
    /// Half-width of the uniform lambda1 proposal (mwg).
    #[arg(long = "C", default_value_t = 2.0)]
    pub c: f64,
    #[arg(long, default_value_t = 5000)]
    pub iter: usize,
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Include every kept draw in the report.
    #[arg(long)]
    pub emit_draws: bool,
}

impl StormsArgs {
    pub fn new(input: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            sampler: SamplerKind::Gibbs,
            alpha1: 1.0,
            beta1: 1.0,
            mu: 4.0,
            sigma: 2.0,
            alpha2: 1.0,
            beta2: 1.0,
            c: 2.0,
            iter: 5000,
            burnin: 1000,
            thin: 1,
            chains: 1,
            emit_draws: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub interval90: [f64; 2],
    /// Absent when the draws are constant or too few.
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeOfM {
    /// Number of counts in the first regime.
    pub index: usize,
    /// Year of the last count in the first regime.
    pub year: Option<i64>,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StormsPrior {
    pub lambda1: RatePrior,
    pub lambda2: RatePrior,
}

#[derive(Debug, Clone, Serialize)]
pub struct StormsReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub n: usize,
    pub years: Option<[i64; 2]>,
    pub config: ChainConfig,
    pub prior: StormsPrior,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub params: Vec<ParamSummary>,
    pub m_mode: ModeOfM,
    pub accept_rate_lambda1: Option<f64>,
    pub accept_rate_lambda1_per_chain: Vec<f64>,
    pub chain: Option<Chain>,
}

pub fn storms(args: &StormsArgs, seed: u64) -> Result<StormsReport, CliError> {
    let file = std::fs::File::open(&args.input).map_err(|source| CliError::Read {
        path: args.input.display().to_string(),
        source,
    })?;
    let series = CountSeries::from_csv(file)?;
    storms_on(&series, args, seed)
}

pub fn storms_on(series: &CountSeries, args: &StormsArgs, seed: u64) -> Result<StormsReport, CliError> {
    if series.len() < 2 {
        return Err(CliError::input("input", format!("need at least 2 counts, got {}", series.len())));
    }
    let prior1 = match args.sampler {
        SamplerKind::Gibbs => RatePrior::Gamma {
            shape: args.alpha1,
            rate: args.beta1,
        },
        SamplerKind::Mwg => RatePrior::Normal {
            mean: args.mu,
            sd: args.sigma,
        },
    };
    let spec = ChangePointSpec::new(series.count.clone(), prior1, (args.alpha2, args.beta2)).field("prior")?;
    let cfg = ChainConfig::new(args.iter, seed)
        .burnin(args.burnin)
        .thin(args.thin)
        .chains(args.chains);
    cfg.validate().field("config")?;
    let (chain, c) = match args.sampler {
        SamplerKind::Gibbs => (gibbs_changepoint(&spec, &cfg)?, None),
        SamplerKind::Mwg => (mwg_changepoint(&spec, args.c, &cfg).field("C")?, Some(args.c)),
    };

    let max_lag = (args.iter / 10).min(50);
    let params = (0..chain.n_params())
        .map(|p| {
            let col = chain.column(p);
            let s = mc_summary(&col, &[0.05, 0.95])?;
            Ok(ParamSummary {
                name: chain.param_names[p].clone(),
                mean: s.mean,
                sd: s.sd,
                interval90: outer(&s.quantiles),
                diagnostics: if max_lag >= 1 { diagnostics(&chain, p, max_lag).ok() } else { None },
            })
        })
        .collect::<posteriorlab::Result<Vec<_>>>()?;

    let mut tally = BTreeMap::new();
    for m in chain.column(2) {
        *tally.entry(m as usize).or_insert(0usize) += 1;
    }
    let (index, hits) = tally
        .iter()
        .max_by_key(|(m, c)| (**c, std::cmp::Reverse(**m)))
        .map(|(m, c)| (*m, *c))
        .expect("chain has draws");

    Ok(StormsReport {
        schema_version: SCHEMA_VERSION,
        command: "storms",
        seed,
        sampler: args.sampler,
        n: series.len(),
        years: (!series.year.is_empty()).then(|| [series.year[0], series.year[series.len() - 1]]),
        config: cfg,
        prior: StormsPrior {
            lambda1: prior1,
            lambda2: RatePrior::Gamma {
                shape: args.alpha2,
                rate: args.beta2,
            },
        },
        c,
        params,
        m_mode: ModeOfM {
            index,
            year: series.year.get(index - 1).copied(),
            probability: hits as f64 / chain.draws.len() as f64,
        },
        accept_rate_lambda1: chain.acceptance_rate("lambda1"),
        accept_rate_lambda1_per_chain: chain
            .accept_per_chain
            .iter()
            .filter_map(|t| t.get("lambda1").and_then(|t| t.rate()))
            .collect(),
        chain: args.emit_draws.then_some(chain),
    })
}

// -------------------------------------------------------------- elicit-beta

#[derive(Debug, Clone, Args)]
pub struct ElicitBetaArgs {
    #[arg(long)]
    pub median: f64,
    #[arg(long)]
    pub p90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaIntervals {
    pub central50: [f64; 2],
    pub central90: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaFit {
    pub a: f64,
    pub b: f64,
    pub intervals: BetaIntervals,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElicitBetaReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub assessment: QuantileAssessment,
    #[serde(flatten)]
    pub fit: BetaFit,
}

pub fn beta_intervals(a: f64, b: f64) -> posteriorlab::Result<BetaIntervals> {
    let d = DistSpec::beta(a, b)?;
    Ok(BetaIntervals {
        central50: [d.quantile(0.25)?, d.quantile(0.75)?],
        central90: [d.quantile(0.05)?, d.quantile(0.95)?],
    })
}

pub fn fit_beta(qa: &QuantileAssessment) -> posteriorlab::Result<BetaFit> {
    let (a, b) = beta_from_quantiles(qa)?;
    Ok(BetaFit {
        a,
        b,
        intervals: beta_intervals(a, b)?,
    })
}

pub fn elicit_beta(args: &ElicitBetaArgs) -> Result<ElicitBetaReport, CliError> {
    if !(args.median > 0.0 && args.median < 1.0) {
        return Err(CliError::input("median", format!("{} is not in (0, 1)", args.median)));
    }
    if !(args.p90 > args.median && args.p90 < 1.0) {
        return Err(CliError::input("p90", format!("{} must lie in (median, 1)", args.p90)));
    }
    let qa = QuantileAssessment::median_p90(args.median, args.p90).field("p90")?;
    Ok(ElicitBetaReport {
        schema_version: SCHEMA_VERSION,
        command: "elicit-beta",
        fit: fit_beta(&qa).field("p90")?,
        assessment: qa,
    })
}

// -------------------------------------------------------- synthesize-storms

#[derive(Debug, Clone, Args)]
pub struct SynthesizeArgs {
    #[arg(long, default_value_t = 165)]
    pub n: usize,
    #[arg(long, default_value_t = 1851)]
    pub start_year: i64,
    /// Counts in the first regime.
    #[arg(long, default_value_t = 35)]
    pub change: usize,
    #[arg(long, default_value_t = 6.0)]
    pub rate1: f64,
    #[arg(long, default_value_t = 10.0)]
    pub rate2: f64,
}

impl Default for SynthesizeArgs {
    fn default() -> Self {
        Self {
            n: 165,
            start_year: 1851,
            change: 35,
            rate1: 6.0,
            rate2: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisTruth {
    pub change: usize,
    pub change_year: i64,
    pub rate1: f64,
    pub rate2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthesizeReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub truth: SynthesisTruth,
    pub series: CountSeries,
}

pub fn synthesize(args: &SynthesizeArgs, seed: u64) -> Result<SynthesizeReport, CliError> {
    let count = synthesize_counts(args.n, args.change, args.rate1, args.rate2, &mut RngStream::new(seed, 0))
        .field("change")?;
    Ok(SynthesizeReport {
        schema_version: SCHEMA_VERSION,
        command: "synthesize-storms",
        seed,
        truth: SynthesisTruth {
            change: args.change,
            change_year: args.start_year + args.change as i64 - 1,
            rate1: args.rate1,
            rate2: args.rate2,
        },
        series: CountSeries {
            year: (0..args.n as i64).map(|i| args.start_year + i).collect(),
            count,
        },
    })
}
