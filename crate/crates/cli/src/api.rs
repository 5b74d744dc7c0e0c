//! JSON-over-HTTP interface. Handlers are stateless: any randomness comes
//! from a seed supplied in the request or generated and echoed back.

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use posteriorlab::conjugate::QuantileAssessment;
use posteriorlab::discrete::{credible_set, update_table, weights_to_prior, BayesTable};
use posteriorlab::mcmc::{discrete_metropolis, walk_step};
use posteriorlab::models::{binomial_loglik, poisson_loglik};
use posteriorlab::RngStream;

use crate::commands::fit_beta;
use crate::error::error_code;

/// Largest number of sampler steps a single request may ask for.
pub const DEFAULT_STEP_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, Copy)]
pub struct ApiConfig {
    pub step_budget: usize,
}

impl Default for ApiConfig {
    fn default() -> Self {
        Self {
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

/// Exactly one of `result` and `error` is non-null.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEnvelope {
    pub ok: bool,
    pub result: Option<Value>,
    pub error: Option<ApiError>,
}

pub struct Failure {
    status: StatusCode,
    code: String,
    message: String,
}

impl Failure {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", message)
    }
}

impl From<posteriorlab::Error> for Failure {
    fn from(e: posteriorlab::Error) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, error_code(&e), e.to_string())
    }
}

impl From<JsonRejection> for Failure {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let body = ApiEnvelope {
            ok: false,
            result: None,
            error: Some(ApiError {
                code: self.code,
                message: self.message,
            }),
        };
        (self.status, Json(body)).into_response()
    }
}

type Reply = Result<Json<ApiEnvelope>, Failure>;

fn ok(result: impl Serialize) -> Reply {
    let value = serde_json::to_value(result).map_err(|e| Failure::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(Json(ApiEnvelope {
        ok: true,
        result: Some(value),
        error: None,
    }))
}

pub fn router(cfg: ApiConfig) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/discrete/update", post(discrete_update))
        .route("/api/v1/discrete/credible", post(discrete_credible))
        .route("/api/v1/beta/from-quantiles", post(beta_from_quantiles))
        .route("/api/v1/walk/step", post(walk_step_handler))
        .route("/api/v1/walk/run", post(walk_run))
        .fallback(|| async { Failure::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(cfg)
}

async fn health() -> Reply {
    ok(json!({ "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Likelihood {
    /// `y` successes in `n` trials; values are proportions.
    Binomial { y: u64, n: u64 },
    /// `n` counts summing to `sum_y`; values are rates.
    Poisson { n: u64, sum_y: u64 },
}

#[derive(Debug, Deserialize)]
pub struct UpdateRequest {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub likelihood: Likelihood,
}

async fn discrete_update(body: Result<Json<UpdateRequest>, JsonRejection>) -> Reply {
    let Json(req) = body?;
    if req.values.len() != req.weights.len() {
        return Err(Failure::invalid("need one weight per value"));
    }
    let prior = weights_to_prior(&req.weights)?;
    let table = match req.likelihood {
        Likelihood::Binomial { y, n } => {
            if y > n {
                return Err(Failure::invalid(format!("y = {y} exceeds n = {n}")));
            }
            if req.values.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Failure::invalid("binomial values must be proportions in [0, 1]"));
            }
            update_table(&req.values, &prior, binomial_loglik(y, n))?
        }
        Likelihood::Poisson { n, sum_y } => {
            if req.values.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
                return Err(Failure::invalid("poisson values must be nonnegative rates"));
            }
            update_table(&req.values, &prior, poisson_loglik(n, sum_y))?
        }
    };
    ok(table)
}

#[derive(Debug, Deserialize)]
pub struct CredibleRequest {
    pub table: BayesTable,
    pub level: f64,
}

async fn discrete_credible(body: Result<Json<CredibleRequest>, JsonRejection>) -> Reply {
    let Json(req) = body?;
    let t = &req.table;
    let k = t.values.len();
    if k == 0 || t.posterior.len() != k {
        return Err(Failure::invalid("table needs matching values and posterior columns"));
    }
    ok(credible_set(t, req.level)?)
}

async fn beta_from_quantiles(body: Result<Json<QuantileAssessment>, JsonRejection>) -> Reply {
    let Json(qa) = body?;
    ok(fit_beta(&qa)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WalkMode {
    Seeded,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coin {
    Heads,
    Tails,
}

#[derive(Debug, Deserialize)]
pub struct StepRequest {
    pub weights: Vec<f64>,
    pub current: usize,
    pub mode: WalkMode,
    pub seed: Option<u64>,
    pub coin: Option<Coin>,
    pub u: Option<f64>,
}

async fn walk_step_handler(body: Result<Json<StepRequest>, JsonRejection>) -> Reply {
    let Json(req) = body?;
    let (heads, u, seed) = match req.mode {
        WalkMode::Deterministic => {
            let coin = req.coin.ok_or_else(|| Failure::invalid("deterministic mode needs `coin`"))?;
            let u = req.u.ok_or_else(|| Failure::invalid("deterministic mode needs `u`"))?;
            (coin == Coin::Heads, u, None)
        }
        WalkMode::Seeded => {
            let seed = req.seed.unwrap_or_else(rand::random);
            // same draw order as a path: coin first, then the acceptance uniform
            let mut rng = RngStream::new(seed, 0);
            (rng.uniform() < 0.5, rng.uniform(), Some(seed))
        }
    };
    let step = walk_step(&req.weights, req.current, heads, u)?;
    let mut value = serde_json::to_value(step).expect("walk step serializes");
    value["coin"] = json!(if heads { "heads" } else { "tails" });
    value["u"] = json!(u);
    value["seed"] = json!(seed);
    ok(value)
}

#[derive(Debug, Deserialize)]
pub struct RunRequest {
    pub weights: Vec<f64>,
    pub start: usize,
    pub steps: usize,
    pub seed: Option<u64>,
}

async fn walk_run(State(cfg): State<ApiConfig>, body: Result<Json<RunRequest>, JsonRejection>) -> Reply {
    let Json(req) = body?;
    if req.steps > cfg.step_budget {
        return Err(Failure::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "budget_exceeded",
            format!("{} steps exceed the budget of {}", req.steps, cfg.step_budget),
        ));
    }
    let seed = req.seed.unwrap_or_else(rand::random);
    let path = discrete_metropolis(&req.weights, req.start, req.steps, &mut RngStream::new(seed, 0))?;
    let mut counts = vec![0usize; req.weights.len()];
    for s in &path {
        counts[s - 1] += 1;
    }
    let frequencies: Vec<f64> = counts.iter().map(|c| *c as f64 / path.len() as f64).collect();
    ok(json!({ "path": path, "frequencies": frequencies, "seed": seed }))
}

/// Bind and serve until the process is stopped.
pub async fn serve(addr: &str, cfg: ApiConfig) -> Result<(), crate::error::CliError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| crate::error::CliError::Bind {
            addr: addr.to_string(),
            source,
        })?;
    eprintln!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_else(|_| addr.into()));
    axum::serve(listener, router(cfg))
        .await
        .map_err(crate::error::CliError::Write)
}
