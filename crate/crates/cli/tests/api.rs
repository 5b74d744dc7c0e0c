use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use posteriorlab_cli::api::{router, ApiConfig};

async fn call(method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    call_with(ApiConfig::default(), method, uri, body).await
}

async fn call_with(cfg: ApiConfig, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router(cfg).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    check_envelope(&v);
    (status, v)
}

fn check_envelope(v: &Value) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/api-envelope.schema.json");
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(jsonschema::is_valid(&s, v), "{v}");
}

fn post(uri: &'static str, body: Value) -> impl std::future::Future<Output = (StatusCode, Value)> {
    call("POST", uri, Some(body))
}

fn binomial_update() -> Value {
    json!({
        "values": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "weights": [1, 2, 4, 6, 8, 10, 8, 6, 4, 2, 1],
        "likelihood": {"kind": "binomial", "data": {"y": 13, "n": 20}}
    })
}

#[tokio::test]
async fn health() {
    let (s, v) = call("GET", "/api/v1/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["ok"], true);
    assert_eq!(v["result"]["version"], env!("CARGO_PKG_VERSION"));
    assert!(v["error"].is_null());
}

#[tokio::test]
async fn discrete_update_binomial() {
    let (s, v) = post("/api/v1/discrete/update", binomial_update()).await;
    assert_eq!(s, StatusCode::OK);
    let post: Vec<f64> = serde_json::from_value(v["result"]["posterior"].clone()).unwrap();
    assert_eq!(post.len(), 11);
    assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(post[0], 0.0);
    assert_eq!(post[10], 0.0);
    let argmax = post.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(argmax == 6 || argmax == 7);
}

#[tokio::test]
async fn discrete_update_poisson_matches_table() {
    let body = json!({
        "values": [3.0, 3.5, 4.0, 4.5, 5.0],
        "weights": [1, 2, 4, 2, 1],
        "likelihood": {"kind": "poisson", "data": {"n": 10, "sum_y": 31}}
    });
    let (_, v) = post("/api/v1/discrete/update", body).await;
    let expect = [0.241, 0.386, 0.327, 0.042, 0.004];
    for (p, e) in v["result"]["posterior"].as_array().unwrap().iter().zip(expect) {
        assert!((p.as_f64().unwrap() - e).abs() < 5e-4);
    }
}

#[tokio::test]
async fn credible_from_update() {
    let body = json!({
        "values": [3.0, 3.5, 4.0, 4.5, 5.0],
        "weights": [0.1, 0.2, 0.4, 0.2, 0.1],
        "likelihood": {"kind": "poisson", "data": {"n": 10, "sum_y": 31}}
    });
    let (_, v) = post("/api/v1/discrete/update", body).await;
    let (s, c) = post("/api/v1/discrete/credible", json!({"table": v["result"], "level": 0.95})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(c["result"]["values"], json!([3.5, 4.0, 3.0]));
    assert!((c["result"]["coverage"].as_f64().unwrap() - 0.954).abs() < 1e-3);
}

#[tokio::test]
async fn update_errors() {
    let mut bad = binomial_update();
    bad["weights"] = json!([0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    let (s, v) = post("/api/v1/discrete/update", bad).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["ok"], false);
    assert_eq!(v["error"]["code"], "degenerate_prior");

    let mut short = binomial_update();
    short["weights"] = json!([1, 2]);
    let (_, v) = post("/api/v1/discrete/update", short).await;
    assert_eq!(v["error"]["code"], "invalid_input");

    let mut over = binomial_update();
    over["likelihood"]["data"]["y"] = json!(21);
    let (_, v) = post("/api/v1/discrete/update", over).await;
    assert_eq!(v["error"]["code"], "invalid_input");

    let (s, v) = post("/api/v1/discrete/update", json!({"values": [1.0]})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "bad_request");

    let (_, v) = post("/api/v1/discrete/credible", json!({"table": {"values": [1.0], "prior": [1.0], "likelihood": [1.0], "product": [1.0], "posterior": [1.0], "normalizer": 1.0}, "level": 0.0})).await;
    assert_eq!(v["error"]["code"], "domain");
}

#[tokio::test]
async fn beta_from_quantiles() {
    let (s, v) = post("/api/v1/beta/from-quantiles", json!({"p1": 0.5, "q1": 0.5, "p2": 0.9, "q2": 0.9})).await;
    assert_eq!(s, StatusCode::OK);
    let r = &v["result"];
    assert!((r["a"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((r["intervals"]["central50"][0].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert!((r["intervals"]["central90"][1].as_f64().unwrap() - 0.95).abs() < 1e-6);

    let (s, v) = post("/api/v1/beta/from-quantiles", json!({"p1": 0.5, "q1": 0.9, "p2": 0.9, "q2": 0.5})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "domain");
}

#[tokio::test]
async fn walk_step_deterministic_boundary() {
    let body = json!({"weights": [4, 2, 1, 3, 2], "current": 1, "mode": "deterministic", "coin": "heads", "u": 0.3});
    let (s, v) = post("/api/v1/walk/step", body).await;
    assert_eq!(s, StatusCode::OK);
    let r = &v["result"];
    assert_eq!(r["candidate"], 0);
    assert_eq!(r["R"], 0.0);
    assert_eq!(r["accepted"], false);
    assert_eq!(r["next"], 1);
    assert!(r["seed"].is_null());

    let body = json!({"weights": [4, 2, 1, 3, 2], "current": 3, "mode": "deterministic", "coin": "tails", "u": 0.99});
    let (_, v) = post("/api/v1/walk/step", body).await;
    assert_eq!(v["result"]["next"], 4);
    assert_eq!(v["result"]["R"], 3.0);

    let (_, v) = post("/api/v1/walk/step", json!({"weights": [1, 1], "current": 1, "mode": "deterministic"})).await;
    assert_eq!(v["error"]["code"], "invalid_input");
}

#[tokio::test]
async fn walk_step_seeded_is_reproducible() {
    let body = json!({"weights": [4, 2, 1, 3, 2], "current": 2, "mode": "seeded", "seed": 42});
    let (_, a) = post("/api/v1/walk/step", body.clone()).await;
    let (_, b) = post("/api/v1/walk/step", body).await;
    assert_eq!(a, b);
    assert_eq!(a["result"]["seed"], 42);

    let (_, c) = post("/api/v1/walk/step", json!({"weights": [4, 2, 1, 3, 2], "current": 2, "mode": "seeded"})).await;
    let seed = c["result"]["seed"].as_u64().unwrap();
    let (_, d) = post("/api/v1/walk/step", json!({"weights": [4, 2, 1, 3, 2], "current": 2, "mode": "seeded", "seed": seed})).await;
    assert_eq!(c, d);
}

#[tokio::test]
async fn walk_run_matches_step_by_step() {
    let body = json!({"weights": [4, 2, 1, 3, 2], "start": 2, "steps": 500, "seed": 9});
    let (s, a) = post("/api/v1/walk/run", body.clone()).await;
    assert_eq!(s, StatusCode::OK);
    let (_, b) = post("/api/v1/walk/run", body).await;
    assert_eq!(a, b);
    let path = a["result"]["path"].as_array().unwrap();
    assert_eq!(path.len(), 501);
    assert_eq!(path[0], 2);
    let freq: Vec<f64> = serde_json::from_value(a["result"]["frequencies"].clone()).unwrap();
    assert!((freq.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    // a one-step run from the same seed is the seeded single step
    let (_, one) = post("/api/v1/walk/run", json!({"weights": [4, 2, 1, 3, 2], "start": 2, "steps": 1, "seed": 9})).await;
    let (_, step) = post("/api/v1/walk/step", json!({"weights": [4, 2, 1, 3, 2], "current": 2, "mode": "seeded", "seed": 9})).await;
    assert_eq!(one["result"]["path"][1], step["result"]["next"]);
}

#[tokio::test]
async fn walk_run_budget() {
    let body = json!({"weights": [1, 1], "start": 1, "steps": 1_000_001, "seed": 1});
    let (s, v) = post("/api/v1/walk/run", body).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "budget_exceeded");
    let small = ApiConfig { step_budget: 10 };
    let (_, v) = call_with(small, "POST", "/api/v1/walk/run", Some(json!({"weights": [1, 1], "start": 1, "steps": 11, "seed": 1}))).await;
    assert_eq!(v["error"]["code"], "budget_exceeded");
}

#[tokio::test]
async fn unknown_route() {
    let (s, v) = call("GET", "/api/v1/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "not_found");
}

#[tokio::test]
async fn concurrent_identical_requests_agree() {
    let body = json!({"weights": [4, 2, 1, 3, 2], "start": 1, "steps": 10_000, "seed": 5});
    let app = router(ApiConfig::default());
    let mut handles = Vec::new();
    for _ in 0..8 {
        let app = app.clone();
        let body = body.clone();
        handles.push(tokio::spawn(async move {
            let req = Request::post("/api/v1/walk/run")
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap();
            app.oneshot(req).await.unwrap().into_body().collect().await.unwrap().to_bytes()
        }));
    }
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}
