use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_posteriorlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap()
}

fn assert_valid(name: &str, v: &Value) {
    let errors: Vec<String> = schema(name).iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn known_truth_csv(dir: &tempfile::TempDir) -> PathBuf {
    let args = ["--seed", "11", "--format", "csv", "synthesize-storms", "--n", "100", "--change", "40", "--rate1", "3", "--rate2", "8"];
    let out = run(&args);
    assert!(out.status.success());
    write(dir, "truth.csv", std::str::from_utf8(&out.stdout).unwrap())
}

#[test]
fn ed_visits_defaults() {
    let r = json_of(&["--seed", "1", "ed-visits"]);
    assert_valid("ed-visits", &r);
    let iv = &r["exact_interval"];
    assert!((iv[0].as_f64().unwrap() - 3.142).abs() < 5e-4);
    assert!((iv[1].as_f64().unwrap() - 4.296).abs() < 5e-4);
    assert_eq!(r["posterior"]["posterior"], serde_json::json!([111.0, 30.0]));
    assert_eq!(r["predictive_source"], "conjugate");
    assert!(r["discrete"].is_null());
}

#[test]
fn ed_visits_discrete_predictive() {
    let r = json_of(&["--seed", "1", "ed-visits", "--discrete"]);
    assert_valid("ed-visits", &r);
    assert!((r["predictive_f0"].as_f64().unwrap() - 0.030).abs() < 5e-4);
    assert_eq!(r["discrete"]["credible_95"]["values"], serde_json::json!([3.5, 4.0, 3.0]));
}

#[test]
fn ed_visits_counts_from_file_and_inline() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "ed.txt", "# ten evenings\n3 4 2 3 5\n2,3,4,2,3\n");
    let a = json_of(&["--seed", "2", "ed-visits", "--data", f.to_str().unwrap()]);
    let b = json_of(&["--seed", "2", "ed-visits", "--counts", "3,4,2,3,5,2,3,4,2,3"]);
    let c = json_of(&["--seed", "2", "ed-visits", "--n", "10", "--sum-y", "31"]);
    assert_eq!(a["data"]["sum_y"], 31);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn ed_visits_bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(&dir, "empty.txt", "");
    let out = run(&["ed-visits", "--data", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`data`"));
    let out = run(&["ed-visits", "--counts", "3,x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["ed-visits", "--alpha", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["ed-visits", "--levels", "0.05,1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`levels`"));
    let out = run(&["ed-visits", "--data", "/nonexistent/counts.txt"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn facebook_laplace_and_grid() {
    let r = json_of(&["--seed", "3", "facebook", "--method", "both"]);
    assert_valid("facebook", &r);
    let mode = &r["laplace"]["fit"]["mode"];
    assert!((mode[0].as_f64().unwrap() + 0.696).abs() < 5e-4);
    assert!((mode[1].as_f64().unwrap() - 0.431).abs() < 5e-4);
    assert_eq!(r["grid_beta1"]["right_skewed"], true);
    assert!(r["grid_beta1"]["third_moment"].as_f64().unwrap() > 0.0);

    let only_grid = json_of(&["facebook", "--method", "grid"]);
    assert!(only_grid["laplace"].is_null());
    let only_laplace = json_of(&["facebook"]);
    assert!(only_laplace["grid_beta1"].is_null());
}

#[test]
fn facebook_rejects_y_above_n() {
    let out = run(&["facebook", "--yw", "31", "--nw", "30"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`yw`"));
}

#[test]
fn storms_gibbs_finds_planted_change() {
    let dir = tempfile::tempdir().unwrap();
    let csv = known_truth_csv(&dir);
    let r = json_of(&["--seed", "5", "storms", "--input", csv.to_str().unwrap()]);
    assert_valid("storms", &r);
    let m = r["m_mode"]["index"].as_i64().unwrap();
    assert!((m - 40).abs() <= 3, "{m}");
    assert_eq!(r["m_mode"]["year"].as_i64().unwrap(), 1850 + m);
    assert!(r["accept_rate_lambda1"].is_null());
    assert_eq!(r["params"][2]["name"], "M");
}

#[test]
fn storms_mwg_acceptance_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--seed", "8", "--format", "csv", "synthesize-storms"]);
    let csv = write(&dir, "storms.csv", std::str::from_utf8(&out.stdout).unwrap());
    let r = json_of(&["--seed", "6", "storms", "--input", csv.to_str().unwrap(), "--sampler", "mwg", "--mu", "4", "--sigma", "2", "--C", "2", "--chains", "2", "--emit-draws"]);
    assert_valid("storms", &r);
    let rate = r["accept_rate_lambda1"].as_f64().unwrap();
    assert!((0.2..=0.4).contains(&rate), "{rate}");
    assert_eq!(r["accept_rate_lambda1_per_chain"].as_array().unwrap().len(), 2);
    assert_eq!(r["chain"]["draws"].as_array().unwrap().len(), 2 * 5000);
}

#[test]
fn storms_bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(&dir, "one.csv", "year,count\n1851,4\n");
    assert_eq!(run(&["storms", "--input", one.to_str().unwrap()]).status.code(), Some(2));
    let bad = write(&dir, "bad.csv", "year,count\n1851,4\n1852,-3\n");
    assert_eq!(run(&["storms", "--input", bad.to_str().unwrap()]).status.code(), Some(2));
    let ok = write(&dir, "ok.csv", "year,count\n1851,4\n1852,3\n1853,9\n");
    let out = run(&["storms", "--input", ok.to_str().unwrap(), "--thin", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["storms", "--input", ok.to_str().unwrap(), "--sampler", "mwg", "--C", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`C`"));
}

#[test]
fn elicit_beta_cases() {
    let r = json_of(&["elicit-beta", "--median", "0.5", "--p90", "0.9"]);
    assert_valid("elicit-beta", &r);
    assert!((r["a"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((r["b"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let c50 = &r["intervals"]["central50"];
    assert!((c50[0].as_f64().unwrap() - 0.25).abs() < 1e-6);
    assert!((c50[1].as_f64().unwrap() - 0.75).abs() < 1e-6);

    let out = run(&["elicit-beta", "--median", "0.9", "--p90", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["elicit-beta", "--median", "0", "--p90", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synthesize_formats() {
    let j = json_of(&["--seed", "4", "synthesize-storms"]);
    assert_valid("synthesize-storms", &j);
    assert_eq!(j["series"]["count"].as_array().unwrap().len(), 165);
    assert_eq!(j["series"]["year"][0], 1851);
    assert_eq!(j["truth"]["change_year"], 1885);
    let csv = run(&["--seed", "4", "--format", "csv", "synthesize-storms"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("year,count\n1851,"));
    assert_eq!(text.lines().count(), 166);
    let counts: Vec<u64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let from_json: Vec<u64> = serde_json::from_value(j["series"]["count"].clone()).unwrap();
    assert_eq!(counts, from_json);
    assert_eq!(run(&["--format", "csv", "elicit-beta", "--median", "0.5", "--p90", "0.9"]).status.code(), Some(2));
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["--seed", "1", "--output", path.to_str().unwrap(), "elicit-beta", "--median", "0.3", "--p90", "0.5"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["command"], "elicit-beta");
}

#[test]
fn generated_seed_is_echoed_and_replays() {
    let first = json_of(&["ed-visits", "--draws", "500"]);
    let seed = first["seed"].as_u64().unwrap().to_string();
    let again = json_of(&["--seed", &seed, "ed-visits", "--draws", "500"]);
    assert_eq!(first, again);
}

#[test]
fn serve_bind_failure_exits_3() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let out = run(&["serve", "--port", &port, "--bind", "127.0.0.1"]);
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args(["serve"])
        .env("POSTERIORLAB_PORT", &port)
        .env("POSTERIORLAB_BIND", "127.0.0.1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let csv = known_truth_csv(&dir);
    let csv = csv.to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["ed-visits", "--discrete"],
        vec!["facebook", "--method", "both"],
        vec!["storms", "--input", csv, "--chains", "3"],
        vec!["storms", "--input", csv, "--sampler", "mwg", "--chains", "3"],
        vec!["elicit-beta", "--median", "0.2", "--p90", "0.35"],
        vec!["synthesize-storms"],
    ];
    for case in cases {
        let mut args = vec!["--seed", "77"];
        args.extend(&case);
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{case:?}");
    }
}
