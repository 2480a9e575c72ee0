use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn aloe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aloe"))
        .args(args)
        .env_remove("ALOE_SEED")
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, contents: &str) -> String {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

const INFEASIBLE: &str = r#"{
  "busses": [
    {"id": 1, "role": "slack", "p_min": -1.5, "p_max": 1.5},
    {"id": 2, "role": "random", "p_min": -1.0, "p_max": 1.2, "eta": 0.3},
    {"id": 3, "role": "fixed", "eta": -2.0}
  ],
  "lines": [{"from": 1, "to": 2, "b": 1.0}, {"from": 2, "to": 3, "b": 2.0}],
  "sigma": [[0.065]],
  "theta_bar": 0.9
}"#;

#[test]
fn help_and_bad_arguments() {
    assert_eq!(aloe(&["--help"]).status.code(), Some(0));
    assert_eq!(aloe(&["bogus"]).status.code(), Some(1));
    assert_eq!(aloe(&["-n", "0", "verify"]).status.code(), Some(1));
    assert_eq!(aloe(&["--reps", "0", "verify"]).status.code(), Some(1));
    assert_eq!(
        aloe(&["estimate", "--input", "/nonexistent/problem.json"])
            .status
            .code(),
        Some(1)
    );
    let bad = scratch(
        "bad.json",
        r#"{"d": 2, "omega": [[1.0, 0.0]], "tau": [1.0, 2.0]}"#,
    );
    assert_eq!(aloe(&["estimate", "--input", &bad]).status.code(), Some(1));
}

#[test]
fn single_event_is_exact() {
    let path = scratch("single.json", r#"{"d": 1, "omega": [[1.0]], "tau": [3.0]}"#);
    let o = aloe(&["--no-timestamp", "estimate", "--input", &path]);
    assert_eq!(o.status.code(), Some(0));
    let r = &json(&o)["results"][0];
    assert_eq!(
        r["mu_hat"].as_f64().unwrap(),
        aloe_core::stats::normal_cdf(-3.0)
    );
    assert_eq!(r["se"].as_f64().unwrap(), 0.0);
    assert_eq!(r["degenerate_se"], Value::Bool(true));
}

#[test]
fn empty_mixture_reports_zero() {
    let path = scratch("empty.json", r#"{"d": 1, "omega": [[1.0]], "tau": [50.0]}"#);
    let o = aloe(&["--no-timestamp", "estimate", "--input", &path]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(json(&o)["results"][0]["mu_hat"].as_f64(), Some(0.0));
}

#[test]
fn infeasible_deterministic_row() {
    let path = scratch("infeasible.json", INFEASIBLE);
    assert_eq!(aloe(&["grid", "--case", &path]).status.code(), Some(2));
    assert_eq!(aloe(&["verify", "--case", &path]).status.code(), Some(4));
}

#[test]
fn verify_passes() {
    let o = aloe(&[
        "--no-timestamp",
        "verify",
        "--case",
        &fixture("ten_bus.json"),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let checks = json(&o)["results"].as_array().unwrap().clone();
    assert!(checks.iter().all(|c| c["passed"] == Value::Bool(true)));
    assert!(checks.len() > 10);
}

#[test]
fn csv_columns() {
    let o = aloe(&[
        "--format",
        "csv",
        "--no-timestamp",
        "-n",
        "2000",
        "--reps",
        "2",
        "grid",
        "--case",
        &fixture("three_bus.json"),
        "--theta-bar",
        "0.8,0.9",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("case,theta_or_tau,n,mu_hat,se,se_over_mu,mu_lower,mu_bar,s_ge_2_fraction,seed")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 10);
        assert_eq!(f[0], "three_bus");
        let mu: f64 = f[3].parse().unwrap();
        let bar: f64 = f[7].parse().unwrap();
        assert!(mu > 0.0 && mu <= bar);
    }
}

#[test]
fn output_is_deterministic_across_threads() {
    let case = fixture("ten_bus.json");
    let run = |threads: &str| {
        stdout(&aloe(&[
            "--no-timestamp",
            "--threads",
            threads,
            "-n",
            "20000",
            "--block-size",
            "333",
            "grid",
            "--case",
            &case,
        ]))
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("7"));
}

#[test]
fn timestamp_can_be_suppressed() {
    let path = scratch(
        "pair.json",
        r#"{"d": 2, "omega": [[1, 0], [0, 1]], "tau": [2, 2]}"#,
    );
    let with = json(&aloe(&["estimate", "--input", &path]));
    assert!(with["generated_at"].is_u64());
    let without = json(&aloe(&["--no-timestamp", "estimate", "--input", &path]));
    assert!(without.get("generated_at").is_none());
}

#[test]
fn seed_comes_from_environment() {
    let path = scratch(
        "pair_env.json",
        r#"{"d": 2, "omega": [[1, 0], [0, 1]], "tau": [2, 2]}"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_aloe"))
        .args(["--no-timestamp", "estimate", "--input", &path])
        .env("ALOE_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&o)["seed"].as_u64(), Some(99));
    let d = json(&aloe(&["--no-timestamp", "estimate", "--input", &path]));
    assert_eq!(d["seed"].as_u64(), Some(20_170_301));
}

#[test]
fn polygon_relative_mse_in_expected_range() {
    let o = aloe(&[
        "--format",
        "csv",
        "--no-timestamp",
        "-n",
        "1000",
        "--reps",
        "100",
        "polygon",
        "--J",
        "360",
        "--tau",
        "6",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "rel_mse").unwrap();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mse: f64 = row[col].parse().unwrap();
    assert!((1e-4..=5e-3).contains(&mse), "{mse}");
}

#[test]
fn three_bus_matches_monte_carlo_fixture() {
    let o = aloe(&[
        "--no-timestamp",
        "-n",
        "100000",
        "grid",
        "--case",
        &fixture("three_bus.json"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = &json(&o)["results"][0];
    let reference: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("grid_reference.json")).unwrap())
            .unwrap();
    let mu = reference["three_bus"]["mu"].as_f64().unwrap();
    let mc_se = reference["three_bus"]["se"].as_f64().unwrap();
    let mu_hat = r["mu_hat"].as_f64().unwrap();
    let se = r["se"].as_f64().unwrap();
    assert!((mu_hat - mu).abs() <= 4.0 * (se * se + mc_se * mc_se).sqrt());
    assert_eq!(r["deterministic_rows"].as_u64(), Some(2));
    assert_eq!(r["num_rows"].as_u64(), Some(8));
}

#[test]
fn dropped_mass_can_be_added_to_the_bound() {
    let path = scratch(
        "drop.json",
        r#"{"d": 2, "omega": [[1, 0], [0, 1]], "tau": [3, 12]}"#,
    );
    let plain = json(&aloe(&[
        "--no-timestamp",
        "--drop-below",
        "10",
        "estimate",
        "--input",
        &path,
    ]));
    let added = json(&aloe(&[
        "--no-timestamp",
        "--drop-below",
        "10",
        "--add-dropped-to-bound",
        "estimate",
        "--input",
        &path,
    ]));
    let p = &plain["results"][0];
    let a = &added["results"][0];
    let dropped = p["dropped_mass"].as_f64().unwrap();
    assert!(dropped > 0.0);
    assert_eq!(
        a["union_bound"].as_f64().unwrap(),
        p["union_bound"].as_f64().unwrap() + dropped
    );
}

#[test]
fn highdim_runs() {
    let o = aloe(&[
        "--format",
        "csv",
        "--no-timestamp",
        "-n",
        "500",
        "highdim",
        "--cases",
        "3",
        "--dims",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}
