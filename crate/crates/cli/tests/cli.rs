use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn relfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relfreq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad json ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn multiplicities(v: &Value) -> Vec<(u64, u64)> {
    v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| {
            (
                e["k"].as_u64().unwrap(),
                e["multiplicity"].as_u64().unwrap(),
            )
        })
        .collect()
}

#[test]
fn spectrum_examples() {
    let out = relfreq(&["spectrum", "--d", "2", "--rank", "1", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(multiplicities(&v), vec![(0, 1), (1, 3), (2, 3), (3, 1)]);
    assert_eq!(v["multiplicity_ok"], true);

    let v = json(&relfreq(&[
        "spectrum", "--d", "3", "--rank", "1", "--n", "2",
    ]));
    assert_eq!(multiplicities(&v), vec![(0, 4), (1, 4), (2, 1)]);
    let eigenvalues: Vec<f64> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["eigenvalue"].as_f64().unwrap())
        .collect();
    assert_eq!(eigenvalues, vec![0.0, 0.5, 1.0]);

    let v = json(&relfreq(&[
        "spectrum", "--d", "5", "--rank", "2", "--n", "1",
    ]));
    assert_eq!(multiplicities(&v), vec![(0, 3), (1, 2)]);
}

#[test]
fn spectrum_csv() {
    let out = relfreq(&["spectrum", "--n", "2", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "K,eigenvalue,multiplicity\n0,0.0,1\n1,0.5,2\n2,1.0,1\n"
    );
}

#[test]
fn verify_full_suite_passes() {
    let out = relfreq(&[
        "verify", "--d", "2", "--rank", "1", "--n-max", "8", "--trials", "20",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let names: Vec<&str> = v["identities"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["name"].as_str().unwrap())
        .collect();
    for required in [
        "spectrum",
        "completeness",
        "spectral_form",
        "expectation",
        "variance_distance",
        "binomial_law",
    ] {
        assert!(names.contains(&required), "missing {required}");
    }
}

#[test]
fn verify_refuses_oversized_operators() {
    let out = relfreq(&["verify", "--d", "5", "--n-max", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn verify_extreme_regime() {
    let out = relfreq(&["verify", "--d", "2", "--rank", "2", "--n-max", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["extreme_regime"], true);
    assert_eq!(v["identities"].as_array().unwrap().len(), 3);
}

#[test]
fn bound_examples() {
    let v = json(&relfreq(&[
        "bound", "--p", "0.5", "--eps", "0.1", "--omega", "0.05",
    ]));
    assert_eq!(v["rows"][0]["N_threshold"], 500);
    let v = json(&relfreq(&[
        "bound", "--p", "0.5", "--eps", "0.5", "--omega", "1.0",
    ]));
    assert_eq!(v["rows"][0]["N_threshold"], 1);

    let out = relfreq(&[
        "bound",
        "--p",
        "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
        "--eps",
        "0.01,0.05,0.1",
        "--omega",
        "0.01,0.05,0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 81);
    assert_eq!(v["sandwich_holds"], true);
}

#[test]
fn bound_rejects_bad_grids() {
    assert_eq!(relfreq(&["bound", "--p", "1.0"]).status.code(), Some(2));
    assert_eq!(relfreq(&["bound", "--p", "0.5,abc"]).status.code(), Some(2));
    assert_eq!(relfreq(&["bound", "--eps", "0"]).status.code(), Some(2));
}

#[test]
fn bound_series_file() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    let out = relfreq(&[
        "bound",
        "--series",
        series.to_str().unwrap(),
        "--series-points",
        "5",
        "--format",
        "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&series).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,eps,N,tail,ceiling,omega"));
    assert_eq!(lines.count(), 5);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("p,eps,omega,N_threshold,"));
}

#[test]
fn simulate_examples() {
    let out = relfreq(&[
        "simulate", "--p", "0.5", "--n", "500", "--eps", "0.1", "--r", "100000", "--seed", "42",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["experiment"]["empirical_tail"].as_f64().unwrap() < 0.05);
    assert_eq!(v["within_5_sigma"], true);
    assert_eq!(v["certification"]["rows"][0]["n"], 500);

    let v = json(&relfreq(&[
        "simulate", "--p", "0.5", "--n", "1", "--eps", "0.6", "--r", "1000",
    ]));
    assert_eq!(v["experiment"]["empirical_tail"], 0.0);
    assert!(v["certification"].is_null());

    let out = relfreq(&[
        "simulate",
        "--p",
        "0.3",
        "--n",
        "8",
        "--eps",
        "0.05",
        "--r",
        "100",
        "--verify-bridging",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["bridging"]["passed"], 100);
    assert_eq!(v["bridging"]["trials"], 100);
}

#[test]
fn simulate_preconditions() {
    assert_eq!(relfreq(&["simulate", "--p", "1.0"]).status.code(), Some(2));
    assert_eq!(relfreq(&["simulate", "--r", "0"]).status.code(), Some(2));
    assert_eq!(
        relfreq(&["simulate", "--n", "20", "--verify-bridging"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        relfreq(&["simulate", "--format", "xml"]).status.code(),
        Some(2)
    );
}

#[test]
fn failed_certification_exits_one() {
    // With eps = 0.6 nothing can lie outside, so the outside mass is not positive.
    let out = relfreq(&[
        "simulate", "--p", "0.5", "--n", "1", "--eps", "0.6", "--omega", "1.0", "--r", "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["passed"], false);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let ta = dir.path().join("a.csv");
    let tb = dir.path().join("b.csv");
    for (out, trials) in [(&a, &ta), (&b, &tb)] {
        let status = relfreq(&[
            "simulate",
            "--p",
            "0.3",
            "--n",
            "100",
            "--r",
            "5000",
            "--output",
            out.to_str().unwrap(),
            "--trials-csv",
            trials.to_str().unwrap(),
        ])
        .status;
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(&ta).unwrap(), fs::read(&tb).unwrap());
    let trials = fs::read_to_string(&ta).unwrap();
    assert!(trials.starts_with("trial,K,K/N\n0,"));
    assert_eq!(trials.lines().count(), 5001);
}

#[test]
fn default_seed_is_fixed() {
    let a = relfreq(&["simulate", "--r", "2000"]);
    let b = relfreq(&["simulate", "--r", "2000", "--seed", "1592651789"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["experiment"]["seed"], 1592651789u64);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "p = 0.3\nn = 50\nr = 400\nseed = 7\nformat = \"csv\"\n",
    )
    .unwrap();
    let path = cfg.to_str().unwrap();

    let out = relfreq(&["simulate", "--config", path, "--n", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("0.3,20,0.1,400,7,"), "{row}");

    let out = relfreq(&["simulate", "--config", path, "--format", "json"]);
    let v = json(&out);
    assert_eq!(v["experiment"]["params"]["N"], 50);

    fs::write(&cfg, "probability = 0.3\n").unwrap();
    assert_eq!(
        relfreq(&["simulate", "--config", path]).status.code(),
        Some(2)
    );
    assert_eq!(
        relfreq(&[
            "simulate",
            "--config",
            dir.path().join("missing.toml").to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(relfreq(&[]).status.code(), Some(2));
    assert_eq!(relfreq(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(relfreq(&["spectrum", "--n", "x"]).status.code(), Some(2));
    assert_eq!(
        relfreq(&["spectrum", "--d", "2", "--rank", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(relfreq(&["--help"]).status.code(), Some(0));
}
