//! End-to-end runs of the `bbs` binary.

use std::path::Path;
use std::process::{Command, Output};

use bbs_core::Configuration;
use serde_json::Value;

const ETA: &str = "kappa=3 offset=1 cells=012031320301123000000000";

// the introductory three-color evolution, one line per state
const DISPLAYED: [&str; 5] = [
    "0 1 2 0 3 1 3 2 0 3 0 1 1 2 3 0 0 0 0 0 0 0 0 0",
    "0 0 2 1 3 0 3 2 1 3 0 0 0 2 3 1 1 0 0 0 0 0 0 0",
    "0 0 0 1 3 2 3 0 1 3 2 0 0 0 3 1 1 2 0 0 0 0 0 0",
    "0 0 0 1 0 2 0 3 1 0 2 3 3 0 0 1 1 2 3 0 0 0 0 0",
    "0 0 0 0 1 0 2 0 3 1 0 0 0 2 3 3 0 0 0 1 1 2 3 0",
];

fn bbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbs"))
        .args(args)
        .env_remove("BBS_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "not JSON ({e}): {}{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn route_both_prints_the_displayed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "eta.txt", ETA);
    let out = bbs(&[
        "evolve",
        "--config-file",
        &f,
        "--word",
        "+1+2+3",
        "--steps",
        "2",
        "--route",
        "both",
        "--trace",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), DISPLAYED);
}

#[test]
fn word_and_its_inverse_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        ETA,
        "kappa=2 offset=-4 cells=2011020",
        "kappa=1 offset=0 cells=",
    ] {
        let f = write(dir.path(), "in.txt", cfg);
        let o = dir.path().join("out.txt");
        let out = bbs(&[
            "evolve",
            "--config-file",
            &f,
            "--word",
            "+1-1",
            "--output",
            o.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let got: Configuration = std::fs::read_to_string(&o).unwrap().trim().parse().unwrap();
        assert!(got.same_state(&cfg.parse().unwrap()), "{cfg} -> {got}");
        let text = String::from_utf8(out.stdout).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.first(), lines.last());
    }
}

#[test]
fn invert_undoes_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "eta.txt", ETA);
    let mid = dir.path().join("mid.txt");
    let back = dir.path().join("back.txt");
    let m = mid.to_str().unwrap();
    assert!(bbs(&[
        "evolve",
        "--config-file",
        &f,
        "--steps",
        "3",
        "--direct",
        "--output",
        m
    ])
    .status
    .success());
    assert!(bbs(&[
        "invert",
        "--config-file",
        m,
        "--steps",
        "3",
        "--output",
        back.to_str().unwrap()
    ])
    .status
    .success());
    let got: Configuration = std::fs::read_to_string(&back)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(got.same_state(&ETA.parse().unwrap()));
}

#[test]
fn inadmissible_law_is_a_usage_error() {
    let out = bbs(&[
        "invariance-test",
        "--kappa",
        "2",
        "--probs",
        "0.2,0.5,0.3",
        "--color",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inadmissible law"));
}

#[test]
fn usage_and_domain_errors_exit_one() {
    assert_eq!(bbs(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bbs(&["basis"]).status.code(), Some(1));
    let out = bbs(&["evolve", "--config", "kappa=1 offset=0 cells=0120"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lattice") && err.contains("index 2"), "{err}");
    assert_eq!(bbs(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_statistical_test_exits_two() {
    let out = bbs(&[
        "donsker",
        "--n",
        "100",
        "--samples",
        "50",
        "--ks-threshold",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["results"]["pass"], Value::Bool(false));
}

#[test]
fn reports_are_self_describing() {
    let out = bbs(&["basis", "--kappa", "3"]);
    assert!(out.status.success());
    let r = json(&out);
    let keys: Vec<&str> = r.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["diagnostics", "results", "spec", "version"]);
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["spec"]["command"], "basis");
    assert_eq!(r["spec"]["params"]["kappa"], 3);
    assert!(r["diagnostics"]["gram_max_deviation"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["results"]["vectors"].as_array().unwrap().len(), 4);

    let seeded = json(&bbs(&[
        "sample",
        "--probs",
        "0.5,0.3,0.2",
        "--last",
        "30",
        "--seed",
        "9",
    ]));
    assert_eq!(seeded["spec"]["params"]["seed"], 9);
    assert_eq!(seeded["diagnostics"]["seed"], 9);
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_bbs"));
        c.args(["sample", "--probs", "0.5,0.3,0.2", "--last", "40"]);
        match env {
            Some(s) => c.env("BBS_SEED", s),
            None => c.env_remove("BBS_SEED"),
        };
        json(&c.output().unwrap())
    };
    let a = run(Some("77"));
    assert_eq!(a["spec"]["params"]["seed"], 77);
    assert_eq!(a["results"], run(Some("77"))["results"]);
    assert!(run(None)["spec"]["params"]["seed"].is_u64());
}

#[test]
fn saved_spec_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let first = bbs(&[
        "sample",
        "--probs",
        "0.6,0.4",
        "--first",
        "-10",
        "--last",
        "50",
        "--save-spec",
        spec.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let again = bbs(&["run", "--spec", spec.to_str().unwrap()]);
    assert!(again.status.success());
    assert_eq!(json(&first), json(&again));
}

#[test]
fn pitman_matches_running_minimum_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let values = [0.0, -1.0, 1.0, -2.0, -1.0, 0.5];
    let mut csv = String::from("n,value\n");
    for (n, v) in values.iter().enumerate() {
        csv.push_str(&format!("{n},{v}\n"));
    }
    let f = write(dir.path(), "p.csv", &csv);
    let out = bbs(&["pitman", "--input", &f, "--transform", "one-sided"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("n,value"));
    let mut min = f64::INFINITY;
    for (n, line) in rows.enumerate() {
        min = min.min(values[n]);
        let (idx, v) = line.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), n);
        assert_eq!(v.parse::<f64>().unwrap(), values[n] - 2.0 * min);
    }
}

#[test]
fn encode_writes_counts_and_heights() {
    let out = bbs(&["encode", "--config", "kappa=2 offset=0 cells=0112"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "n,a_0,a_1,a_2,A_1,A_2");
    assert!(lines.contains(&"3,0,2,1,-2,-1"), "{text}");
}

#[test]
fn examples_report_the_counterexample_features() {
    let a = json(&bbs(&["examples", "--name", "a", "--epochs", "6"]));
    let loads: Vec<u64> = a["results"]["analysis"]["epochs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["max_carrier_load"].as_u64().unwrap())
        .collect();
    assert!(loads.windows(2).all(|w| w[1] > w[0]), "{loads:?}");

    let c = json(&bbs(&["examples", "--name", "c", "--epochs", "12"]));
    for r in c["results"]["analysis"]["interior"].as_array().unwrap() {
        assert_eq!(r["periodic_012_or_021"], Value::Bool(true));
    }
    assert_eq!(bbs(&["examples", "--name", "d"]).status.code(), Some(1));
}

#[test]
fn classify_finite_support_is_reversible() {
    let r = json(&bbs(&[
        "classify",
        "--config",
        ETA,
        "--color",
        "2",
        "--horizon",
        "10",
    ]));
    assert_eq!(r["results"]["class_report"]["reversible"], "yes");
    assert!(r["results"]["good_set"]["colors"].is_array());
}

#[test]
fn carrier_agrees_with_heights() {
    let r = json(&bbs(&["carrier", "--config", ETA]));
    assert_eq!(r["diagnostics"]["all_match_heights"], Value::Bool(true));
    assert_eq!(r["results"]["carriers"].as_array().unwrap().len(), 3);
}
