//! Process-level checks of the opclass binary: flag surface, output
//! formats, exit codes, and rerun determinism.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_opclass"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn opclass")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

/// Unique scratch file path; the temp dir is shared across test binaries.
fn scratch(name: &str) -> PathBuf {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!(
        "opclass-cli-{}-{n}-{name}",
        std::process::id()
    ))
}

#[test]
fn class_dump_has_header_and_members() {
    let out = run(&["class", "--model", "xy", "--L", "6", "--seed", "X1", "--no-meta"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "L=6 seed=XIIIII oed=12 complete=true"
    );
    let members: Vec<&str> = lines.collect();
    assert_eq!(members.len(), 12);
    assert!(members.contains(&"XIIIII"));
    assert!(members.contains(&"ZZZZZY"));
}

#[test]
fn class_json_matches_the_dump() {
    let out = run(&[
        "class", "--model", "xy", "--L", "6", "--seed", "X1", "--format", "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["L"], 6);
    assert_eq!(v["seed"], "XIIIII");
    assert_eq!(v["oed"], 12);
    assert_eq!(v["complete"], true);
    assert_eq!(v["members"].as_array().unwrap().len(), 12);
}

#[test]
fn partition_counts_classes() {
    let out = run(&["class", "--model", "xy", "--L", "4", "--partition", "--no-meta"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("L=4 K=9 total=256\n"));
    // identity singleton is part of the partition
    assert!(text.contains("seed=IIII oed=1"));
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn meta_header_is_present_by_default_and_suppressible() {
    let with = stdout_of(&run(&["class", "--model", "xy", "--L", "2", "--seed", "X1"]));
    assert!(with.starts_with("# schema=1 generated="));
    let without = stdout_of(&run(&[
        "class", "--model", "xy", "--L", "2", "--seed", "X1", "--no-meta",
    ]));
    assert!(without.starts_with("L=2 "));
}

#[test]
fn scan_is_deterministic_and_ordered() {
    let args = [
        "scan", "--model", "xy", "--sizes", "2..5", "--seeds", "X*,Z1,parity", "--no-meta",
    ];
    let first = stdout_of(&run(&args));
    let second = stdout_of(&run(&args));
    assert_eq!(first, second, "reruns must be byte-identical");
    let third = stdout_of(&bin().args(args).args(["--threads", "1"]).output().unwrap());
    assert_eq!(first, third, "thread count must not change the output");
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(lines[0], "L,seed,oed,complete");
    // per size: one row per site for X*, then Z1, then parity
    assert_eq!(lines.len(), 1 + (2 + 2) + (3 + 2) + (4 + 2) + (5 + 2));
    assert_eq!(lines[1], "2,XI,4,true");
    assert_eq!(lines[2], "2,IX,4,true");
    assert_eq!(lines[3], "2,ZI,6,true");
    assert_eq!(lines[4], "2,ZZ,1,true");
}

#[test]
fn fit_poly_recovers_an_exact_polynomial() {
    let data = scratch("quadratic.csv");
    let mut rows = String::from("L,count\n");
    for l in 2i64..=8 {
        rows.push_str(&format!("{l},{}\n", 2 * l * l - l));
    }
    std::fs::write(&data, rows).unwrap();
    let out = run(&["fit-poly", "--data", data.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["degree"], 2);
    assert_eq!(v["coeffs"], serde_json::json!(["0", "-1", "2"]));
    assert_eq!(v["validated_at"], serde_json::json!([5, 6, 7, 8]));
    std::fs::remove_file(&data).ok();
}

#[test]
fn fit_poly_rejects_data_off_the_curve() {
    let data = scratch("ragged.csv");
    std::fs::write(&data, "2,6\n3,15\n4,28\n5,45\n6,67\n").unwrap();
    let out = bin()
        .args(["fit-poly", "--degree", "2", "--data"])
        .arg(&data)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "consistency failures exit 4");
    std::fs::remove_file(&data).ok();
}

#[test]
fn fit_exp_recovers_a_log_linear_rate() {
    let data = scratch("exponential.csv");
    let mut rows = String::new();
    for l in 3..=10 {
        rows.push_str(&format!("{l},{}\n", 2.0 * 4f64.powi(l - 3)));
    }
    std::fs::write(&data, rows).unwrap();
    let out = run(&["fit-exp", "--data", data.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rate = v["rate"].as_f64().unwrap();
    assert!((rate - 4f64.ln()).abs() < 1e-9, "rate {rate}");
    assert!(v["r_squared"].as_f64().unwrap() > 1.0 - 1e-12);
    std::fs::remove_file(&data).ok();

    let short = scratch("short.csv");
    std::fs::write(&short, "2,4\n3,8\n4,16\n").unwrap();
    let out = bin().args(["fit-exp", "--data"]).arg(&short).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "too few points is a config error");
    std::fs::remove_file(&short).ok();
}

#[test]
fn evolve_emits_the_documented_csv() {
    let out = run(&[
        "evolve", "--model", "xy", "--L", "4", "--j", "1", "--hz", "2", "--sites", "1,2",
        "--t-max", "1", "--dt", "0.5", "--no-meta",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,site,observable,value,norm_drift");
    assert_eq!(lines.len(), 1 + 3 + 3, "three samples per site");
    // t = 0 of a plus-x site measuring X there is exactly 1
    assert!(lines[1].starts_with("0,1,XIII,1,"));
    assert!(lines[4].starts_with("0,2,IXII,1,"));
}

#[test]
fn evolve_honors_config_files_and_state_specs() {
    let cfg = scratch("model.json");
    std::fs::write(
        &cfg,
        r#"{"model": "xy", "L": 3, "uniform": {"j": 1.0, "hz": 0.5}}"#,
    )
    .unwrap();
    let out = bin()
        .args(["evolve", "--config"])
        .arg(&cfg)
        .args([
            "--sites", "1", "--state", "up", "--observable", "Z*", "--t-max", "0", "--dt", "1",
            "--no-meta",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert_eq!(text.lines().count(), 2, "t_max = 0 degenerates to one row");
    assert!(text.lines().nth(1).unwrap().starts_with("0,1,ZII,1,"));
    std::fs::remove_file(&cfg).ok();
}

#[test]
fn quench_with_canceling_swaps_matches_plain_evolve() {
    let sched = scratch("cancel.json");
    std::fs::write(
        &sched,
        r#"[{"t": 0.5, "gate": "swap", "sites": [2,3]},
            {"t": 0.5, "gate": "swap", "sites": [2,3]}]"#,
    )
    .unwrap();
    let evolve_args = [
        "--model", "xy", "--L", "4", "--j", "1", "--hz", "1", "--t-max", "1", "--dt", "0.25",
        "--no-meta",
    ];
    let plain = stdout_of(&bin().arg("evolve").args(evolve_args).output().unwrap());
    let quenched = stdout_of(
        &bin()
            .arg("quench")
            .args(evolve_args)
            .args(["--schedule", sched.to_str().unwrap()])
            .output()
            .unwrap(),
    );
    let parse_values = |text: &str| -> Vec<f64> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect()
    };
    let a = parse_values(&plain);
    let b = parse_values(&quenched);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
    std::fs::remove_file(&sched).ok();
}

#[test]
fn oracle_agrees_with_the_restricted_engine() {
    let args = [
        "--model", "xy", "--L", "5", "--j", "1", "--hz", "3", "--sites", "2", "--t-max", "2",
        "--dt", "0.25", "--no-meta",
    ];
    let engine = stdout_of(&bin().arg("evolve").args(args).output().unwrap());
    let exact = stdout_of(&bin().arg("oracle").args(args).output().unwrap());
    let values = |text: &str| -> Vec<f64> {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect()
    };
    for (x, y) in values(&engine).iter().zip(&values(&exact)) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn oracle_projection_dumps_a_class() {
    let out = run(&[
        "oracle", "--model", "xy", "--L", "3", "--project", "--seed", "Z1", "--no-meta",
    ]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("L=3 seed=ZII oed=15 complete=true\n"));
    assert_eq!(text.lines().count(), 16);
}

#[test]
fn config_errors_exit_2() {
    let out = run(&["class", "--model", "zzz", "--L", "4", "--seed", "X1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["class", "--model", "xy", "--L", "4"]);
    assert_eq!(out.status.code(), Some(2), "missing --seed");
    let out = run(&["oracle", "--model", "xy", "--L", "12", "--t-max", "1"]);
    assert_eq!(out.status.code(), Some(2), "oracle cap");
    let out = run(&["scan", "--model", "xy", "--sizes", "9..2", "--seeds", "Z1"]);
    assert_eq!(out.status.code(), Some(2), "bad size range");
}

#[test]
fn exhausted_budgets_exit_3() {
    let out = run(&[
        "class", "--model", "xy", "--L", "6", "--seed", "Z1", "--budget", "5", "--no-meta",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout_of(&out);
    assert!(text.starts_with("L=6 seed=ZIIIII oed=5 complete=false"));

    // restricted evolution refuses an incomplete class outright
    let out = run(&[
        "evolve", "--model", "xy", "--L", "6", "--budget", "5", "--t-max", "1", "--dt", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn output_files_match_stdout() {
    let path = scratch("dump.txt");
    let out = bin()
        .args(["class", "--model", "xy", "--L", "3", "--seed", "X1", "--no-meta", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let direct = stdout_of(&run(&[
        "class", "--model", "xy", "--L", "3", "--seed", "X1", "--no-meta",
    ]));
    assert_eq!(written, direct);
    std::fs::remove_file(&path).ok();
}

#[test]
fn graph_flag_builds_kitaev_models() {
    let graph = scratch("chain.csv");
    std::fs::write(&graph, "1,2,x,1.0\n2,3,y,0.8\n3,4,z,1.2\n").unwrap();
    let out = bin()
        .args(["class", "--model", "kitaev", "--L", "4", "--graph"])
        .arg(&graph)
        .args(["--seed", "X1", "--oed-only", "--no-meta"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.starts_with("L=4 seed=XIII oed="));
    assert_eq!(text.lines().count(), 1, "--oed-only skips members");
    std::fs::remove_file(&graph).ok();
}
