//! End-to-end tests of the `lbarn` binary: subcommand round trips,
//! determinism, and exit-code classes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lbarn::synth;

const MARKER: &str = "---machine-json---";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lbarn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn machine_json(stdout: &str) -> serde_json::Value {
    let mut lines = stdout.lines();
    while let Some(line) = lines.next() {
        if line == MARKER {
            let json_line = lines.next().expect("json after marker");
            return serde_json::from_str(json_line).expect("valid machine json");
        }
    }
    panic!("no machine section in output: {stdout}");
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let train = synth::clusters(300, 5, 3, 0.12, 5, 50);
        let valid = synth::clusters(120, 5, 3, 0.12, 5, 51);
        let test = synth::clusters(120, 5, 3, 0.12, 5, 52);
        train.save(dir.path().join("train.txt")).unwrap();
        valid.save(dir.path().join("valid.txt")).unwrap();
        test.save(dir.path().join("test.txt")).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }
}

fn train_args(ws: &Workspace, model: &str, extra: &[&str]) -> Vec<String> {
    let mut args = vec![
        "train".to_string(),
        "--train".into(),
        ws.p("train.txt"),
        "--valid".into(),
        ws.p("valid.txt"),
        "--model".into(),
        ws.p(model),
        "--leaves".into(),
        "4".into(),
        "--shrinkage".into(),
        "0.1".into(),
        "--rounds".into(),
        "40".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

#[test]
fn train_then_eval_reproduces_test_metric_bit_exactly() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &["--test", &ws.p("test.txt")]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let payload = machine_json(&run_ok(&args));
    let train_test_mean = payload["test"]["mean"].as_f64().unwrap();

    let eval = machine_json(&run_ok(&[
        "eval",
        "--model",
        &ws.p("m.json"),
        "--data",
        &ws.p("test.txt"),
    ]));
    assert_eq!(
        eval["mean"].as_f64().unwrap().to_bits(),
        train_test_mean.to_bits(),
        "model file round trip changed the test metric"
    );
}

#[test]
fn individual_selection_dominates_common_on_validation() {
    let ws = Workspace::new();
    let mut valid_means = Vec::new();
    for (model, method) in [("mi.json", "individual"), ("mc.json", "common")] {
        let args = train_args(&ws, model, &["--selection", method, "--no-early-exit"]);
        let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        let payload = machine_json(&run_ok(&args));
        valid_means.push(payload["report"]["valid_ll_mean"].as_f64().unwrap());
    }
    assert!(
        valid_means[0] >= valid_means[1] - 1e-12,
        "individual {} < common {}",
        valid_means[0],
        valid_means[1]
    );
}

#[test]
fn zero_rounds_model_evaluates_to_base_likelihood() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m0.json", &[]);
    let mut args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let pos = args.iter().position(|a| *a == "40").unwrap();
    args[pos] = "0";
    run_ok(&args);
    let eval = machine_json(&run_ok(&[
        "eval",
        "--model",
        &ws.p("m0.json"),
        "--data",
        &ws.p("test.txt"),
    ]));
    let expected = 5.0 * 0.5f64.ln();
    assert!((eval["mean"].as_f64().unwrap() - expected).abs() < 1e-12);
    assert!(eval["std_error"].as_f64().unwrap() < 1e-12);
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    for out in ["s1.txt", "s2.txt"] {
        run_ok(&[
            "sample",
            "--model",
            &ws.p("m.json"),
            "--n",
            "100",
            "--seed",
            "7",
            "--out",
            &ws.p(out),
        ]);
    }
    let a = std::fs::read_to_string(ws.path("s1.txt")).unwrap();
    let b = std::fs::read_to_string(ws.path("s2.txt")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 100);
}

#[test]
fn impute_with_nothing_missing_echoes_input() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    std::fs::write(ws.path("partial.txt"), "1 0 1 0 1\n0 0 0 1 1\n").unwrap();
    run_ok(&[
        "impute",
        "--model",
        &ws.p("m.json"),
        "--data",
        &ws.p("partial.txt"),
        "--n-samples",
        "2",
        "--seed",
        "3",
        "--out",
        &ws.p("done.txt"),
    ]);
    let done = std::fs::read_to_string(ws.path("done.txt")).unwrap();
    assert_eq!(done, "1 0 1 0 1\n1 0 1 0 1\n0 0 0 1 1\n0 0 0 1 1\n");
}

#[test]
fn impute_rejects_non_prefix_pattern_with_data_error() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    std::fs::write(ws.path("partial.txt"), "1 ? 1 0 1\n").unwrap();
    let out = run(&[
        "impute",
        "--model",
        &ws.p("m.json"),
        "--data",
        &ws.p("partial.txt"),
        "--out",
        &ws.p("done.txt"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("prefix of the model ordering"), "{stderr}");
}

#[test]
fn order_on_independent_coins_reports_log2_entropies() {
    let ws = Workspace::new();
    synth::coins(6000, 3, 77).save(ws.path("coins.txt")).unwrap();
    let payload = machine_json(&run_ok(&[
        "order",
        "--train",
        &ws.p("coins.txt"),
        "--out",
        &ws.p("perm.txt"),
    ]));
    for h in payload["per_step_entropy"].as_array().unwrap() {
        let h = h.as_f64().unwrap();
        assert!((h - std::f64::consts::LN_2).abs() < 0.02, "entropy {h}");
    }
    let perm_line = std::fs::read_to_string(ws.path("perm.txt")).unwrap();
    let mut cols: Vec<usize> = perm_line
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    cols.sort_unstable();
    assert_eq!(cols, vec![1, 2, 3]);
}

#[test]
fn ordering_file_feeds_training() {
    let ws = Workspace::new();
    std::fs::write(ws.path("perm.txt"), "5 4 3 2 1\n").unwrap();
    let order_flag = format!("file:{}", ws.p("perm.txt"));
    let args = train_args(&ws, "mr.json", &["--order", &order_flag]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let payload = machine_json(&run_ok(&args));
    let ordering: Vec<u64> = payload["report"]["ordering"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(ordering, vec![4, 3, 2, 1, 0]);
}

#[test]
fn refit_subcommand_preserves_evaluability() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    run_ok(&[
        "refit",
        "--model",
        &ws.p("m.json"),
        "--train",
        &ws.p("train.txt"),
        "--valid",
        &ws.p("valid.txt"),
        "--out",
        &ws.p("m_refit.json"),
    ]);
    let eval = machine_json(&run_ok(&[
        "eval",
        "--model",
        &ws.p("m_refit.json"),
        "--data",
        &ws.p("test.txt"),
    ]));
    assert!(eval["mean"].as_f64().unwrap().is_finite());
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let ws = Workspace::new();
    // Config error: bad selection method.
    let args = train_args(&ws, "m.json", &["--selection", "bogus"]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    assert_eq!(run(&args).status.code(), Some(2));

    // Config error: shrinkage outside (0, 1].
    let args = train_args(&ws, "m.json", &["--shrinkage", "1.5"]);
    let mut args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let pos = args.iter().position(|a| *a == "0.1").unwrap();
    args[pos] = "1.5";
    assert_eq!(run(&args).status.code(), Some(2));

    // Data error: missing file.
    let missing = ws.p("nope.txt");
    let out = run(&["eval", "--model", &missing, "--data", &missing]);
    assert_eq!(out.status.code(), Some(3));

    // Data error: malformed dataset token, message names line and column.
    std::fs::write(ws.path("bad.txt"), "0 2 1\n").unwrap();
    let args = ["train".to_string(),
        "--train".into(),
        ws.p("bad.txt"),
        "--valid".into(),
        ws.p("valid.txt"),
        "--model".into(),
        ws.p("m.json")];
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 1, column 3"), "{stderr}");
}

#[test]
fn model_version_mismatch_is_a_data_error() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    let text = std::fs::read_to_string(ws.path("m.json")).unwrap();
    std::fs::write(
        ws.path("m_future.json"),
        text.replace("\"format_version\":1", "\"format_version\":99"),
    )
    .unwrap();
    let out = run(&["eval", "--model", &ws.p("m_future.json"), "--data", &ws.p("test.txt")]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}

#[test]
fn baseline_flag_trains_a_single_tree_network() {
    let ws = Workspace::new();
    let args = train_args(
        &ws,
        "mb.json",
        &["--baseline-tree", "--test", &ws.p("test.txt")],
    );
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let payload = machine_json(&run_ok(&args));
    assert_eq!(payload["kind"], "single-tree-baseline");
    let pc = payload["pseudocount"].as_f64().unwrap();
    assert!([0.1, 0.5, 1.0, 2.0].contains(&pc));
    assert!(payload["test"]["mean"].as_f64().unwrap() > 5.0 * 0.5f64.ln());
}

#[test]
fn worker_count_does_not_change_the_model_file() {
    let ws = Workspace::new();
    for (model, workers) in [("w1.json", "1"), ("w3.json", "3")] {
        let args = train_args(&ws, model, &["--workers", workers]);
        let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
        run_ok(&args);
    }
    let a = std::fs::read_to_string(ws.path("w1.json")).unwrap();
    let b = std::fs::read_to_string(ws.path("w3.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn per_sample_output_matches_summary_mean() {
    let ws = Workspace::new();
    let args = train_args(&ws, "m.json", &[]);
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    run_ok(&args);
    let stdout = run_ok(&[
        "eval",
        "--model",
        &ws.p("m.json"),
        "--data",
        &ws.p("test.txt"),
        "--per-sample",
        &ws.p("lls.txt"),
    ]);
    let mean = machine_json(&stdout)["mean"].as_f64().unwrap();
    let lls: Vec<f64> = std::fs::read_to_string(ws.path("lls.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(lls.len(), 120);
    let recomputed = lls.iter().sum::<f64>() / lls.len() as f64;
    assert!((recomputed - mean).abs() < 1e-12);
}

#[test]
fn dataset_files_round_trip_through_save_and_load() {
    let ws = Workspace::new();
    let ds = synth::chain(60, 4, 0.25, 9);
    ds.save(ws.path("chain.txt")).unwrap();
    let back = lbarn::BinaryDataset::load(ws.path("chain.txt")).unwrap();
    assert_eq!(ds, back);
    assert!(Path::new(&ws.p("chain.txt")).exists());
}
