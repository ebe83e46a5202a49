//! Integration tests that drive the `openalx` binary end to end: exit-code
//! contract, cache resume, report/compare outputs, index export, and the
//! config-file/flag precedence rules.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_openalx");

/// Isolated working directory + cache root for one test.
struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Env {
        Env {
            dir: TempDir::new().unwrap(),
        }
    }

    fn cache(&self) -> PathBuf {
        self.dir.path().join("cache")
    }

    fn cmd(&self, args: &[&str]) -> Output {
        Command::new(BIN)
            .args(args)
            .current_dir(self.dir.path())
            .env("OPENALX_CACHE_DIR", self.cache())
            .output()
            .expect("binary spawns")
    }
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small fast grid shared by most tests.
const RUN_ARGS: &[&str] = &[
    "run",
    "--dataset",
    "synth-xor",
    "--samplers",
    "margin,random",
    "--folds",
    "3",
    "--iterations",
    "3",
    "--seed",
    "5",
    "--override-plausibility",
];

/// The same experiment identity for read-side verbs.
const KEY_ARGS: &[&str] = &[
    "--dataset",
    "synth-xor",
    "--folds",
    "3",
    "--iterations",
    "3",
    "--seed",
    "5",
];

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.clone(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn run_happy_path_writes_manifest_and_cells() {
    let env = Env::new();
    let out = env.cmd(RUN_ARGS);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let hash = stdout(&out).trim().to_string();
    assert_eq!(hash.len(), 16, "stdout should be the config hash: {hash:?}");
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));

    let run_dir = env.cache().join(&hash);
    assert!(run_dir.join("manifest.json").is_file());
    let cells: Vec<_> = std::fs::read_dir(run_dir.join("cells"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(cells.len(), 6, "2 samplers x 3 folds: {cells:?}");
    for kind in ["margin", "random"] {
        for fold in 0..3 {
            assert!(cells.contains(&format!("{kind}-f{fold}.jsonl")));
        }
    }

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config_hash"], serde_json::json!(hash));
    assert_eq!(manifest["config"]["dataset_id"], serde_json::json!("synth-xor"));
    assert!(manifest["cells"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["status"] == serde_json::json!("ok")));
}

#[test]
fn unknown_sampler_exits_1_listing_valid_names() {
    let env = Env::new();
    let out = env.cmd(&[
        "run",
        "--dataset",
        "synth-xor",
        "--samplers",
        "margim",
        "--override-plausibility",
    ]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("margim"), "{err}");
    for valid in ["random", "margin", "kcenter", "wkmeans"] {
        assert!(err.contains(valid), "valid list missing {valid}: {err}");
    }
}

#[test]
fn unknown_dataset_exits_1_listing_registered() {
    let env = Env::new();
    let out = env.cmd(&["run", "--dataset", "nope"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("nope") && err.contains("synth-blobs"), "{err}");
}

#[test]
fn plausibility_gate_on_run() {
    let env = Env::new();
    // synth-xor has n = 2000 < 10000: refused without the override.
    let out = env.cmd(&[
        "run",
        "--dataset",
        "synth-xor",
        "--samplers",
        "random",
        "--folds",
        "2",
        "--iterations",
        "1",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("10000"), "{}", stderr(&out));
    assert!(
        stderr(&out).contains("--override-plausibility"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn validate_reports_plausibility() {
    let env = Env::new();
    let small = env.cmd(&["validate", "--dataset", "synth-xor"]);
    assert_eq!(code(&small), 1);
    assert!(stdout(&small).contains("fail"), "{}", stdout(&small));

    let overridden = env.cmd(&[
        "validate",
        "--dataset",
        "synth-xor",
        "--override-plausibility",
    ]);
    assert_eq!(code(&overridden), 0);
    assert!(
        stdout(&overridden).contains("pass (overridden)"),
        "{}",
        stdout(&overridden)
    );

    let big = env.cmd(&["validate", "--dataset", "synth-blobs"]);
    assert_eq!(code(&big), 0);
    assert!(stdout(&big).contains("pass"), "{}", stdout(&big));

    let unknown = env.cmd(&["validate", "--dataset", "missing"]);
    assert_eq!(code(&unknown), 1);
}

#[test]
fn list_datasets_prints_shape_rows() {
    let env = Env::new();
    let out = env.cmd(&["list-datasets"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("synth-blobs: 10000, 2, 2/0, 0.50/0.50"), "{text}");
    assert!(text.contains("synth-rgb: 10000, 2, 3/0, 0.75/0.25"), "{text}");
    assert!(text.contains("synth-xor: 2000, 2, 2/0, 0.50/0.50"), "{text}");
}

#[test]
fn list_datasets_discovers_csv_schema_pairs() {
    let env = Env::new();
    let data = env.dir.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(
        data.join("mini.csv"),
        "f0,f1,class\n1.0,a,yes\n2.0,b,no\n3.0,a,yes\n4.0,b,no\n",
    )
    .unwrap();
    std::fs::write(
        data.join("mini.json"),
        serde_json::json!({
            "dataset_id": "mini",
            "label": "class",
            "features": [
                {"name": "f0", "kind": "continuous"},
                {"name": "f1", "kind": "categorical"},
            ],
        })
        .to_string(),
    )
    .unwrap();

    let out = env.cmd(&["list-datasets", "--data-dir", data.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(
        stdout(&out).contains("mini: 4, 2, 1/1, 0.50/0.50"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn interrupted_run_resumes_from_cache_byte_identically() {
    let env = Env::new();
    let first = env.cmd(RUN_ARGS);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    let hash = stdout(&first).trim().to_string();
    let run_dir = env.cache().join(&hash);
    let before = read_tree(&run_dir);

    // Simulate an interrupted grid: one cell and the manifest are missing.
    std::fs::remove_file(run_dir.join("cells/margin-f1.jsonl")).unwrap();
    std::fs::remove_file(run_dir.join("manifest.json")).unwrap();

    let second = env.cmd(RUN_ARGS);
    assert_eq!(code(&second), 0, "stderr: {}", stderr(&second));
    assert_eq!(stdout(&second).trim(), hash);
    let after = read_tree(&run_dir);
    assert_eq!(before.len(), after.len());
    for ((pa, ba), (pb, bb)) in before.iter().zip(after.iter()) {
        assert_eq!(pa, pb);
        assert_eq!(ba, bb, "bytes changed for {}", pa.display());
    }
}

#[test]
fn report_writes_curves_and_plots_idempotently() {
    let env = Env::new();

    // Reporting before any run is a setup error.
    let mut report_args = vec!["report"];
    report_args.extend_from_slice(KEY_ARGS);
    let premature = env.cmd(&report_args);
    assert_eq!(code(&premature), 1);

    let ran = env.cmd(RUN_ARGS);
    assert_eq!(code(&ran), 0, "stderr: {}", stderr(&ran));

    let first = env.cmd(&report_args);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    let out_dir = PathBuf::from(stdout(&first).trim());
    let names = [
        "Accuracy",
        "F-Score",
        "Agreement",
        "Contradictions",
        "Hard-Exploration",
        "Top-Exploration",
        "Violation",
    ];
    for name in names {
        assert!(out_dir.join("curves").join(format!("{name}.csv")).is_file());
        assert!(out_dir.join("plots").join(format!("{name}.svg")).is_file());
    }

    // Curve files carry the documented header and rows per sampler and
    // iteration (2 samplers x 4 iteration points).
    let acc = out_dir.join("curves/Accuracy.csv");
    let mut rdr = csv::Reader::from_path(&acc).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        &csv::StringRecord::from(vec!["sampler", "iteration", "mean", "p10", "p90"])
    );
    assert_eq!(rdr.records().count(), 2 * 4);

    let before = read_tree(&out_dir);
    let second = env.cmd(&report_args);
    assert_eq!(code(&second), 0);
    assert_eq!(before, read_tree(&out_dir), "report rerun changed bytes");
}

#[test]
fn compare_prints_matrix_in_all_formats() {
    let env = Env::new();
    let ran = env.cmd(RUN_ARGS);
    assert_eq!(code(&ran), 0, "stderr: {}", stderr(&ran));

    let mut table_args = vec!["compare"];
    table_args.extend_from_slice(KEY_ARGS);
    let table = env.cmd(&table_args);
    assert_eq!(code(&table), 0, "stderr: {}", stderr(&table));
    let text = stdout(&table);
    assert!(text.contains("margin") && text.contains("random"), "{text}");
    assert!(text.contains('*'), "best marker missing: {text}");
    assert!(text.contains("synth-xor"), "{text}");

    let mut csv_args = table_args.clone();
    csv_args.extend_from_slice(&["--format", "csv"]);
    let csv_out = env.cmd(&csv_args);
    assert_eq!(code(&csv_out), 0);
    let mut rdr = csv::Reader::from_reader(csv_out.stdout.as_slice());
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers,
        csv::StringRecord::from(vec!["dataset", "margin", "random", "best"])
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "synth-xor");

    let mut json_args = table_args.clone();
    json_args.extend_from_slice(&["--format", "json"]);
    let json_out = env.cmd(&json_args);
    assert_eq!(code(&json_out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json_out)).unwrap();
    assert_eq!(v["dataset"], serde_json::json!("synth-xor"));
    assert_eq!(v["metric"], serde_json::json!("Accuracy"));
    let summary = v["summary"].as_array().unwrap();
    assert_eq!(summary.len(), 2);
    // The best marker must sit on the maximal mean.
    let best_mean = summary
        .iter()
        .map(|c| c["mean"].as_f64().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    for cell in summary {
        assert_eq!(
            cell["best"].as_bool().unwrap(),
            cell["mean"].as_f64().unwrap() == best_mean
        );
    }

    // The CSV row text matches the JSON numbers ("0.723 ± 0.028" style).
    for cell in summary {
        let rendered = format!(
            "{:.3} ± {:.3}",
            cell["mean"].as_f64().unwrap(),
            cell["half_spread"].as_f64().unwrap()
        );
        assert!(
            rows[0].iter().any(|f| f == rendered),
            "csv row missing {rendered}: {:?}",
            rows[0]
        );
    }
}

#[test]
fn compare_rejects_single_sampler_and_unknown_metric() {
    let env = Env::new();
    let ran = env.cmd(RUN_ARGS);
    assert_eq!(code(&ran), 0);

    let mut one = vec!["compare"];
    one.extend_from_slice(KEY_ARGS);
    one.extend_from_slice(&["--samplers", "margin"]);
    let out = env.cmd(&one);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("at least two"), "{}", stderr(&out));

    let mut bad = vec!["compare"];
    bad.extend_from_slice(KEY_ARGS);
    bad.extend_from_slice(&["--metric", "Accuracyy"]);
    let out = env.cmd(&bad);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("Hard-Exploration"),
        "valid metric list missing: {}",
        stderr(&out)
    );
}

#[test]
fn compare_on_mismatched_grids_exits_1() {
    let env = Env::new();
    let ran = env.cmd(RUN_ARGS);
    assert_eq!(code(&ran), 0);
    // Only margin/random exist in the cache; asking for kcenter gives it
    // zero usable folds, which cannot be aggregated.
    let mut args = vec!["compare"];
    args.extend_from_slice(KEY_ARGS);
    args.extend_from_slice(&["--samplers", "margin,kcenter"]);
    let out = env.cmd(&args);
    assert_eq!(code(&out), 1, "stdout: {}", stdout(&out));
}

#[test]
fn export_indices_round_trips() {
    let env = Env::new();
    let out_path = env.dir.path().join("indices.json");
    let mut args = vec!["export-indices"];
    args.extend_from_slice(KEY_ARGS);
    let out_str = out_path.to_str().unwrap().to_string();
    args.extend_from_slice(&["--out", &out_str]);
    let out = env.cmd(&args);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let ic = openalx_core::data::load_indices(&out_path).expect("exported file loads");
    assert_eq!(ic.dataset_id, "synth-xor");
    assert_eq!(ic.seed, 5);
    assert_eq!(ic.folds.len(), 3);

    // The export is the exact canonical index file the cache holds.
    let cached = env.cache().join("indices/synth-xor-s5-f3-t0.2-i0.001.json");
    assert_eq!(
        std::fs::read(&cached).unwrap(),
        std::fs::read(&out_path).unwrap()
    );
}

#[test]
fn config_file_fills_values_and_flags_override() {
    let env = Env::new();
    let cfg = env.dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "dataset_id": "synth-xor",
            "folds": 3,
            "iterations": 2,
            "seed": 9,
        })
        .to_string(),
    )
    .unwrap();
    let cfg_str = cfg.to_str().unwrap().to_string();

    let out = env.cmd(&[
        "run",
        "--config",
        &cfg_str,
        "--samplers",
        "random",
        "--iterations",
        "3",
        "--override-plausibility",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let hash = stdout(&out).trim().to_string();
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(env.cache().join(&hash).join("manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["config"]["dataset_id"], serde_json::json!("synth-xor"));
    assert_eq!(manifest["config"]["folds"], serde_json::json!(3));
    assert_eq!(manifest["config"]["seed"], serde_json::json!(9));
    // Explicit flag beats the file value.
    assert_eq!(manifest["config"]["iterations"], serde_json::json!(3));

    // Unknown keys in the file are rejected, not silently ignored.
    let bad = env.dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dataset": "synth-xor"}"#).unwrap();
    let bad_str = bad.to_str().unwrap().to_string();
    let out = env.cmd(&["run", "--config", &bad_str, "--override-plausibility"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let env = Env::new();
    assert_eq!(code(&env.cmd(&["run", "--bogus-flag"])), 1);
    assert_eq!(code(&env.cmd(&[])), 1);
    assert_eq!(code(&env.cmd(&["frobnicate"])), 1);

    let help = env.cmd(&["--help"]);
    assert_eq!(code(&help), 0);
    for verb in [
        "run",
        "compare",
        "report",
        "export-indices",
        "list-datasets",
        "validate",
    ] {
        assert!(stdout(&help).contains(verb), "{}", stdout(&help));
    }
    assert_eq!(code(&env.cmd(&["--version"])), 0);
}
