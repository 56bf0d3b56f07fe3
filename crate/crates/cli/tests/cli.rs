//! Small end-to-end runs of the `pricelab` binary: exit codes, config
//! merging, output manifests and replay.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_pricelab");

fn pricelab(args: &[&str], out: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn pricelab")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn payoff_matrix_writes_checksummed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("pm");
    let o = pricelab(&["payoff-matrix", "--k", "4"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["subcommand"], "payoff-matrix");
    let outputs = manifest["outputs"].as_array().unwrap();
    let paths: Vec<&str> = outputs
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    for want in ["A.csv", "B.csv", "report.json"] {
        assert!(paths.contains(&want), "{paths:?}");
    }
    let a = std::fs::read_to_string(dir.join("A.csv")).unwrap();
    assert_eq!(a.lines().count(), 5);
}

#[test]
fn json_format_replaces_csv_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("pm");
    let o = pricelab(&["payoff-matrix", "--k", "3", "--format", "json"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.join("matrices.json").exists());
    assert!(!dir.join("A.csv").exists());
}

#[test]
fn config_file_fills_unset_flags_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k": 5, "model": "logit"}"#).unwrap();
    let cfg = cfg.to_str().unwrap();

    let dir = tmp.path().join("from_config");
    let o = pricelab(&["payoff-matrix", "--config", cfg], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let params = &read_json(&dir.join("report.json"))["params"]["model"];
    assert_eq!(params["k"], 5);
    assert_eq!(params["model"], "logit");
    assert_eq!(params["tau"], 10.0);

    let dir = tmp.path().join("flag_wins");
    let o = pricelab(&["payoff-matrix", "--config", cfg, "--k", "3"], &dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        read_json(&dir.join("report.json"))["params"]["model"]["k"],
        3
    );
}

#[test]
fn unknown_config_keys_are_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"kk": 5}"#).unwrap();
    let o = pricelab(
        &["payoff-matrix", "--config", cfg.to_str().unwrap()],
        &tmp.path().join("x"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["payoff-matrix", "--tau", "3"],
        &[
            "uniform-bound",
            "--k",
            "5",
            "--rounds",
            "100",
            "--learner",
            "nonsense",
        ],
        &[
            "uniform-bound",
            "--k",
            "5",
            "--rounds",
            "100",
            "--learner",
            "static:7",
        ],
        &["payoff-matrix", "--k", "0"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let o = pricelab(args, &tmp.path().join(i.to_string()));
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    }
}

#[test]
fn large_runs_need_allow_large() {
    let tmp = tempfile::tempdir().unwrap();
    let o = pricelab(
        &["stackelberg-sweep", "--ks", "201", "--oracle-ks"],
        &tmp.path().join("sweep"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-large"), "{}", stderr(&o));

    let o = pricelab(
        &["uniform-bound", "--k", "5", "--rounds", "2000000"],
        &tmp.path().join("dyn"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-large"), "{}", stderr(&o));
}

#[test]
fn audit_reports_byte_offset_of_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let o = pricelab(
        &[
            "uniform-bound",
            "--k",
            "5",
            "--rounds",
            "200",
            "--stride",
            "1",
        ],
        &run,
    );
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let transcript = run.join("transcript.jsonl");

    let o = pricelab(
        &["audit", transcript.to_str().unwrap()],
        &tmp.path().join("audit_ok"),
    );
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    let manifest = read_json(&tmp.path().join("audit_ok/manifest.json"));
    assert_eq!(manifest["inputs"].as_array().unwrap().len(), 1);

    let text = std::fs::read_to_string(&transcript).unwrap();
    let first_newline = text.find('\n').unwrap();
    let second_newline = first_newline + 1 + text[first_newline + 1..].find('\n').unwrap();
    let mut corrupt = text[..second_newline].to_string();
    corrupt.push_str("\n{not json\n");
    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(&bad, corrupt).unwrap();
    let o = pricelab(
        &["audit", bad.to_str().unwrap()],
        &tmp.path().join("audit_bad"),
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    let offset: usize = err
        .split("at byte ")
        .nth(1)
        .and_then(|rest| rest.split(':').next())
        .and_then(|n| n.parse().ok())
        .unwrap_or_else(|| panic!("{err}"));
    // somewhere inside the corrupt line
    assert!(
        (second_newline + 1..second_newline + 11).contains(&offset),
        "{err}"
    );
}

#[test]
fn replay_reproduces_checksums_and_can_be_replayed() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("dom");
    let o = pricelab(&["dominance", "--ks", "20"], &run);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let first = tmp.path().join("replay1");
    let o = pricelab(
        &["replay", run.join("manifest.json").to_str().unwrap()],
        &first,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(first.join("rerun/report.json").exists());

    let o = pricelab(
        &["replay", first.join("manifest.json").to_str().unwrap()],
        &tmp.path().join("replay2"),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn replay_detects_tampered_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("pm");
    let o = pricelab(&["payoff-matrix", "--k", "3"], &run);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest_path = run.join("manifest.json");
    let mut manifest = read_json(&manifest_path);
    manifest["outputs"][0]["sha256"] = Value::from("00");
    std::fs::write(&manifest_path, serde_json::to_vec(&manifest).unwrap()).unwrap();

    let o = pricelab(
        &["replay", manifest_path.to_str().unwrap()],
        &tmp.path().join("replay"),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}
