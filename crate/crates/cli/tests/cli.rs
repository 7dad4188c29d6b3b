use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;

use condtree::io::save_joint;
use condtree::synth::random_joint;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("condtree").chain(args.iter().copied());
    let code = condtree_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Rows over binary `a`, `b` and class `y` drawn from a fixed pattern.
fn write_data(dir: &TempDir) -> PathBuf {
    let path = dir.path().join("data.csv");
    let mut text = String::from("a,b,c,y\n");
    for i in 0..60usize {
        let y = if i % 3 == 0 { "yes" } else { "no" };
        let a = (i * 7 % 5 < 2) as usize;
        let b = if i % 4 == 0 { 1 - a } else { a };
        let c = (i * 11 % 7 < 3) as usize ^ b;
        text.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    fs::write(&path, text).unwrap();
    path
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn learn_then_eval_on_two_features_is_exact() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("two.csv");
    let mut text = String::from("a,b,y\n");
    for i in 0..40usize {
        text.push_str(&format!("{},{},{}\n", i % 2, i * 3 % 5 % 2, ["u", "v", "w"][i % 3]));
    }
    fs::write(&data, text).unwrap();
    let model = dir.path().join("m.json");
    let (code, _, err) = run(&[
        "learn", "--input", p(&data), "--class", "y", "--alpha", "0", "--prune-eps", "-1", "--out", p(&model),
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = run(&["eval", "--model", p(&model), "--input", p(&data), "--metrics", "divergence"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!(v["divergence"]["weighted_divergence"].as_f64().unwrap().abs() < 1e-12);
    assert!(v.get("bounds").is_none());
}

#[test]
fn every_mode_learns_and_classifies() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let config = dir.path().join("cover.toml");
    fs::write(&config, "[[edge]]\nclasses = [\"yes\", \"no\"]\nfeatures = [\"a\", \"b\", \"c\"]\n").unwrap();
    let modes: [&[&str]; 4] = [
        &["--mode", "multinet"],
        &["--mode", "condtree"],
        &["--mode", "cutset", "--cutset", "a"],
        &["--mode", "simnet", "--config", p(&config)],
    ];
    for extra in modes {
        let model = dir.path().join("m.json");
        let mut args = vec!["learn", "--input", p(&data), "--class", "y", "--out", p(&model)];
        args.extend_from_slice(extra);
        let (code, _, err) = run(&args);
        assert_eq!(code, 0, "{extra:?}: {err}");
        let (code, out, err) = run(&["classify", "--model", p(&model), "--input", p(&data), "--report-posteriors"]);
        assert_eq!(code, 0, "{extra:?}: {err}");
        assert_eq!(out.lines().count(), 61);
        assert!(out.starts_with("row,predicted,p(no),p(yes)") || out.starts_with("row,predicted,p(yes),p(no)"));
        assert!(err.starts_with("accuracy: "));
    }
}

#[test]
fn model_files_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        assert_eq!(run(&["learn", "--input", p(&data), "--class", "y", "--out", p(out)]).0, 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (s1, s2) = (dir.path().join("s1.csv"), dir.path().join("s2.csv"));
    for out in [&s1, &s2] {
        assert_eq!(run(&["sample", "--model", p(&a), "--n", "50", "--seed", "9", "--out", p(out)]).0, 0);
    }
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s2).unwrap());
}

#[test]
fn oracle_gap_on_a_reference_table() {
    let dir = TempDir::new().unwrap();
    let truth = dir.path().join("truth.json");
    save_joint(&truth, &random_joint(&[2, 2, 2, 2, 2], 2, 5).unwrap()).unwrap();
    let (code, out, err) = run(&["oracle", "--truth", p(&truth)]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!(v["verdict"]["gap"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn eval_against_reference_table() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let model = dir.path().join("m.json");
    assert_eq!(run(&["learn", "--input", p(&data), "--class", "y", "--out", p(&model)]).0, 0);
    let report = dir.path().join("r.json");
    let (code, out, _) = run(&["eval", "--model", p(&model), "--input", p(&data), "--out", p(&report)]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(&report).unwrap(), out);
    let v = json(&out);
    let acc = &v["accuracy"];
    assert!(acc["empirical_accuracy"].as_f64().unwrap() > 0.5);
    assert!(v["bounds"]["hellman_raviv_bound"].as_f64().unwrap() >= v["bounds"]["truth_bayes_error"].as_f64().unwrap());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["learn", "--bogus"]).0, 1);
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["eval", "--model", "m.json"]).0, 1);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn size_cap_exits_three() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let (code, _, err) = run(&["oracle", "--input", p(&data), "--class", "y", "--max-vars", "2"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn data_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let (code, _, err) = run(&["learn", "--input", p(&data), "--class", "nope", "--out", p(&dir.path().join("m"))]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"format_version\": 999}").unwrap();
    assert_eq!(run(&["classify", "--model", p(&bad), "--input", p(&data)]).0, 2);
}

#[test]
fn advise_is_labeled_advisory() {
    let dir = TempDir::new().unwrap();
    let data = write_data(&dir);
    let config = dir.path().join("cover.toml");
    fs::write(&config, "[[edge]]\nclasses = [\"yes\", \"no\"]\nfeatures = [\"a\", \"b\"]\n").unwrap();
    let (code, out, err) = run(&["advise", "--input", p(&data), "--class", "y", "--config", p(&config), "--threshold", "10"]);
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert!(v["advisory"].is_string());
    assert_eq!(v["edges"][0]["weak_features"].as_array().unwrap().len(), 3);
}

#[test]
fn weak_transitivity_scan_on_a_coarse_grid() {
    let (code, out, _) = run(&["oracle", "--scan-weak-transitivity", "--step", "0.25"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["weak_transitivity"]["violator_count"], 0);
}
