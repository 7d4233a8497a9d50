use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn recourse(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recourse"))
        .args(args)
        .current_dir(cwd)
        .env_remove(recourse_cli::DATA_DIR_ENV)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Small cohort plus a quick model in `dir`.
fn pipeline(dir: &Path) {
    for args in [
        &["synth", "--n", "400", "--seed", "3", "--out", "data"][..],
        &["train", "--data", "data", "--n-trees", "40", "--folds", "3", "--out", "model"],
        &["evaluate", "--data", "data", "--model", "model/model.json", "--n-boot", "100", "--out", "model"],
    ] {
        let out = recourse(args, dir);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

fn with<'a>(base: &[&'a str], extra: &[&'a str]) -> Vec<&'a str> {
    [base, extra].concat()
}

fn first_id(dir: &Path) -> String {
    let csv = std::fs::read_to_string(dir.join("data/cohort.csv")).unwrap();
    csv.lines().nth(1).unwrap().split(',').next().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&recourse(&["--help"], tmp.path())), 0);
    assert_eq!(code(&recourse(&["--version"], tmp.path())), 0);
    assert_eq!(code(&recourse(&["explain", "--help"], tmp.path())), 0);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&recourse(&["train", "--bogus"], dir)), 1);
    assert_eq!(code(&recourse(&[], dir)), 1);
    assert_eq!(code(&recourse(&["train", "--data", "missing", "--out", "m"], dir)), 2);

    pipeline(dir);
    let id = first_id(dir);
    let base = ["explain", "--data", "data", "--model", "model/model.json", "--row", &id, "--out", "x/r.json"];

    assert_eq!(code(&recourse(&with(&base, &["--p-min", "0.5", "--p-max", "0.5"]), dir)), 1);
    assert_eq!(code(&recourse(&base, dir)), 1, "no band edge without --eval");
    assert_eq!(code(&recourse(&with(&base, &["--p-max", "0.3", "--fix", "nope"]), dir)), 1);
    assert_eq!(code(&recourse(&with(&base, &["--p-max", "0.3", "--k", "0"]), dir)), 1);
    assert_eq!(code(&recourse(&with(&base, &["--p-max", "0.3", "--threads", "0"]), dir)), 1);

    let missing = ["explain", "--data", "data", "--model", "nope.json", "--row", &id, "--p-max", "0.3", "--out", "x/r.json"];
    assert_eq!(code(&recourse(&missing, dir)), 2);
    let unknown_row = ["explain", "--data", "data", "--model", "model/model.json", "--row", "ZZZ", "--p-max", "0.3", "--out", "x/r.json"];
    assert_eq!(code(&recourse(&unknown_row, dir)), 2);

    // an empty band above the model's reach: nothing can be found
    let none = with(&base, &["--p-min", "0.999999", "--p-max", "1", "--generations", "2", "--population", "4"]);
    let out = recourse(&none, dir);
    assert_eq!(code(&out), recourse_cli::EXIT_NO_COUNTERFACTUAL, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&dir.join("x/r.json"))["stage_used"], "none");

    let ok = recourse(&with(&base, &["--eval", "model/eval.json", "--export", "x/export.json"]), dir);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report = read_json(&dir.join("x/r.json"));
    assert!(report.get("timings_ms").is_none());
    let export = read_json(&dir.join("x/export.json"));
    assert_eq!(export.as_array().unwrap().len(), report["counterfactuals"].as_array().unwrap().len());
}

#[test]
fn outputs_and_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline(dir);
    for f in ["cohort.csv", "schema.json", "split.json", "timelines.jsonl", "matching.json", "manifest.synth.json"] {
        assert!(dir.join("data").join(f).exists(), "{f}");
    }
    for f in ["model.json", "cv.json", "eval.json", "roc.csv", "importance.csv", "manifest.train.json"] {
        assert!(dir.join("model").join(f).exists(), "{f}");
    }
    let m = read_json(&dir.join("model/manifest.evaluate.json"));
    assert_eq!(m["subcommand"], "evaluate");
    assert_eq!(m["seeds"].as_object().map(|s| s.is_empty()), Some(false));
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert!(outputs.iter().any(|p| p.ends_with("eval.json")));
    let eval = read_json(&dir.join("model/eval.json"));
    let auroc = eval["auroc"].as_f64().unwrap();
    assert!(eval["ci_low"].as_f64().unwrap() <= auroc && auroc <= eval["ci_high"].as_f64().unwrap());
    assert_eq!(eval["threshold_split"], "train");

    let args = ["evaluate", "--data", "data", "--model", "model/model.json", "--n-boot", "100", "--threshold-split", "test", "--out", "on_test"];
    assert_eq!(code(&recourse(&args, dir)), 0);
    assert_eq!(read_json(&dir.join("on_test/eval.json"))["threshold_split"], "test");
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("synth.json"), r#"{"n": 300, "seed": 9, "match_ratio": 0, "out": "ignored"}"#).unwrap();
    let out = recourse(&["synth", "--config", "synth.json", "--out", "data"], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.join("ignored").exists());
    let m = read_json(&dir.join("data/manifest.synth.json"));
    let argv: Vec<&str> = m["argv"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert!(!argv.contains(&"--config"));
    assert!(argv.windows(2).any(|w| w == ["--n", "300"]));
    assert!(m["config_file"]["sha256"].is_string());
    let rows = std::fs::read_to_string(dir.join("data/cohort.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 300);
}

#[test]
fn data_dir_variable_sets_the_base() {
    let tmp = tempfile::tempdir().unwrap();
    let elsewhere = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_recourse"))
        .args(["synth", "--n", "200", "--match-ratio", "0", "--out", "data"])
        .current_dir(elsewhere.path())
        .env(recourse_cli::DATA_DIR_ENV, tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(tmp.path().join("data/cohort.csv").exists());
    assert!(!elsewhere.path().join("data").exists());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let d = format!("t{threads}");
        for args in [
            vec!["synth", "--n", "300", "--seed", "5", "--out", "data"],
            vec!["train", "--data", "data", "--n-trees", "30", "--folds", "3", "--out", "model"],
        ] {
            let mut a = vec!["--threads", threads];
            a.extend(args);
            let sub = dir.join(&d);
            std::fs::create_dir_all(&sub).unwrap();
            assert_eq!(code(&recourse(&a, &sub)), 0);
        }
        files.push(
            ["data/cohort.csv", "data/split.json", "model/model.json", "model/cv.json"]
                .map(|f| std::fs::read(dir.join(&d).join(f)).unwrap()),
        );
    }
    assert!(files[0] == files[1]);
}
