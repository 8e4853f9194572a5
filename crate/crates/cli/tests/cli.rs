//! End-to-end command-line tests over real files in a temp directory.

use std::fs;
use std::path::{Path, PathBuf};

use evfuse_cli::cli::run;

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> TempDir {
        let dir = std::env::temp_dir().join(format!(
            "evfuse-cli-test-{}-{tag}",
            std::process::id()
        ));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn evfuse(args: &[&str]) -> i32 {
    run(std::iter::once("evfuse".to_string()).chain(args.iter().map(|s| s.to_string())))
}

#[test]
fn couple_dumps_the_blended_table() {
    let dir = TempDir::new("couple");
    fs::write(dir.path("marginals.txt"), "0.5, 0.5\n0.6, 0.4\n").unwrap();
    let code = evfuse(&[
        "couple",
        "--marginals",
        &dir.arg("marginals.txt"),
        "--rho",
        "1",
        "--out",
        &dir.arg("table.csv"),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path("table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i0,i1,p"));
    let cells: Vec<f64> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    let expected = [0.5, 0.0, 0.1, 0.4];
    assert_eq!(cells.len(), 4);
    for (c, e) in cells.iter().zip(&expected) {
        assert!((c - e).abs() < 1e-12, "{c} vs {e}");
    }
}

#[test]
fn couple_rejects_bad_marginals() {
    let dir = TempDir::new("couple-bad");
    fs::write(dir.path("marginals.txt"), "0.5, 0.6\n0.6, 0.4\n").unwrap();
    let code = evfuse(&[
        "couple",
        "--marginals",
        &dir.arg("marginals.txt"),
        "--rho",
        "0.5",
        "--out",
        &dir.arg("table.csv"),
    ]);
    assert_eq!(code, 2);
    // out-of-range rho is a usage error
    fs::write(dir.path("ok.txt"), "0.5, 0.5\n0.6, 0.4\n").unwrap();
    let code = evfuse(&[
        "couple",
        "--marginals",
        &dir.arg("ok.txt"),
        "--rho",
        "1.5",
        "--out",
        &dir.arg("table.csv"),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn fuse_with_missing_defs_exits_one_and_names_the_path() {
    let dir = TempDir::new("missing-defs");
    let code = evfuse(&[
        "fuse",
        "--defs",
        &dir.arg("no-such-file.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--out",
        &dir.arg("out.csv"),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(evfuse(&["no-such-command"]), 1);
    assert_eq!(evfuse(&["fuse"]), 1); // missing required flags
    assert_eq!(evfuse(&["--help"]), 0);
}

#[test]
fn simulate_fuse_eval_pipeline() {
    let dir = TempDir::new("pipeline");
    // a small copy of the shipped scenario
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data("scenario_correlated.json")).unwrap())
            .unwrap();
    cfg["n_samples"] = serde_json::json!(200);
    fs::write(dir.path("scenario.json"), serde_json::to_string(&cfg).unwrap()).unwrap();

    let code = evfuse(&[
        "simulate",
        "--config",
        &dir.arg("scenario.json"),
        "--out",
        &dir.arg("reports.json"),
    ]);
    assert_eq!(code, 0);
    assert!(dir.path("reports.labels.csv").exists());
    assert!(dir.path("reports.train.csv").exists());

    // fixed-rho fusion over the generated reports
    let code = evfuse(&[
        "fuse",
        "--defs",
        &data("dataset1.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--rho",
        "0.7",
        "--out",
        &dir.arg("fused.csv"),
    ]);
    assert_eq!(code, 0);
    let fused = fs::read_to_string(dir.path("fused.csv")).unwrap();
    let mut lines = fused.lines();
    assert_eq!(
        lines.next(),
        Some("sample_index,p_o1,p_o2,p_c3,p_none,predicted")
    );
    assert_eq!(lines.count(), 200);

    // estimated-rho evaluation with run aggregation
    let code = evfuse(&[
        "eval",
        "--defs",
        &data("dataset1.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--labels",
        &dir.arg("reports.labels.csv"),
        "--method",
        "proposed",
        "--estimate-rho",
        "pearson",
        "--train",
        &dir.arg("reports.train.csv"),
        "--runs",
        "10",
        "--metrics-out",
        &dir.arg("metrics.csv"),
        "--roc-out",
        &dir.arg("roc.csv"),
    ]);
    assert_eq!(code, 0);
    let metrics = fs::read_to_string(dir.path("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert!(lines[0].starts_with("run,accuracy,auc_o1,auc_o2,auc_c3,auc_none"));
    assert_eq!(lines.len(), 1 + 10 + 2); // header, runs, mean, stddev
    assert!(lines[11].starts_with("mean,"));
    assert!(lines[12].starts_with("stddev,"));
    // deterministic pipeline: identical runs, so the spread is only
    // aggregation rounding dust
    let stddev_acc: f64 = lines[12].split(',').nth(1).unwrap().parse().unwrap();
    assert!(stddev_acc.abs() < 1e-12);

    let roc = fs::read_to_string(dir.path("roc.csv")).unwrap();
    assert!(roc.starts_with("run,class,fpr,tpr\n"));
    assert!(roc.lines().count() > 10);

    // all three methods run end to end
    for method in ["independent", "dempster"] {
        let code = evfuse(&[
            "eval",
            "--defs",
            &data("dataset1.defs"),
            "--reports",
            &dir.arg("reports.json"),
            "--labels",
            &dir.arg("reports.labels.csv"),
            "--method",
            method,
            "--metrics-out",
            &dir.arg("metrics2.csv"),
            "--roc-out",
            &dir.arg("roc2.csv"),
        ]);
        assert_eq!(code, 0, "method {method}");
    }
}

#[test]
fn eval_rejects_mismatched_labels() {
    let dir = TempDir::new("bad-labels");
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data("scenario_correlated.json")).unwrap())
            .unwrap();
    cfg["n_samples"] = serde_json::json!(20);
    fs::write(dir.path("scenario.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(
        evfuse(&[
            "simulate",
            "--config",
            &dir.arg("scenario.json"),
            "--out",
            &dir.arg("reports.json"),
        ]),
        0
    );
    fs::write(
        dir.path("bad.labels.csv"),
        "sample_index,class_label\n0,ghost\n",
    )
    .unwrap();
    let code = evfuse(&[
        "eval",
        "--defs",
        &data("dataset1.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--labels",
        &dir.arg("bad.labels.csv"),
        "--method",
        "independent",
        "--metrics-out",
        &dir.arg("m.csv"),
        "--roc-out",
        &dir.arg("r.csv"),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn calibrate_writes_the_fitted_sigmoid() {
    let dir = TempDir::new("calibrate");
    let mut scores = String::new();
    let mut labels = String::new();
    for i in 1..=60 {
        let s = i as f64 / 10.0;
        scores.push_str(&format!("{s}\n-{s}\n"));
        labels.push_str("1\n0\n");
    }
    fs::write(dir.path("scores.txt"), scores).unwrap();
    fs::write(dir.path("labels.txt"), labels).unwrap();
    let code = evfuse(&[
        "calibrate",
        "--scores",
        &dir.arg("scores.txt"),
        "--labels",
        &dir.arg("labels.txt"),
        "--out",
        &dir.arg("platt.json"),
    ]);
    assert_eq!(code, 0);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path("platt.json")).unwrap()).unwrap();
    assert!(model["a"].as_f64().unwrap() < 0.0);
    assert!(model["b"].as_f64().unwrap().abs() < 0.5);

    // single-class labels are a data error
    fs::write(dir.path("ones.txt"), "1\n1\n1\n").unwrap();
    fs::write(dir.path("s3.txt"), "0.1\n0.2\n0.3\n").unwrap();
    let code = evfuse(&[
        "calibrate",
        "--scores",
        &dir.arg("s3.txt"),
        "--labels",
        &dir.arg("ones.txt"),
        "--out",
        &dir.arg("p.json"),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn pairwise_mode_needs_two_event_objects() {
    let dir = TempDir::new("pairwise");
    fs::write(
        dir.path("pair.defs"),
        "sensor s1\nsensor s2\nfeature f from s1\nfeature g from s2\n\
         event a1 on f: [0, 1)\nevent a2 on f: [1, 2)\n\
         event b1 on g: [0, 1)\nevent b2 on g: [1, 2)\n\
         object o1 := a1 and b1\nobject o2 := a2 or b2\n",
    )
    .unwrap();
    let reports = serde_json::json!({
        "spaces": [
            {"feature_id": "f", "sensor_id": "s1", "events": [
                {"label": "a1", "range": [0.0, 1.0]}, {"label": "a2", "range": [1.0, 2.0]}]},
            {"feature_id": "g", "sensor_id": "s2", "events": [
                {"label": "b1", "range": [0.0, 1.0]}, {"label": "b2", "range": [1.0, 2.0]}]}
        ],
        "samples": [
            {"f": [0.5, 0.5], "g": [0.6, 0.4]},
            {"f": [0.2, 0.7], "g": [0.3, 0.6]}
        ]
    });
    fs::write(dir.path("reports.json"), reports.to_string()).unwrap();
    let code = evfuse(&[
        "fuse",
        "--defs",
        &dir.arg("pair.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--rho",
        "0.5",
        "--mode",
        "pairwise",
        "--out",
        &dir.arg("fused.csv"),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(dir.path("fused.csv")).unwrap();
    assert_eq!(text.lines().count(), 3);

    // an object that is not a plain two-event combination fails in
    // pairwise mode but works in global mode
    fs::write(
        dir.path("deep.defs"),
        "sensor s1\nsensor s2\nfeature f from s1\nfeature g from s2\n\
         event a1 on f: [0, 1)\nevent a2 on f: [1, 2)\n\
         event b1 on g: [0, 1)\nevent b2 on g: [1, 2)\n\
         object o1 := a1 and (b1 or b2)\n",
    )
    .unwrap();
    let code = evfuse(&[
        "fuse",
        "--defs",
        &dir.arg("deep.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--mode",
        "pairwise",
        "--out",
        &dir.arg("fused2.csv"),
    ]);
    assert_eq!(code, 2);
    let code = evfuse(&[
        "fuse",
        "--defs",
        &dir.arg("deep.defs"),
        "--reports",
        &dir.arg("reports.json"),
        "--mode",
        "global",
        "--out",
        &dir.arg("fused3.csv"),
    ]);
    assert_eq!(code, 0);
}

#[test]
fn dataset2_defs_parse_and_warn_on_overlap() {
    // the speed events overlap by design; parsing must still succeed
    let code = evfuse(&[
        "fuse",
        "--defs",
        &data("dataset2.defs"),
        "--reports",
        &data("dataset2.defs"), // wrong format on purpose
        "--out",
        "/dev/null",
    ]);
    assert_eq!(code, 2); // defs fine, reports file is not JSON
}
