use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dres_core::data::{csv_io, dmat};
use dres_core::synthetic::{regions, RegionParams};

fn dres(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dres"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Two-view region data as DMAT files plus labels.csv.
fn write_dataset(dir: &Path) -> (Vec<PathBuf>, PathBuf) {
    let data = regions(
        &RegionParams {
            instances: 150,
            views: 2,
            ..RegionParams::default()
        },
        4,
    )
    .unwrap();
    let views: Vec<PathBuf> = data
        .views()
        .iter()
        .map(|v| {
            let p = dir.join(format!("{}.dmat", v.name()));
            dmat::write(v, &p).unwrap();
            p
        })
        .collect();
    let labels = dir.join("labels.csv");
    csv_io::write_labels(data.ids(), data.labels(), &labels).unwrap();
    (views, labels)
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn version_lists_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dres(&["--version"], tmp.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("dres 0."));
    assert!(text.contains("dmat format 1"));
    assert!(text.contains("model archive format 1"));
}

#[test]
fn usage_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&dres(&["frobnicate"], tmp.path())), 1);
    assert_eq!(code(&dres(&[], tmp.path())), 1);
    assert_eq!(code(&dres(&["evaluate", "--folds", "many"], tmp.path())), 1);
    let out = dres(&["evaluate", "--methods", "knora_x"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("knora_x"));
    assert_eq!(code(&dres(&["--help"], tmp.path())), 0);
}

#[test]
fn data_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dres(&["validate", "--views", "missing.dmat", "--labels", "y.csv"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.dmat"));

    fs::write(tmp.path().join("bad.toml"), "folds = 1\n").unwrap();
    assert_eq!(code(&dres(&["validate", "--config", "bad.toml"], tmp.path())), 2);
    fs::write(tmp.path().join("typo.toml"), "fold = 3\n").unwrap();
    assert_eq!(code(&dres(&["validate", "--config", "typo.toml"], tmp.path())), 2);

    fs::write(tmp.path().join("junk.dmat"), b"NOPE0000000000000000").unwrap();
    fs::write(tmp.path().join("y.csv"), "id,label\na,0\n").unwrap();
    let out = dres(&["validate", "--views", "junk.dmat", "--labels", "y.csv"], tmp.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 0"));
}

#[test]
fn hardness_has_one_column_per_view() {
    let tmp = tempfile::tempdir().unwrap();
    let (views, labels) = write_dataset(tmp.path());
    let out = dres(
        &[
            "hardness",
            "--views",
            views[0].to_str().unwrap(),
            views[1].to_str().unwrap(),
            "--labels",
            labels.to_str().unwrap(),
            "--k",
            "5",
            "--output-dir",
            "h",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("h/hardness.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "instance_id,view0,view1");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 150);
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells.len(), 3);
        for c in &cells[1..] {
            let v: f64 = c.parse().unwrap();
            assert!((0.0..=1.0).contains(&v));
            // kDN with k = 5 is a multiple of 0.2.
            assert!(((v * 5.0) - (v * 5.0).round()).abs() < 1e-12);
        }
    }
}

#[test]
fn convert_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("x.csv");
    fs::write(&csv, "0.1,2.5,-3\n1e-3,4,5.25\n").unwrap();
    assert_eq!(code(&dres(&["convert", "--in", "x.csv", "--out", "x.dmat"], tmp.path())), 0);
    assert_eq!(code(&dres(&["convert", "--in", "x.dmat", "--out", "y.csv"], tmp.path())), 0);
    assert_eq!(code(&dres(&["convert", "--in", "y.csv", "--out", "y.dmat"], tmp.path())), 0);
    let a = csv_io::read_view(&csv, "x").unwrap();
    let b = csv_io::read_view(&tmp.path().join("y.csv"), "x").unwrap();
    assert_eq!(a.data(), b.data());
    let d1 = dmat::read(&tmp.path().join("x.dmat")).unwrap();
    let d2 = dmat::read(&tmp.path().join("y.dmat")).unwrap();
    assert_eq!(d1.data(), d2.data());
    assert_eq!(code(&dres(&["convert", "--in", "absent.csv", "--out", "z.dmat"], tmp.path())), 2);
}

#[test]
fn train_then_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let (views, labels) = write_dataset(tmp.path());
    let (v0, v1, y) = (views[0].to_str().unwrap(), views[1].to_str().unwrap(), labels.to_str().unwrap());
    let out = dres(
        &["train", "--views", v0, v1, "--labels", y, "--output-dir", "m", "--seed", "2"],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = tmp.path().join("m/model.dres");
    assert!(model.exists());
    for method in ["knora_e", "des_p", "meta_des"] {
        let out = dres(
            &[
                "predict",
                "--model",
                model.to_str().unwrap(),
                "--views",
                v0,
                v1,
                "--labels",
                y,
                "--method",
                method,
                "--output-dir",
                "p",
            ],
            tmp.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let acc: f64 = stdout(&out)
            .lines()
            .find_map(|l| l.strip_prefix("accuracy: "))
            .unwrap()
            .parse()
            .unwrap();
        assert!(acc > 0.7, "{method}: {acc}");
        let text = fs::read_to_string(tmp.path().join("p/predictions.csv")).unwrap();
        assert!(text.starts_with("id,predicted,chosen_view,ensemble,fallback,true\n"));
        assert_eq!(text.lines().count(), 151);
    }
    // A one-view query against a two-view model.
    let out = dres(&["predict", "--model", model.to_str().unwrap(), "--views", v0], tmp.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn flags_override_config_and_writes_stay_in_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let (views, labels) = write_dataset(tmp.path());
    let config = format!(
        "seed = 3\nfolds = 5\nk = 5\nmethods = [\"knora_e\"]\noutput_dir = \"from_config\"\n[dataset]\nviews = [{:?}, {:?}]\nlabels = {:?}\n",
        views[0].file_name().unwrap(),
        views[1].file_name().unwrap(),
        labels.file_name().unwrap()
    );
    fs::write(tmp.path().join("run.toml"), config).unwrap();
    let before = files_under(tmp.path());
    let out = dres(
        &[
            "evaluate",
            "--config",
            "run.toml",
            "--folds",
            "3",
            "--k",
            "7",
            "--methods",
            "des_p",
            "--output-dir",
            "flagged",
            "--no-baselines",
        ],
        tmp.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("from_config").exists());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("flagged/report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["folds"], 3);
    assert_eq!(report["config"]["k"], 7);
    assert_eq!(report["config"]["seed"], 3);
    assert_eq!(report["config"]["methods"], serde_json::json!(["des_p"]));
    assert_eq!(report["methods"][0]["metrics"]["macro_f1"]["per_fold"].as_array().unwrap().len(), 3);
    assert!(report["baselines"].as_array().unwrap().is_empty());

    let after = files_under(tmp.path());
    let new: Vec<&PathBuf> = after.iter().filter(|p| !before.contains(p)).collect();
    assert!(!new.is_empty());
    for p in new {
        assert!(
            p.starts_with(tmp.path().join("flagged")),
            "{} written outside the output dir",
            p.display()
        );
    }
}

#[test]
fn seed_changes_results_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |seed: &str, dir: &str| {
        let out = dres(
            &[
                "sweep-k",
                "--synthetic",
                "regions",
                "--folds",
                "3",
                "--k-values",
                "3,5",
                "--methods",
                "knora_e",
                "--seed",
                seed,
                "--output-dir",
                dir,
            ],
            tmp.path(),
        );
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(tmp.path().join(dir).join("ksweep.csv")).unwrap()
    };
    let a = run("1", "a");
    assert_eq!(a, run("1", "b"));
    assert_ne!(a, run("2", "c"));
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn analysis_commands_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = dres(&["analyze", "--synthetic", "regions", "--output-dir", "a"], tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["hardness.csv", "hardness_heatmap.csv", "hardness_stats.csv", "hardness_profile.csv"] {
        assert!(tmp.path().join("a").join(f).exists(), "{f}");
    }

    let args = ["--synthetic", "regions", "--folds", "3", "--seed", "1"];
    let out = dres(&[&["oracle"][..], &args, &["--output-dir", "o"]].concat(), tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("o/oracle.csv")).unwrap();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert!(v[0] <= v[1] && v[1] <= v[2], "{line}");
    }

    let out = dres(&[&["ablate"][..], &args, &["--output-dir", "b"]].concat(), tmp.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(tmp.path().join("b/ablation.csv")).unwrap();
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        names,
        [
            "no_selection",
            "des_only",
            "representation_only",
            "dres",
            "oracle_representation",
            "oracle_full"
        ]
    );

    let out = dres(&["validate", "--synthetic", "blobs"], tmp.path());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("instances: 300"));
}
