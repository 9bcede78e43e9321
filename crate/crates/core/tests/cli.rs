use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lowrank-gp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_dataset(dir: &Path, name: &str, rows: usize) {
    let mut s = String::from("u,v,target\n");
    for i in 0..rows {
        let a = (i as f64 * 0.37).sin() * 2.0;
        let b = (i as f64 * 0.11).cos();
        s.push_str(&format!("{a},{b},{}\n", a.sin() + 0.5 * b));
    }
    std::fs::write(dir.join(name), s).unwrap();
}

#[test]
fn results_go_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["kl-curve", "-n", "40", "--ranks", "2,4,6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "experiment,seed,D,r,value,wall_time_ms");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("kl_curve:mercer:gaussian,0,1,2,"));
    assert!(lines[1].ends_with(",0.0"));
}

#[test]
fn out_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--seed", "3", "min-rank", "-n", "60", "--dims", "1,2", "--out", "res.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("res.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("res.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "min-rank");
    assert_eq!(manifest["rows"], 2);
    assert_eq!(manifest["config"]["seed"], 3);
    assert_eq!(manifest["config"]["n"], 60);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), "# desk run\nn = 30\nranks = 2:6:2\nmethod = fourier\n").unwrap();
    let from_file = run(dir.path(), &["--config", "run.cfg", "kl-curve"]);
    assert!(from_file.status.success(), "{}", stderr(&from_file));
    let text = String::from_utf8(from_file.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("kl_curve:fourier:gaussian"));
    let overridden = run(dir.path(), &["--config", "run.cfg", "kl-curve", "--method", "mercer"]);
    assert!(String::from_utf8(overridden.stdout).unwrap().contains("kl_curve:mercer:gaussian"));
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["nonsense"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["kl-curve", "--method", "nystrom"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["kl-curve", "--method", "fourier", "--ranks", "3"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["fit"]).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.csv"), "a,y\n1,2\n3\n").unwrap();
    let o = run(dir.path(), &["fit", "--dataset", "bad.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert_eq!(run(dir.path(), &["fit", "--dataset", "missing.csv"]).status.code(), Some(2));

    let o = run(dir.path(), &["kl-curve", "-n", "50", "--sigma-sq", "1e-300", "--ranks", "2"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn fit_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), "train.csv", 150);
    write_dataset(dir.path(), "test.csv", 20);
    let o = run(
        dir.path(),
        &["fit", "--dataset", "train.csv", "--target-col", "target", "--rank", "12", "--epochs", "60", "--out", "model.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(saved["target_col"], "target");
    assert_eq!(saved["feature_names"], serde_json::json!(["u", "v"]));

    let o = run(dir.path(), &["predict", "--model", "model.json", "--test", "test.csv", "--out", "pred.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("rmse"));
    let pred = std::fs::read_to_string(dir.path().join("pred.csv")).unwrap();
    let mut lines = pred.lines();
    assert_eq!(lines.next().unwrap(), "index,mean,variance,lower,upper");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    for r in &rows {
        assert!(r[2] > 0.0 && r[3] < r[1] && r[1] < r[4]);
    }
}

#[test]
fn synth_curve_writes_curves_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["synth-curve", "--epochs", "20", "--out", "s.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curves = std::fs::read_to_string(dir.path().join("s.csv.curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 1 + 3 * 201);
}
