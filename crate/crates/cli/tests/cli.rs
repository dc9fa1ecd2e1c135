use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn claasic(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claasic")).args(args).current_dir(dir).output().expect("binary runs")
}

const MINIMAL: &str = "\
# minimal experiment
scale = desk
grid = 2x2
series = 2
max_reps = 3
";

fn body(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).collect()
}

fn run_minimal(dir: &Path, out: &str) -> Output {
    fs::write(dir.join("exp.cfg"), MINIMAL).unwrap();
    claasic(&["run", "--config", "exp.cfg", "--out-dir", out], dir)
}

#[test]
fn minimal_run_writes_both_files_with_config_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_minimal(tmp.path(), "out");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(tmp.path().join("out/epochs.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "# grid=2x2"));
    assert!(csv.lines().any(|l| l == "# max_reps=3"));
    let rows = body(&csv);
    assert!(rows[0].starts_with("row,series,input,epoch"));
    assert!(rows.len() > 1);

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap()).unwrap();
    let config: Vec<&str> = json["config"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(config.contains(&"grid=2x2"));
    assert_eq!(json["totals"]["epochs"].as_u64().unwrap() as usize, rows.len() - 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_minimal(tmp.path(), "a").status.success());
    assert!(run_minimal(tmp.path(), "b").status.success());
    let a = fs::read_to_string(tmp.path().join("a/epochs.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/epochs.csv")).unwrap();
    assert_eq!(body(&a), body(&b));
}

#[test]
fn summary_means_match_the_epoch_rows() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_minimal(tmp.path(), "out").status.success());
    let csv = fs::read_to_string(tmp.path().join("out/epochs.csv")).unwrap();
    let rows = body(&csv);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (ci, ei, ai) = (col("cycles"), col("energy"), col("anomaly"));
    let mut sums = [0.0f64; 3];
    for r in &rows[1..] {
        let f: Vec<&str> = r.split(',').collect();
        for (s, i) in sums.iter_mut().zip([ci, ei, ai]) {
            *s += f[i].parse::<f64>().unwrap();
        }
    }
    let n = (rows.len() - 1) as f64;
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap()).unwrap();
    for (s, key) in sums.iter().zip(["cycles", "energy", "anomaly"]) {
        let m = json["means"][key].as_f64().unwrap();
        assert!((s / n - m).abs() <= 1e-9 * m.abs().max(1.0), "{key}: {} vs {m}", s / n);
    }
}

#[test]
fn two_point_sweep_gives_two_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = claasic(
        &["sweep", "--grid", "2x2", "--series", "1", "--set", "max_reps=2", "--axis", "optimization=sequential,pipelined", "-o", "sw"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",sequential,ok,") && rows[2].contains(",pipelined,ok,"));
    assert!(tmp.path().join("sw/point_000/epochs.csv").exists());
    assert!(tmp.path().join("sw/point_001/summary.json").exists());
}

#[test]
fn failing_sweep_point_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    // 3 zones cannot tile a 2x2 grid
    let out = claasic(&["sweep", "--grid", "2x2", "--series", "1", "--set", "max_reps=1", "--axis", "zones=1,3", "-o", "sw"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let csv = fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    let rows = body(&csv);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].contains(",ok,") && rows[2].contains(",failed,"));
}

#[test]
fn bad_configuration_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.cfg"), "grid = 4by4\n").unwrap();
    let out = claasic(&["run", "--config", "bad.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
    let out = claasic(&["run", "--set", "link_width=wide"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let out = claasic(&["run", "--config", "missing.cfg"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_subcommand_matches_reference() {
    let tmp = tempfile::tempdir().unwrap();
    let out = claasic(&["verify", "--grid", "2x2", "--seeds", "2", "--epochs", "30"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains("30 epochs match")).count(), 4);
}
