use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use landscape_core::analysis::modality_summary;
use landscape_core::dataset::LandscapeDataset;
use landscape_core::space::SearchSpace;

fn plan_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("plans/desk.json")
}

fn landscape(args: &[&str]) -> Output {
    landscape_env(args, &[])
}

fn landscape_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_landscape"));
    cmd.args(args).env_remove("LANDSCAPE_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn collect_into(dir: &Path) {
    ok(&landscape(&["collect", "--plan", plan_path().to_str().unwrap(), "--out", dir.to_str().unwrap()]));
}

fn read(p: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn collect_writes_expected_rows_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    collect_into(&a);
    collect_into(&b);
    for f in ["landscape.csv", "final.csv", "selection.json", "space.json", "manifest.json"] {
        assert_eq!(read(a.join(f)), read(b.join(f)), "{f} differs");
    }
    // overwriting in place is also identical
    collect_into(&a);
    assert_eq!(read(a.join("final.csv")), read(b.join("final.csv")));

    let space = SearchSpace::load(a.join("space.json")).unwrap();
    let ds = LandscapeDataset::load(a.join("landscape.csv"), &space).unwrap();
    let finals = LandscapeDataset::load(a.join("final.csv"), &space).unwrap();
    for phase in 1..=3 {
        let n = ds.rows().iter().filter(|r| r.phase_index == phase).count();
        assert_eq!(n, 16 * 3 * 10);
        // three final checkpoints per run
        let n = finals.rows().iter().filter(|r| r.phase_index == phase).count();
        assert_eq!(n, 16 * 3 * 10 * 3);
    }
    let snaps = std::fs::read_dir(a.join("snapshots")).unwrap().count();
    assert_eq!(snaps, 3 * 16 * 3);
}

#[test]
fn resume_reuses_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("d");
    collect_into(&dir);
    let before = read(dir.join("landscape.csv"));
    ok(&landscape(&[
        "collect",
        "--plan",
        plan_path().to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
        "--resume",
    ]));
    assert_eq!(before, read(dir.join("landscape.csv")));
}

#[test]
fn missing_plan_is_a_validation_error() {
    let out = landscape(&["collect", "--plan", "/nonexistent/plan.json", "--out", "/tmp/never"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/plan.json"));
    let out = landscape(&["validate", "--plan", "/nonexistent/plan.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_plan_and_thread_env() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    let text = std::fs::read_to_string(plan_path()).unwrap().replace("\"t_final\": 30000", "\"t_final\": 100");
    std::fs::write(&bad, text).unwrap();
    let out = landscape(&["validate", "--plan", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = landscape_env(&["validate", "--plan", plan_path().to_str().unwrap()], &[("LANDSCAPE_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
    let out = landscape(&["validate", "--plan", plan_path().to_str().unwrap()]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("plan ok: 3 dims, 16 configs"));
}

#[test]
fn analyze_bundle_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let report = tmp.path().join("report");
    collect_into(&data);
    let (d, r) = (data.to_str().unwrap(), report.to_str().unwrap());
    ok(&landscape(&["analyze", "--data", d, "--out", r, "--svg", "--null-draws", "200"]));

    // 3 phases x 3 hyperparameter pairs x 3 bands x 2 models
    let svgs: Vec<String> = std::fs::read_dir(report.join("svg"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    let heatmaps = svgs.iter().filter(|n| !n.contains("_ice_") && !n.ends_with("modality.svg")).count();
    assert_eq!(heatmaps, 3 * 3 * 3 * 2);
    assert!(report.join("models/phase2_igpr.json").exists());

    // modality table equals the library result on the same data, and the CSV
    let summary: serde_json::Value = serde_json::from_slice(&read(report.join("summary.json"))).unwrap();
    let space = SearchSpace::load(data.join("space.json")).unwrap();
    let ds = LandscapeDataset::load(data.join("landscape.csv"), &space).unwrap();
    let lib = modality_summary(&ds, 0.05, 200, 0).unwrap();
    assert_eq!(summary["modality_table"], serde_json::to_value(&lib.table).unwrap());

    let mut rdr = csv::Reader::from_path(report.join("modality.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    for phase in summary["modality_table"]["phases"].as_array().unwrap() {
        let p = phase["phase_index"].as_u64().unwrap().to_string();
        let of_phase: Vec<_> = rows.iter().filter(|r| r[0] == p).collect();
        for cat in ["unimodal", "multimodal", "uncategorized"] {
            let k = of_phase.iter().filter(|r| &r[5] == cat).count();
            let pct = 100.0 * k as f64 / of_phase.len() as f64;
            assert!((pct - phase[cat].as_f64().unwrap()).abs() < 1e-9, "phase {p} {cat}");
        }
    }

    // every emitted file is hashed; report verifies, then detects tampering
    let listed = summary["files"].as_array().unwrap().len();
    assert!(listed > 50);
    let out = landscape(&["report", "--bundle", r]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains(&format!("{listed} files verified")));
    std::fs::write(report.join("modality.csv"), b"tampered").unwrap();
    let out = landscape(&["report", "--bundle", r]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("modality.csv: hash mismatch"));
}

#[test]
fn analyze_is_deterministic_and_respects_model_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    collect_into(&data);
    let d = data.to_str().unwrap();
    let one = tmp.path().join("one");
    let two = tmp.path().join("two");
    ok(&landscape_env(
        &["analyze", "--data", d, "--out", one.to_str().unwrap(), "--model", "ilm", "--null-draws", "100"],
        &[("LANDSCAPE_THREADS", "1")],
    ));
    ok(&landscape(&["analyze", "--data", d, "--out", two.to_str().unwrap(), "--model", "ilm", "--null-draws", "100"]));
    assert_eq!(read(one.join("summary.json")), read(two.join("summary.json")));
    let models: Vec<String> = std::fs::read_dir(one.join("models"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(models.len(), 3);
    assert!(models.iter().all(|m| m.ends_with("_ilm.json")));
    assert!(!one.join("cv_igpr.txt").exists());
    assert!(!one.join("svg").exists());
}

#[test]
fn analyze_rejects_bad_options_and_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = landscape(&["analyze", "--data", tmp.path().to_str().unwrap(), "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = landscape(&["analyze", "--data", ".", "--out", "/tmp/x", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = landscape(&["analyze", "--data", ".", "--out", "/tmp/x", "--model", "svm"]);
    assert_eq!(out.status.code(), Some(2));
}
