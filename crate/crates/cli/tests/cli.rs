use std::path::Path;
use std::process::{Command, Output};

use entcut_cli::record::RunRecord;

fn entcut(args: &[&str], envs: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_entcut"));
    cmd.args(args).env_remove("ENTCUT_OUT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const P3: &str = "[model]\nkind = \"rsos\"\np = 3\nleft = \"1,1\"\nright = \"1,1\"\n[run]\nlengths = [9]\nseed = 3\n[dmrg]\nchi_max = 32\nenergy_tol = 1e-12\n";

#[test]
fn predict_prints_exact_tower() {
    let out = entcut(&["predict", "--p", "4", "--a", "2,2", "--b", "1,1", "--levels", "6"], &[]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let channels = doc["channels"].as_array().unwrap();
    assert_eq!(channels.len(), 1);
    assert_eq!(channels[0]["h"], "3/80");
    assert!(channels[0]["coefficients"][0].is_u64());

    let out = entcut(&["predict", "--p", "5", "--a", "3,3", "--b", "3,3"], &[]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["a"], "2,3");

    let bad = entcut(&["predict", "--p", "4", "--a", "9,9", "--b", "1,1"], &[]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(!bad.stderr.is_empty());
}

#[test]
fn run_writes_matching_ed_and_dmrg_records_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p3.toml", P3);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let r = entcut(&["run", &cfg, "--out", out_a.to_str().unwrap()], &[]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    // the output directory can also come from the environment
    let r = entcut(&["run", &cfg, "--jobs", "2"], &[("ENTCUT_OUT", &out_b)]);
    assert!(r.status.success());

    let read = |d: &Path, m: &str| std::fs::read(d.join(format!("rsos-p3-1.1-1.1_L9_{m}.json"))).unwrap();
    let dmrg = RunRecord::from_json(&read(&out_a, "dmrg")).unwrap();
    let ed = RunRecord::from_json(&read(&out_a, "ed")).unwrap();
    assert!((dmrg.energy - ed.energy).abs() < 1e-9);
    for (x, y) in dmrg.spectrum.lambda.iter().zip(&ed.spectrum.lambda).take(20) {
        assert!((x - y).abs() < 1e-8);
    }
    assert_eq!(read(&out_a, "dmrg"), read(&out_b, "dmrg"));
    assert_eq!(read(&out_a, "ed"), read(&out_b, "ed"));
}

#[test]
fn even_length_with_identical_ends_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "even.toml", &P3.replace("[9]", "[9, 10]"));
    let out = dir.path().join("out");
    let r = entcut(&["run", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists(), "nothing runs before validation passes");
}

#[test]
fn analyze_surfaces_fit_errors_and_version_mixing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p3.toml", P3);
    let out = dir.path().join("runs");
    assert!(entcut(&["run", &cfg, "--out", out.to_str().unwrap()], &[]).status.success());
    let pattern = format!("{}/*.json", out.display());
    let report_dir = dir.path().join("reports");
    let rd = report_dir.to_str().unwrap();

    let fit = entcut(&["analyze", &pattern, "--mode", "fit-c", "--min-fit-length", "0", "--out", rd], &[]);
    assert_eq!(fit.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&fit.stderr).contains("fit error"));

    let m = entcut(&["analyze", &pattern, "--mode", "match", "--cut-label", "1,2", "--cut-label", "1,1", "--n-levels", "3", "--out", rd], &[]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    let csv = std::fs::read_to_string(report_dir.join("analysis-match.csv")).unwrap();
    assert!(csv.starts_with("length,cut_label,level,observed,expected,agrees\n"));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(report_dir.join("analysis-match.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["towers"].as_array().unwrap().len(), 2);

    // rewrite one record as if an older build had produced it
    let path = out.join("rsos-p3-1.1-1.1_L9_ed.json");
    let mut rec = RunRecord::from_json(&std::fs::read(&path).unwrap()).unwrap();
    rec.version = "0.0.1".into();
    std::fs::write(&path, rec.seal().to_json()).unwrap();
    let mixed = entcut(&["analyze", &pattern, "--mode", "match", "--method", "ed", "--out", rd], &[]);
    assert!(mixed.status.success(), "only ED records are loaded, so no mixing");

    let mut dmrg = RunRecord::from_json(&std::fs::read(out.join("rsos-p3-1.1-1.1_L9_dmrg.json")).unwrap()).unwrap();
    dmrg.version = "0.0.2".into();
    dmrg.method = entcut_cli::record::Method::Ed;
    dmrg.length = 11;
    dmrg.chain.length = 11;
    std::fs::write(out.join("other.json"), dmrg.seal().to_json()).unwrap();
    let mixed = entcut(&["analyze", &pattern, "--mode", "match", "--method", "ed", "--out", rd], &[]);
    assert_eq!(mixed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("--force"));
    let forced = entcut(&["analyze", &pattern, "--mode", "match", "--method", "ed", "--force", "--out", rd], &[]);
    assert!(forced.status.success());

    std::fs::write(out.join("broken.json"), b"{\"format\": 1}").unwrap();
    let broken = entcut(&["analyze", &pattern, "--mode", "match", "--out", rd], &[]);
    assert_eq!(broken.status.code(), Some(1));
}
