use std::path::Path;
use std::process::{Command, Output};

use amrpack::io::load_dataset;

fn amrpack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrpack")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = amrpack(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, density: &str) -> std::path::PathBuf {
    let ds = dir.join("ds");
    ok(&[
        "generate", "-o", s(&ds), "--seed", "7", "--levels", "2", "--finest-side", "64", "--unit-block", "8",
        "--finest-density", density,
    ]);
    ds
}

#[test]
fn generate_then_inspect_reports_densities() {
    let t = tempfile::tempdir().unwrap();
    let out = amrpack(&[
        "generate", "-o", s(&t.path().join("ds")), "--seed", "7", "--levels", "2", "--finest-side", "128",
        "--unit-block", "8", "--finest-density", "0.23",
    ]);
    assert!(out.status.success());
    let text = ok(&["inspect", s(&t.path().join("ds"))]);
    let densities: Vec<f64> = text
        .lines()
        .filter_map(|l| l.split("density ").nth(1))
        .map(|d| d.trim().parse().unwrap())
        .collect();
    assert_eq!(densities.len(), 2);
    assert!((densities[0] - 0.23).abs() <= 0.02, "{densities:?}");
    assert!((densities[1] - 0.77).abs() <= 0.02, "{densities:?}");
}

#[test]
fn compress_decompress_keeps_masks() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "0.3");
    let archive = t.path().join("a.tac");
    let restored = t.path().join("out");
    ok(&["compress", "-i", s(&ds), "-o", s(&archive), "--eb", "1e-3"]);
    assert!(!t.path().join("a.tac.tmp").exists());
    ok(&["decompress", "-i", s(&archive), "-o", s(&restored)]);
    let a = load_dataset(&ds).unwrap();
    let b = load_dataset(&restored).unwrap();
    for (x, y) in a.levels().iter().zip(b.levels()) {
        assert_eq!(x.occupancy(), y.occupancy());
    }
    let text = ok(&["inspect", s(&archive)]);
    assert!(text.contains("record 0: opst"), "{text}");
    assert!(text.contains("record 1: gsp"), "{text}");
}

#[test]
fn lossless_codec_round_trip_is_exact() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "0.3");
    let archive = t.path().join("a.tac");
    let restored = t.path().join("out");
    ok(&["compress", "-i", s(&ds), "-o", s(&archive), "--codec", "lossless-ref", "--strategy", "akdtree"]);
    ok(&["decompress", "-i", s(&archive), "-o", s(&restored)]);
    assert_eq!(load_dataset(&ds).unwrap(), load_dataset(&restored).unwrap());
}

#[test]
fn bench_rows_and_identity() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "0.3");
    let csv = t.path().join("b.csv");
    ok(&["bench", "-i", s(&ds), "-o", s(&csv), "--ebs", "1e-2,1e-3,1e-4", "--strategies", "auto,nast,1d"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "strategy,eb,bit_rate,cr,psnr_db,pre_s,enc_s,dec_s");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for name in ["auto", "nast", "1d"] {
        assert_eq!(rows.iter().filter(|r| r[0] == name).count(), 3);
    }
    for r in &rows {
        let br: f64 = r[2].parse().unwrap();
        let cr: f64 = r[3].parse().unwrap();
        assert!((br * cr / 32.0 - 1.0).abs() < 1e-6);
    }
}

#[test]
fn deterministic_outputs_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "0.3");
    let run = |name: &str| {
        let a = t.path().join(format!("{name}.tac"));
        let c = t.path().join(format!("{name}.csv"));
        ok(&["compress", "-i", s(&ds), "-o", s(&a)]);
        ok(&["bench", "-i", s(&ds), "-o", s(&c), "--ebs", "1e-2,1e-3", "--deterministic"]);
        (std::fs::read(a).unwrap(), std::fs::read(c).unwrap())
    };
    assert_eq!(run("first"), run("second"));
}

#[test]
fn analyze_writes_reports() {
    let t = tempfile::tempdir().unwrap();
    let ds = generate(t.path(), "0.3");
    let (sp, ha) = (t.path().join("s.csv"), t.path().join("h.csv"));
    let text = ok(&[
        "analyze", "-i", s(&ds), "--spectrum-out", s(&sp), "--halo-out", s(&ha), "--threshold-factor", "5", "--k-max",
        "8",
    ]);
    assert!(text.contains("power spectrum max rel error"));
    let spectrum = std::fs::read_to_string(sp).unwrap();
    assert!(spectrum.starts_with("k,p_orig,p_decomp,rel_err\n"));
    assert_eq!(spectrum.lines().count(), 9);
    assert!(std::fs::read_to_string(ha).unwrap().starts_with("source,rank,mass,cell_count,com_x,com_y,com_z"));
}

#[test]
fn help_lists_defaults() {
    let text = ok(&["bench", "--help"]);
    for flag in [
        "--t1", "--t2", "--fallback-density", "--eb", "--eb-mode", "--level-ratios", "--gsp-x", "--gsp-y", "--codec",
        "--strategy",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    assert!(text.contains("[default: 0.5]"));
    assert!(text.contains("[default: 0.6]"));
    let gen = ok(&["generate", "--help"]);
    assert!(gen.contains("--unit-block") && gen.contains("[default: 16]"));
    let analyze = ok(&["analyze", "--help"]);
    assert!(analyze.contains("[default: 81.66]"));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let t = tempfile::tempdir().unwrap();
    let out = amrpack(&["compress", "-i", s(&t.path().join("missing")), "-o", s(&t.path().join("a.tac"))]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("missing"));
    assert!(!t.path().join("a.tac").exists());

    let ds = generate(t.path(), "0.3");
    let out = amrpack(&["compress", "-i", s(&ds), "-o", s(&t.path().join("a.tac")), "--t1", "0.9"]);
    assert!(!out.status.success());

    let bad = t.path().join("bad.tac");
    std::fs::write(&bad, b"TAC1 not really").unwrap();
    let out = amrpack(&["decompress", "-i", s(&bad), "-o", s(&t.path().join("o"))]);
    assert!(!out.status.success());
}
