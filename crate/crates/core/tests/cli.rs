use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moebius-lab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MOEBIUS_LAB_THREADS")
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn compute(dir: &Path, n: usize) -> Output {
    let out = run(&["compute", "--n", &n.to_string()], dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn compute_summary_and_cache_size() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&compute(dir.path(), 6));
    assert_eq!(s["n_max"], 6);
    assert_eq!(s["mertens_at_n_max"], -1);
    assert_eq!(s["checksum"].as_str().unwrap().len(), 16);
    assert_eq!(
        fs::read(dir.path().join("mu.mut1")).unwrap(),
        b"MUT1\x06\0\0\0\0\0\0\0\x01\xff\xff\x00\xff\x01"
    );

    let s = summary(&compute(dir.path(), 1_000_000));
    assert_eq!(s["mertens_at_n_max"], 212);
    let len = fs::metadata(dir.path().join("mu.mut1")).unwrap().len();
    assert_eq!(len, 1_000_012);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(
        run(&["compute", "--n", "0"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["compute", "--n", "-3"], dir.path()).status.code(),
        Some(2)
    );
    compute(dir.path(), 100);
    let out = run(&["bound", "--alpha", "1.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["class"], "usage");
    assert_eq!(
        run(&["stats", "--n", "101"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["psd", "--segment", "100"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_cache_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["stats", "mertens", "bound", "psd"] {
        let out = run(&[cmd, "--cache", "absent.mut1"], dir.path());
        assert_eq!(out.status.code(), Some(3), "{cmd}");
    }
}

#[test]
fn corrupt_header_is_io_for_readers_and_verify_failure_for_verify() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("mu.mut1"), b"MUT1\x05\0\0\0\0\0\0\0\x01").unwrap();
    assert_eq!(run(&["stats"], dir.path()).status.code(), Some(3));
    let out = run(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let s = summary(&out);
    assert_eq!(s["checks"][0]["check"], "cache_format");
}

#[test]
fn verify_fresh_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--n", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["status"], "pass");

    compute(dir.path(), 5_000);
    let out = run(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["n_max"], 5_000);
    assert!(s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
}

#[test]
fn verify_names_the_corrupted_index() {
    let dir = tempfile::tempdir().unwrap();
    compute(dir.path(), 2_000);
    let path = dir.path().join("mu.mut1");
    let mut bytes = fs::read(&path).unwrap();
    // μ(30) = −1; +1 keeps the byte a valid trit
    assert_eq!(bytes[12 + 29], 0xff);
    bytes[12 + 29] = 0x01;
    fs::write(&path, &bytes).unwrap();
    let out = run(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    let s = summary(&out);
    let table = s["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "table_vs_sieve")
        .unwrap();
    assert_eq!(table["first_index"], 30);

    bytes[12 + 29] = 0x07;
    fs::write(&path, &bytes).unwrap();
    let s = summary(&run(&["verify"], dir.path()));
    assert_eq!(s["checks"][0]["first_index"], 30);
}

#[test]
fn stats_writes_block_tables_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    compute(dir.path(), 50_000);
    let out = run(&["stats", "--block", "1000", "--out", "o"], dir.path());
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["blocks"][0]["blocks"], 50);
    let csv = fs::read_to_string(dir.path().join("o/block_stats_1000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "block,len,n_minus,n_zero,n_plus,pe_minus,pe_zero,pe_plus,pt_minus,pt_zero,pt_plus"
    );
    assert_eq!(lines.count(), 50);
    assert!(!dir.path().join("o/hist_mertens.csv").exists());
    assert!(!s["skipped"].as_array().unwrap().is_empty());

    let counts: Vec<i64> = s["global"]["counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_i64().unwrap())
        .collect();
    assert_eq!(counts.iter().sum::<i64>(), 50_000);
}

#[test]
fn clt_histograms_need_enough_blocks() {
    let dir = tempfile::tempdir().unwrap();
    compute(dir.path(), 300_000);
    let out = run(&["stats", "--block", "10000"], dir.path());
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["clt"]["hist_mertens"]["samples"], 30);
    assert_eq!(s["clt"]["hist_abs"]["samples"], 30);
    let hist = fs::read_to_string(dir.path().join("hist_mertens.csv")).unwrap();
    let mut lines = hist.lines();
    assert_eq!(lines.next().unwrap(), "bin_center,density,normal_density");
    assert_eq!(lines.count(), 41);
}

#[test]
fn mertens_and_bound_outputs() {
    let dir = tempfile::tempdir().unwrap();
    compute(dir.path(), 1_000);
    let out = run(&["mertens", "--n", "10"], dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("mertens.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "n,m,running_mean");
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10], "10,-1,-0.1");

    let out = run(
        &[
            "bound", "--alpha", "0.05", "--alpha", "0.5", "--format", "json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let s = summary(&out);
    let reports = s["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    let written: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(written.as_array().unwrap().len(), 4);
    for r in reports {
        assert_eq!(r["observed_m"], 2);
        assert_eq!(r["holds"], true);
    }
}

#[test]
fn psd_row_count_follows_segment() {
    let dir = tempfile::tempdir().unwrap();
    compute(dir.path(), 10_000);
    let out = run(&["psd", "--segment", "1024"], dir.path());
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(s["bins"], 513);
    assert_eq!(s["n_segments"], 18);
    let csv = fs::read_to_string(dir.path().join("psd.csv")).unwrap();
    assert_eq!(csv.lines().count(), 514);
}

#[test]
fn compute_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut images = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_moebius-lab"))
            .args(["compute", "--n", "30000", "--cache", threads])
            .current_dir(dir.path())
            .env("MOEBIUS_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success());
        images.push(fs::read(dir.path().join(threads)).unwrap());
    }
    assert_eq!(images[0], images[1]);
}

#[test]
fn bad_thread_count_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_moebius-lab"))
        .args(["compute", "--n", "10"])
        .current_dir(dir.path())
        .env("MOEBIUS_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
