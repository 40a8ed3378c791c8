//! Integration tests for the `franson` binary: CSV shapes, stream
//! round-trips, reproducibility, and the exit-code contract.

use std::fs;
use std::process::{Command, Output};

fn franson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_franson"))
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sync_sweep_emits_known_grid() {
    let dir = tempfile::tempdir().expect("tempdir");
    let csv = dir.path().join("sweep.csv");
    let out = franson(&["sweep-sync", "--out", csv.to_str().unwrap()]);
    assert_success(&out);

    let text = fs::read_to_string(&csv).expect("csv readable");
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma_sync_ps,tau_opt_ps,visibility");
    assert_eq!(lines.len(), 102, "header plus 101 grid points");

    let first: Vec<f64> = parse_row(lines[1]);
    let last: Vec<f64> = parse_row(lines[101]);
    assert_eq!(first[0], 0.0);
    assert_eq!(last[0], 200.0);
    assert!((first[2] - 0.988).abs() < 5e-4, "V(0) = {}", first[2]);
    assert!((last[2] - 0.9246).abs() < 5e-4, "V(200) = {}", last[2]);
}

#[test]
fn identical_seeds_reproduce_streams_byte_for_byte() {
    let dir = tempfile::tempdir().expect("tempdir");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (sub, seed) in [(&a, "9"), (&b, "9"), (&c, "10")] {
        let out = franson(&[
            "simulate",
            "--out-dir",
            sub.to_str().unwrap(),
            "--duration-s",
            "0.5",
            "--seed",
            seed,
        ]);
        assert_success(&out);
    }
    for name in ["signal.fts", "idler.fts", "resolved.toml"] {
        let bytes_a = fs::read(a.join(name)).expect("first run output");
        let bytes_b = fs::read(b.join(name)).expect("second run output");
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
    assert_ne!(
        fs::read(a.join("signal.fts")).unwrap(),
        fs::read(c.join("signal.fts")).unwrap(),
        "different seeds must produce different streams"
    );
}

#[test]
fn simulate_correlate_round_trip_recovers_peak() {
    let dir = tempfile::tempdir().expect("tempdir");
    let sim = dir.path().join("run");
    let out = franson(&[
        "simulate",
        "--out-dir",
        sim.to_str().unwrap(),
        "--duration-s",
        "2",
        "--text",
    ]);
    assert_success(&out);

    let hist = dir.path().join("hist.csv");
    let out = franson(&[
        "correlate",
        "--signal",
        sim.join("signal.txt").to_str().unwrap(),
        "--idler",
        sim.join("idler.txt").to_str().unwrap(),
        "--span-ps",
        "400",
        "--bin-width-ps",
        "2",
        "--fit",
        "--out",
        hist.to_str().unwrap(),
    ]);
    assert_success(&out);

    let text = fs::read_to_string(&hist).expect("histogram csv");
    assert_eq!(text.lines().next(), Some("bin_center_ps,count"));
    assert_eq!(text.lines().count(), 401, "header plus 400 bins");

    // "fit: amplitude A counts/bin, center C ps, sigma S ps"
    let report = stdout_str(&out);
    let fit_line = report.lines().find(|l| l.starts_with("fit:")).expect("fit line");
    let sigma: f64 = fit_line
        .split("sigma ")
        .nth(1)
        .and_then(|s| s.split(' ').next())
        .and_then(|s| s.parse().ok())
        .expect("parsable sigma");
    assert!((sigma - 30.0).abs() < 3.0, "fitted sigma {sigma} ps, expected near 30");
}

#[test]
fn fringe_writes_scan_fit_and_resolved_config() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("quick.toml");
    fs::write(
        &cfg,
        "seed = 3\n\n[fringe]\npoints = 8\ndwell_s = 0.5\n",
    )
    .expect("config written");
    let run = dir.path().join("fringe");
    let out = franson(&[
        "fringe",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        run.to_str().unwrap(),
    ]);
    assert_success(&out);

    let scan = fs::read_to_string(run.join("scan.csv")).expect("scan csv");
    assert_eq!(scan.lines().next(), Some("phase_rad,count,duration_s"));
    assert_eq!(scan.lines().count(), 9, "header plus 8 phase points");

    let fit = fs::read_to_string(run.join("fit.csv")).expect("fit csv");
    let mut lines = fit.lines();
    assert_eq!(lines.next(), Some("visibility,sigma_v,phi0_rad,mean_rate_cps"));
    let row: Vec<f64> = parse_row(lines.next().expect("fit row"));
    assert!(
        (0.90..=1.0).contains(&row[0]),
        "fitted visibility {} far from the configured source",
        row[0]
    );

    // The echoed configuration must itself be a loadable configuration.
    let echo = run.join("resolved.toml");
    let out = franson(&[
        "simulate",
        "--config",
        echo.to_str().unwrap(),
        "--duration-s",
        "0.1",
        "--out-dir",
        dir.path().join("reload").to_str().unwrap(),
    ]);
    assert_success(&out);
}

#[test]
fn delay_trace_covers_the_environment_grid() {
    let out = franson(&["delay-trace"]);
    assert_success(&out);
    let text = stdout_str(&out);
    assert_eq!(text.lines().next(), Some("t_s,delay_ps"));
    assert_eq!(text.lines().count(), 5402, "header plus 5401 samples");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("std"), "stats go to stderr: {stderr}");
}

#[test]
fn failure_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().expect("tempdir");

    // 3: file missing.
    let out = franson(&["correlate", "--signal", "/does/not/exist", "--idler", "/also/no"]);
    assert_eq!(out.status.code(), Some(3));

    // 3: file exists but violates the format.
    let corrupt = dir.path().join("corrupt.fts");
    fs::write(&corrupt, b"FTS1\x00\x00").expect("corrupt file written");
    let out = franson(&[
        "correlate",
        "--signal",
        corrupt.to_str().unwrap(),
        "--idler",
        corrupt.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // 2: configuration rejected.
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "unknown_knob = 1\n").expect("config written");
    let out = franson(&[
        "simulate",
        "--config",
        bad.to_str().unwrap(),
        "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // 2: parameter out of domain.
    let out = franson(&["sweep-sync", "--step-ps", "0"]);
    assert_eq!(out.status.code(), Some(2));

    // 2: unknown subcommand (usage error from the parser).
    let out = franson(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

fn parse_row(line: &str) -> Vec<f64> {
    line.split(',')
        .map(|f| f.parse().expect("numeric CSV field"))
        .collect()
}
