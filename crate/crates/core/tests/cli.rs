//! End-to-end checks of the command-line pipeline.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mtr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn desk_scenario(intervals: u32, count: u32, algorithm: &str) -> String {
    format!(
        r#"{{
  "name": "cli-test",
  "seed": 5,
  "profile": {{ "intervals_per_day": {intervals}, "count_curve": [{curve}] }},
  "reduction": "medium4",
  "algorithm": "{algorithm}"
}}"#,
        curve = vec![count.to_string(); intervals as usize].join(", ")
    )
}

#[test]
fn generate_match_solve_verify_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = mtr(
        d,
        &[
            "generate",
            "--seed",
            "7",
            "--intervals",
            "4",
            "--count",
            "48",
            "--interval",
            "1",
            "--out",
            "trips.json",
            "--network-out",
            "net.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = mtr(
        d,
        &[
            "match",
            "--trips",
            "trips.json",
            "--network",
            "net.json",
            "--reduction",
            "medium4",
            "--out",
            "h.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for algo in ["exact", "impgreedy", "lpr", "anyimp"] {
        let out = mtr(
            d,
            &[
                "solve",
                "--matches",
                "h.json",
                "--algo",
                algo,
                "--trips",
                "trips.json",
                "--network",
                "net.json",
                "--out",
                "sol.json",
            ],
        );
        assert!(
            out.status.success(),
            "{algo}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains("verified"), "{algo}: {stderr}");
        let sol = fs::read_to_string(d.join("sol.json")).unwrap();
        assert!(sol.contains("\"value\""));
    }

    // Verification without geometry still checks the accounting.
    let out = mtr(
        d,
        &[
            "solve",
            "--matches",
            "h.json",
            "--algo",
            "impgreedy",
            "--trips",
            "trips.json",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("route replay skipped"));
}

#[test]
fn simulate_writes_csv_and_report_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("scn.json"), desk_scenario(2, 32, "impgreedy")).unwrap();

    let out = mtr(
        d,
        &[
            "simulate",
            "--scenario",
            "scn.json",
            "--csv",
            "run.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("riders served"));

    let csv = fs::read_to_string(d.join("run.csv")).unwrap();
    assert!(csv.starts_with("interval,riders_total,riders_served"));
    assert_eq!(csv.lines().count(), 3);

    let out = mtr(d, &["report", "--csv", "run.csv"]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("riders served"));
    assert!(stdout.contains("min"));
}

#[test]
fn algorithm_override_and_bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("scn.json"), desk_scenario(2, 32, "impgreedy")).unwrap();

    let out = mtr(
        d,
        &[
            "simulate",
            "--scenario",
            "scn.json",
            "--algo",
            "greedy",
            "--csv",
            "a.csv",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("algorithm greedy"));

    let out = mtr(
        d,
        &["simulate", "--scenario", "scn.json", "--algo", "nosuch"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = mtr(d, &["report", "--csv", "missing.csv"]);
    assert!(!out.status.success());
}
