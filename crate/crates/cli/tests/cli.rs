//! End-to-end tests of the `qs` binary: exit codes, output schemas, report
//! reproducibility, and agreement with the library API it wraps.

use std::fs;
use std::process::{Command, Output};

use qs_core::eval::{default_phis, default_probes, run_eval, Algorithm, EvalConfig};
use qs_core::stream::{parse_dist, StreamSpec};

fn qs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn help_works() {
    let out = qs(&["--help"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("eval"));
}

#[test]
fn usage_errors_exit_2() {
    let out = qs(&["eval", "--algo", "nope", "--epsilon", "0.1", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qs(&[
        "run",
        "--epsilon",
        "0.1",
        "--n",
        "100",
        "--dist",
        "marzipan",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let out = qs(&["eval", "--epsilon", "0.9", "--n", "100", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_stream_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stream.txt");
    fs::write(&path, "1\n2\nbanana\n4\n").unwrap();
    let dist = format!("file:{}", path.display());
    let out = qs(&[
        "run",
        "--algo",
        "gk",
        "--epsilon",
        "0.1",
        "--n",
        "4",
        "--dist",
        &dist,
        "--queries",
        "4:0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("banana"), "stderr was: {}", err);
}

#[test]
fn run_gk_median_on_sorted_stream() {
    let out = qs(&[
        "run",
        "--algo",
        "gk",
        "--epsilon",
        "0.05",
        "--n",
        "10000",
        "--dist",
        "sorted",
        "--queries",
        "10000:0.5",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let body = stdout(&out);
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "t,phi,rho,answer,row,guaranteed");
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let answer: i64 = fields[3].parse().unwrap();
    // Sorted stream: value equals rank, so the answer sits within eps*n ranks
    // of the median.
    assert!((answer - 5000).abs() <= 500, "median answer {}", answer);
}

#[test]
fn run_online_routes_probes_to_rows() {
    // m = 64: row 0 answers at t = m/2 = 32; row 1 answers at t = 33m = 2112.
    let out = qs(&[
        "run",
        "--algo",
        "online",
        "--epsilon",
        "0.5",
        "--m",
        "64",
        "--n",
        "4096",
        "--dist",
        "sorted",
        "--queries",
        "32:0.5,2112:0.5",
        "--format",
        "csv",
        "--seed",
        "11",
    ]);
    assert!(out.status.success());
    let body = stdout(&out);
    let rows: Vec<Vec<&str>> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "32");
    assert_eq!(rows[0][4], "0", "early query not answered by row 0");
    assert_eq!(rows[1][0], "2112");
    assert_eq!(rows[1][4], "1", "post-hand-off query not answered by row 1");
}

#[test]
fn eval_gk_reports_zero_failures() {
    let out = qs(&[
        "eval",
        "--algo",
        "gk",
        "--epsilon",
        "0.1",
        "--n",
        "5000",
        "--dist",
        "uniform",
        "--trials",
        "3",
        "--format",
        "json",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let probes = report["probes"].as_array().unwrap();
    assert!(!probes.is_empty());
    for probe in probes {
        assert!(probe["failure_fraction"].is_number());
        assert_eq!(probe["failures"].as_u64(), Some(0));
    }
}

#[test]
fn eval_csv_columns_are_pinned() {
    let out = qs(&[
        "eval",
        "--algo",
        "online",
        "--epsilon",
        "0.25",
        "--m",
        "64",
        "--n",
        "2048",
        "--dist",
        "sorted",
        "--trials",
        "2",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).lines().next().unwrap(),
        "t,phi,rho,answer,exact_rank,abs_err,norm_err"
    );
}

#[test]
fn identical_flags_produce_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = qs(&[
            "eval",
            "--algo",
            "online",
            "--epsilon",
            "0.25",
            "--m",
            "64",
            "--n",
            "4096",
            "--dist",
            "uniform",
            "--trials",
            "4",
            "--seed",
            "9",
            "--format",
            "json",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn cli_matches_library_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cli.json");
    let out = qs(&[
        "eval",
        "--algo",
        "fixedn",
        "--epsilon",
        "0.2",
        "--m",
        "256",
        "--n",
        "8192",
        "--dist",
        "uniform",
        "--trials",
        "3",
        "--seed",
        "21",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let cfg = EvalConfig {
        algo: Algorithm::FixedN,
        epsilon: 0.2,
        m: Some(256),
        n: 8192,
        seed: 21,
        stream: StreamSpec::new(parse_dist("uniform", 8192).unwrap(), 8192, 21),
        probes: default_probes(8192, 256),
        phis: default_phis(),
        trials: 3,
        reservoir_k: None,
    };
    let lib_json = run_eval(&cfg).unwrap().to_json_string();
    assert_eq!(fs::read_to_string(&path).unwrap(), lib_json);
}

#[test]
fn bench_report_is_reproducible_and_schema_complete() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = qs(&[
            "bench",
            "--algo",
            "online",
            "--epsilon",
            "0.25",
            "--m",
            "64",
            "--n",
            "100000",
            "--dist",
            "uniform",
            "--seed",
            "3",
            "--format",
            "json",
            "--flatness",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    for key in [
        "peak_tuples",
        "peak_tuples_steady",
        "max_item_gk_inserts",
        "work_histogram",
        "row_birth_queries",
        "flatness",
    ] {
        assert!(!report[key].is_null(), "missing bench field {}", key);
    }
    assert!(
        report.get("items_per_sec").is_none(),
        "timing leaked into the report"
    );
}

#[test]
fn reservoir_baseline_runs_space_matched() {
    let out = qs(&[
        "eval",
        "--algo",
        "reservoir-baseline",
        "--epsilon",
        "0.25",
        "--m",
        "64",
        "--n",
        "4096",
        "--dist",
        "sorted",
        "--trials",
        "2",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["reservoir_k"].as_u64().unwrap() > 0);
}

#[test]
fn goodness_reports_rows_and_honors_scale_cap() {
    let out = qs(&[
        "goodness",
        "--epsilon",
        "0.25",
        "--m",
        "64",
        "--n",
        "8192",
        "--trials",
        "5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["d"].as_u64(), Some(2));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows[0]["sampled"].as_bool(), Some(false));
    assert_eq!(rows[0]["size_events"].as_u64(), Some(0));
    assert_eq!(rows[0]["rank_events"].as_u64(), Some(0));
    let recent = report["recent_rows"].as_array().unwrap();
    assert_eq!(recent.len(), 2);

    let guarded = Command::new(env!("CARGO_BIN_EXE_qs"))
        .args([
            "goodness",
            "--epsilon",
            "0.25",
            "--m",
            "64",
            "--n",
            "8192",
            "--trials",
            "2",
        ])
        .env("QS_SCALE_CAP", "4096")
        .output()
        .unwrap();
    assert_eq!(guarded.status.code(), Some(2));
}
