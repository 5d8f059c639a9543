use std::path::Path;
use std::process::{Command, Output};

use stace_harness::output::read_report_json;

fn stace(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stace"))
        .args(args)
        .current_dir(dir)
        .env_remove("STACE_WORKERS")
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &["--n-c", "64", "--frames", "300", "--seed", "5"];

#[test]
fn run_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "run",
        "--coding",
        "sfbc2",
        "--method",
        "selective_ace",
        "--iterations",
        "3",
        "--verify",
    ];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(&["--out", "curve.csv"]);
    let out = stace(&args, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("threshold_db,ccdf"));
    assert_eq!(lines.count(), 91);

    let report = read_report_json(&dir.path().join("curve.json")).unwrap();
    assert_eq!(report.curve.n_frames, 300);
    assert_eq!(report.bit_errors, Some(0));
    assert_eq!(report.config.iterations, 3);
    assert_eq!(report.papr_at.len(), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("wall time"));
    assert!(!std::fs::read_to_string(dir.path().join("curve.json"))
        .unwrap()
        .contains("wall_time"));
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["run"];
    args.extend_from_slice(SMALL);
    let out = stace(&args, dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("threshold_db,ccdf\n4.0,1.0\n"));
}

#[test]
fn invalid_config_exits_nonzero_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = stace(
        &[
            "run", "--coding", "stbc2", "--method", "sub_ace", "--n-c", "6", "--frames", "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid_config");
    assert_eq!(err["violations"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "coding = \"stbc4\"\nmethod = \"ace\"\niterations = 2\nn_c = 32\nframes = 40\nseed = 11\n",
    )
    .unwrap();
    let out = stace(
        &["run", "--config", "exp.toml", "--frames", "25", "--out", "c.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_report_json(&dir.path().join("c.json")).unwrap();
    assert_eq!(r.curve.n_frames, 25);
    assert_eq!(r.config.seed, 11);
    assert_eq!(r.config.iterations, 2);
}

#[test]
fn worker_count_does_not_change_output() {
    let mut outputs = Vec::new();
    for w in ["1", "3"] {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec![
            "run",
            "--coding",
            "sfbc4",
            "--method",
            "sub_ace",
            "--iterations",
            "2",
            "--workers",
            w,
            "--out",
            "c.csv",
        ];
        args.extend_from_slice(SMALL);
        let out = stace(&args, dir.path());
        assert!(out.status.success());
        outputs.push((
            std::fs::read(dir.path().join("c.csv")).unwrap(),
            std::fs::read(dir.path().join("c.json")).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn compare_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (name, method, iters) in [("plain", "none", "0"), ("ace", "ace", "4")] {
        let csv = format!("{name}.csv");
        let mut args = vec!["run", "--method", method, "--iterations", iters, "--out", &csv];
        args.extend_from_slice(SMALL);
        assert!(stace(&args, dir.path()).status.success());
    }
    let out = stace(
        &[
            "compare",
            "--probability",
            "0.1",
            "plain.json",
            "reduced=ace.json",
            "--out",
            "cmp.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("cmp.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["kind", "label", "reference", "papr_db", "delta_db", "status"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[2][0], "delta");
    assert_eq!(&rows[2][1], "reduced");
    assert_eq!(&rows[2][2], "plain");
    assert!(rows[2][4].parse::<f64>().unwrap() < 0.0);

    // 300 samples cannot reach 1e-4: flagged, not fatal
    let out = stace(&["compare", "--probability", "1e-4", "plain.json"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("out_of_range"));
}
