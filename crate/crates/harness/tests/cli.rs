use logkant::Family;
use logkant_harness::{CheckId, ExperimentReport, Record, Verdict};
use std::path::Path;
use std::process::{Command, Output};

fn logkant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logkant")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn load(dir: &Path) -> ExperimentReport {
    ExperimentReport::load(&dir.join("report.json")).unwrap()
}

#[test]
fn empty_check_list_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = logkant(&["suite", "--checks", "", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(load(dir.path()).records.is_empty());
}

#[test]
fn preservation_run_writes_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = logkant(&[
        "suite", "--checks", "converge", "--function", "lnmu", "--n-schedule", "4,16,64,256,1024",
        "--out", out, "--format", "json,csv,svg",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = load(dir.path());
    assert_eq!(report.records.len(), 5);
    assert!(report.records.iter().all(|r| r.value.unwrap() < 1e-11 && r.verdict == Verdict::Pass));

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "check,family,n,mu,function,metric,value,bound,verdict");
    assert_eq!(csv.lines().count(), 6);
    let svg = std::fs::read_to_string(dir.path().join("converge.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    // json -> load -> json is byte-identical.
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert_eq!(ExperimentReport::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_file = dir.path().join("bad.conf");
    std::fs::write(&bad_file, "check = converge\nwibble = 1\n").unwrap();
    for args in [
        vec!["suite", "--checks", "bogus"],
        vec!["suite", "--n-schedule", "8,4"],
        vec!["suite", "--mu", "-1"],
        vec!["suite", "--function", "sin(("],
        vec!["suite", "--config", bad_file.to_str().unwrap()],
        vec!["suite", "--config", "/nonexistent/config"],
        vec!["suite", "--no-such-flag"],
    ] {
        let o = logkant(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn check_failure_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = logkant(&[
        "suite", "--checks", "voronovskaja", "--function", "sin_pi", "--n-schedule", "2,3,4,5",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let report = load(dir.path());
    assert!(report.failures() > 0);
}

#[test]
fn internal_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = logkant(&["report", "/nonexistent/report.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    // The output directory cannot be created below a regular file.
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let target = file.join("sub");
    let o = logkant(&["suite", "--checks", "", "--out", target.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_file_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let lines = dir.path().join("a.conf");
    let json = dir.path().join("b.json");
    std::fs::write(&lines, "# basis check only\ncheck = basis-inequality\nn = 2\nn = 8\nn = 32\nseed = 9\n").unwrap();
    std::fs::write(&json, r#"{"checks": ["basis-inequality"], "n_schedule": [2, 8, 32], "seed": 9}"#).unwrap();
    let mut reports = Vec::new();
    for (cfg, sub) in [(&lines, "a"), (&json, "b")] {
        let out = dir.path().join(sub);
        let o = logkant(&["suite", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        reports.push(load(&out));
    }
    assert_eq!(reports[0].metadata.config_hash, reports[1].metadata.config_hash);
    assert_eq!(reports[0].normalized().records, reports[1].normalized().records);
}

#[test]
fn report_rerenders_saved_json() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = logkant(&[
        "suite", "--checks", "constants", "--n-schedule", "16,32,64,128", "--out", first.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let second = dir.path().join("second");
    let o = logkant(&[
        "report", first.join("report.json").to_str().unwrap(), "--out", second.to_str().unwrap(),
        "--format", "json,csv,svg",
    ]);
    assert_eq!(code(&o), 0);
    let a = std::fs::read(first.join("report.json")).unwrap();
    let b = std::fs::read(second.join("report.json")).unwrap();
    assert_eq!(a, b);
    assert!(second.join("constants.svg").exists());
    assert!(second.join("report.csv").exists());
}

#[test]
fn eval_and_constants_print_tables() {
    let o = logkant(&["eval", "--function", "lnmu", "--n-schedule", "8", "--x", "0,0.5,1"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);

    let o = logkant(&["eval", "--function", "x^2", "--n-schedule", "4,8", "--format", "json", "--family", "classical-bernstein"]);
    assert_eq!(code(&o), 0);
    let rows: Vec<serde_json::Value> = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rows.len(), 10);
    // B_n x^2 = x^2 + x(1-x)/n
    let r = &rows[2];
    assert_eq!(r["x"].as_f64().unwrap(), 0.5);
    assert!((r["value"].as_f64().unwrap() - (0.25 + 0.25 / 4.0)).abs() < 1e-15);

    let o = logkant(&["constants", "--n-schedule", "1,16,256", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("n,mu,k_mu,gamma_n,t_n,lambda_n,gamma_n_cap"));
}

fn synthetic(n: u64, value: f64, function: &str) -> Record {
    Record {
        check: CheckId::Converge,
        family: Some(Family::LogKantorovich),
        n: Some(n),
        mu: 1.0,
        function: Some(function.into()),
        metric: "sup_error".into(),
        value: Some(value),
        bound: None,
        tolerance: 0.0,
        verdict: Verdict::Info,
        wall_time: 0.0,
        note: None,
    }
}

#[test]
fn svg_annotates_the_fitted_slope() {
    let mut records: Vec<Record> = [16u64, 32, 64, 128, 256].iter().map(|&n| synthetic(n, 3.0 / n as f64, "c/n")).collect();
    records.extend([16u64, 64].iter().map(|&n| synthetic(n, 1.0 / (n as f64).sqrt(), "two points")));
    let svg = logkant_harness::svg::render(&records, CheckId::Converge);
    assert!(svg.contains("slope -1.00 ± 0.01"), "{svg}");
    assert!(svg.contains("slope n/a"));
    let empty = logkant_harness::svg::render(&records, CheckId::Lp);
    assert!(empty.contains("no plottable series"));
}
