use std::path::Path;
use std::process::{Command, Output};

fn msi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msi"))
        .args(args)
        .env_remove("MSI_FIXTURES")
        .output()
        .expect("msi binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn line<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .unwrap_or_else(|| panic!("no `{key}` line in:\n{text}"))
        .trim()
}

fn numbers(s: &str) -> Vec<f64> {
    s.split(',').map(|v| v.trim().parse().unwrap()).collect()
}

fn export(dir: &Path) {
    stdout(&msi(&["fixtures", "export", dir.to_str().unwrap()]));
}

#[test]
fn estimate_reports_scale_ratios_of_the_vertical_strips() {
    let text = stdout(&msi(&["estimate", "--series", "table1", "--segments", "3", "--end", "52", "--lambda-out", "--digits", "3"]));
    assert_eq!(numbers(line(&text, "breakpoints:")), [0.0, 14.0, 31.0, 52.0]);
    assert_eq!(numbers(line(&text, "lambda:")), [1.214, 1.235]);
}

#[test]
fn estimate_with_partitions_gives_the_published_axis_hurst() {
    let text = stdout(&msi(&["estimate", "--series", "table1", "--end", "52", "--partitions", "table3", "--published"]));
    assert_eq!(numbers(line(&text, "interval_hurst:")), [1.41, 1.46]);
    assert_eq!(numbers(line(&text, "hurst:")), [1.435]);
    assert_eq!(numbers(line(&text, "lambda_axis:")), [1.224]);
}

#[test]
fn estimate_reads_series_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let values: Vec<String> = (1..=30).map(|i| (i * i).to_string()).collect();
    std::fs::write(&path, values.join(",")).unwrap();
    let text = stdout(&msi(&["estimate", "--series", path.to_str().unwrap(), "--segments", "2", "--lambda-out"]));
    assert_eq!(numbers(line(&text, "breakpoints:")).len(), 3);
}

#[test]
fn predict_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let report = dir.path().join("report.json");
    let model = dir.path().join("published.json");
    let text = stdout(&msi(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--rects",
        "table10",
        "--report",
        report.to_str().unwrap(),
        "--digits",
        "1",
    ]));
    assert_eq!(line(&text, "mape:"), "10.5");
    assert_eq!(line(&text, "lewis:"), "good");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["lewis"], "good");
    assert!((json["mape"].as_f64().unwrap() - 10.485).abs() < 0.01);
    assert_eq!(json["rectangles"].as_array().unwrap().len(), 9);
    assert!(json["rectangles"][0]["abs_rel_error"].is_null());
}

#[test]
fn evaluate_scores_the_published_predictions() {
    let text = stdout(&msi(&["evaluate", "--table", "table11", "--exclude", "1", "--digits", "2"]));
    assert_eq!(line(&text, "mape:"), "10.49");
    assert_eq!(line(&text, "lewis:"), "good");
}

#[test]
fn simulation_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        stdout(&msi(&[
            "simulate",
            "--hprime",
            "0.5,0.5",
            "--grid",
            "16x16",
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "42");
    assert_eq!(a, run("b.csv", "42"));
    assert_ne!(a, run("c.csv", "43"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 16);
    assert!(text.lines().all(|l| l.split(',').count() == 16));
}

#[test]
fn simulate_refuses_a_non_simulatable_model() {
    let dir = tempfile::tempdir().unwrap();
    export(dir.path());
    let model = dir.path().join("published.json");
    let out = msi(&["simulate", "--model", model.to_str().unwrap(), "--grid", "4x4"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.14"));
}

#[test]
fn spectrum_emits_a_density_table() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(
        &model,
        r#"{"lambda1":1.5,"lambda2":1.5,"H1":0.5,"H2":0.5,"Hprime1":[0.5,0.5],"Hprime2":[0.5,0.5],"breakpoints_a":[0,1,2],"breakpoints_b":[0,1,2]}"#,
    )
    .unwrap();
    let text = stdout(&msi(&[
        "spectrum",
        "--model",
        model.to_str().unwrap(),
        "--period",
        "2x2",
        "--lags",
        "1x1",
        "--resolution",
        "8",
    ]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j1,j2,omega1,omega2,re,im"));
    assert_eq!(lines.count(), 4 * 8 * 8);
}

#[test]
fn fixtures_validate_and_list() {
    let text = stdout(&msi(&["fixtures", "validate"]));
    assert!(!text.is_empty());
    let list = stdout(&msi(&["fixtures", "list"]));
    for n in 1..=12 {
        assert!(list.contains(&format!("table{n}")), "table{n} missing from:\n{list}");
    }
}

#[test]
fn fixture_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("table11.csv"), "10,20\n10,22\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_msi"))
        .args(["evaluate", "--table", "table11", "--exclude", "1", "--digits", "1"])
        .env("MSI_FIXTURES", dir.path())
        .output()
        .unwrap();
    assert_eq!(line(&stdout(&out), "mape:"), "10.0");
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["estimate"],
        vec!["simulate", "--hprime", "0.5", "--grid", "2x2"],
        vec!["predict", "--model", "m.json", "--rects", "table10", "--initial", "0,1"],
        vec!["bogus"],
    ] {
        let out = msi(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn runtime_errors_exit_with_one() {
    let out = msi(&["predict", "--model", "/nonexistent/model.json", "--rects", "table10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}
