use std::collections::BTreeSet;

use superconc::experiment::{
    all_pass, emit_report, read_report, run_scenario, OutputFormat, ReportRow, Scenario, ScenarioConfig,
    ScenarioParams, CATALOG, CSV_HEADER,
};

fn config(name: &str, params: &ScenarioParams, grid: Vec<u64>, reps: usize) -> ScenarioConfig {
    ScenarioConfig::new(Scenario::parse(name, params).unwrap(), grid, reps, 42)
}

fn sample_rows() -> Vec<ReportRow> {
    run_scenario(&config("uniform-max-variance", &ScenarioParams::default(), vec![1, 10], 1000)).unwrap()
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_report(&[], OutputFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim_end(), CSV_HEADER.join(","));
    assert!(read_report(&path, OutputFormat::Csv).unwrap().is_empty());
}

#[test]
fn csv_round_trip_is_exact() {
    let rows = sample_rows();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    emit_report(&rows, OutputFormat::Csv, &path).unwrap();
    let back = read_report(&path, OutputFormat::Csv).unwrap();
    assert_eq!(rows, back);
}

#[test]
fn json_lines_round_trip_with_identical_keys() {
    let rows = sample_rows();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.jsonl");
    emit_report(&rows, OutputFormat::JsonLines, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut keysets = BTreeSet::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        keysets.insert(v.as_object().unwrap().keys().cloned().collect::<Vec<_>>());
    }
    assert_eq!(keysets.len(), 1);
    assert_eq!(read_report(&path, OutputFormat::JsonLines).unwrap(), rows);
}

#[test]
fn io_errors_name_the_path() {
    let path = std::path::Path::new("/nonexistent-dir/report.csv");
    let err = emit_report(&[], OutputFormat::Csv, path).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/report.csv"));
}

fn csv_without_wall_time(rows: &[ReportRow]) -> String {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let mut rows = rows.to_vec();
    rows.iter_mut().for_each(|r| r.wall_ms = 0);
    emit_report(&rows, OutputFormat::Csv, &path).unwrap();
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn identical_config_gives_identical_bytes() {
    let params = ScenarioParams::default();
    let mut a = config("gaussian-max-variance", &params, vec![16, 64, 256], 2000);
    a.shards = Some(1);
    let mut b = a.clone();
    b.shards = Some(4);
    let ra = csv_without_wall_time(&run_scenario(&a).unwrap());
    assert_eq!(ra, csv_without_wall_time(&run_scenario(&a).unwrap()));
    assert_eq!(ra, csv_without_wall_time(&run_scenario(&b).unwrap()));
}

#[test]
fn every_variance_scenario_dominates() {
    let params = ScenarioParams {
        alpha: Some(3.0),
        ..ScenarioParams::default()
    };
    for name in [
        "gaussian-max-variance",
        "gaussian-median-variance",
        "uniform-max-variance",
        "beta-max-majorant",
        "alpha-max-variance",
        "lp-norm-variance",
    ] {
        let rows = run_scenario(&config(name, &params, vec![16, 64, 256], 4000)).unwrap();
        let bounds: Vec<_> = rows.iter().filter(|r| r.kind.contains("bound") || r.kind == "dominance").collect();
        assert!(!bounds.is_empty(), "{name}");
        assert!(bounds.iter().all(|r| r.pass == Some(true)), "{name}: {bounds:?}");
    }
}

#[test]
fn auto_p_is_recorded_per_row() {
    let rows = run_scenario(&config("lp-norm-variance", &ScenarioParams::default(), vec![256, 1024], 500)).unwrap();
    for r in rows.iter().filter(|r| r.kind == "variance") {
        let expected = (2.0 * (r.n as f64).ln()).ceil();
        assert!(r.param.contains("c=2"), "{}", r.param);
        assert!(r.param.contains(&format!("p_n={expected}")), "{}", r.param);
    }
}

#[test]
fn gamma_tail_signatures() {
    let rows = run_scenario(&config("gamma-max-tails", &ScenarioParams::default(), vec![10_000], 100_000)).unwrap();
    let get = |kind: &str| rows.iter().find(|r| r.kind == kind).unwrap();
    assert!(get("right-rate").value > 0.0);
    assert!(get("left-double-log-slope").value > 0.0);
}

#[test]
fn pushforward_and_harris_pass() {
    let params = ScenarioParams {
        source: Some("exp".into()),
        target: Some("uniform".into()),
        ..ScenarioParams::default()
    };
    assert!(all_pass(&run_scenario(&config("pushforward-validate", &params, vec![1], 20_000)).unwrap()));
    assert!(all_pass(&run_scenario(&config("harris-sanity", &params, vec![1, 5], 5000)).unwrap()));
}

#[test]
fn coulomb_rejects_undefined_renormalization() {
    let cfg = config("coulomb-max", &ScenarioParams::default(), vec![100, 1000], 200);
    assert!(matches!(run_scenario(&cfg), Err(superconc::Error::TooSmallN { n: 100, .. })));
}

#[test]
fn every_catalog_scenario_runs() {
    let params = ScenarioParams {
        alpha: Some(2.5),
        ..ScenarioParams::default()
    };
    for (name, _) in CATALOG {
        let grid = if *name == "coulomb-max" { vec![1000, 2000] } else { vec![32, 64] };
        let rows = run_scenario(&config(name, &params, grid, 1000)).unwrap();
        assert!(!rows.is_empty(), "{name}");
        assert!(rows.iter().all(|r| r.scenario == *name));
    }
}
