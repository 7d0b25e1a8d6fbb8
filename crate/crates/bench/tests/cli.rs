use std::fs;
use std::path::{Path, PathBuf};

use glr_bench::cli::main_with_args;
use glr_core::scenario::{Family, GeneratorSpec, Range};
use tempfile::TempDir;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["glr-bench"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_spec(dir: &Path, spec: &GeneratorSpec) -> PathBuf {
    let path = dir.join("spec.json");
    fs::write(&path, serde_json::to_string(spec).unwrap()).unwrap();
    path
}

/// Straight overtakes with a fixed 20 m lateral gap.
fn zero_risk_suite(dir: &Path, count: usize) -> PathBuf {
    let mut spec = GeneratorSpec::new(Family::StraightOvertake, count, 3);
    spec.lateral_offset_range = Range::new(20.0, 20.0);
    let spec_path = write_spec(dir, &spec);
    let out = dir.join("zero");
    let (code, _, err) = run(&["generate", "--spec", p(&spec_path), "--seed", "3", "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    out
}

fn json_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn generate_writes_identical_files() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let (code, out, _) = run(&["generate", "--family", "straight", "--count", "50", "--seed", "7", "--out", p(dir)]);
        assert_eq!(code, 0);
        assert!(out.contains("50 scenarios") && out.contains("seed 7"), "{out}");
    }
    let fa = json_files(&a);
    assert_eq!(fa.len(), 50);
    for (x, y) in fa.iter().zip(json_files(&b)) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    let (code, _, err) = run(&["generate", "--family", "zigzag", "--out", p(tmp.path())]);
    assert_eq!(code, 1, "{err}");
    assert!(err.contains("zigzag"));
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["evaluate"]).0, 1);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("evaluate"));
}

#[test]
fn oracle_cache_is_reused_and_keyed_by_config() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    run(&["generate", "--family", "lane_change", "--count", "4", "--seed", "1", "--out", p(&dir)]);
    let (code, out, err) = run(&["oracle", "--scenarios", p(&dir), "--jobs", "1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("4 computed, 0 cached"), "{out}");
    let cache = fs::read(dir.join("ground_truth.json")).unwrap();

    let (_, out, _) = run(&["oracle", "--scenarios", p(&dir)]);
    assert!(out.contains("0 computed, 4 cached"), "{out}");
    assert_eq!(fs::read(dir.join("ground_truth.json")).unwrap(), cache);

    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"oracle": {"sample_count": 500}}"#).unwrap();
    let (_, out, _) = run(&["oracle", "--scenarios", p(&dir), "--config", p(&cfg)]);
    assert!(out.contains("4 computed, 0 cached"), "{out}");
    let (_, out, _) = run(&["oracle", "--scenarios", p(&dir), "--seed", "9"]);
    assert!(out.contains("4 computed"), "{out}");
}

#[test]
fn oracle_lists_unreadable_scenarios_and_fails_at_end() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("s");
    run(&["generate", "--family", "straight", "--count", "2", "--seed", "1", "--out", p(&dir)]);
    fs::write(dir.join("broken.json"), "{\"id\": \"x\", ").unwrap();
    let (code, out, _) = run(&["oracle", "--scenarios", p(&dir)]);
    assert_eq!(code, 2);
    assert!(out.contains("2 computed"), "{out}");
    assert!(out.contains("broken.json"), "{out}");
}

#[test]
fn evaluate_zero_risk_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let dir = zero_risk_suite(tmp.path(), 6);
    assert_eq!(run(&["oracle", "--scenarios", p(&dir)]).0, 0);
    let rep1 = tmp.path().join("r1/report.csv");
    let (code, out, err) = run(&["evaluate", "--scenarios", p(&dir), "--methods", "glr", "--out", p(&rep1)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("glr"));
    let mut rdr = csv::Reader::from_path(&rep1).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        ["method", "mae", "mae_std", "mean_runtime_us", "p99_runtime_us", "loop_rate_hz", "saturation_count"]
    );
    let row = rdr.records().next().unwrap().unwrap();
    let mae: f64 = row[1].parse().unwrap();
    assert!(mae < 1e-6, "{mae}");

    // estimates do not depend on the run or the worker count
    let all = "glr,qmlgl,vspf,riskdensity,dbiub,mi,maxcircle";
    let a = tmp.path().join("a/report.csv");
    let b = tmp.path().join("b/report.csv");
    run(&["evaluate", "--scenarios", p(&dir), "--methods", all, "--out", p(&a), "--jobs", "1"]);
    run(&["evaluate", "--scenarios", p(&dir), "--methods", all, "--out", p(&b), "--jobs", "3"]);
    assert_eq!(
        fs::read(tmp.path().join("a/report_scenarios.csv")).unwrap(),
        fs::read(tmp.path().join("b/report_scenarios.csv")).unwrap()
    );
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("a/report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["glr"]["n1"], 12);
}

#[test]
fn evaluate_requires_ground_truth() {
    let tmp = TempDir::new().unwrap();
    let dir = zero_risk_suite(tmp.path(), 2);
    let out = tmp.path().join("r.csv");
    let (code, _, err) = run(&["evaluate", "--scenarios", p(&dir), "--out", p(&out)]);
    assert_eq!(code, 2, "{err}");
    run(&["oracle", "--scenarios", p(&dir)]);
    let (code, _, err) = run(&["evaluate", "--scenarios", p(&dir), "--out", p(&out), "--seed", "5"]);
    assert_eq!(code, 2);
    assert!(err.contains("straight_overtake-3-0000"), "{err}");
    let (code, _, _) = run(&["evaluate", "--scenarios", p(&dir), "--out", p(&out), "--methods", "glr,nope"]);
    assert_eq!(code, 1);
}

struct CurveFile {
    header: String,
    rows: Vec<(String, f64, f64, f64, f64)>,
}

fn read_curve(path: &Path) -> CurveFile {
    let text = fs::read_to_string(path).unwrap();
    let (header, body) = text.split_once('\n').unwrap();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["grid", "t", "pcol", "hazard", "cumulative_hazard"]
    );
    let rows = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap(), r[4].parse().unwrap())
        })
        .collect();
    CurveFile { header: header.to_string(), rows }
}

#[test]
fn inspect_zero_risk_curve() {
    let tmp = TempDir::new().unwrap();
    let dir = zero_risk_suite(tmp.path(), 1);
    let file = json_files(&dir).remove(0);
    let out = tmp.path().join("curve.csv");
    let (code, _, err) = run(&["inspect", "--scenario", p(&file), "--out", p(&out)]);
    assert_eq!(code, 0, "{err}");
    let c = read_curve(&out);
    assert!(c.header.contains("saturated=false"));
    assert_eq!(c.rows.iter().filter(|r| r.0 == "node").count(), 24);
    assert_eq!(c.rows.iter().filter(|r| r.0 == "dense").count(), 512);
    for r in &c.rows {
        assert!(r.2 < 1e-12 && r.3 < 1e-12 && r.4 < 1e-12, "{r:?}");
    }
}

#[test]
fn inspect_saturated_curve_and_hazard_identity() {
    let tmp = TempDir::new().unwrap();
    // identical starting poses: near-certain overlap at the first nodes
    let mut spec = GeneratorSpec::new(Family::StraightOvertake, 1, 4);
    spec.lateral_offset_range = Range::new(0.0, 0.0);
    spec.pass_time_range = Range::new(0.0, 0.0);
    let spec_path = write_spec(tmp.path(), &spec);
    let dir = tmp.path().join("sat");
    run(&["generate", "--spec", p(&spec_path), "--seed", "4", "--out", p(&dir)]);
    let file = json_files(&dir).remove(0);
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"glr": {"pcol_clip": 0.999}}"#).unwrap();
    let out = tmp.path().join("curve.csv");
    let (code, _, err) = run(&["inspect", "--scenario", p(&file), "--out", p(&out), "--config", p(&cfg)]);
    assert_eq!(code, 0, "{err}");
    let c = read_curve(&out);
    assert!(c.header.contains("saturated=true"), "{}", c.header);
    assert!(c.header.contains("total_probability=1 "), "{}", c.header);
    assert!(c.rows.iter().any(|r| r.4.is_infinite()));
    for r in c.rows.iter().filter(|r| r.2 < 0.999) {
        assert!((r.3 - r.2 / (1.0 - r.2)).abs() <= 1e-12 * (1.0 + r.3), "{r:?}");
    }

    let (code, _, _) = run(&["inspect", "--scenario", p(&file), "--out", p(&out), "--methods", "mi"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["inspect", "--scenario", p(&tmp.path().join("missing.json")), "--out", p(&out)]);
    assert_eq!(code, 2);
}
