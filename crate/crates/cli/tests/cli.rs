use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use isocorr::correlate::{correlations, BasisStrategy};
use isocorr::region::staple;
use isocorr::TolerancePolicy;
use serde_json::Value;
use tempfile::NamedTempFile;

fn region(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../regions")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isocorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(args: &[&str], file: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.insert(1, file.to_str().unwrap());
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn temp_region(json: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(json.as_bytes()).unwrap();
    f
}

fn csv_column(out: &str, col: usize) -> Vec<f64> {
    out.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn square_csv_has_the_golden_entry() {
    let o = run_on(&["correlations"], &region("square"));
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("j,k,correlation\n"));
    assert!(out.contains("\n1,2,0.41421356"), "{out}");
}

#[test]
fn staple_json_round_trips_exactly() {
    let o = run_on(
        &["correlations", "--basis", "derivative", "--format", "json"],
        &region("staple"),
    );
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 6);
    let expected = correlations(
        &staple(),
        &BasisStrategy::Derivative(1),
        &TolerancePolicy::default(),
    )
    .unwrap()
    .to_rows();
    let parsed: Vec<Vec<f64>> = serde_json::from_value(v["correlations"].clone()).unwrap();
    assert_eq!(parsed, expected);
}

#[test]
fn fixed_point_is_rejected() {
    let f = temp_region(r#"{"n": 1, "tau": [1, 2], "theta": [0.0, 1.5707963267948966]}"#);
    let o = run_on(&["correlations"], f.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fixed-point"), "{}", stderr(&o));
}

#[test]
fn malformed_files_exit_2() {
    for json in [
        "not json",
        r#"{"n": 2}"#,
        r#"{"n": 2, "tau": [3, 4, 1], "theta": [0, 1, 2, 3]}"#,
        r#"{"n": 2, "theta": [0, 1, 2, 3]}"#,
        r#"{"n": 2, "tau": [3, 4, 1, 2], "theta": [0, 1, 2, 3], "extra": 1}"#,
    ] {
        let f = temp_region(json);
        assert_eq!(
            run_on(&["correlations"], f.path()).status.code(),
            Some(2),
            "{json}"
        );
    }
    assert_eq!(
        run(&["correlations", "/no/such/file.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn vectors_input_matches_theta_input() {
    let f = temp_region(r#"{"n": 2, "vectors": [[1, 0], [0, 1], [-1, 0], [0, -1]]}"#);
    let a = run_on(&["correlations"], f.path());
    let b = run_on(&["correlations"], &region("square"));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn alternating_region_without_a_usable_basis_is_numerical_failure() {
    let o = run_on(&["correlations", "--basis", "fourier"], &region("staple"));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn regular_closed_values() {
    let two = csv_column(&stdout(&run(&["regular", "2"])), 1);
    assert_eq!(two[0], 1.0);
    assert!((two[1] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
    let three = csv_column(&stdout(&run(&["regular", "3"])), 1);
    assert_eq!(three[0], 1.0);
    assert!(three[1..].iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn regular_modes_agree() {
    let o = run(&["regular", "6", "--mode", "both", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_diff"].as_f64().unwrap() <= 1e-9);
    assert_eq!(run(&["regular", "0"]).status.code(), Some(2));
    assert_eq!(run(&["regular", "minus"]).status.code(), Some(2));
}

#[test]
fn oracle_agrees_on_regular_polygons() {
    let o = run_on(&["oracle", "--format", "json"], &region("square"));
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_diff"].as_f64().unwrap() <= 1e-12);
    assert_eq!(
        run_on(&["oracle"], &region("hexagon")).status.code(),
        Some(0)
    );
}

#[test]
fn oracle_rejects_broken_shape() {
    // θ_3 should be θ_1 + π/2
    let f = temp_region(r#"{"n": 2, "tau": [3, 4, 1, 2], "theta": [0.0, 0.7, 1.2, 2.27]}"#);
    assert_eq!(run_on(&["oracle"], f.path()).status.code(), Some(2));
}

#[test]
fn oracle_disagreement_exits_4() {
    let o = run_on(&["oracle", "--tol", "1e-30"], &region("hexagon"));
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("entry ("), "{}", stderr(&o));
}

#[test]
fn limit_table() {
    let o = run(&["limit", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("n,scaled,limit,abs_error\n"));
    assert!(csv_column(&out, 2).iter().all(|&l| l == 1.0));
    let errors = csv_column(&out, 3);
    assert!(errors.windows(2).all(|w| w[1] < w[0]));
    assert!(*errors.last().unwrap() <= 0.02);
    assert_eq!(run(&["limit", "1.5"]).status.code(), Some(2));
    assert_eq!(
        run(&["limit", "0.5", "--n", "128,64"]).status.code(),
        Some(2)
    );
}

#[test]
fn check_passes_on_sample_regions() {
    for name in ["square", "hexagon", "staple"] {
        let o = run_on(&["check"], &region(name));
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stdout(&o));
        let out = stdout(&o);
        for inv in [
            "orthogonality",
            "bk-identity",
            "basis-equivalence",
            "recursion-identity",
            "oracle",
        ] {
            assert!(out.contains(&format!("{inv}: PASS")), "{name}: {out}");
        }
    }
    assert!(stdout(&run_on(&["check"], &region("staple"))).contains("5 edges"));
}

#[test]
fn check_rejects_corrupted_matching() {
    let f = temp_region(r#"{"n": 2, "tau": [2, 3, 4, 1], "theta": [0, 1, 2, 3]}"#);
    assert_eq!(run_on(&["check"], f.path()).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    for args in [
        &["oracle", "--seed", "5"][..],
        &["check"][..],
        &["correlations"][..],
    ] {
        let a = run_on(args, &region("staple"));
        let b = run_on(args, &region("staple"));
        assert_eq!(a.stdout, b.stdout);
    }
    let seq = run_on(&["oracle", "--sequential"], &region("staple"));
    let par = run_on(&["oracle"], &region("staple"));
    assert_eq!(seq.stdout, par.stdout);
}

#[test]
fn check_names_the_first_failure() {
    let o = run_on(&["check", "--tol", "1e-30"], &region("hexagon"));
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("basis-equivalence"), "{}", stderr(&o));
    assert_eq!(
        run_on(&["check", "--tol", "0"], &region("hexagon"))
            .status
            .code(),
        Some(2)
    );
}
