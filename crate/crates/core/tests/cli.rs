//! End-to-end tests of the `eldiv` command line: exit codes, output formats
//! and validation of every JSON report against the shipped schema.

use std::io::Write;
use std::process::Command;

use eldiv::cli;
use eldiv::divergence::Family;
use eldiv::inference::{confidence_interval, ScanOptions};
use eldiv::model::{builtin_mean_model, Sample};
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eldiv").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schemas/report.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

/// Run with `--format json`, check the schema, return the parsed report.
fn run_json(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let r = run(&full);
    let v: Value = serde_json::from_str(&r.stdout).unwrap_or_else(|e| panic!("{e}: {}", r.stdout));
    let validator = schema();
    let errors: Vec<String> = validator.iter_errors(&v).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations for {args:?}: {errors:#?}");
    (r.code, v)
}

fn csv_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

const COV_DATA: &str = "1.2\n0.4\n2.5\n0.9\n1.7\n0.3\n1.1\n2.2\n0.6\n1.4\n";
// mean near 0 and variance near 2: compatible with the mean-variance model
const MV_DATA: &str = "-1.5\n0.2\n1.8\n-0.4\n2.6\n0.1\n-2.2\n1.0\n0.7\n-0.9\n";

#[test]
fn estimate_newcomb_day2_mean() {
    let (code, v) = run_json(&["estimate", "--data", "newcomb:day2"]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "estimate");
    let theta = v["results"]["theta_hat"][0].as_f64().unwrap();
    assert!((theta - 28.55).abs() < 1e-10, "{theta}");
    assert_eq!(v["results"]["dataset"]["n"], 20);
    assert_eq!(v["results"]["dataset"]["source"], "embedded");
}

#[test]
fn newcomb_all_has_66_observations() {
    let (_, v) = run_json(&["estimate", "--data", "newcomb:all"]);
    assert_eq!(v["results"]["dataset"]["n"], 66);
}

#[test]
fn ci_rows_match_the_library_in_family_then_level_order() {
    let (code, v) =
        run_json(&["ci", "--data", "newcomb:day2", "--renyi", "-1,-0.5,0,0.5,1,1.5,2.5", "--level", "0.9,0.95"]);
    assert_eq!(code, 0);
    let rows = v["results"]["intervals"].as_array().unwrap();
    assert_eq!(rows.len(), 14);
    let sample = Sample::from_scalars(&eldiv::cli::data::NEWCOMB_DAY2).unwrap();
    let model = builtin_mean_model();
    let mut i = 0;
    for a in [-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.5] {
        for level in [0.9, 0.95] {
            let expect = confidence_interval(&model, &sample, &Family::renyi(a), level, &ScanOptions::default()).unwrap();
            let row = &rows[i];
            assert_eq!(row["family"], expect.family.as_str());
            assert_eq!(row["level"].as_f64().unwrap(), level);
            // serde_json's default float parser may be off by one ulp
            assert!((row["lower"].as_f64().unwrap() - expect.lower).abs() <= 1e-12 * expect.lower.abs());
            assert!((row["upper"].as_f64().unwrap() - expect.upper).abs() <= 1e-12 * expect.upper.abs());
            i += 1;
        }
    }
}

#[test]
fn empty_family_list_is_a_usage_error() {
    let r = run(&["ci", "--data", "newcomb:day2", "--renyi", ""]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--renyi"), "{}", r.stderr);
    let (code, v) = run_json(&["ci", "--data", "newcomb:day2", "--lambda", ""]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "error");
    assert_eq!(v["error"]["exit_code"], 2);
}

#[test]
fn clap_errors_exit_2_and_help_exits_0() {
    assert_eq!(run(&["bogus"]).code, 2);
    assert_eq!(run(&["ci"]).code, 2);
    assert_eq!(run(&["ci", "--data", "newcomb:day2", "--model", "quadratic"]).code, 2);
    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("simulate"));
}

#[test]
fn parse_error_reports_row_and_exits_2() {
    let f = csv_file("1\nabc\n3\n");
    let (code, v) = run_json(&["estimate", "--data", f.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "ParseError");
    assert_eq!(v["error"]["row"], 2);
    let nan = csv_file("1\n2\nNaN\n");
    assert_eq!(run(&["estimate", "--data", nan.path().to_str().unwrap()]).code, 2);
}

#[test]
fn header_flag_skips_the_first_row() {
    let f = csv_file("x\n1\n2\n4\n");
    let path = f.path().to_str().unwrap();
    assert_eq!(run(&["estimate", "--data", path]).code, 2);
    let (code, v) = run_json(&["estimate", "--data", path, "--header"]);
    assert_eq!(code, 0);
    assert!((v["results"]["theta_hat"][0].as_f64().unwrap() - 7.0 / 3.0).abs() < 1e-12);
}

#[test]
fn numerical_failure_exits_3() {
    // a constant sample has a singular moment matrix
    let f = csv_file("2\n2\n2\n2\n");
    let (code, v) = run_json(&["estimate", "--data", f.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["exit_code"], 3);
    assert_eq!(v["error"]["kind"], "SingularMatrix");
}

#[test]
fn composite_test_reports_all_four_statistics() {
    let f = csv_file(COV_DATA);
    let (code, v) = run_json(&["test", "--data", f.path().to_str().unwrap(), "--model", "cov"]);
    assert_eq!(code, 0);
    let tests = v["results"]["tests"].as_array().unwrap();
    let kinds: Vec<&str> = tests.iter().map(|t| t["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["phi_divergence", "wald", "score", "lagrange_multiplier"]);
    for t in tests {
        let p = t["pvalue"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert_eq!(t["df"], 1);
    }
}

#[test]
fn incompatible_model_is_a_numerical_failure() {
    // day 3 cannot have variance θ² + 1 at θ ≈ 28 under any reweighting
    let (code, v) = run_json(&["estimate", "--data", "newcomb:day3", "--model", "meanvar"]);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "InfeasibleRegion");
}

#[test]
fn simple_test_infeasible_null_is_reported_not_failed() {
    let (code, v) = run_json(&["test", "--data", "newcomb:day1", "--theta0", "1000"]);
    assert_eq!(code, 0);
    let t = &v["results"]["tests"][0];
    assert_eq!(t["infeasible"], true);
    assert_eq!(t["reject"], true);
    assert!(t["statistic"].is_null());
}

#[test]
fn every_command_emits_schema_valid_json() {
    let f = csv_file(COV_DATA);
    let path = f.path().to_str().unwrap();
    let mv = csv_file(MV_DATA);
    let mv_path = mv.path().to_str().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["estimate", "--data", path, "--model", "cov"],
        vec!["estimate", "--data", mv_path, "--model", "meanvar"],
        vec!["ci", "--data", mv_path, "--model", "meanvar", "--lambda", "-1,1", "--statistic", "S"],
        vec!["test", "--data", "newcomb:day1", "--theta0", "26", "--lambda", "-1,0,1", "--statistic", "T,S"],
        vec!["ci", "--data", path, "--model", "cov", "--statistic", "wald,lm"],
        vec!["power", "--data", "newcomb:day1", "--renyi", "-1,1,2.5"],
        vec!["power", "--data", "newcomb:day1", "--method", "beta2", "--grid", "20,22,24", "--paper-strict"],
        vec!["influence", "--data", "newcomb:day2"],
        vec!["influence", "--data", path, "--model", "cov"],
        vec!["simulate", "--preset", "cov-normal", "--reps", "20", "--statistic", "T,wald"],
        vec!["simulate", "--reps", "20", "--lambda", "0", "--contaminate", "2", "--theta0", "1"],
    ];
    for args in cases {
        let (code, v) = run_json(&args);
        assert_eq!(code, 0, "{args:?}: {v}");
        assert_eq!(v["status"], "ok");
    }
}

#[test]
fn power_default_grid_has_81_points_less_the_null() {
    let (_, v) = run_json(&["power", "--data", "newcomb:day1", "--renyi", "1"]);
    let curve = &v["results"]["curves"][0];
    let points = curve["points"].as_array().unwrap().len();
    let skipped = curve["skipped"].as_array().unwrap().len();
    assert_eq!(points + skipped, 81);
    assert_eq!(skipped, 1, "only the null itself has zero variance");
    let csv = run(&["power", "--data", "newcomb:day1", "--renyi", "-1,1", "--format", "csv"]);
    assert_eq!(csv.code, 0);
    let mut lines = csv.stdout.lines();
    assert_eq!(lines.next(), Some("family,theta_star,beta"));
    assert_eq!(lines.count(), 160);
}

#[test]
fn config_hash_is_stable_and_argument_sensitive() {
    let a = run_json(&["ci", "--data", "newcomb:day2", "--lambda", "0"]).1;
    let b = run_json(&["ci", "--data", "newcomb:day2", "--lambda", "0"]).1;
    let c = run_json(&["ci", "--data", "newcomb:day2", "--lambda", "1"]).1;
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_ne!(a["config_hash"], c["config_hash"]);
    assert_eq!(a["results"], b["results"]);
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let args = ["simulate", "--reps", "40", "--lambda", "0,1", "--seed", "7"];
    let a = run_json(&args).1;
    let b = run_json(&args).1;
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["results"]["cells"].as_array().unwrap().len(), 2);
    assert_eq!(a["results"]["config"]["master_seed"], 7);
}

#[test]
fn csv_and_text_outputs() {
    let r = run(&["ci", "--data", "newcomb:day2", "--lambda", "0,1", "--format", "csv"]);
    assert_eq!(r.code, 0);
    assert!(!r.stdout.contains('\r'));
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "family,level,lower,upper,width,lower_status,upper_status");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("T[lambda=0],0.95,"));
    let t = run(&["estimate", "--data", "newcomb:day2"]);
    assert!(t.stdout.contains("28.550000"), "{}", t.stdout);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_eldiv");
    let ok = Command::new(bin).args(["estimate", "--data", "newcomb:day1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let usage = Command::new(bin).args(["ci", "--data", "newcomb:day9"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let f = csv_file("5\n5\n5\n");
    let numerical = Command::new(bin).args(["estimate", "--data", f.path().to_str().unwrap()]).output().unwrap();
    assert_eq!(numerical.status.code(), Some(3));
}
