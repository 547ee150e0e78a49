use std::io::Write;
use std::process::{Command, Output};

use facloc::{parse_instance, Rational};
use serde_json::Value;

fn facloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facloc")).args(args).output().expect("binary runs")
}

fn instance_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

const WORKED: &str = r#"{"locations":["0","0","0","9/10","19/10","19/10","19/10","19/10"],"z":3,"prediction":"0"}"#;
const THREE_CLUSTERS: &str = r#"{"locations":["0","0","1/2","1","1"],"z":2,"objective":"egalitarian"}"#;

#[test]
fn solve_worked_example() {
    let f = instance_file(WORKED);
    let out = facloc(&["solve", "--instance", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["location"], "19/10");
    assert_eq!(v["cost"], "1");
}

#[test]
fn solve_coincident_profile_costs_zero() {
    let f = instance_file(r#"{"locations":["3/7","3/7","3/7","3/7"],"z":1}"#);
    let out = facloc(&["solve", "--instance", f.path().to_str().unwrap()]);
    assert_eq!(json_of(&out)["cost"], "0");
}

#[test]
fn solve_egalitarian_uses_file_objective() {
    let f = instance_file(THREE_CLUSTERS);
    let v = json_of(&facloc(&["solve", "--instance", f.path().to_str().unwrap()]));
    assert_eq!(v["cost"], "1/4");
    let v = json_of(&facloc(&["solve", "--instance", f.path().to_str().unwrap(), "--objective", "utilitarian"]));
    assert_eq!(v["cost"], "1/2");
}

#[test]
fn z_override_and_prediction_flags() {
    let f = instance_file(WORKED);
    let p = f.path().to_str().unwrap();
    let v = json_of(&facloc(&["solve", "--instance", p, "--z-override", "0"]));
    // median 9/10: 3 * 9/10 + 4 * 1
    assert_eq!(v["cost"], "67/10");
    let v = json_of(&facloc(&["run", "--instance", p, "--mech", "in_range", "--prediction", "19/10"]));
    assert_eq!(v["report"]["ratio"], "1");
}

#[test]
fn run_reports_ratio_and_bound() {
    let f = instance_file(WORKED);
    let out = facloc(&["run", "--instance", f.path().to_str().unwrap(), "--mech", "in_range:0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["outcome"], "9/10");
    assert_eq!(v["report"]["mechanism_cost"], "37/10");
    assert_eq!(v["report"]["within_bound"], true);
}

#[test]
fn run_accepts_json_mechanism_tags() {
    let f = instance_file(r#"{"locations":["0","1","2","2"],"z":1}"#);
    let out = facloc(&["run", "--instance", f.path().to_str().unwrap(), "--mech", r#"{"mech":"rand_median"}"#]);
    let v = json_of(&out);
    assert_eq!(v["report"]["ratio"], "3/2");
}

#[test]
fn decimal_flag_renders_fixed_point() {
    let f = instance_file(WORKED);
    let out = facloc(&["run", "--instance", f.path().to_str().unwrap(), "--mech", "in_range", "--decimal"]);
    assert_eq!(json_of(&out)["report"]["ratio"], "3.700000");
}

#[test]
fn verify_sp_exit_codes() {
    let f = instance_file(r#"{"locations":["0","1/2","1"],"z":1}"#);
    let p = f.path().to_str().unwrap();
    let out = facloc(&["verify-sp", "--instance", p, "--mech", "left_median"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json_of(&out)["certificate"].is_null());

    let out = facloc(&["verify-sp", "--instance", p, "--mech", "oracle:egalitarian"]);
    assert_eq!(out.status.code(), Some(1));
    let cert = &json_of(&out)["certificate"];
    let truthful: Rational = cert["cost_truthful"].as_str().unwrap().parse().unwrap();
    let deviated: Rational = cert["cost_deviated"].as_str().unwrap().parse().unwrap();
    assert!(deviated < truthful);
}

#[test]
fn verify_sp_randomized_in_expectation() {
    let f = instance_file(r#"{"locations":["0","1/3","2/3","1"],"z":1}"#);
    let out = facloc(&["verify-sp", "--instance", f.path().to_str().unwrap(), "--mech", "rand_median"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_input_exits_two() {
    let bad = instance_file(r#"{"locations":[],"z":0}"#);
    assert_eq!(facloc(&["solve", "--instance", bad.path().to_str().unwrap()]).status.code(), Some(2));
    let f = instance_file(r#"{"locations":["0","1"],"z":0}"#);
    let p = f.path().to_str().unwrap();
    // left_z needs n >= 3
    assert_eq!(facloc(&["run", "--instance", p, "--mech", "left_z"]).status.code(), Some(2));
    assert_eq!(facloc(&["run", "--instance", p, "--mech", "bogus"]).status.code(), Some(2));
    assert_eq!(facloc(&["run", "--instance", p, "--mech", "left_median", "--gamma", "1"]).status.code(), Some(2));
    assert_eq!(facloc(&["solve", "--instance", "/definitely/missing.json"]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic_across_workers() {
    let base = ["sweep", "--mech", "left_median", "--n", "6", "--z", "2", "--count", "200", "--seed", "9", "--format", "csv"];
    let one = facloc(&[&base[..], &["--workers", "1"]].concat());
    let four = facloc(&[&base[..], &["--workers", "4"]].concat());
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let text = String::from_utf8(one.stdout).unwrap();
    assert_eq!(text.lines().count(), 201);
    assert!(text.starts_with("seed,n,z,family,mechanism,objective,mech_cost,opt_cost,ratio,bound,within_bound"));
}

#[test]
fn sweep_json_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let out = facloc(&[
        "sweep", "--mech", "left_z", "--objective", "egalitarian", "--n", "7", "--z", "3", "--count", "100",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["count"], 100);
    assert_eq!(v["all_within_bound"], true);
    let worst = parse_instance(&v["argmax_instance"].to_string()).unwrap();
    assert_eq!(worst.n(), 7);
}

#[test]
fn sweep_rows_round_trip_through_parser() {
    let out = facloc(&["sweep", "--mech", "left_median", "--n", "5", "--z", "1", "--count", "5", "--format", "csv"]);
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    for rec in r.records() {
        let rec = rec.unwrap();
        let cost: Rational = rec[6].parse().unwrap();
        assert_eq!(cost.to_string(), &rec[6]);
    }
}

#[test]
fn bounds_table_keys() {
    let v = json_of(&facloc(&["bounds", "--n-max", "10"]));
    assert_eq!(v["8,3"]["f_util"], "4");
    assert_eq!(v["4,1"]["f_rand"], "3/2");
    assert_eq!(v["9,3"]["f_robust"], "5");
    assert!(v.get("4,2").is_none());
}

#[test]
fn reproduce_targets() {
    let out = facloc(&["reproduce", "example-5-2-2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!((v["opt_cost"].as_str(), v["prediction_cost"].as_str(), v["in_range_cost"].as_str()), (Some("1"), Some("14/5"), Some("37/10")));

    let out = facloc(&["reproduce", "figure1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "20,9,10,10,true"));

    let out = facloc(&["reproduce", "table1", "--format", "json"]);
    let rows = json_of(&out);
    for row in rows.as_array().unwrap().iter().filter(|r| r["objective"] == "egalitarian") {
        assert_eq!(row["deterministic_upper"], "2");
        assert_eq!(row["deterministic_lower"], "2");
    }
}

#[test]
fn stdin_instance() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_facloc"))
        .args(["solve", "--instance", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(THREE_CLUSTERS.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(json_of(&out)["cost"], "1/4");
}
