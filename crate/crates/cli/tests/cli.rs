use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use wcmdp::casestudy::{build_counterexample, exact_gap_oracle, OracleRounding};
use wcmdp::model::{EpochParams, WcMdpModel};
use wcmdp::simulator::log_log_slope;

fn wcmdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcmdp")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

/// CSV body rows as maps from header to cell.
fn csv_rows(text: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn cell(row: &[(String, String)], key: &str) -> String {
    row.iter().find(|(k, _)| k == key).unwrap().1.clone()
}

fn num(row: &[(String, String)], key: &str) -> f64 {
    cell(row, key).parse().unwrap()
}

fn zero_reward_model(horizon: usize) -> String {
    let h = 0.5;
    let e = EpochParams::from_nested(
        &[vec![vec![h, h], vec![h, h]], vec![vec![1.0, 0.0], vec![0.0, 1.0]]],
        &[vec![0.0, 0.0], vec![0.0, 0.0]],
        &[vec![0.0, 1.0, 0.0, 1.0]],
        &[0.4],
    )
    .unwrap();
    WcMdpModel::stationary(horizon, e).unwrap().to_json_string()
}

#[test]
fn validate_presets_and_files() {
    assert_eq!(code(&wcmdp(&["validate", "--preset", "counterexample:b=0.3"])), 0);
    assert_eq!(code(&wcmdp(&["validate", "--preset", "screening:scarce,fairness"])), 0);

    let dir = TempDir::new().unwrap();
    let mut json: Value = serde_json::from_str(&build_counterexample::<f64>(0.3).unwrap().model.to_json_string()).unwrap();
    json["epochs"][0]["P"][1][0][0] = Value::from(0.7);
    let bad = write(&dir, "bad.json", &json.to_string());
    let out = wcmdp(&["validate", "--model", &bad]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("violation"), "{}", stdout(&out));

    let broken = write(&dir, "broken.json", "{\n  \"d\": 2,\n  \"num_actions\": oops\n}");
    let out = wcmdp(&["validate", "--model", &broken]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn relax_prints_value_and_trajectory() {
    assert_eq!(stdout(&wcmdp(&["relax", "--preset", "counterexample:b=0.3"])).trim(), "0.6000000000");
    assert_eq!(stdout(&wcmdp(&["relax", "--preset", "counterexample:b=0.5"])).trim(), "1.0000000000");

    let dir = TempDir::new().unwrap();
    let model = write(&dir, "zero.json", &zero_reward_model(3));
    assert_eq!(stdout(&wcmdp(&["relax", "--model", &model])).trim(), "0.0000000000");

    let traj = dir.path().join("traj.json");
    let out = wcmdp(&["relax", "--preset", "counterexample:b=0.3", "--output", traj.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&traj).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(v["m_star"].as_array().unwrap().len(), 3);
}

#[test]
fn degeneracy_exit_codes() {
    assert_eq!(code(&wcmdp(&["check-degeneracy", "--preset", "counterexample:b=0.3"])), 0);
    let out = wcmdp(&["check-degeneracy", "--preset", "counterexample:b=0.5"]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("degenerate at the computed vertex"));

    let dir = TempDir::new().unwrap();
    let toy = write(&dir, "toy.json", &zero_reward_model(1));
    let out = wcmdp(&["check-degeneracy", "--model", &toy]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).filter(|l| !l.starts_with("verdict")).collect();
    assert!(rows.iter().all(|l| l.contains("not in verdict")), "{text}");
}

#[test]
fn simulate_is_deterministic_and_matches_oracle() {
    let args = ["simulate", "--preset", "counterexample:b=0.5", "--N", "10", "--reps", "100000", "--seed", "11"];
    let a = wcmdp(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, wcmdp(&args).stdout);
    let text = stdout(&a);
    assert!(text.starts_with("N,policy,replications,mean,ci95,gap,updates_mean\n"));
    assert!(!text.contains('\r'));
    let row = &csv_rows(&text)[0];
    let exact = 1.0 - exact_gap_oracle(0.5, 10, OracleRounding::Floor).unwrap();
    // ci95 is 1.96 standard errors; widen to the 99% quantile.
    assert!((num(row, "mean") - exact).abs() <= num(row, "ci95") * 2.5758 / 1.96);

    let out = wcmdp(&["simulate", "--preset", "counterexample:b=0.3", "--policy", "passive", "--N", "10,20", "--reps", "50", "--seed", "1"]);
    for row in csv_rows(&stdout(&out)) {
        assert_eq!(num(&row, "mean"), 0.0);
        assert_eq!(num(&row, "ci95"), 0.0);
    }
}

#[test]
fn seed_is_required() {
    assert_eq!(code(&wcmdp(&["simulate", "--preset", "counterexample", "--N", "10"])), 1);
}

#[test]
fn sqrt_rate_study_with_plot() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("rate.csv");
    let svg = dir.path().join("rate.svg");
    let out = wcmdp(&[
        "rate-study", "--preset", "counterexample:b=0.5", "--N", "100,400,1600", "--reps", "10000", "--seed", "4",
        "--csv", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let slope: f64 = String::from_utf8_lossy(&out.stderr)
        .lines()
        .find_map(|l| l.strip_prefix("slope: ").map(|s| s.trim().parse().unwrap()))
        .unwrap();
    assert!((-0.6..=-0.4).contains(&slope), "slope {slope}");
    assert_svg_matches_csv(&svg, &std::fs::read_to_string(&csv).unwrap());
}

fn assert_svg_matches_csv(svg: &Path, csv: &str) {
    let svg = std::fs::read_to_string(svg).unwrap();
    assert!(svg.contains(r#"width="800""#) && svg.contains(r#"height="600""#));
    assert!(svg.contains(r#"data-slope="-0.5""#) && svg.contains(r#"data-slope="-1""#));
    for row in csv_rows(csv) {
        let mark = format!(r#"data-n="{}" data-gap="{}" data-ci95="{}""#, cell(&row, "N"), cell(&row, "gap"), cell(&row, "ci95"));
        assert!(svg.contains(&mark), "missing {mark}");
    }
}

fn rate_study_gaps(args: &[&str]) -> (Vec<(f64, f64)>, f64) {
    let out = wcmdp(args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pts: Vec<(f64, f64)> = csv_rows(&stdout(&out)).iter().map(|r| (num(r, "N"), num(r, "gap"))).collect();
    let slope = String::from_utf8_lossy(&out.stderr)
        .lines()
        .find_map(|l| l.strip_prefix("slope: ").and_then(|s| s.trim().parse().ok()))
        .unwrap_or(f64::NAN);
    (pts, slope)
}

/// Floor rounding at N = 33, 77, 231 leaves `frac(N b) / N` of the budget
/// idle per epoch, so the fitted slope follows the exact oracle.
#[test]
fn floor_rate_study_tracks_exact_oracle() {
    let (pts, slope) = rate_study_gaps(&[
        "rate-study", "--preset", "counterexample:b=0.3", "--rounding", "floor", "--N", "33,77,231", "--reps", "10000", "--seed", "5",
    ]);
    for &(n, gap) in &pts {
        assert!(gap >= 0.1 / n);
    }
    let exact: Vec<(f64, f64)> = pts.iter().map(|&(n, _)| (n, exact_gap_oracle(0.3, n as u64, OracleRounding::Floor).unwrap())).collect();
    let expected = log_log_slope(&exact).unwrap();
    assert!((slope - expected).abs() <= 0.05, "slope {slope} vs exact {expected}");
}

#[test]
fn randomized_rate_study_decays_fast() {
    let (pts, _) = rate_study_gaps(&[
        "rate-study", "--preset", "counterexample:b=0.3", "--rounding", "randomized", "--N", "50,100,150", "--reps", "200000", "--seed", "6",
    ]);
    assert!(pts.windows(2).all(|w| w[1].1 < w[0].1), "{pts:?}");
    assert!(pts[1].1 < 1e-3);
}

#[test]
fn casestudy_rows_and_scenario_file() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("case.svg");
    let out = wcmdp(&["casestudy", "--scenario", "abundant", "--N", "20", "--reps", "10", "--seed", "1", "--svg", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("scenario,fairness,policy,N,mean,ci95,gap,updates_mean\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    let plot = std::fs::read_to_string(&svg).unwrap();
    for row in &rows {
        assert!(plot.contains(&format!(r#"data-mean="{}""#, cell(row, "mean"))));
    }

    let file = write(&dir, "scenario.json", r#"{"scenario":"scarce","fairness":true}"#);
    let out = wcmdp(&["casestudy", "--scenario-file", &file, "--N", "20", "--reps", "10", "--seed", "1"]);
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| cell(r, "scenario") == "scarce" && cell(r, "fairness") == "true"));

    let on = stdout(&wcmdp(&["relax", "--preset", "screening:abundant", "--fairness", "on"]));
    let off = stdout(&wcmdp(&["relax", "--preset", "screening:abundant", "--fairness", "off"]));
    assert_eq!(on, off);
}
