use std::fs;
use std::path::Path;

use rotator_dynamics::cli::{run_with, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_REGIME};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("rotator").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Data rows of a CSV file, skipping the config line and header.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse::<f64>().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn config_line(text: &str) -> Value {
    let line = text.lines().next().unwrap();
    serde_json::from_str(line.strip_prefix("# config: ").unwrap()).unwrap()
}

#[test]
fn flow_from_equidistribution_is_constant() {
    let (code, out, _) = run(&["flow", "--beta", "3", "--q", "10", "--nu0", "eq", "--t-final", "10"]);
    assert_eq!(code, EXIT_OK);
    let r = rows(&out);
    assert_eq!(r.len(), 101);
    assert!(out.lines().nth(1).unwrap().starts_with("t,w1,w2"));
    for row in &r {
        for w in &row[1..11] {
            assert!((w - 0.1).abs() < 1e-12);
        }
    }
}

#[test]
fn flow_over_one_arc_shifts_the_orbit_point() {
    let (code, out, _) = run(&[
        "flow", "--beta", "3", "--q", "10", "--nu0", "orbit:0", "--t-final", "0.6283185307",
    ]);
    assert_eq!(code, EXIT_OK);
    let r = rows(&out);
    let first = &r[0][1..11];
    let last = &r.last().unwrap()[1..11];
    let tv: f64 = (0..10).map(|k| (last[(k + 1) % 10] - first[k]).abs()).sum::<f64>() / 2.0;
    assert!(tv < 1e-5, "{tv}");
}

#[test]
fn dirac_start_ends_near_the_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.csv");
    let (code, _, _) = run(&[
        "flow", "--beta", "3", "--q", "10", "--nu0", "dirac:1", "--t-final", "50", "--output-dt", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let last = rows(&fs::read_to_string(&out).unwrap()).pop().unwrap();
    let spec = format!(
        "mix:{}",
        last[1..11].iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",")
    );
    let (code, text, _) = run(&["orbit", "--beta", "3", "--q", "10", "--distance-to", &spec]);
    assert_eq!(code, EXIT_OK);
    assert!(rows(&text)[0][0] < 1e-2);
}

#[test]
fn spectrum_rows() {
    let (code, out, _) = run(&["spectrum", "--beta", "50", "--q", "100"]);
    assert_eq!(code, EXIT_OK);
    let analytic: Vec<&str> = out.lines().filter(|l| l.ends_with(",analytic")).collect();
    assert_eq!(analytic.len(), 100);
    let positive = analytic
        .iter()
        .filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() > 0.0)
        .count();
    assert_eq!(positive, 2);

    let (_, out, _) = run(&["spectrum", "--beta", "3", "--q", "10"]);
    assert!(out.lines().any(|l| l == "10,0.0000000000000000e0,0.0000000000000000e0,analytic"));
}

#[test]
fn spectrum_mismatch_is_a_numerical_failure() {
    let (code, out, err) = run(&["spectrum", "--beta", "3", "--q", "10", "--match-tol", "1e-30"]);
    assert_eq!(code, EXIT_NUMERICAL);
    assert!(!out.is_empty());
    let rec: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"]["kind"], "spectrum_mismatch");
    assert_eq!(rec["error"]["module"], "stability");
}

#[test]
fn regimes_cells_and_refusal() {
    let (code, out, _) = run(&["regimes", "--beta-min", "3", "--beta-max", "6", "--beta-steps", "2", "--q-min", "4", "--q-max", "10"]);
    assert_eq!(code, EXIT_OK);
    let r = rows(&out);
    let cell = |b: f64, q: f64| r.iter().find(|row| row[0] == b && row[1] == q).unwrap().clone();
    assert_eq!(cell(3.0, 10.0)[2], 1.0);
    assert_eq!(cell(6.0, 4.0)[3], 1.0);
    assert!(r.iter().all(|row| row[4] == 0.0 || row[3] == 1.0));

    let (code, out, err) = run(&["regimes", "--beta-min", "1.5"]);
    assert_eq!(code, EXIT_REGIME);
    assert!(out.is_empty());
    let rec: Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(rec["error"]["exit_code"], EXIT_REGIME);
}

#[test]
fn lyapunov_scan_shape() {
    let (code, out, _) = run(&["lyapunov", "--beta", "3", "--q", "10", "--samples", "21"]);
    assert_eq!(code, EXIT_OK);
    let r = rows(&out);
    assert!(r[0][2].abs() <= 1e-8 && r[20][2].abs() <= 1e-8);
    assert!(r[1..20].iter().all(|row| row[2] < 0.0));
    let (_, out, _) = run(&["lyapunov", "--beta", "3", "--q", "10", "--samples", "21", "--s-end", "boundary"]);
    assert!(out.lines().last().unwrap().ends_with(",-inf"));
}

#[test]
fn single_particle_path() {
    let (code, out, _) = run(&["simulate", "--beta", "3", "--q", "5", "--nu0", "dirac:1", "--N", "1", "--t-final", "10"]);
    assert_eq!(code, EXIT_OK);
    let r = rows(&out);
    assert!(r.len() > 3);
    for (i, row) in r.iter().enumerate() {
        let occupied: Vec<usize> = (0..5).filter(|&k| row[1 + k] == 1.0).collect();
        assert_eq!(occupied, vec![i % 5]);
    }
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let (code, _, _) = run(&[
            "simulate", "--beta", "3", "--q", "10", "--nu0", "orbit:0", "--N", "300", "--t-final", "2",
            "--seed", "11", "--out", path.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        runs.push(fs::read(&path).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn lln_table_columns() {
    let (code, out, _) = run(&["lln", "--beta", "3", "--q", "10", "--N", "50,20", "--seeds", "2", "--t-final", "0.5", "--seed", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().nth(1).unwrap(), "N,seed,sup_tv");
    let r = rows(&out);
    let keys: Vec<(f64, f64)> = r.iter().map(|row| (row[0], row[1])).collect();
    assert_eq!(keys, vec![(20.0, 5.0), (20.0, 6.0), (50.0, 5.0), (50.0, 6.0)]);
}

#[test]
fn lagrangian_records() {
    let (code, out, _) = run(&["lagrangian", "--beta", "3", "--q", "10", "--nu", "orbit:0.2", "--u", "flow-velocity"]);
    assert_eq!(code, EXIT_OK);
    assert!(rows(&out)[0][0] <= 1e-10);
    let (_, out, _) = run(&["lagrangian", "--beta", "3", "--q", "10", "--u", "zero"]);
    assert_eq!(rows(&out)[0][0], 0.0);
    let (_, out, _) = run(&["lagrangian", "--beta", "3", "--q", "4", "--u", "mode:2:0.1"]);
    assert!(rows(&out)[0][0] > 0.0);
    let (code, _, _) = run(&["lagrangian", "--beta", "3", "--q", "4", "--u", "vec:1,0,0,0"]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn checkerboard_odd_q_is_rejected() {
    let (code, _, err) = run(&["checkerboard", "--beta", "6", "--q", "5"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("even q"));
    let (code, out, _) = run(&["checkerboard", "--beta", "6", "--q", "4"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(rows(&out).len(), 3);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_file_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"beta": 6.0, "q": 4, "seed": 9, "tolerances": {"ode_rtol": 1e-8}}"#,
    );
    let (code, out, _) = run(&["checkerboard", "--config", &cfg]);
    assert_eq!(code, EXIT_OK);
    let c = config_line(&out);
    assert_eq!(c["run"]["beta"], 6.0);
    assert_eq!(c["run"]["seed"], 9);
    assert_eq!(c["run"]["tolerances"]["ode_rtol"], 1e-8);
    assert_eq!(c["run"]["tolerances"]["ode_atol"], 1e-9);
    assert_eq!(rows(&out).len(), 3);

    // flags win over the file
    let (code, out, _) = run(&["checkerboard", "--config", &cfg, "--beta", "3", "--q", "10", "--seed", "1"]);
    assert_eq!(code, EXIT_OK);
    let c = config_line(&out);
    assert_eq!(c["run"]["beta"], 3.0);
    assert_eq!(c["run"]["q"], 10);
    assert_eq!(c["run"]["seed"], 1);
    assert_eq!(rows(&out).len(), 1);

    let json_out = dir.path().join("o.json");
    let (code, _, _) = run(&["checkerboard", "--config", &cfg, "--format", "json", "--out", json_out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["config"]["run"]["output_format"], "json");
}

#[test]
fn bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"beta": 3.0, "colour": 1}"#);
    assert_eq!(run(&["checkerboard", "--config", &unknown]).0, EXIT_CONFIG);
    let negative = write(dir.path(), "n.json", r#"{"beta": 3.0, "q": 4, "tolerances": {"fixed_point": -1}}"#);
    assert_eq!(run(&["checkerboard", "--config", &negative]).0, EXIT_CONFIG);
    assert_eq!(run(&["checkerboard", "--config", "/nonexistent.json"]).0, EXIT_CONFIG);
    assert_eq!(run(&["flow", "--beta", "3", "--q", "2", "--t-final", "1"]).0, EXIT_CONFIG);
    assert_eq!(run(&["flow", "--beta", "3", "--q", "10"]).0, EXIT_CONFIG);
    assert_eq!(run(&["nonsense"]).0, EXIT_CONFIG);
}

#[test]
fn nu0_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "nu.json", "[0.4, 0.3, 0.2, 0.1]");
    let spec = format!("file:{f}");
    let (code, out, _) = run(&["flow", "--beta", "3", "--q", "4", "--nu0", &spec, "--t-final", "0.1"]);
    assert_eq!(code, EXIT_OK);
    assert!((rows(&out)[0][1] - 0.4).abs() < 1e-15);
}
