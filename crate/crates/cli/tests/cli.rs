use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointint")).args(args).output().expect("binary runs")
}

fn run_with_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pointint"))
        .args(args)
        .env("POINTINT_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "one error line: {text}");
    serde_json::from_str(text.trim_end()).expect("stderr is JSON")
}

#[test]
fn green_single_point() {
    let out = run(&["green", "--m", "1", "--points", "0:2", "--at", "0,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "{\"value_re\":0.25,\"value_im\":0.0}\n");
}

#[test]
fn tau_two_point_example() {
    let out = run(&["tau", "--m", "1", "--points", "0:2,0.6931471805599453:2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["value_re"].as_f64().unwrap() - 0.9375).abs() < 1e-14);
    for route in ["m", "cross-ratio"] {
        let other = json(&run(&["tau", "--m", "1", "--points", "0:2,0.6931471805599453:2", "--route", route]));
        assert!((other["value_re"].as_f64().unwrap() - 0.9375).abs() < 1e-12);
    }
}

#[test]
fn correlator_routes_agree() {
    let args = ["corr", "--m", "1", "--points", "0:2,0.6931471805599453:2"];
    let det = json(&run(&args))["value_re"].as_f64().unwrap();
    let mut fused_args = args.to_vec();
    fused_args.extend(["--route", "fusion"]);
    let fused = json(&run(&fused_args))["value_re"].as_f64().unwrap();
    assert!((det - 0.51639778).abs() < 1e-8);
    assert!((det - fused).abs() < 1e-12);
}

#[test]
fn crosscheck_report() {
    let out = run(&["crosscheck", "--n", "3", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["max_rel_deviation"].as_f64().unwrap() < 1e-9);
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
    assert_eq!(v["pass"], Value::Bool(true));
}

#[test]
fn output_is_identical_across_runs_and_thread_counts() {
    let args = ["green", "--m", "0.8+0.2i", "--points", "-1:2,0.3:0.5,1:4", "--grid", "-2:2:7", "--output", "csv"];
    let one = run_with_threads(&args, "1");
    let many = run_with_threads(&args, "4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, many.stdout);
    let check = ["crosscheck", "--n", "4", "--seed", "11"];
    assert_eq!(run_with_threads(&check, "1").stdout, run_with_threads(&check, "3").stdout);
    let gauss = ["gaussian-check", "--field", "complex", "--dim-a", "2", "--dim-b", "1", "--samples", "20000", "--seed", "5"];
    assert_eq!(run_with_threads(&gauss, "1").stdout, run_with_threads(&gauss, "4").stdout);
}

#[test]
fn csv_grid_layout() {
    let out = run(&["green", "--m", "1", "--points", "0:2", "--grid", "-1:1:3", "--grid", "0:2:2", "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,re,im");
    assert_eq!(lines.len(), 1 + 3 * 2);
    // row-major: x outer, y inner
    assert!(lines[1].starts_with("-1.0000000000000000,0.0000000000000000,"));
    assert!(lines[2].starts_with("-1.0000000000000000,2.0000000000000000,"));
    assert!(lines[3].starts_with("0.0000000000000000,0.0000000000000000,0.25000000000000000,"));
    for line in &lines[1..] {
        for cell in line.split(',') {
            let digits = cell.trim_start_matches('-').chars().filter(|c| c.is_ascii_digit()).count();
            assert!(digits >= 17, "{cell}");
        }
    }
}

#[test]
fn config_file_matches_inline_points() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, r#"[{{"a": 0, "V": 2}}, {{"a": 0.6931471805599453, "V": 2}}]"#).unwrap();
    let path = f.path().to_str().unwrap();
    let from_file = run(&["tau", "--m", "1", "--config", path]);
    let inline = run(&["tau", "--m", "1", "--points", "0:2,0.6931471805599453:2"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, inline.stdout);
}

#[test]
fn validation_errors_exit_two() {
    for args in [
        vec!["green", "--m", "abc", "--points", "0:2", "--at", "0,0"],
        vec!["green", "--m", "1", "--points", "0-2", "--at", "0,0"],
        vec!["green", "--m", "1", "--points", "0:2", "--grid", "0:1:0"],
        vec!["green", "--m", "1", "--points", "0:2,0:1", "--at", "0,0"],
        vec!["tau", "--m", "1"],
        vec!["corr", "--m", "1", "--points", "0:2", "--bogus"],
        vec!["crosscheck", "--n", "3", "--output", "csv"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert_eq!(stderr_json(&out)["error"], "InvalidInput");
    }
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, "not json").unwrap();
    let out = run(&["tau", "--m", "1", "--config", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_with_threads(&["green", "--m", "1", "--points", "0:2", "--at", "0,0"], "zero");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let out = run(&["green", "--m", "1", "--points", "0:-2", "--at", "0,0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "SingularExtension");
    let out = run(&["formfactor", "--k", "2", "--l", "0", "--mu", "-1"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "DegenerateMu");
}

#[test]
fn form_factor_routes() {
    let base = ["formfactor", "--k", "4", "--l", "2", "--lambda", "0.3+0.1i", "--mu", "-0.2", "--nu", "0.5i"];
    let closed = json(&run(&base));
    for route in ["recursive", "fock"] {
        let mut args = base.to_vec();
        args.extend(["--route", route]);
        let other = json(&run(&args));
        for key in ["value_re", "value_im", "matrix_element_re", "matrix_element_im"] {
            let (a, b) = (closed[key].as_f64().unwrap(), other[key].as_f64().unwrap());
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "{route} {key}: {a} vs {b}");
        }
    }
    let delta = json(&run(&["formfactor", "--k", "2", "--l", "0", "--m", "1", "--strength", "2"]));
    assert!((delta["value_re"].as_f64().unwrap() + 0.5).abs() < 1e-15);
}

#[test]
fn gaussian_check_passes_at_fixed_seed() {
    let out = run(&["gaussian-check", "--field", "real", "--dim-a", "2", "--dim-b", "2", "--samples", "100000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], Value::Bool(true));
    assert!(v["seed"].as_u64().is_some());
}
