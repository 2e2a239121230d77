//! End-to-end tests for the `freeaw` binary: argument handling, output
//! shapes, exit codes, and seeded determinism.

use assert_cmd::Command;
use predicates::prelude::*;

fn freeaw() -> Command {
    Command::cargo_bin("freeaw").expect("binary builds")
}

fn stdout_json(args: &[&str]) -> serde_json::Value {
    let output = freeaw().args(args).assert().success().get_output().stdout.clone();
    serde_json::from_slice(&output).expect("stdout is a JSON document")
}

#[test]
fn eval_power_kernel_uses_representation_and_matches_closed_form() {
    let doc = stdout_json(&[
        "eval", "--a", "0.3", "--b", "0.4", "--c", "0.5", "--kernel", "power:0.2:1",
    ]);
    let expected = (1.0 - 0.3 * 0.4 * 0.5 * 0.2)
        / ((1.0 - 0.3 * 0.2) * (1.0 - 0.4 * 0.2) * (1.0 - 0.5 * 0.2));
    let value_re = doc["value_re"].as_f64().unwrap();
    assert!((value_re - expected).abs() < 1e-12, "value_re = {value_re}");
    assert_eq!(doc["value_im"].as_f64().unwrap(), 0.0);
    assert_eq!(doc["method"], "representation");
    assert_eq!(doc["meta"]["command"], "eval");
    assert_eq!(doc["meta"]["args"]["kernel"], "power:0.2:1");
}

#[test]
fn eval_constant_kernel_returns_total_mass_one() {
    let doc = stdout_json(&["eval", "--kernel", "cheb:1"]);
    assert!((doc["value_re"].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert!(doc["value_im"].as_f64().unwrap().abs() < 1e-14);
}

#[test]
fn eval_forced_contour_agrees_with_representation() {
    let rep = stdout_json(&[
        "eval", "--a", "0.3", "--b", "0.4", "--c", "0.5", "--kernel", "power:0.2:1",
    ]);
    let con = stdout_json(&[
        "eval", "--a", "0.3", "--b", "0.4", "--c", "0.5", "--kernel", "power:0.2:1",
        "--force-contour",
    ]);
    assert_eq!(con["method"], "contour");
    let dev = (rep["value_re"].as_f64().unwrap() - con["value_re"].as_f64().unwrap()).abs();
    assert!(dev < 1e-10, "methods disagree by {dev}");
}

#[test]
fn eval_rejects_power_kernel_outside_convergence_region() {
    freeaw()
        .args(["eval", "--a", "2.0", "--kernel", "power:0.6:1"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("constraint"));
}

#[test]
fn eval_rejects_malformed_kernel_spec() {
    freeaw()
        .args(["eval", "--kernel", "disk:0.5"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("invalid-input"));
    freeaw()
        .args(["eval", "--kernel", "power:0.2"])
        .assert()
        .code(2);
    freeaw()
        .args(["eval", "--kernel", "cheb:"])
        .assert()
        .code(2);
}

#[test]
fn check_suites_pass_and_report_per_case_rows() {
    let output = freeaw()
        .args(["check", "reduction", "--trials", "20"])
        .assert()
        .code(0)
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(output).unwrap();
    assert!(text.starts_with("# freeaw"), "missing metadata header");
    assert!(text.contains("case,residual,tolerance,status"));
    assert!(text.contains("# result: 20/20 passed"));
    assert_eq!(text.matches(",pass").count(), 20);
}

#[test]
fn check_swap_honours_depth_flag() {
    let output = freeaw()
        .args(["check", "swap", "--d", "2", "--trials", "2"])
        .assert()
        .code(0)
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(output).unwrap();
    assert!(text.contains("d=2"));
    assert!(text.contains("# result: 4/4 passed"));
}

#[test]
fn check_theorem14_matches_documented_invocation() {
    freeaw()
        .args(["check", "theorem14", "--trials", "3", "--max-N", "4"])
        .assert()
        .code(0)
        .stdout(predicate::str::contains("# result: 3/3 passed"));
}

#[test]
fn check_rejects_invalid_arguments() {
    freeaw()
        .args(["check", "swap", "--d", "4"])
        .assert()
        .code(2);
    freeaw()
        .args(["check", "extension", "--trials", "0"])
        .assert()
        .code(2);
    freeaw().args(["check", "no-such-suite"]).assert().code(2);
}

#[test]
fn seeded_commands_are_byte_identical_across_runs() {
    let run = |args: &[&str]| {
        freeaw().args(args).assert().success().get_output().stdout.clone()
    };
    let sim_args = [
        "simulate", "--N", "1", "--a", "0.5", "--c1", "0.5", "--c2", "0.5",
        "--samples", "2000", "--seed", "7",
    ];
    assert_eq!(run(&sim_args), run(&sim_args), "simulate output drifted between runs");

    let check_args = ["check", "extension", "--trials", "5", "--seed", "3"];
    assert_eq!(run(&check_args), run(&check_args), "check output drifted between runs");
}

#[test]
fn changing_seed_changes_simulation_output() {
    let run = |seed: &str| {
        freeaw()
            .args([
                "simulate", "--N", "1", "--a", "0.5", "--c1", "0.5", "--c2", "0.5",
                "--samples", "2000", "--seed", seed,
            ])
            .assert()
            .success()
            .get_output()
            .stdout
            .clone()
    };
    assert_ne!(run("7"), run("8"), "different seeds must give different samples");
}

#[test]
fn simulate_reports_small_tv_and_larger_control() {
    let doc = stdout_json(&[
        "simulate", "--N", "2", "--a", "0.3", "--c1", "0.6", "--c2", "0.4",
        "--samples", "20000", "--seed", "7",
    ]);
    let tv = doc["tv"].as_f64().unwrap();
    let ratio = doc["control"]["tv_ratio"].as_f64().unwrap();
    assert!(tv < 0.05, "stationary TV too large: {tv}");
    assert!(ratio > 1.0, "control should mix worse than stationary start");
    assert!(doc["control"]["tv"].as_f64().unwrap() > tv);
}

#[test]
fn phase_diagram_emits_csv_with_exact_header_and_columns() {
    let output = freeaw()
        .args(["phase-diagram", "--a", "0.4", "--N", "40", "--c1", "0.5", "--c2", "0.5"])
        .assert()
        .code(0)
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(output).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# freeaw "));
    assert!(header.contains("a=0.4"));
    assert!(header.contains("N=40"));
    let columns = lines.find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(columns, "c1,c2,region,rho_predicted,rho_numeric_N,abs_err");
    let row = lines.next().unwrap();
    assert!(row.starts_with("0.5,0.5,max-current,"), "row = {row}");
}

#[test]
fn phase_diagram_coexistence_cell_emits_two_rows() {
    let output = freeaw()
        .args(["phase-diagram", "--a", "0.4", "--N", "40", "--c1", "2.0", "--c2", "2.0"])
        .assert()
        .code(0)
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(output).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && l.contains("coexistence"))
        .collect();
    assert_eq!(rows.len(), 2, "expected one row per mixture endpoint:\n{text}");
    assert!(rows[0].starts_with("2,2,coexistence,0.25,"));
    assert!(rows[1].starts_with("2,2,coexistence,4"));
}

#[test]
fn phase_diagram_grid_is_row_major_and_thread_invariant() {
    let run = |threads: &str| {
        freeaw()
            .env("FREEAW_THREADS", threads)
            .args([
                "phase-diagram", "--a", "0.4", "--N", "30",
                "--c1", "0.5:1.5:3", "--c2", "0.5:1.5:2",
            ])
            .assert()
            .code(0)
            .get_output()
            .stdout
            .clone()
    };
    let single = run("1");
    assert_eq!(single, run("5"), "output must not depend on the thread count");

    let text = String::from_utf8(single).unwrap();
    let firsts: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("c1,"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    let mut sorted = firsts.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(firsts, sorted, "rows must sweep c1 in row-major order");
}

#[test]
fn phase_diagram_rejects_grid_outside_admissible_square() {
    freeaw()
        .args(["phase-diagram", "--a", "0.4", "--N", "40", "--c1", "2.6", "--c2", "0.5"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("constraint"));
}

#[test]
fn thread_count_env_var_is_validated() {
    for bad in ["0", "65", "lots"] {
        freeaw()
            .env("FREEAW_THREADS", bad)
            .args(["phase-diagram", "--a", "0.4", "--N", "10", "--c1", "0.5", "--c2", "0.5"])
            .assert()
            .code(2)
            .stderr(predicate::str::contains("FREEAW_THREADS"));
    }
}

#[test]
fn poisson_command_matches_documented_invocation() {
    let doc = stdout_json(&[
        "poisson", "--scaling", "b", "--lambda", "2", "--theta", "1", "--t", "1.2",
        "--N", "400",
    ]);
    assert!(doc["ratio"].as_f64().unwrap().is_finite());
    assert!(doc["target"].as_f64().unwrap() > 1.0);
    assert!(doc["rel_dev"].as_f64().unwrap() < 0.05);
    assert_eq!(doc["config"]["c1"].as_f64().unwrap(), 1.0);
}

#[test]
fn poisson_rejects_inconsistent_grids() {
    freeaw()
        .args([
            "poisson", "--scaling", "a", "--lambda", "1", "--N", "200",
            "--t", "1.1,1.3", "--x", "0.5,0.9",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("constraint"));
}

#[test]
fn series_command_matches_documented_invocation() {
    let doc = stdout_json(&[
        "series", "--z", "0.05", "--t", "1.0", "--a", "0.3", "--c1", "0.5",
        "--c2", "0.4", "--truncate", "60",
    ]);
    assert_eq!(doc["terms"].as_u64().unwrap(), 60);
    assert!(doc["rel_dev"].as_f64().unwrap() < 1e-8);
    assert!(doc["closed_form"].as_f64().unwrap() > 1.0);
}

#[test]
fn series_rejects_z_outside_convergence_disk() {
    freeaw()
        .args([
            "series", "--z", "0.9", "--t", "1.0", "--a", "0.3", "--c1", "0.5",
            "--c2", "0.4",
        ])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("constraint"));
}

#[test]
fn out_flag_writes_file_and_keeps_stdout_empty() {
    let dir = std::env::temp_dir().join("freeaw-cli-out-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("eval.json");
    let _ = std::fs::remove_file(&path);

    freeaw()
        .args([
            "eval", "--a", "0.3", "--kernel", "cheb:1",
            "--out", path.to_str().unwrap(),
        ])
        .assert()
        .code(0)
        .stdout(predicate::str::is_empty());

    let contents = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&contents).unwrap();
    assert_eq!(doc["meta"]["command"], "eval");
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn every_file_output_starts_with_version_and_parameter_echo() {
    let dir = std::env::temp_dir().join("freeaw-cli-header-test");
    std::fs::create_dir_all(&dir).unwrap();

    let csv = dir.join("phase.csv");
    freeaw()
        .args([
            "phase-diagram", "--a", "0.4", "--N", "20", "--c1", "0.5", "--c2", "0.5",
            "--out", csv.to_str().unwrap(),
        ])
        .assert()
        .code(0);
    let text = std::fs::read_to_string(&csv).unwrap();
    let header = text.lines().next().unwrap();
    for needle in ["# freeaw", "phase-diagram", "a=0.4", "N=20", "c1=0.5", "c2=0.5"] {
        assert!(header.contains(needle), "header {header:?} lacks {needle:?}");
    }

    let json = dir.join("sim.json");
    freeaw()
        .args([
            "simulate", "--N", "1", "--a", "0.5", "--c1", "0.5", "--c2", "0.5",
            "--samples", "1000", "--seed", "1", "--out", json.to_str().unwrap(),
        ])
        .assert()
        .code(0);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(doc["meta"]["version"].as_str().unwrap().contains('.'));
    assert_eq!(doc["meta"]["args"]["seed"].as_u64().unwrap(), 1);

    std::fs::remove_file(&csv).unwrap();
    std::fs::remove_file(&json).unwrap();
}
