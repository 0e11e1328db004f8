use std::io::Cursor;
use std::process::Command;

use bures_wasserstein::cli::{run, Outcome, ResultEnvelope, EXIT_CHECK_FAILED, EXIT_INVALID_INPUT, EXIT_NOT_CONVERGED};
use bures_wasserstein::spd::relative_frobenius;
use nalgebra::DMatrix;

const PAIR: &str = r#"{"matrices": [[[1, 1], [1, 2]], [[3, 1], [1, 2]]]}"#;
const DIAGONAL: &str = r#"{"matrices": [[[1, 0], [0, 4]], [[9, 0], [0, 16]]]}"#;
const ENSEMBLE: &str = r#"{"matrices": [[[2, 0.5, 0], [0.5, 1, 0.2], [0, 0.2, 3]],
                                        [[1, 0, 0.3], [0, 2, 0], [0.3, 0, 1.5]],
                                        [[4, 1, 0], [1, 2, 0.5], [0, 0.5, 1]]],
                           "weights": [0.2, 0.3, 0.5]}"#;

fn call(args: &[&str], stdin: &str) -> Outcome {
    let argv = std::iter::once("bures").chain(args.iter().copied());
    run(argv, &mut Cursor::new(stdin.as_bytes().to_vec()))
}

fn envelope(out: &Outcome) -> ResultEnvelope {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

#[test]
fn dist_on_commuting_pair() {
    let out = call(&["dist"], DIAGONAL);
    assert_eq!(out.code, 0);
    let env = envelope(&out);
    assert_eq!(env.command, "dist");
    assert_eq!(env.schema_version, 1);
    assert!(out.stdout.contains("\"result\":2.8284271247461903"), "{}", out.stdout);
    assert_eq!(env.result.as_f64().unwrap(), 2.8284271247461903);
}

#[test]
fn mean_reproduces_printed_example() {
    let out = call(&["mean"], PAIR);
    assert_eq!(out.code, 0);
    let m = envelope(&out).result_matrix().unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[1.8495, 1.0449, 1.0449, 1.9857]);
    assert!((m - expected).amax() <= 5e-4);
}

#[test]
fn mean_agrees_with_equal_weight_barycenter() {
    let mean = envelope(&call(&["mean"], PAIR)).result_matrix().unwrap();
    let bary = envelope(&call(&["barycenter"], PAIR)).result_matrix().unwrap();
    assert!((mean - bary).amax() <= 1e-8);
}

#[test]
fn barycenter_of_single_matrix() {
    let out = call(&["barycenter"], r#"{"matrices": [[[2, 1], [1, 3]]]}"#);
    assert_eq!(out.code, 0);
    let env = envelope(&out);
    let m = env.result_matrix().unwrap();
    assert_eq!(m, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
    assert!(env.diagnostics.unwrap()["iterations"].as_u64().unwrap() <= 2);
}

#[test]
fn barycenter_initial_index() {
    let a = envelope(&call(&["barycenter"], ENSEMBLE)).result_matrix().unwrap();
    let b = envelope(&call(&["barycenter", "--initial", "2"], ENSEMBLE)).result_matrix().unwrap();
    assert!(relative_frobenius(&a, &b) <= 1e-9);
    let out = call(&["barycenter", "--initial", "9"], ENSEMBLE);
    assert_eq!(out.code, EXIT_INVALID_INPUT);
}

#[test]
fn geodesic_endpoints() {
    let start = envelope(&call(&["geodesic", "--t", "0"], PAIR)).result_matrix().unwrap();
    assert_eq!(start, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]));
    let out = call(&["geodesic", "--t", "1.5"], PAIR);
    assert_eq!(out.code, EXIT_INVALID_INPUT);
    assert_eq!(envelope(&out).error.unwrap().kind, "param_out_of_range");
}

#[test]
fn couple_reports_maps() {
    let out = call(&["couple"], ENSEMBLE);
    assert_eq!(out.code, 0);
    let env = envelope(&out);
    assert_eq!(env.result["r_maps"].as_array().unwrap().len(), 3);
    assert_eq!(env.result["pair_maps"].as_array().unwrap().len(), 2);
    let omega = bures_wasserstein::cli::value_to_matrix(&env.result["omega"]).unwrap();
    assert!((env.result["optimal_value"].as_f64().unwrap() - omega.trace()).abs() < 1e-12);
}

#[test]
fn mc_echoes_seed_and_picks_target() {
    let pair = envelope(&call(&["mc", "--samples", "2000"], PAIR));
    let diag = pair.diagnostics.unwrap();
    assert_eq!(diag["seed"], 0);
    assert_eq!(diag["target"], "pair");
    let ens = envelope(&call(&["mc", "--samples", "2000", "--seed", "4"], ENSEMBLE));
    let diag = ens.diagnostics.unwrap();
    assert_eq!(diag["seed"], 4);
    assert_eq!(diag["target"], "coupling");
}

#[test]
fn invalid_inputs_exit_two() {
    for (input, kind) in [
        ("not json", "parse_error"),
        (r#"{"matrices": [[[1, 2], [2, 1]], [[1, 0], [0, 1]]]}"#, "not_psd"),
        (r#"{"matrices": [[[1]], [[1, 0], [0, 1]]]}"#, "dimension_mismatch"),
        (r#"{"matrices": [[[1, 0], [0, 1]]], "weights": [0]}"#, "invalid_weights"),
    ] {
        let out = call(&["barycenter"], input);
        assert_eq!(out.code, EXIT_INVALID_INPUT, "{input}");
        let env = envelope(&out);
        assert_eq!(env.error.unwrap().kind, kind);
        assert!(env.result.is_null());
    }
    let out = call(&["dist"], r#"{"matrices": [[[1]]]}"#);
    assert_eq!(out.code, EXIT_INVALID_INPUT);
    let out = call(&["frobnicate"], PAIR);
    assert_eq!(out.code, EXIT_INVALID_INPUT);
    assert_eq!(envelope(&out).error.unwrap().kind, "usage");
}

#[test]
fn singular_input_needs_pd() {
    let out = call(&["mean"], r#"{"matrices": [[[1, 0], [0, 0]], [[1, 0], [0, 1]]]}"#);
    assert_eq!(out.code, EXIT_INVALID_INPUT);
    assert_eq!(envelope(&out).error.unwrap().kind, "not_pd");
    // the distance itself is defined on PSD matrices
    assert_eq!(call(&["dist"], r#"{"matrices": [[[1, 0], [0, 0]], [[1, 0], [0, 1]]]}"#).code, 0);
}

#[test]
fn non_convergence_exits_three_with_diagnostics() {
    let out = call(&["barycenter", "--max-iter", "1", "--tol", "1e-15"], ENSEMBLE);
    assert_eq!(out.code, EXIT_NOT_CONVERGED);
    let env = envelope(&out);
    assert_eq!(env.error.unwrap().kind, "not_converged");
    assert_eq!(env.diagnostics.unwrap()["converged"], false);
}

#[test]
fn check_on_input_and_random() {
    let out = call(&["check"], "");
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stderr.contains("[PASS]"));
    let out = call(&["check", "-"], ENSEMBLE);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.code != EXIT_CHECK_FAILED);
}

#[test]
fn check_is_deterministic() {
    let a = call(&["check", "--trials", "4", "--seed", "9"], "");
    let b = call(&["check", "--trials", "4", "--seed", "9"], "");
    assert_eq!(a, b);
    let c = call(&["check", "--trials", "4", "--seed", "10"], "");
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn round_trip_preserves_matrices() {
    for args in [&["mean"][..], &["barycenter"], &["geodesic", "--t", "0.37"]] {
        let out = call(args, ENSEMBLE);
        let env = envelope(&out);
        let m = env.result_matrix().unwrap();
        let again: ResultEnvelope = serde_json::from_str(&env.to_json()).unwrap();
        assert_eq!(again, env);
        assert!(relative_frobenius(&again.result_matrix().unwrap(), &m) <= 1e-15);
    }
}

#[test]
fn binary_reads_file_and_stdin() {
    let bin = env!("CARGO_BIN_EXE_bures");
    let path = std::env::temp_dir().join(format!("bures-cli-{}.json", std::process::id()));
    std::fs::write(&path, DIAGONAL).unwrap();
    let out = Command::new(bin).arg("dist").arg(&path).output().unwrap();
    std::fs::remove_file(&path).ok();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.trim(),
        r#"{"command":"dist","result":2.8284271247461903,"diagnostics":{"fidelity":11.0,"trace_a":5.0,"trace_b":25.0},"schema_version":1}"#
    );

    let mut child = Command::new(bin)
        .arg("fidelity")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(DIAGONAL.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"result\":11.0"));

    let out = Command::new(bin).args(["geodesic", "--t", "2"]).arg("/nonexistent.json").output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_INVALID_INPUT));
}
