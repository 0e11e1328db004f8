//! Command-line front end.
//!
//! ```text
//! bures <subcommand> [input-path] [--t R] [--tol R] [--max-iter N]
//!       [--samples N] [--seed N] [--trials N] [--initial INDEX|PATH]
//! ```
//!
//! Input is one JSON document `{"matrices": [[[..],..],..], "weights": [..]?}`
//! read from `input-path` (or standard input). Output is one JSON
//! [`ResultEnvelope`] on standard output; logs go to standard error.
//!
//! Exit codes: 0 success, 2 invalid input, 3 no convergence, 4 property
//! suite failure.

use std::ffi::OsString;
use std::io::{self, Read};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::barycenter::{barycenter, BarycenterConfig, BarycenterSolution, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::checks::{random_ensembles, run_suite};
use crate::coupling::{build_coupling, mc_coupling_value, mc_pair_cost};
use crate::error::Error;
use crate::geodesic::{geodesic, wasserstein_mean};
use crate::metric::{bures_distance, fidelity};
use crate::spd::SpdMatrix;
use crate::weights::Weights;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

const DEFAULT_SAMPLES: u64 = 100_000;
const DEFAULT_TRIALS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "bures", version, about = "Bures-Wasserstein geometry of SPD matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Input {
    /// JSON problem file; standard input when omitted (`-` also reads stdin)
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum McTarget {
    /// pair cost for exactly two matrices, coupling value otherwise
    Auto,
    Pair,
    Coupling,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance between the first two matrices
    Dist(Input),
    /// Fidelity between the first two matrices
    Fidelity(Input),
    /// Wasserstein mean (geodesic midpoint) of the first two matrices
    Mean(Input),
    /// Point γ(t) on the geodesic between the first two matrices
    Geodesic {
        #[command(flatten)]
        input: Input,
        #[arg(long = "t")]
        t: f64,
    },
    /// Weighted barycentre of all matrices
    Barycenter {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
        /// Starting point: an index into `matrices` or a JSON problem file
        #[arg(long)]
        initial: Option<String>,
    },
    /// Optimal multi-marginal coupling maps
    Couple {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo estimate of the pair transport cost or the coupling value
    Mc {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = McTarget::Auto)]
        target: McTarget,
    },
    /// Run the property suite on the input, or on seeded random ensembles
    Check {
        /// JSON problem file; random ensembles when omitted (`-` reads stdin)
        input: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dist(_) => "dist",
            Command::Fidelity(_) => "fidelity",
            Command::Mean(_) => "mean",
            Command::Geodesic { .. } => "geodesic",
            Command::Barycenter { .. } => "barycenter",
            Command::Couple { .. } => "couple",
            Command::Mc { .. } => "mc",
            Command::Check { .. } => "check",
        }
    }
}

/// The JSON input document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::invalid("parse_error", e.to_string()))
    }

    /// Validates the matrices (PSD, square, common dimension) and weights
    /// (uniform when absent).
    pub fn ensemble(&self) -> Result<(Vec<SpdMatrix>, Weights), CliError> {
        if self.matrices.is_empty() {
            return Err(CliError::invalid("invalid_input", "no matrices".into()));
        }
        let mats = self
            .matrices
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                SpdMatrix::from_rows(rows).map_err(|e| CliError::from(e).context(&format!("matrix {i}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = mats[0].dim();
        if let Some(bad) = mats.iter().find(|a| a.dim() != n) {
            return Err(Error::DimensionMismatch(n, bad.dim()).into());
        }
        let weights = match &self.weights {
            Some(w) if w.len() != mats.len() => {
                return Err(Error::InvalidWeights(format!(
                    "{} weights for {} matrices",
                    w.len(),
                    mats.len()
                ))
                .into())
            }
            Some(w) => Weights::new(w.clone())?,
            None => Weights::uniform(mats.len()),
        };
        Ok((mats, weights))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorObject {
    pub kind: String,
    pub message: String,
}

/// The JSON output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub command: String,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorObject>,
    pub schema_version: u32,
}

impl ResultEnvelope {
    fn ok(command: &str, result: Value, diagnostics: Option<Value>) -> Self {
        Self {
            command: command.into(),
            result,
            diagnostics,
            error: None,
            schema_version: SCHEMA_VERSION,
        }
    }

    /// Serializes with every float printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut out = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
        self.serialize(&mut ser).expect("envelope serialization is infallible");
        String::from_utf8(out).expect("serde_json writes UTF-8")
    }

    /// Reads `result` back as a matrix.
    pub fn result_matrix(&self) -> Option<DMatrix<f64>> {
        value_to_matrix(&self.result)
    }
}

/// Parses a nested `[[..], ..]` JSON array into a matrix.
pub fn value_to_matrix(v: &Value) -> Option<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone()).ok()?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return None;
    }
    Some(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// `%.17g`-style rendering: exactly round-trips every finite double.
pub fn format_significant(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0.0" } else { "0.0" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if (-5..17).contains(&exp) {
        let (int_part, frac_part) = if exp >= 0 {
            let split = exp as usize + 1;
            (digits[..split].to_string(), digits[split..].to_string())
        } else {
            ("0".to_string(), "0".repeat((-exp - 1) as usize) + &digits)
        };
        let frac = frac_part.trim_end_matches('0');
        let frac = if frac.is_empty() { "0" } else { frac };
        format!("{sign}{int_part}.{frac}")
    } else {
        let frac = digits[1..].trim_end_matches('0');
        let frac = if frac.is_empty() { "0" } else { frac };
        format!("{sign}{}.{frac}e{exp}", &digits[..1])
    }
}

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_significant(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

#[derive(Debug)]
pub struct CliError {
    code: i32,
    kind: &'static str,
    message: String,
    diagnostics: Option<Value>,
}

impl CliError {
    fn invalid(kind: &'static str, message: String) -> Self {
        Self {
            code: EXIT_INVALID_INPUT,
            kind,
            message,
            diagnostics: None,
        }
    }

    fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::NotPsd { .. } => "not_psd",
            Error::NotPd { .. } => "not_pd",
            Error::DimensionMismatch(..) => "dimension_mismatch",
            Error::NotSquare { .. } => "not_square",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::InvalidWeights(_) => "invalid_weights",
            Error::ParamOutOfRange { .. } => "param_out_of_range",
            Error::Inconsistent { .. } | Error::NegativeDiscriminant(_) => "numerical_failure",
            Error::NotConverged(_) => "not_converged",
            _ => "invalid_input",
        };
        let message = e.to_string();
        match e {
            Error::NotConverged(sol) => Self {
                code: EXIT_NOT_CONVERGED,
                kind,
                message,
                diagnostics: Some(solution_diagnostics(&sol)),
            },
            _ => Self::invalid(kind, message),
        }
    }
}

/// Process outcome: exit code plus the two output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    Value::from(
        m.row_iter()
            .map(|r| Value::from(r.iter().copied().collect::<Vec<f64>>()))
            .collect::<Vec<_>>(),
    )
}

fn solution_diagnostics(sol: &BarycenterSolution) -> Value {
    json!({
        "iterations": sol.iterations,
        "converged": sol.converged,
        "residual": sol.residual,
        "stationarity": sol.stationarity,
        "ill_conditioned": sol.ill_conditioned,
        "trace_sequence": sol.trace_sequence,
        "variance_sequence": sol.variance_sequence,
        "step_distances": sol.step_distances,
    })
}

fn read_input(path: Option<&PathBuf>, stdin: &mut dyn Read) -> Result<ProblemFile, CliError> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)
            .map_err(|e| CliError::invalid("io_error", format!("{}: {e}", p.display())))?,
        _ => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| CliError::invalid("io_error", format!("stdin: {e}")))?;
            s
        }
    };
    ProblemFile::parse(&text)
}

fn first_two(mats: &[SpdMatrix]) -> Result<(&SpdMatrix, &SpdMatrix), CliError> {
    match mats {
        [a, b, ..] => Ok((a, b)),
        _ => Err(CliError::invalid(
            "invalid_input",
            format!("need at least two matrices, got {}", mats.len()),
        )),
    }
}

fn solver_config(solver: &SolverArgs) -> BarycenterConfig {
    BarycenterConfig {
        tol: solver.tol,
        max_iter: solver.max_iter,
        ..Default::default()
    }
}

fn resolve_initial(source: &str, mats: &[SpdMatrix]) -> Result<SpdMatrix, CliError> {
    if let Ok(i) = source.parse::<usize>() {
        return mats.get(i).cloned().ok_or_else(|| {
            CliError::invalid("invalid_input", format!("--initial index {i} out of range"))
        });
    }
    let text = std::fs::read_to_string(source)
        .map_err(|e| CliError::invalid("io_error", format!("{source}: {e}")))?;
    let (init, _) = ProblemFile::parse(&text)?.ensemble()?;
    Ok(init.into_iter().next().expect("ensemble is nonempty"))
}

fn execute(command: &Command, stdin: &mut dyn Read, log: &mut String) -> Result<(ResultEnvelope, i32), CliError> {
    let name = command.name();
    let ok = |result, diagnostics| Ok((ResultEnvelope::ok(name, result, diagnostics), EXIT_OK));
    match command {
        Command::Dist(input) => {
            let (mats, _) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let (a, b) = first_two(&mats)?;
            let r = bures_distance(a, b)?;
            ok(
                json!(r.d),
                Some(json!({"fidelity": r.fidelity, "trace_a": r.trace_a, "trace_b": r.trace_b})),
            )
        }
        Command::Fidelity(input) => {
            let (mats, _) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let (a, b) = first_two(&mats)?;
            ok(json!(fidelity(a, b)?), None)
        }
        Command::Mean(input) => {
            let (mats, _) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let (a, b) = first_two(&mats)?;
            ok(matrix_value(wasserstein_mean(a, b)?.matrix()), None)
        }
        Command::Geodesic { input, t } => {
            let (mats, _) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let (a, b) = first_two(&mats)?;
            let point = geodesic(a, b)?.evaluate(*t)?;
            ok(matrix_value(point.matrix()), Some(json!({"t": t})))
        }
        Command::Barycenter {
            input,
            solver,
            initial,
        } => {
            let (mats, w) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let mut cfg = solver_config(solver);
            if let Some(source) = initial {
                cfg.initial = Some(resolve_initial(source, &mats)?);
            }
            let sol = barycenter(&mats, &w, &cfg)?;
            log.push_str(&format!(
                "barycenter: {} iterations, residual {:e}\n",
                sol.iterations, sol.residual
            ));
            ok(matrix_value(sol.omega.matrix()), Some(solution_diagnostics(&sol)))
        }
        Command::Couple { input, solver } => {
            let (mats, w) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let plan = build_coupling(&mats, &w, &solver_config(solver))?;
            ok(
                json!({
                    "omega": matrix_value(plan.omega.matrix()),
                    "r_maps": plan.r_maps.iter().map(|r| matrix_value(r.matrix())).collect::<Vec<_>>(),
                    "pair_maps": plan.pair_maps.iter().map(matrix_value).collect::<Vec<_>>(),
                    "optimal_value": plan.optimal_value,
                }),
                Some(json!({"iterations": plan.iterations})),
            )
        }
        Command::Mc {
            input,
            samples,
            seed,
            target,
        } => {
            let (mats, w) = read_input(input.input.as_ref(), stdin)?.ensemble()?;
            let pair = match target {
                McTarget::Pair => true,
                McTarget::Coupling => false,
                McTarget::Auto => mats.len() == 2,
            };
            let (est, target_name) = if pair {
                let (a, b) = first_two(&mats)?;
                (mc_pair_cost(a, b, *samples, *seed)?, "pair")
            } else {
                let plan = build_coupling(&mats, &w, &BarycenterConfig::default())?;
                (mc_coupling_value(&plan, &w, *samples, *seed)?, "coupling")
            };
            ok(
                json!(est.mean),
                Some(json!({
                    "target": target_name,
                    "std_error": est.std_error,
                    "samples": est.samples,
                    "seed": est.seed,
                })),
            )
        }
        Command::Check {
            input,
            trials,
            seed,
        } => {
            let ensembles = match input {
                Some(path) => vec![read_input(Some(path), stdin)?.ensemble()?],
                None => random_ensembles(*trials, *seed),
            };
            let report = run_suite(&ensembles, *seed);
            for r in &report.results {
                let status = if r.passed { "PASS" } else { "FAIL" };
                log.push_str(&format!(
                    "[{status}] {} ({} trials, {} failures)\n",
                    r.property, r.trials, r.failures
                ));
            }
            let passed = report.passed();
            let envelope = ResultEnvelope::ok(
                name,
                serde_json::to_value(&report.results).expect("serializable"),
                Some(json!({"seed": seed, "ensembles": report.ensembles, "passed": passed})),
            );
            Ok((envelope, if passed { EXIT_OK } else { EXIT_CHECK_FAILED }))
        }
    }
}

/// Runs one command. `args` includes the program name.
pub fn run<I, T>(args: I, stdin: &mut dyn Read) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let envelope = ResultEnvelope {
                    command: String::new(),
                    result: Value::Null,
                    diagnostics: None,
                    error: Some(ErrorObject {
                        kind: "usage".into(),
                        message: rendered.clone(),
                    }),
                    schema_version: SCHEMA_VERSION,
                };
                Outcome {
                    code: EXIT_INVALID_INPUT,
                    stdout: envelope.to_json() + "\n",
                    stderr: rendered,
                }
            } else {
                // --help / --version
                Outcome {
                    code: EXIT_OK,
                    stdout: rendered,
                    stderr: String::new(),
                }
            };
        }
    };
    let mut log = String::new();
    match execute(&cli.command, stdin, &mut log) {
        Ok((envelope, code)) => Outcome {
            code,
            stdout: envelope.to_json() + "\n",
            stderr: log,
        },
        Err(e) => {
            log.push_str(&format!("error: {}\n", e.message));
            let envelope = ResultEnvelope {
                command: cli.command.name().into(),
                result: Value::Null,
                diagnostics: e.diagnostics,
                error: Some(ErrorObject {
                    kind: e.kind.into(),
                    message: e.message,
                }),
                schema_version: SCHEMA_VERSION,
            };
            Outcome {
                code: e.code,
                stdout: envelope.to_json() + "\n",
                stderr: log,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn significant_digit_rendering() {
        assert_eq!(format_significant(2.8284271247461903), "2.8284271247461903");
        assert_eq!(format_significant(4.0), "4.0");
        assert_eq!(format_significant(-0.5), "-0.5");
        assert_eq!(format_significant(0.1), "0.10000000000000001");
        assert_eq!(format_significant(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_significant(1.5e300), "1.5000000000000001e300");
        assert_eq!(format_significant(1e300), "1.0000000000000001e300");
        assert_eq!(format_significant(2.0f64.powi(-1074)), "4.9406564584124654e-324");
        assert_eq!(format_significant(0.0), "0.0");
        assert_eq!(format_significant(123456.0), "123456.0");
    }

    proptest! {
        #[test]
        fn rendering_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = format_significant(x);
            let back: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, x);
        }
    }

    #[test]
    fn problem_file_validation() {
        let ok = ProblemFile::parse(r#"{"matrices": [[[1,0],[0,1]], [[2,0],[0,3]]]}"#).unwrap();
        let (mats, w) = ok.ensemble().unwrap();
        assert_eq!(mats.len(), 2);
        assert_eq!(w.values(), &[0.5, 0.5]);

        let bad = |s: &str| ProblemFile::parse(s).and_then(|p| p.ensemble()).unwrap_err();
        assert_eq!(bad(r#"{"matrices": []}"#).kind, "invalid_input");
        assert_eq!(bad(r#"{"matrices": [[[1,0]]]}"#).kind, "not_square");
        assert_eq!(bad(r#"{"matrices": [[[1]], [[1,0],[0,1]]]}"#).kind, "dimension_mismatch");
        assert_eq!(bad(r#"{"matrices": [[[1]]], "weights": [1, 2]}"#).kind, "invalid_weights");
        assert_eq!(bad(r#"{"matrices": [[[1]]], "weights": [-1]}"#).kind, "invalid_weights");
        assert_eq!(bad(r#"{"matrices": [[[-1]]]}"#).kind, "not_psd");
        assert_eq!(bad(r#"{"matrix": []}"#).kind, "parse_error");
    }
}
