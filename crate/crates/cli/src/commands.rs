//! The three subcommands, returning JSON and an exit code instead of
//! printing so they can be tested in-process.

use cubic_moment::linalg::Matrix;
use cubic_moment::{
    moments_from_measure, solve, verify_measure, ExtensionCertificate, MomentMatrix, MomentSequence3,
    NoMeasureWitness, Rational, SolveOutcome, VerifyReport, DEFAULT_TOL,
};
use serde_json::{json, Map, Value};

use crate::files::{
    exact_string, float_value, rational_value, read_json, InputError, MeasureFile, ProblemFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_INPUT: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_DIAGNOSTIC: i32 = 3;

/// What a command produced: machine-readable output for stdout and a
/// human-readable message for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: Option<Value>,
    pub stderr: Option<String>,
}

impl Outcome {
    fn ok(v: Value) -> Self {
        Outcome {
            code: EXIT_OK,
            stdout: Some(v),
            stderr: None,
        }
    }

    fn bad_input(e: InputError) -> Self {
        Outcome {
            code: EXIT_BAD_INPUT,
            stdout: None,
            stderr: Some(format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveFlags {
    pub tol: Option<f64>,
    pub certificate: bool,
    pub exact: bool,
}

fn matrix_value(m: &Matrix, exact: bool) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|r| rational_value(r, exact)).collect()))
            .collect(),
    )
}

fn moment_matrix_value(m: &MomentMatrix, exact: bool) -> Value {
    matrix_value(m.matrix().as_matrix(), exact)
}

fn vector_value(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|r| Value::String(exact_string(r))).collect())
}

fn certificate_value(c: &ExtensionCertificate, exact: bool) -> Value {
    let sd = &c.schur;
    let schur: Map<String, Value> = [
        ("x", &sd.x),
        ("a", &sd.a),
        ("b", &sd.b),
        ("y", &sd.y),
        ("t", &sd.t),
        ("z", &sd.z),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), rational_value(v, exact)))
    .collect();
    json!({
        "classification": c.classification.tag.to_string(),
        "rank_m1": c.classification.rank_m1,
        "schur": schur,
        "w": matrix_value(&sd.w, exact),
        "c2": matrix_value(c.c2.as_matrix(), exact),
        "rank_delta": c.rank_delta,
        "m2": moment_matrix_value(&c.m2, exact),
        "m3": moment_matrix_value(&c.m3, exact),
        "rank_m2": c.rank_m2,
        "rank_m3": c.rank_m3,
        "basis": c.basis.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "relations": c.relations.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
    })
}

fn witness_value(w: &NoMeasureWitness) -> Value {
    match w {
        NoMeasureWitness::NegativeDirection { v, value } => json!({
            "vector": vector_value(v),
            "quadratic_form": exact_string(value),
        }),
        NoMeasureWitness::KernelLeak { v, leak } => json!({
            "kernel_vector": vector_value(v),
            "b2_product": vector_value(leak),
        }),
    }
}

pub fn solve_problem(problem: &ProblemFile, flags: SolveFlags) -> Outcome {
    let tol = flags.tol.or(problem.tol).unwrap_or(DEFAULT_TOL);
    match solve(&problem.beta, tol) {
        Ok(SolveOutcome::Measure(sol)) => {
            let mut out = Map::new();
            match (&sol.exact, flags.exact) {
                (Some(m), true) => {
                    let atoms: Vec<Value> = m
                        .atoms()
                        .iter()
                        .map(|(x, y)| json!([exact_string(x), exact_string(y)]))
                        .collect();
                    out.insert("atoms".into(), Value::Array(atoms));
                    out.insert(
                        "weights".into(),
                        m.weights().iter().map(|w| Value::String(exact_string(w))).collect(),
                    );
                }
                _ => {
                    let m = &sol.measure;
                    let atoms: Vec<Value> =
                        m.atoms().iter().map(|&(x, y)| json!([float_value(x), float_value(y)])).collect();
                    out.insert("atoms".into(), Value::Array(atoms));
                    out.insert("weights".into(), m.weights().iter().map(|&w| float_value(w)).collect());
                }
            }
            out.insert(
                "classification".into(),
                Value::String(sol.certificate.classification.tag.to_string()),
            );
            out.insert("max_abs_error".into(), float_value(sol.report.max_abs_error));
            if flags.certificate {
                out.insert("certificate".into(), certificate_value(&sol.certificate, flags.exact));
            }
            Outcome::ok(Value::Object(out))
        }
        Ok(SolveOutcome::NoMeasure { reason, witness }) => Outcome {
            code: EXIT_NEGATIVE,
            stdout: Some(json!({
                "no_measure": reason.to_string(),
                "witness": witness_value(&witness),
            })),
            stderr: Some(format!("no representing measure: {reason}; {witness}")),
        },
        Err(e) => Outcome {
            code: EXIT_DIAGNOSTIC,
            stdout: None,
            stderr: Some(format!("solver failure: {e}")),
        },
    }
}

pub fn report_value(r: &VerifyReport) -> Value {
    let mut moments = Map::new();
    for c in &r.checks {
        moments.insert(
            c.label(),
            json!({
                "expected": float_value(c.expected),
                "computed": float_value(c.computed),
                "abs_error": float_value(c.abs_error),
                "rel_error": float_value(c.rel_error),
            }),
        );
    }
    json!({
        "pass": r.pass,
        "tol": float_value(r.tol),
        "max_abs_error": float_value(r.max_abs_error),
        "max_rel_error": float_value(r.max_rel_error),
        "moments": moments,
    })
}

pub fn verify_files(problem: &ProblemFile, measure: &MeasureFile, tol: Option<f64>) -> Outcome {
    let tol = tol.or(problem.tol).unwrap_or(DEFAULT_TOL);
    let report = verify_measure(&problem.beta, &measure.measure, tol);
    let code = if report.pass { EXIT_OK } else { EXIT_NEGATIVE };
    let stderr = (!report.pass).then(|| {
        let bad: Vec<String> = report.failing().map(|c| format!("β{}", c.label())).collect();
        format!("verification failed at {}", bad.join(", "))
    });
    Outcome {
        code,
        stdout: Some(report_value(&report)),
        stderr,
    }
}

pub fn synth_measure(measure: &MeasureFile) -> Result<Value, String> {
    let table = moments_from_measure(&measure.measure, 3);
    let beta: Vec<Rational> = table.into_values().collect();
    let beta = MomentSequence3::new(beta.try_into().expect("ten moments")).map_err(|e| e.to_string())?;
    Ok(ProblemFile::to_value(&beta))
}

pub fn cmd_solve(path: &str, flags: SolveFlags) -> Outcome {
    match read_json(path).and_then(|v| ProblemFile::from_value(&v)) {
        Ok(p) => solve_problem(&p, flags),
        Err(e) => Outcome::bad_input(e),
    }
}

pub fn cmd_verify(problem: &str, measure: &str, tol: Option<f64>) -> Outcome {
    let p = match read_json(problem).and_then(|v| ProblemFile::from_value(&v)) {
        Ok(p) => p,
        Err(e) => return Outcome::bad_input(e),
    };
    let m = match read_json(measure).and_then(|v| MeasureFile::from_value(&v)) {
        Ok(m) => m,
        Err(e) => return Outcome::bad_input(e),
    };
    verify_files(&p, &m, tol)
}

pub fn cmd_synth(measure: &str) -> Outcome {
    match read_json(measure).and_then(|v| MeasureFile::from_value(&v)) {
        Ok(m) => match synth_measure(&m) {
            Ok(v) => Outcome::ok(v),
            Err(e) => Outcome {
                code: EXIT_BAD_INPUT,
                stdout: None,
                stderr: Some(format!("error: {e}")),
            },
        },
        Err(e) => Outcome::bad_input(e),
    }
}
