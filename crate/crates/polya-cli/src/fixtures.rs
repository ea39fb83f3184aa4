//! Embedded fixture processes, available by name so every subcommand runs
//! offline.  Parameters are optional flags with documented defaults; the
//! resolved values are echoed into the run manifest.

use crate::pipeline::CliError;
use num_bigint::BigInt;
use num_rational::BigRational;
use polya::process::ProcessSpec;
use polya::scalar::Scalar;
use serde_json::{json, Value};

/// `1 - x` in the arithmetic of the literal.
fn one_minus(x: &Scalar) -> Scalar {
    match x {
        Scalar::Rational(r) => Scalar::Rational(BigRational::from_integer(BigInt::from(1)) - r),
        Scalar::Float(v) => Scalar::Float(1.0 - v),
    }
}

pub const FIXTURE_NAMES: &[&str] = &[
    "polya",
    "general2",
    "triangular",
    "two-three-tree",
    "two-three-tree-10",
    "cyclic",
    "bst-congruence",
    "ycart-4d",
    "jordan3",
];

/// Optional fixture parameters collected from the command line (raw text,
/// parsed on use).
#[derive(Debug, Default, Clone)]
pub struct FixtureParams {
    pub s: Option<usize>,
    pub l: Option<String>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub w: Option<String>,
    pub p: Option<String>,
    pub x1: Option<String>,
    pub y1: Option<String>,
}

fn int(n: i64) -> Scalar {
    Scalar::from_int(n)
}

fn ratio(n: i64, d: i64) -> Scalar {
    Scalar::from_ratio(n, d)
}

fn parse(name: &str, text: &str) -> Result<Scalar, CliError> {
    polya::scalar::parse_scalar(text)
        .map_err(|e| CliError::usage(format!("parameter --{name}: {e}")))
}

fn opt(name: &str, v: &Option<String>, default: Scalar) -> Result<Scalar, CliError> {
    match v {
        Some(t) => parse(name, t),
        None => Ok(default),
    }
}

fn reject_param(fixture: &str, flag: &str, v: &Option<String>) -> Result<(), CliError> {
    if v.is_some() {
        return Err(CliError::usage(format!(
            "fixture `{fixture}` does not take --{flag}"
        )));
    }
    Ok(())
}

fn reject_s(fixture: &str, v: &Option<usize>) -> Result<(), CliError> {
    if v.is_some() {
        return Err(CliError::usage(format!(
            "fixture `{fixture}` does not take --s"
        )));
    }
    Ok(())
}

/// Resolve a fixture name into a process description plus the manifest
/// record of the parameters actually used.
pub fn load_fixture(name: &str, fp: &FixtureParams) -> Result<(ProcessSpec, Value), CliError> {
    match name {
        "polya" => {
            reject_s(name, &fp.s)?;
            for (f, v) in [("l", &fp.l), ("a", &fp.a), ("b", &fp.b), ("w", &fp.w), ("p", &fp.p)] {
                reject_param(name, f, v)?;
            }
            let x1 = opt("x1", &fp.x1, int(1))?;
            let y1 = opt("y1", &fp.y1, int(1))?;
            let spec = ProcessSpec {
                dim: 2,
                increments: vec![vec![int(1), int(0)], vec![int(0), int(1)]],
                forms: None,
                initial: vec![x1.clone(), y1.clone()],
            };
            let params = json!({"x1": x1.render(), "y1": y1.render()});
            Ok((spec, params))
        }
        "general2" => {
            reject_s(name, &fp.s)?;
            for (f, v) in [("l", &fp.l), ("w", &fp.w), ("p", &fp.p)] {
                reject_param(name, f, v)?;
            }
            let a = opt("a", &fp.a, ratio(1, 4))?;
            let b = opt("b", &fp.b, ratio(1, 5))?;
            let x1 = opt("x1", &fp.x1, int(1))?;
            let y1 = opt("y1", &fp.y1, int(1))?;
            let spec = ProcessSpec {
                dim: 2,
                increments: vec![
                    vec![one_minus(&a), a.clone()],
                    vec![b.clone(), one_minus(&b)],
                ],
                forms: None,
                initial: vec![x1.clone(), y1.clone()],
            };
            let params = json!({
                "a": a.render(), "b": b.render(),
                "x1": x1.render(), "y1": y1.render(),
            });
            Ok((spec, params))
        }
        "triangular" => {
            reject_s(name, &fp.s)?;
            for (f, v) in [("a", &fp.a), ("b", &fp.b), ("w", &fp.w), ("p", &fp.p)] {
                reject_param(name, f, v)?;
            }
            let l = opt("l", &fp.l, ratio(3, 4))?;
            let x1 = opt("x1", &fp.x1, int(1))?;
            let y1 = opt("y1", &fp.y1, int(1))?;
            let spec = ProcessSpec {
                dim: 2,
                increments: vec![vec![int(1), int(0)], vec![one_minus(&l), l.clone()]],
                forms: None,
                initial: vec![x1.clone(), y1.clone()],
            };
            let params = json!({
                "l": l.render(), "x1": x1.render(), "y1": y1.render(),
            });
            Ok((spec, params))
        }
        "two-three-tree" => {
            no_params(name, fp)?;
            let spec = ProcessSpec {
                dim: 2,
                increments: vec![vec![int(-2), int(3)], vec![int(4), int(-3)]],
                forms: None,
                initial: vec![int(2), int(0)],
            };
            Ok((spec, json!({})))
        }
        "two-three-tree-10" => {
            no_params(name, fp)?;
            let rows: [[i64; 10]; 10] = [
                [-4, 2, 3, 0, 0, 0, 0, 0, 0, 0],
                [0, -2, -3, 6, 0, 0, 0, 0, 0, 0],
                [0, -2, -3, 0, 6, 0, 0, 0, 0, 0],
                [0, 0, 0, -6, 0, 4, 3, 0, 0, 0],
                [0, 0, 0, 0, -6, 4, 3, 0, 0, 0],
                [0, 0, 0, 0, 0, -4, -3, 2, 6, 0],
                [8, 0, 0, 0, 0, -4, -3, 0, 0, 0],
                [0, 0, 0, 0, 0, 0, 0, -2, -6, 9],
                [4, 2, 3, 0, 0, 0, 0, -2, -6, 0],
                [4, 0, 0, 6, 0, 0, 0, 0, 0, -9],
            ];
            let increments = rows
                .iter()
                .map(|r| r.iter().map(|&v| int(v)).collect())
                .collect();
            // Four units of the first type: enough mass that the first
            // draw (which consumes four) stays feasible, and every later
            // count remains a multiple of the amount its own draw removes.
            let mut initial = vec![int(0); 10];
            initial[0] = int(4);
            let spec = ProcessSpec {
                dim: 10,
                increments,
                forms: None,
                initial,
            };
            Ok((spec, json!({})))
        }
        "cyclic" => {
            for (f, v) in [
                ("l", &fp.l),
                ("a", &fp.a),
                ("b", &fp.b),
                ("w", &fp.w),
                ("p", &fp.p),
                ("x1", &fp.x1),
                ("y1", &fp.y1),
            ] {
                reject_param(name, f, v)?;
            }
            let s = fp.s.unwrap_or(3);
            check_dim(s)?;
            let mut increments = Vec::with_capacity(s);
            for k in 0..s {
                let mut row = vec![int(0); s];
                row[(k + 1) % s] = int(1);
                increments.push(row);
            }
            let mut initial = vec![int(0); s];
            initial[0] = int(1);
            let spec = ProcessSpec {
                dim: s,
                increments,
                forms: None,
                initial,
            };
            Ok((spec, json!({"s": s})))
        }
        "bst-congruence" => {
            for (f, v) in [
                ("l", &fp.l),
                ("a", &fp.a),
                ("b", &fp.b),
                ("w", &fp.w),
                ("p", &fp.p),
                ("x1", &fp.x1),
                ("y1", &fp.y1),
            ] {
                reject_param(name, f, v)?;
            }
            let s = fp.s.unwrap_or(2);
            check_dim(s)?;
            let mut increments = Vec::with_capacity(s);
            for k in 0..s {
                // in dimension 1 both contributions land on one coordinate
                let mut row = vec![0i64; s];
                row[k] -= 1;
                row[(k + 1) % s] += 2;
                increments.push(row.into_iter().map(int).collect());
            }
            let mut initial = vec![int(0); s];
            initial[0] = int(1);
            let spec = ProcessSpec {
                dim: s,
                increments,
                forms: None,
                initial,
            };
            Ok((spec, json!({"s": s})))
        }
        "ycart-4d" => {
            reject_s(name, &fp.s)?;
            for (f, v) in [("l", &fp.l), ("a", &fp.a), ("x1", &fp.x1), ("y1", &fp.y1)] {
                reject_param(name, f, v)?;
            }
            let b = opt("b", &fp.b, int(1))?;
            let w = opt("w", &fp.w, int(1))?;
            let p = opt("p", &fp.p, ratio(1, 2))?;
            let spec = ProcessSpec {
                dim: 4,
                increments: vec![
                    vec![int(1), int(0), int(0), int(0)],
                    vec![int(0), int(1), int(0), int(0)],
                    vec![int(1), int(0), int(0), int(0)],
                    vec![int(0), int(1), int(0), int(0)],
                ],
                forms: None,
                initial: vec![b.clone(), w.clone(), p.clone(), one_minus(&p)],
            };
            let params = json!({
                "b": b.render(), "w": w.render(), "p": p.render(),
            });
            Ok((spec, params))
        }
        "jordan3" => {
            no_params(name, fp)?;
            let spec = ProcessSpec {
                dim: 3,
                increments: vec![
                    vec![int(1), int(0), int(0)],
                    vec![ratio(1, 4), ratio(3, 4), int(0)],
                    vec![int(0), ratio(1, 4), ratio(3, 4)],
                ],
                forms: None,
                initial: vec![int(1), int(1), int(1)],
            };
            Ok((spec, json!({})))
        }
        other => Err(CliError::usage(format!(
            "unknown fixture `{other}`; known fixtures: {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

fn no_params(name: &str, fp: &FixtureParams) -> Result<(), CliError> {
    reject_s(name, &fp.s)?;
    for (f, v) in [
        ("l", &fp.l),
        ("a", &fp.a),
        ("b", &fp.b),
        ("w", &fp.w),
        ("p", &fp.p),
        ("x1", &fp.x1),
        ("y1", &fp.y1),
    ] {
        reject_param(name, f, v)?;
    }
    Ok(())
}

fn check_dim(s: usize) -> Result<(), CliError> {
    if s < 1 || s > 64 {
        return Err(CliError::usage(format!(
            "--s must lie in 1..=64, got {s}"
        )));
    }
    Ok(())
}
