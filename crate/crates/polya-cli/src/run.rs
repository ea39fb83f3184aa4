//! Subcommand bodies.  Each returns a JSON result (and, where tabular
//! output makes sense, CSV rows) from an [`Analysis`] built by the shared
//! pipeline; everything here is generic over the arithmetic field.

use crate::emit::{complex_json, csv_f64, scalar_json, vec_json, Rendered};
use crate::pipeline::{effective_pins_json, AnyAnalysis, CliError};
use num_rational::BigRational;
use polya::analysis::Analysis;
use polya::cones::{a_alpha_enumerate, sigma_contains, sigma_extreme_rays, sigma_facet_normals};
use polya::moments::{
    designated_w_indices, exact_moment, expected_vector_asymptote, limit_w_moment, Regime,
};
use polya::operator::{build_reduced_table, ReducedTable, DEFAULT_BASIS_CAP};
use polya::process::ValidationReport;
use polya::scalar::{parse_scalar, Field, Scalar};
use polya::simulate::{estimate, Engine, Estimand, SimConfig};
use polya::upoly::MultiIndex;
use serde_json::{json, Value};

/// Run a closure against whichever arithmetic the analysis carries.
macro_rules! with_analysis {
    ($any:expr, $an:ident => $body:expr) => {
        match $any {
            AnyAnalysis::Exact($an) => $body,
            AnyAnalysis::Numeric($an) => $body,
        }
    };
}

// --- shared parsing ---------------------------------------------------------

/// Parse `--alpha 0,2` into a multi-index of the analysis dimension.
pub fn parse_alpha(text: &str, dim: usize) -> Result<MultiIndex, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != dim {
        return Err(CliError::usage(format!(
            "--alpha `{text}` has {} entries; the process has {dim} colors",
            parts.len()
        )));
    }
    let mut v = Vec::with_capacity(dim);
    for p in &parts {
        let e: u32 = p.trim().parse().map_err(|_| {
            CliError::usage(format!("--alpha `{text}`: `{p}` is not a whole number"))
        })?;
        v.push(e);
    }
    Ok(MultiIndex(v))
}

/// Parse an estimand: `u:e1,…,es` (exponents of the form coordinates) or
/// `w:k1[,k2,…]` (1-based designated indices, repetition = higher moment).
pub fn parse_estimand(text: &str, dim: usize) -> Result<Estimand, CliError> {
    let (kind, rest) = text.split_once(':').ok_or_else(|| {
        CliError::usage(format!(
            "estimand `{text}`: expected `u:e1,…` or `w:k1,…`"
        ))
    })?;
    match kind.trim() {
        "u" => {
            let alpha = parse_alpha(rest, dim)
                .map_err(|e| CliError::usage(format!("estimand `{text}`: {}", e.message)))?;
            Ok(Estimand::UMoment(alpha))
        }
        "w" => {
            let mut idx = Vec::new();
            for p in rest.split(',') {
                let k: usize = p.trim().parse().map_err(|_| {
                    CliError::usage(format!("estimand `{text}`: `{p}` is not an index"))
                })?;
                if k == 0 || k > dim {
                    return Err(CliError::usage(format!(
                        "estimand `{text}`: index {k} is outside 1..={dim}"
                    )));
                }
                idx.push(k - 1);
            }
            if idx.is_empty() {
                return Err(CliError::usage(format!("estimand `{text}`: empty index list")));
            }
            Ok(Estimand::WProduct(idx))
        }
        other => Err(CliError::usage(format!(
            "estimand `{text}`: unknown kind `{other}` (use `u` or `w`)"
        ))),
    }
}

fn sparse_rows_json<F: Field>(rows: &[Vec<(usize, F)>], basis: &[MultiIndex]) -> Value {
    Value::Array(
        rows.iter()
            .enumerate()
            .map(|(i, row)| {
                let entries: Vec<Value> = row
                    .iter()
                    .map(|(j, c)| {
                        json!({"col": basis[*j].render(), "value": scalar_json(c)})
                    })
                    .collect();
                json!({"row": basis[i].render(), "entries": entries})
            })
            .collect(),
    )
}

fn table_for<F: Field>(
    an: &Analysis<F>,
    alpha: &MultiIndex,
) -> Result<ReducedTable<F>, CliError> {
    Ok(build_reduced_table(an, alpha, DEFAULT_BASIS_CAP)?)
}

// --- analyze ---------------------------------------------------------------

fn validation_json(report: &ValidationReport) -> Value {
    json!({
        "valid": report.valid,
        "arithmetic": report.arithmetic,
        "tau1": report.tau1.render(),
        "violations": report.violations.iter().map(|v| json!({
            "condition": v.condition,
            "index": v.index,
            "detail": v.detail,
        })).collect::<Vec<_>>(),
        "warnings": report.warnings,
        "tenability_waived": report.tenability_waived,
    })
}

fn classification_json<F: Field>(an: &Analysis<F>) -> Value {
    json!({
        "small": an.cls.small,
        "one_multiplicity": an.cls.one_multiplicity,
        "second_real_part": an.cls.sigma2.as_ref().map(scalar_json),
        "semisimple": an.cls.semisimple,
        "principally_semisimple": an.cls.principally_semisimple,
        "log_power": an.cls.nu,
        "principal_blocks": an.cls.principal_blocks,
    })
}

pub fn analyze(any: &AnyAnalysis, report: &ValidationReport) -> Value {
    with_analysis!(any, an => {
        let sd = &an.sd;
        let blocks: Vec<Value> = sd
            .blocks
            .iter()
            .map(|b| {
                json!({
                    "first": b.first + 1,
                    "last": b.last + 1,
                    "size": b.size(),
                    "eigenvalue": scalar_json(&sd.lambda[b.first]),
                    "principal": b.principal,
                })
            })
            .collect();
        let forms: Vec<Value> = (0..sd.dim)
            .map(|k| {
                json!({
                    "index": k + 1,
                    "eigenvalue": scalar_json(&sd.lambda[k]),
                    "dependent": sd.eps[k],
                    "coords": vec_json(&sd.u[k]),
                    "dual": vec_json(&sd.v[k]),
                    "at_initial": scalar_json(&an.x1_u[k]),
                })
            })
            .collect();
        let va = expected_vector_asymptote(an);
        let designated: Vec<usize> =
            designated_w_indices(sd).iter().map(|k| k + 1).collect();
        json!({
            "validation": validation_json(report),
            "dimension": sd.dim,
            "tau1": scalar_json(&an.tau1()),
            "forms": forms,
            "blocks": blocks,
            "classification": classification_json(an),
            "designated_w": designated,
            "drift": {
                "projection": vec_json(&va.projection),
                "per_step": vec_json(&va.drift),
                "error_exponent": va.error_exponent,
            },
            "pins": effective_pins_json(any),
        })
    })
}

pub fn classify(any: &AnyAnalysis) -> Value {
    with_analysis!(any, an => {
        let designated: Vec<usize> =
            designated_w_indices(&an.sd).iter().map(|k| k + 1).collect();
        json!({
            "classification": classification_json(an),
            "kind": if an.cls.small { "small" } else { "large" },
            "designated_w": designated,
            "spectrum": an.sd.lambda.iter().map(scalar_json).collect::<Vec<_>>(),
        })
    })
}

// --- reduce ------------------------------------------------------------------

pub fn reduce(any: &AnyAnalysis, alpha_text: &str) -> Result<(Value, Rendered), CliError> {
    with_analysis!(any, an => {
        let alpha = parse_alpha(alpha_text, an.dim())?;
        let table = table_for(an, &alpha)?;
        let basis = table.basis().to_vec();
        let polys: Vec<Value> = basis
            .iter()
            .enumerate()
            .map(|(i, b)| {
                json!({
                    "power": b.render(),
                    "eigenvalue_combination": scalar_json(&table.phi.diag[i]),
                    "nilpotence_index": table.nilpotence_index(i),
                    "reduced_polynomial": table.q_polys[i].render(),
                })
            })
            .collect();
        let result = json!({
            "power": alpha.render(),
            "basis": basis.iter().map(|b| b.render()).collect::<Vec<_>>(),
            "polynomials": polys,
            "q_table": sparse_rows_json(&table.q, &basis),
            "p_table": sparse_rows_json(&table.p, &basis),
            "r_table": sparse_rows_json(&table.r, &basis),
        });
        let header = "kind,row,col,value".to_string();
        let mut rows = Vec::new();
        for (kind, t) in [("q", &table.q), ("p", &table.p), ("r", &table.r)] {
            for (i, row) in t.iter().enumerate() {
                for (j, c) in row {
                    rows.push(format!(
                        "{kind},{},{},{}",
                        basis[i].render(),
                        basis[*j].render(),
                        c.render()
                    ));
                }
            }
        }
        Ok((result, Rendered::Csv { header, rows }))
    })
}

// --- cone ---------------------------------------------------------------------

pub fn cone(
    any: &AnyAnalysis,
    alpha_text: Option<&str>,
    point_text: Option<&str>,
) -> Result<Value, CliError> {
    with_analysis!(any, an => {
        let s = an.dim();
        let render_ray = |r: &[BigRational]| -> Vec<String> {
            r.iter().map(|x| x.render()).collect::<Vec<_>>()
        };
        let facets: Vec<Value> = sigma_facet_normals(s)
            .iter()
            .map(|f| Value::Array(render_ray(f).into_iter().map(Value::String).collect()))
            .collect();
        let rays: Vec<Value> = sigma_extreme_rays(s)
            .iter()
            .map(|r| Value::Array(render_ray(r).into_iter().map(Value::String).collect()))
            .collect();
        let mut result = json!({
            "dimension": s,
            "facet_normals": facets,
            "extreme_rays": rays,
        });
        if let Some(at) = alpha_text {
            let alpha = parse_alpha(at, s)?;
            let set = a_alpha_enumerate(&alpha, &an.sd);
            let members: Vec<String> = set.members.iter().map(|m| m.render()).collect();
            result["polyhedron"] = json!({
                "power": alpha.render(),
                "members": members,
                "eigenvalue_combination": scalar_json(&an.bracket(&alpha)),
            });
        }
        if let Some(pt) = point_text {
            let coords: Vec<BigRational> = pt
                .split(',')
                .map(|c| {
                    match parse_scalar(c.trim()) {
                        Ok(Scalar::Rational(r)) => Ok(r),
                        Ok(Scalar::Float(_)) => Err(CliError::usage(format!(
                            "--point `{pt}`: membership testing needs exact rational coordinates"
                        ))),
                        Err(e) => Err(CliError::usage(format!("--point `{pt}`: {e}"))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            if coords.len() != s {
                return Err(CliError::usage(format!(
                    "--point `{pt}` has {} coordinates; the process has {s} colors",
                    coords.len()
                )));
            }
            result["membership"] = json!({
                "point": pt.split(',').map(|c| c.trim()).collect::<Vec<_>>(),
                "contained": sigma_contains(&coords),
            });
        }
        Ok(result)
    })
}

// --- moment ----------------------------------------------------------------

pub fn moment(
    any: &AnyAnalysis,
    alpha_text: &str,
    ns: &[u64],
    limit_w: bool,
) -> Result<(Value, Option<Rendered>), CliError> {
    match any {
        AnyAnalysis::Exact(an) => moment_impl(an, alpha_text, ns, limit_w),
        AnyAnalysis::Numeric(an) => moment_impl(an, alpha_text, ns, limit_w),
    }
}

fn moment_impl<F: Field>(
    an: &Analysis<F>,
    alpha_text: &str,
    ns: &[u64],
    limit_w: bool,
) -> Result<(Value, Option<Rendered>), CliError> {
    {
        let alpha = parse_alpha(alpha_text, an.dim())?;
        let table = table_for(an, &alpha)?;
        if limit_w {
            let lm = limit_w_moment(an, &table, &alpha)?;
            let result = json!({
                "power": alpha.render(),
                "limit_w": {
                    "eigenvalue_combination": scalar_json(&lm.bracket),
                    "reduced_at_initial": scalar_json(&lm.q_at_x1),
                    "gamma_factor": complex_json(lm.gamma_factor),
                    "value": complex_json(lm.value),
                },
            });
            return Ok((result, None));
        }
        if ns.is_empty() {
            return Err(CliError::usage(
                "moment needs --n (one or more horizons) or --limit-w",
            ));
        }
        let mono = polya::upoly::UPolynomial::monomial(alpha.clone(), F::one());
        let mut values = Vec::with_capacity(ns.len());
        let mut rows = Vec::with_capacity(ns.len());
        for &n in ns {
            let v = exact_moment(an, &table.phi, &mono, n)?;
            rows.push(format!("{n},{},{}", csv_f64(v.re_f64()), csv_f64(v.im_f64())));
            values.push(json!({"n": n, "value": scalar_json(&v)}));
        }
        let result = json!({
            "power": alpha.render(),
            "moments": values,
        });
        let csv = Rendered::Csv {
            header: "n,real,imag".to_string(),
            rows,
        };
        Ok((result, Some(csv)))
    }
}

// --- asymptotics --------------------------------------------------------------

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::SmallBound => "small-bound",
        Regime::LargeLeading => "large-leading",
        Regime::SemisimpleLargeExact => "semisimple-large-exact",
    }
}

pub fn asymptotics(any: &AnyAnalysis, alpha_text: &str) -> Result<Value, CliError> {
    with_analysis!(any, an => {
        let alpha = parse_alpha(alpha_text, an.dim())?;
        let table = table_for(an, &alpha)?;
        let term = polya::moments::asymptotic_moment(an, &table, &alpha)?;
        let constant = term.constant.as_ref().map(|c| {
            json!({
                "algebraic_factor": scalar_json(&c.algebraic_factor),
                "gamma_factor": complex_json(c.gamma_factor),
                "value": complex_json(c.value),
            })
        });
        let note = match term.regime {
            Regime::SmallBound => {
                "leading term is an upper-bound scale; the coefficient may vanish"
            }
            Regime::LargeLeading => "leading term of the expansion",
            Regime::SemisimpleLargeExact => {
                "scale is exact and the constant multiplies the leading power"
            }
        };
        let va = expected_vector_asymptote(an);
        Ok(json!({
            "power": alpha.render(),
            "term": {
                "exponent": scalar_json(&term.exponent),
                "log_power": term.log_power,
                "regime": regime_name(term.regime),
                "constant": constant,
                "note": note,
            },
            "vector": {
                "projection": vec_json(&va.projection),
                "per_step_drift": vec_json(&va.drift),
                "error_exponent": va.error_exponent,
            },
        }))
    })
}

// --- simulate ---------------------------------------------------------------

pub struct SimulateArgs {
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    pub threads: usize,
    pub estimands: Vec<String>,
}

pub fn simulate(any: &AnyAnalysis, args: &SimulateArgs) -> Result<(Value, Rendered), CliError> {
    with_analysis!(any, an => {
        let estimands = args
            .estimands
            .iter()
            .map(|t| parse_estimand(t, an.dim()))
            .collect::<Result<Vec<_>, _>>()?;
        if estimands.is_empty() {
            return Err(CliError::usage("simulate needs at least one --estimand"));
        }
        let cfg = SimConfig {
            horizon: args.horizon,
            trials: args.trials,
            seed: args.seed,
            threads: args.threads,
            estimands,
        };
        let report = estimate(an, &cfg)?;
        let engine = match report.engine {
            Engine::ScaledInteger => "scaled-integer",
            Engine::Float => "float",
        };
        let stats: Vec<Value> = report
            .stats
            .iter()
            .map(|st| {
                json!({
                    "estimand": st.estimand.render(),
                    "mean": complex_json(st.mean),
                    "se": st.se,
                    "trials": st.trials,
                })
            })
            .collect();
        let result = json!({
            "engine": engine,
            "horizon": report.horizon,
            "seed": report.seed,
            "estimates": stats,
        });
        let header = "estimand,mean_re,mean_im,se,trials".to_string();
        let rows: Vec<String> = report
            .stats
            .iter()
            .map(|st| {
                let se = st.se.map(csv_f64).unwrap_or_default();
                format!(
                    "{},{},{},{},{}",
                    st.estimand.render(),
                    csv_f64(st.mean.re),
                    csv_f64(st.mean.im),
                    se,
                    st.trials
                )
            })
            .collect();
        Ok((result, Rendered::Csv { header, rows }))
    })
}
