//! The `verify` subcommand: a named suite of structural invariants run
//! against one process.  Each check prints one `PASS`/`FAIL` line; the run
//! exits nonzero when any check fails.  Output is deterministic for a fixed
//! seed regardless of worker-thread count.

use crate::pipeline::{AnyAnalysis, CliError};
use num_rational::BigRational;
use polya::analysis::Analysis;
use polya::moments::{exact_moment, gamma_eval, gamma_eval_exact};
use polya::operator::{build_reduced_table, phi_apply, DEFAULT_BASIS_CAP};
use polya::process::{validate_process, ProcessSpec, ValidationReport};
use polya::scalar::Field;
use polya::simulate::{estimate, simulate_trajectory, Estimand, FinalState, SimConfig, SimReport};
use polya::spectral::{covector_action, PinnedForm};
use polya::upoly::{MultiIndex, UPolynomial};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde_json::{json, Value};

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

impl VerifyOutcome {
    pub fn to_json(&self) -> Value {
        json!({
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "pass": c.pass,
                "detail": c.detail,
            })).collect::<Vec<_>>(),
            "all_pass": self.all_pass,
        })
    }

    /// CSV rows `name,status,detail` with the detail quoted.
    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let status = if c.pass { "PASS" } else { "FAIL" };
                let detail = c.detail.replace('"', "\"\"");
                format!("{},{status},\"{detail}\"", c.name)
            })
            .collect()
    }
}

/// Tolerance for numeric-mode comparisons inside the suite; exact mode
/// compares with zero tolerance.
const NUMERIC_REL_TOL: f64 = 1e-8;

fn poly_negligible<F: Field>(f: &UPolynomial<F>, scale: f64) -> bool {
    if F::EXACT {
        f.is_zero()
    } else {
        f.max_abs() <= NUMERIC_REL_TOL * scale.max(1.0)
    }
}

fn polys_close<F: Field>(a: &UPolynomial<F>, b: &UPolynomial<F>) -> bool {
    let scale = a.max_abs().max(b.max_abs());
    poly_negligible(&a.sub(b), scale)
}

fn values_close<F: Field>(a: &F, b: &F) -> bool {
    if F::EXACT {
        a == b
    } else {
        let scale = a.abs_f64().max(b.abs_f64()).max(1.0);
        (a.clone() - b.clone()).abs_f64() <= NUMERIC_REL_TOL * scale
    }
}

/// Degree-2 segment anchor: the largest degree-2 monomial, whose initial
/// segment is every monomial of degree ≤ 2.
fn degree2_anchor(dim: usize) -> MultiIndex {
    let mut v = vec![0u32; dim];
    v[dim - 1] = 2;
    MultiIndex(v)
}

pub struct VerifyArgs {
    pub seed: u64,
    pub threads: usize,
}

pub fn run_verify(
    any: &AnyAnalysis,
    spec: &ProcessSpec,
    report: &ValidationReport,
    args: &VerifyArgs,
) -> Result<VerifyOutcome, CliError> {
    let checks = match any {
        AnyAnalysis::Exact(an) => suite(an, spec, report, args, rebuild_exact)?,
        AnyAnalysis::Numeric(an) => suite(an, spec, report, args, rebuild_numeric)?,
    };
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyOutcome { checks, all_pass })
}

fn rebuild_exact(
    spec: &ProcessSpec,
    pins: Vec<PinnedForm<BigRational>>,
    tol: f64,
) -> Result<Analysis<BigRational>, CliError> {
    Ok(Analysis::<BigRational>::exact(spec, &pins, tol)?)
}

fn rebuild_numeric(
    spec: &ProcessSpec,
    pins: Vec<PinnedForm<num_complex::Complex64>>,
    tol: f64,
) -> Result<Analysis<num_complex::Complex64>, CliError> {
    Ok(Analysis::<num_complex::Complex64>::numeric(spec, &pins, tol)?)
}

fn suite<F: Field>(
    an: &Analysis<F>,
    spec: &ProcessSpec,
    report: &ValidationReport,
    args: &VerifyArgs,
    rebuild: impl Fn(&ProcessSpec, Vec<PinnedForm<F>>, f64) -> Result<Analysis<F>, CliError>,
) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let s = an.dim();
    let anchor = degree2_anchor(s);
    let table = build_reduced_table(an, &anchor, DEFAULT_BASIS_CAP)?;
    let basis = table.basis().to_vec();

    // 1. validation: the report that admitted the process is clean.
    checks.push(Check {
        name: "validation",
        pass: report.valid,
        detail: if report.valid {
            format!("balance and initialization hold; τ₁ = {}", report.tau1.render())
        } else {
            format!("{} violation(s)", report.violations.len())
        },
    });

    // 2. jordan-relations: u_k∘A = λ_k·u_k (+ u_{k-1} on dependent forms).
    {
        let mut bad = Vec::new();
        for k in 0..s {
            let lhs = covector_action(&an.proc, &an.sd.u[k]);
            for j in 0..s {
                let mut rhs = an.sd.lambda[k].clone() * an.sd.u[k][j].clone();
                if an.sd.eps[k] {
                    rhs = rhs + an.sd.u[k - 1][j].clone();
                }
                if !values_close(&lhs[j], &rhs) {
                    bad.push(k + 1);
                    break;
                }
            }
        }
        checks.push(Check {
            name: "jordan-relations",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("all {s} forms satisfy their eigen/chain relation")
            } else {
                format!("forms {bad:?} break their relation")
            },
        });
    }

    // 3. dual-basis: u_k(v_l) = δ_kl.
    {
        let mut bad = Vec::new();
        for k in 0..s {
            for l in 0..s {
                let mut dot = F::zero();
                for j in 0..s {
                    dot = dot + an.sd.u[k][j].clone() * an.sd.v[l][j].clone();
                }
                let expect = if k == l { F::one() } else { F::zero() };
                if !values_close(&dot, &expect) {
                    bad.push((k + 1, l + 1));
                }
            }
        }
        checks.push(Check {
            name: "dual-basis",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                "pairings form the identity matrix".to_string()
            } else {
                format!("{} pairings off", bad.len())
            },
        });
    }

    // 4. reduced-structure: (Φ−⟨α,λ⟩)Q_α = Σ p_{α,β} Q_β on the segment.
    {
        let mut bad = Vec::new();
        for (i, b) in basis.iter().enumerate() {
            let q = &table.q_polys[i];
            let mut lhs = phi_apply(an, q)?;
            lhs.sub_assign(&q.scale(&table.phi.diag[i]));
            let mut rhs = UPolynomial::zero(s);
            for (j, c) in &table.p[i] {
                rhs.add_assign(&table.q_polys[*j].scale(c));
            }
            if !polys_close(&lhs, &rhs) {
                bad.push(b.render());
            }
        }
        checks.push(Check {
            name: "reduced-structure",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("shift identity holds on all {} segment members", basis.len())
            } else {
                format!("fails at {bad:?}")
            },
        });
    }

    // 5. nilpotence-index: (Φ−⟨α,λ⟩)^{ν+1} Q_α = 0 and not at power ν.
    {
        let mut bad = Vec::new();
        for (i, b) in basis.iter().enumerate() {
            let nu = table.nilpotence_index(i);
            let mut g = table.q_polys[i].clone();
            let scale0 = g.max_abs();
            let mut ok = true;
            for step in 0..=nu {
                let next = phi_apply(an, &g)?.sub(&g.scale(&table.phi.diag[i]));
                let vanished = poly_negligible(&next, scale0);
                if step < nu && vanished {
                    ok = false; // index overstated
                }
                if step == nu && !vanished {
                    ok = false; // index understated
                }
                g = next;
            }
            if !ok {
                bad.push(b.render());
            }
        }
        checks.push(Check {
            name: "nilpotence-index",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                "declared indices are sharp".to_string()
            } else {
                format!("indices wrong at {bad:?}")
            },
        });
    }

    // 6. reconstruction: u^α = Q_α + Σ_{β<α} q_{α,β} Q_β.
    {
        let mut bad = Vec::new();
        for (i, b) in basis.iter().enumerate() {
            let mut rhs = table.q_polys[i].clone();
            for (j, c) in &table.q[i] {
                rhs.add_assign(&table.q_polys[*j].scale(c));
            }
            let lhs = UPolynomial::monomial(b.clone(), F::one());
            if !polys_close(&lhs, &rhs) {
                bad.push(b.render());
            }
        }
        checks.push(Check {
            name: "reconstruction",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                "monomials rebuild from the reduced family".to_string()
            } else {
                format!("fails at {bad:?}")
            },
        });
    }

    // 7. refined-support: coefficient support respects the cone geometry.
    if s <= polya::cones::MAX_CONE_DIM {
        let offenders = polya::cones::refined_support_offenders(&table, &an.sd);
        checks.push(Check {
            name: "refined-support",
            pass: offenders.is_empty(),
            detail: if offenders.is_empty() {
                "all coefficient offsets lie in the cone".to_string()
            } else {
                let sample: Vec<String> = offenders
                    .iter()
                    .take(5)
                    .map(|(a, b)| format!("{}→{}", a.render(), b.render()))
                    .collect();
                format!("{} offending pairs, e.g. {}", offenders.len(), sample.join("; "))
            },
        });
    }

    // 8. moment-gamma: E Q_α(X_n) follows the rising-factorial product for
    //    eigen rows (nilpotence index 0).
    {
        let mut bad = Vec::new();
        let mut tested = 0usize;
        for (i, b) in basis.iter().enumerate() {
            if table.nilpotence_index(i) != 0 {
                continue;
            }
            tested += 1;
            let q = &table.q_polys[i];
            let q1 = q.evaluate_at(&an.x1_u);
            for n in 1..=20u64 {
                let lhs = exact_moment(an, &table.phi, q, n)?;
                let rhs = if F::EXACT {
                    let t = an.tau1().to_rational().unwrap();
                    let z = table.phi.diag[i].to_rational().unwrap();
                    F::from_rational(&gamma_eval_exact(&t, &z, n)) * q1.clone()
                } else {
                    let g = gamma_eval(an.tau1().re_f64(), n, table.phi.diag[i].to_c64());
                    F::from_scalar(&polya::scalar::Scalar::Float(g.re))
                        .unwrap_or_else(|_| F::zero())
                        * q1.clone()
                };
                let close = if F::EXACT {
                    lhs == rhs
                } else {
                    let g = gamma_eval(an.tau1().re_f64(), n, table.phi.diag[i].to_c64());
                    let expect = g * q1.to_c64();
                    let got = lhs.to_c64();
                    (got - expect).norm() <= NUMERIC_REL_TOL * expect.norm().max(1.0)
                };
                if !close {
                    bad.push(format!("{} at n={n}", b.render()));
                    break;
                }
            }
        }
        checks.push(Check {
            name: "moment-gamma",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                format!("{tested} eigen rows follow the product law for n ≤ 20")
            } else {
                format!("fails at {bad:?}")
            },
        });
    }

    // 9. balance-moment: E u₁(X_n) = n + τ₁ − 1 exactly.
    {
        let u1 = UPolynomial::monomial(MultiIndex::delta(s, 0), F::one());
        let mut bad = Vec::new();
        for n in 1..=20u64 {
            let lhs = exact_moment(an, &table.phi, &u1, n)?;
            let rhs = an.tau1() + F::from_int(n as i64 - 1);
            if !values_close(&lhs, &rhs) {
                bad.push(n);
            }
        }
        checks.push(Check {
            name: "balance-moment",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                "total measure grows by exactly one per step in expectation".to_string()
            } else {
                format!("fails at n ∈ {bad:?}")
            },
        });
    }

    // 10. trajectory-balance: a sampled path conserves total measure.
    {
        let n = 500u64;
        let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
        let state = simulate_trajectory(an, n, &mut rng)?;
        let expect = an.tau1().re_f64() + (n as f64 - 1.0);
        let (pass, detail) = match &state {
            FinalState::Exact { scaled, denom } => {
                let total: i128 = scaled.iter().sum();
                let tau1 = an.tau1().to_rational().unwrap();
                let lhs = BigRational::new(total.into(), (*denom).into());
                let rhs = tau1 + BigRational::from_int(n as i64 - 1);
                (
                    lhs == rhs,
                    format!("integer path: total measure is exactly {expect} at n = {n}"),
                )
            }
            FinalState::Float(x) => {
                let total: f64 = x.iter().sum();
                (
                    (total - expect).abs() <= 1e-6 * expect.abs().max(1.0),
                    format!("float path: total measure {total} vs {expect} at n = {n}"),
                )
            }
        };
        checks.push(Check {
            name: "trajectory-balance",
            pass,
            detail,
        });
    }

    // 11. simulation-determinism: identical seeds reproduce bit-identically.
    {
        let cfg = SimConfig {
            horizon: 2000,
            trials: 64,
            seed: args.seed,
            threads: args.threads,
            estimands: vec![Estimand::UMoment(MultiIndex::delta(s, 0))],
        };
        let r1 = estimate(an, &cfg)?;
        let r2 = estimate(an, &cfg)?;
        let pass = reports_identical(&r1, &r2);
        checks.push(Check {
            name: "simulation-determinism",
            pass,
            detail: if pass {
                format!("two runs at seed {} agree bit for bit", args.seed)
            } else {
                "repeated runs differ".to_string()
            },
        });
    }

    // 12. pin-round-trip: re-pinning every form to its computed coordinates
    //     reproduces the same reduced polynomials.
    {
        let pins: Vec<PinnedForm<F>> = (1..s)
            .map(|k| PinnedForm {
                index: k,
                coords: an.sd.u[k].clone(),
            })
            .collect();
        let rebuilt = rebuild(spec, pins, an.tol)?;
        let table2 = build_reduced_table(&rebuilt, &anchor, DEFAULT_BASIS_CAP)?;
        let mut bad = Vec::new();
        for (i, b) in basis.iter().enumerate() {
            if !polys_close(&table.q_polys[i], &table2.q_polys[i]) {
                bad.push(b.render());
            }
        }
        checks.push(Check {
            name: "pin-round-trip",
            pass: bad.is_empty(),
            detail: if bad.is_empty() {
                "re-ingested basis reproduces identical reduced polynomials".to_string()
            } else {
                format!("differs at {bad:?}")
            },
        });
    }

    let _ = validate_process(spec, report.tenability_waived)?; // sanity: still admissible
    Ok(checks)
}

fn reports_identical(a: &SimReport, b: &SimReport) -> bool {
    if a.stats.len() != b.stats.len() {
        return false;
    }
    a.stats.iter().zip(&b.stats).all(|(x, y)| {
        x.mean.re.to_bits() == y.mean.re.to_bits()
            && x.mean.im.to_bits() == y.mean.im.to_bits()
            && x.se.map(f64::to_bits) == y.se.map(f64::to_bits)
            && x.trials == y.trials
    })
}
