//! Process descriptions, validation, and canonical compilation.
//!
//! A process is given by `s` increment vectors `w_k`, optional measuring
//! forms `l_k` (defaulting to the coordinate forms), and an initial state.
//! Validation enforces, in order:
//!
//! 1. *initialization* — the initial state is nonzero and all its measures
//!    `l_k(X₁)` are nonnegative;
//! 2. *balance* — `Σ_j l_j(w_k) = 1` for every color `k`;
//! 3. *tenability* — off-diagonal measures `l_k(w_j)` are nonnegative, and
//!    a negative diagonal `l_k(w_k)` is allowed only when the lattice
//!    generated by `l_k(X₁)` and all `l_k(w_j)` equals the lattice generated
//!    by `l_k(w_k)` alone (so the `k`-th measure can never go negative).
//!
//! Tenability violations can be waived: all results then hold conditioned on
//! the event that every measure stays nonnegative.  Balance and
//! initialization cannot be waived.
//!
//! Compilation rewrites everything in the measuring coordinates
//! `x_j = l_j(x)`, where the increment matrix rows are exactly the compiled
//! `w_k` and the analysis of the replacement endomorphism takes place.

use crate::linalg::Mat;
use crate::scalar::{Field, Scalar, ScalarError};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Tolerance for float-mode validation checks (balance sums, sign tests).
pub const FLOAT_VALIDATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("balance violation for color {k}: measures of w_{k} sum to {sum}, expected 1")]
    BalanceViolation { k: usize, sum: String },
    #[error("initialization violation: {0}")]
    InitializationViolation(String),
    #[error("tenability violation for measure {k}: {detail}")]
    TenabilityViolation { k: usize, detail: String },
    #[error("tenability of measure {k} is undecidable with float data (negative diagonal); rerun with exact input or waive tenability")]
    FloatTenabilityUnknown { k: usize },
    #[error("replacement rows do not share a common sum: row {k} sums to {sum}, row 0 sums to {first}")]
    UnequalRowSums { k: usize, sum: String, first: String },
    #[error("urn balance is zero; cannot standardize")]
    ZeroBalance,
    #[error("the measuring forms are not a basis")]
    FormsNotABasis,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A process description in user coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ProcessSpec {
    pub dim: usize,
    /// Increment vectors `w_k`, one row per color, in ambient coordinates.
    pub increments: Vec<Vec<Scalar>>,
    /// Optional measuring forms `l_k` (coefficient rows in ambient
    /// coordinates).  `None` means the coordinate forms.
    pub forms: Option<Vec<Vec<Scalar>>>,
    /// Initial state in ambient coordinates.
    pub initial: Vec<Scalar>,
}

impl ProcessSpec {
    /// True when every entry is an exact rational, enabling exact analysis.
    pub fn all_rational(&self) -> bool {
        let rows = self.increments.iter().flatten();
        let forms = self.forms.iter().flatten().flatten();
        rows.chain(forms)
            .chain(self.initial.iter())
            .all(Scalar::is_rational)
    }

    fn check_shape(&self) -> Result<(), ProcessError> {
        let s = self.dim;
        if s == 0 {
            return Err(ProcessError::DimensionMismatch("dimension must be ≥ 1".into()));
        }
        if self.increments.len() != s {
            return Err(ProcessError::DimensionMismatch(format!(
                "expected {s} increment vectors, got {}",
                self.increments.len()
            )));
        }
        for (k, row) in self.increments.iter().enumerate() {
            if row.len() != s {
                return Err(ProcessError::DimensionMismatch(format!(
                    "increment {k} has {} coordinates, expected {s}",
                    row.len()
                )));
            }
        }
        if let Some(forms) = &self.forms {
            if forms.len() != s || forms.iter().any(|f| f.len() != s) {
                return Err(ProcessError::DimensionMismatch(format!(
                    "expected {s}×{s} form coefficients"
                )));
            }
        }
        if self.initial.len() != s {
            return Err(ProcessError::DimensionMismatch(format!(
                "initial state has {} coordinates, expected {s}",
                self.initial.len()
            )));
        }
        Ok(())
    }
}

/// A process rewritten in measuring coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProcess<F: Field> {
    pub dim: usize,
    /// `w[k][j] = l_j(w_k)`: increment matrix rows in measuring coordinates.
    pub w: Vec<Vec<F>>,
    /// `x1[j] = l_j(X₁)`.
    pub x1: Vec<F>,
    /// `τ₁ = Σ_j l_j(X₁)`, the initial total measure.
    pub tau1: F,
}

/// Rewrite a specification in measuring coordinates over the field `F`.
pub fn compile<F: Field>(spec: &ProcessSpec, tol: f64) -> Result<CompiledProcess<F>, ProcessError> {
    spec.check_shape()?;
    let s = spec.dim;
    let conv_row = |row: &[Scalar]| -> Result<Vec<F>, ProcessError> {
        row.iter()
            .map(|x| F::from_scalar(x).map_err(ProcessError::from))
            .collect()
    };
    let (w, x1) = match &spec.forms {
        None => {
            let w = spec
                .increments
                .iter()
                .map(|r| conv_row(r))
                .collect::<Result<Vec<_>, _>>()?;
            (w, conv_row(&spec.initial)?)
        }
        Some(forms) => {
            let l = Mat::from_rows(
                forms
                    .iter()
                    .map(|r| conv_row(r))
                    .collect::<Result<Vec<_>, _>>()?,
            );
            if l
                .inverse(tol)
                .map_err(|_| ProcessError::FormsNotABasis)?
                .is_none()
            {
                return Err(ProcessError::FormsNotABasis);
            }
            let w = spec
                .increments
                .iter()
                .map(|r| Ok(l.mat_vec(&conv_row(r)?)))
                .collect::<Result<Vec<_>, ProcessError>>()?;
            (w, l.mat_vec(&conv_row(&spec.initial)?))
        }
    };
    let mut tau1 = F::zero();
    for v in &x1 {
        tau1 = tau1 + v.clone();
    }
    Ok(CompiledProcess { dim: s, w, x1, tau1 })
}

/// One recorded condition failure.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Condition identifier: `"initialization"`, `"balance"`,
    /// `"tenability-offdiagonal"` or `"tenability-diagonal"`.
    pub condition: String,
    /// Index of the measure or color involved.
    pub index: usize,
    pub detail: String,
}

/// Outcome of validating a process description.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    /// `"exact"` when every input was rational, `"float"` otherwise.
    pub arithmetic: String,
    pub tau1: Scalar,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    pub tenability_waived: bool,
}

/// Validate a process description.
///
/// Balance and initialization failures are hard errors.  Tenability failures
/// are errors unless `waive_tenability` is set, in which case they are
/// recorded in the report and the report stays valid.  With float data a
/// negative diagonal makes the lattice condition undecidable:
/// [`ProcessError::FloatTenabilityUnknown`] unless waived.
pub fn validate_process(
    spec: &ProcessSpec,
    waive_tenability: bool,
) -> Result<ValidationReport, ProcessError> {
    spec.check_shape()?;
    if spec.all_rational() {
        validate_exact(spec, waive_tenability)
    } else {
        validate_float(spec, waive_tenability)
    }
}

fn validate_exact(
    spec: &ProcessSpec,
    waive: bool,
) -> Result<ValidationReport, ProcessError> {
    let c = compile::<BigRational>(spec, FLOAT_VALIDATION_TOL)?;
    let s = c.dim;
    let one = <BigRational as Field>::one();

    if c.x1.iter().all(|v| Zero::is_zero(v)) {
        return Err(ProcessError::InitializationViolation(
            "initial state is zero".into(),
        ));
    }
    for (j, v) in c.x1.iter().enumerate() {
        if v.is_negative() {
            return Err(ProcessError::InitializationViolation(format!(
                "l_{}(X1) = {} is negative",
                j + 1,
                v
            )));
        }
    }
    for (k, row) in c.w.iter().enumerate() {
        let sum: BigRational = row.iter().fold(<BigRational as Field>::zero(), |a, b| a + b.clone());
        if sum != one {
            return Err(ProcessError::BalanceViolation {
                k: k + 1,
                sum: sum.to_string(),
            });
        }
    }

    let mut violations = Vec::new();
    // off-diagonal measures must be nonnegative
    for k in 0..s {
        for j in 0..s {
            if j != k && c.w[j][k].is_negative() {
                violations.push(Violation {
                    condition: "tenability-offdiagonal".into(),
                    index: k + 1,
                    detail: format!("l_{}(w_{}) = {} is negative", k + 1, j + 1, c.w[j][k]),
                });
            }
        }
    }
    // negative diagonals need the lattice condition
    for k in 0..s {
        if !c.w[k][k].is_negative() {
            continue;
        }
        if !lattice_condition(&c, k) {
            violations.push(Violation {
                condition: "tenability-diagonal".into(),
                index: k + 1,
                detail: format!(
                    "l_{}(w_{}) = {} is negative and the lattice generated by l_{}(X1) and all l_{}(w_j) is strictly finer than the one generated by l_{}(w_{})",
                    k + 1, k + 1, c.w[k][k], k + 1, k + 1, k + 1, k + 1
                ),
            });
        }
    }

    if !violations.is_empty() && !waive {
        let v = &violations[0];
        return Err(ProcessError::TenabilityViolation {
            k: v.index,
            detail: v.detail.clone(),
        });
    }
    Ok(ValidationReport {
        valid: true,
        arithmetic: "exact".into(),
        tau1: Scalar::Rational(c.tau1),
        tenability_waived: waive && !violations.is_empty(),
        violations,
        warnings: Vec::new(),
    })
}

/// Exact lattice condition allowing a negative diagonal measure: the
/// subgroup of ℝ generated by `l_k(X₁)` and every `l_k(w_j)` must equal the
/// subgroup generated by `l_k(w_k)` alone.
fn lattice_condition(c: &CompiledProcess<BigRational>, k: usize) -> bool {
    let mut values: Vec<BigRational> = vec![c.x1[k].clone()];
    values.extend((0..c.dim).map(|j| c.w[j][k].clone()));
    let target = c.w[k][k].clone();
    let mut denom = BigInt::from(1);
    for v in values.iter().chain(std::iter::once(&target)) {
        denom = denom.lcm(v.denom());
    }
    let mut g = BigInt::zero();
    for v in &values {
        let n = v.numer() * (&denom / v.denom());
        g = g.gcd(&n);
    }
    let t = (target.numer() * (&denom / target.denom())).abs();
    g == t
}

fn validate_float(
    spec: &ProcessSpec,
    waive: bool,
) -> Result<ValidationReport, ProcessError> {
    use num_complex::Complex64;
    let tol = FLOAT_VALIDATION_TOL;
    let c = compile::<Complex64>(spec, tol)?;
    let s = c.dim;
    let re = |v: &Complex64| v.re;

    if c.x1.iter().all(|v| v.norm() <= tol) {
        return Err(ProcessError::InitializationViolation(
            "initial state is zero".into(),
        ));
    }
    for (j, v) in c.x1.iter().enumerate() {
        if re(v) < -tol {
            return Err(ProcessError::InitializationViolation(format!(
                "l_{}(X1) = {} is negative",
                j + 1,
                re(v)
            )));
        }
    }
    for (k, row) in c.w.iter().enumerate() {
        let sum: f64 = row.iter().map(re).sum();
        if (sum - 1.0).abs() > tol {
            return Err(ProcessError::BalanceViolation {
                k: k + 1,
                sum: sum.to_string(),
            });
        }
    }

    let mut violations = Vec::new();
    let mut warnings = Vec::new();
    for k in 0..s {
        for j in 0..s {
            if j != k && re(&c.w[j][k]) < -tol {
                violations.push(Violation {
                    condition: "tenability-offdiagonal".into(),
                    index: k + 1,
                    detail: format!("l_{}(w_{}) = {} is negative", k + 1, j + 1, re(&c.w[j][k])),
                });
            }
        }
    }
    let mut unknown: Option<usize> = None;
    for k in 0..s {
        if re(&c.w[k][k]) < -tol {
            unknown.get_or_insert(k + 1);
            warnings.push(format!(
                "measure {} has a negative diagonal increment; the lattice tenability condition is undecidable with float data",
                k + 1
            ));
        }
    }

    if !waive {
        if let Some(v) = violations.first() {
            return Err(ProcessError::TenabilityViolation {
                k: v.index,
                detail: v.detail.clone(),
            });
        }
        if let Some(k) = unknown {
            return Err(ProcessError::FloatTenabilityUnknown { k });
        }
    }
    Ok(ValidationReport {
        valid: true,
        arithmetic: "float".into(),
        tau1: Scalar::Float(c.tau1.re),
        tenability_waived: waive && (!violations.is_empty() || unknown.is_some()),
        violations,
        warnings,
    })
}

/// Standardize an urn: divide a constant-row-sum replacement matrix `r`
/// (rows are added-ball counts per drawn color) and the initial composition
/// `u1` by the common row sum, producing a balance-one process on the
/// coordinate forms.
pub fn standardize_urn(
    r: &[Vec<Scalar>],
    u1: &[Scalar],
) -> Result<ProcessSpec, ProcessError> {
    let s = r.len();
    if s == 0 || r.iter().any(|row| row.len() != s) || u1.len() != s {
        return Err(ProcessError::DimensionMismatch(format!(
            "expected a square matrix with matching initial vector, got {s} rows"
        )));
    }
    let row_sum = |row: &[Scalar]| -> Scalar {
        row.iter().fold(Scalar::from_int(0), |a, b| a.add(b))
    };
    let balance = row_sum(&r[0]);
    for (k, row) in r.iter().enumerate().skip(1) {
        let sum = row_sum(row);
        if !sum.eq_with(&balance, FLOAT_VALIDATION_TOL) {
            return Err(ProcessError::UnequalRowSums {
                k: k + 1,
                sum: sum.render(),
                first: balance.render(),
            });
        }
    }
    if balance.is_zero() {
        return Err(ProcessError::ZeroBalance);
    }
    let div_row = |row: &[Scalar]| -> Result<Vec<Scalar>, ProcessError> {
        row.iter()
            .map(|x| x.div(&balance).map_err(ProcessError::from))
            .collect()
    };
    Ok(ProcessSpec {
        dim: s,
        increments: r.iter().map(|row| div_row(row)).collect::<Result<_, _>>()?,
        forms: None,
        initial: div_row(u1)?,
    })
}
