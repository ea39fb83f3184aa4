//! Shared plumbing: spec ingestion, pinned-form parsing, arithmetic-mode
//! resolution (exact with numeric fallback), and the mapping from library
//! errors to exit codes and structured error JSON.

use num_complex::Complex64;
use num_rational::BigRational;
use polya::analysis::{Analysis, AnalysisError};
use polya::moments::MomentError;
use polya::operator::OperatorError;
use polya::process::{ProcessError, ProcessSpec, ValidationReport};
use polya::scalar::{parse_scalar, Field, Scalar, ScalarError};
use polya::simulate::SimError;
use polya::spectral::{PinnedForm, SpectralError};
use serde_json::{json, Value};
use std::path::Path;

// --- errors -------------------------------------------------------------

/// Exit-code classes. 0 is success; clap uses 2 for usage errors, matching
/// the validation class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrClass {
    /// Bad input: spec validation, malformed arguments, unsatisfiable request.
    Validation,
    /// Numeric ambiguity: clustering, resonance bands, non-rational spectra
    /// in forced exact mode.
    Ambiguity,
    /// Internal capacity limit (frozen basis too large).
    Limit,
    /// Unexpected internal failure, or failed verification checks.
    Internal,
}

impl ErrClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrClass::Validation => 2,
            ErrClass::Ambiguity => 3,
            ErrClass::Limit => 4,
            ErrClass::Internal => 1,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            ErrClass::Validation => "validation",
            ErrClass::Ambiguity => "ambiguity",
            ErrClass::Limit => "limit",
            ErrClass::Internal => "internal",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CliError {
    pub class: ErrClass,
    pub message: String,
    pub detail: Value,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            class: ErrClass::Validation,
            message: message.into(),
            detail: Value::Null,
        }
    }
    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            class: ErrClass::Internal,
            message: message.into(),
            detail: Value::Null,
        }
    }
    pub fn to_json(&self) -> Value {
        json!({
            "schema": "polya/v1",
            "error": {
                "kind": self.class.name(),
                "message": self.message,
                "detail": self.detail,
            }
        })
    }
}

impl From<ProcessError> for CliError {
    fn from(e: ProcessError) -> Self {
        CliError {
            class: ErrClass::Validation,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        let class = match &e {
            SpectralError::IrrationalSpectrum(_)
            | SpectralError::ClusterAmbiguity { .. }
            | SpectralError::DefectiveNumerics(_) => ErrClass::Ambiguity,
            SpectralError::PinViolation { .. } => ErrClass::Validation,
            SpectralError::Internal(_) => ErrClass::Internal,
        };
        CliError {
            class,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Process(p) => p.into(),
            AnalysisError::Spectral(s) => s.into(),
        }
    }
}

impl From<OperatorError> for CliError {
    fn from(e: OperatorError) -> Self {
        let class = match &e {
            OperatorError::BasisTooLarge { .. } => ErrClass::Limit,
            OperatorError::ResonanceAmbiguity { .. }
            | OperatorError::TriangularityViolation { .. } => ErrClass::Ambiguity,
            OperatorError::Internal(_) => ErrClass::Internal,
        };
        CliError {
            class,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

impl From<MomentError> for CliError {
    fn from(e: MomentError) -> Self {
        CliError {
            class: ErrClass::Validation,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        let class = match &e {
            SimError::Pool(_) => ErrClass::Internal,
            _ => ErrClass::Validation,
        };
        CliError {
            class,
            message: e.to_string(),
            detail: Value::Null,
        }
    }
}

// --- spec files -----------------------------------------------------------

fn parse_scalar_field(ctx: &str, v: &Value) -> Result<Scalar, CliError> {
    match v {
        Value::String(s) => {
            parse_scalar(s).map_err(|e| CliError::usage(format!("{ctx}: {e}")))
        }
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Scalar::from_int(i))
            } else {
                Ok(Scalar::Float(n.as_f64().ok_or_else(|| {
                    CliError::usage(format!("{ctx}: unrepresentable number"))
                })?))
            }
        }
        other => Err(CliError::usage(format!(
            "{ctx}: expected a number or a string literal, got {other}"
        ))),
    }
}

fn parse_scalar_matrix(ctx: &str, v: &Value) -> Result<Vec<Vec<Scalar>>, CliError> {
    let rows = v
        .as_array()
        .ok_or_else(|| CliError::usage(format!("{ctx}: expected an array of rows")))?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .ok_or_else(|| CliError::usage(format!("{ctx}[{i}]: expected an array")))?;
        let mut r = Vec::with_capacity(cells.len());
        for (j, c) in cells.iter().enumerate() {
            r.push(parse_scalar_field(&format!("{ctx}[{i}][{j}]"), c)?);
        }
        out.push(r);
    }
    Ok(out)
}

/// Read a process description from a JSON file: fields `dimension`,
/// `replacement_matrix`, `initial`, optional `forms` and `balance` (the
/// matrix is divided by `balance` when present).
pub fn load_spec_file(path: &Path) -> Result<ProcessSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::usage(format!("{}: expected an object", path.display())))?;
    let dim = obj
        .get("dimension")
        .and_then(Value::as_u64)
        .ok_or_else(|| CliError::usage("spec field `dimension` must be a positive integer"))?
        as usize;
    let matrix = obj
        .get("replacement_matrix")
        .ok_or_else(|| CliError::usage("spec field `replacement_matrix` is required"))?;
    let mut increments = parse_scalar_matrix("replacement_matrix", matrix)?;
    if let Some(bal) = obj.get("balance") {
        let s = parse_scalar_field("balance", bal)?;
        increments = divide_rows(increments, &s)?;
    }
    let initial_v = obj
        .get("initial")
        .ok_or_else(|| CliError::usage("spec field `initial` is required"))?;
    let initial_arr = initial_v
        .as_array()
        .ok_or_else(|| CliError::usage("spec field `initial` must be an array"))?;
    let mut initial = Vec::with_capacity(initial_arr.len());
    for (j, c) in initial_arr.iter().enumerate() {
        initial.push(parse_scalar_field(&format!("initial[{j}]"), c)?);
    }
    let forms = match obj.get("forms") {
        None | Some(Value::Null) => None,
        Some(f) => Some(parse_scalar_matrix("forms", f)?),
    };
    for key in obj.keys() {
        if !matches!(
            key.as_str(),
            "dimension" | "replacement_matrix" | "balance" | "initial" | "forms"
        ) {
            return Err(CliError::usage(format!("unknown spec field `{key}`")));
        }
    }
    Ok(ProcessSpec {
        dim,
        increments,
        forms,
        initial,
    })
}

fn divide_rows(rows: Vec<Vec<Scalar>>, s: &Scalar) -> Result<Vec<Vec<Scalar>>, CliError> {
    if s.is_zero() {
        return Err(CliError::usage("spec field `balance` must be nonzero"));
    }
    let div = |x: &Scalar| -> Scalar {
        match (x, s) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a / b),
            _ => Scalar::Float(x.to_f64() / s.to_f64()),
        }
    };
    Ok(rows
        .into_iter()
        .map(|r| r.iter().map(div).collect())
        .collect())
}

// --- pins -----------------------------------------------------------------

/// A pinned form as given on the command line or in a pin file:
/// 1-based index plus coefficient literals.
#[derive(Debug, Clone)]
pub struct RawPin {
    pub index: usize,
    pub coords: Vec<RawCoord>,
}

#[derive(Debug, Clone)]
pub enum RawCoord {
    Literal(Scalar),
    Complex(f64, f64),
}

/// Parse `--pin-form k:c1,c2,…` (`k` 1-based).
pub fn parse_pin_form(text: &str) -> Result<RawPin, CliError> {
    let (idx, rest) = text
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("--pin-form `{text}`: expected `k:c1,c2,…`")))?;
    let index: usize = idx
        .trim()
        .parse()
        .map_err(|_| CliError::usage(format!("--pin-form `{text}`: bad index `{idx}`")))?;
    if index == 0 {
        return Err(CliError::usage(
            "--pin-form index is 1-based; index 1 (the fixed form) cannot be re-pinned",
        ));
    }
    let coords = rest
        .split(',')
        .map(|c| {
            parse_scalar(c.trim())
                .map(RawCoord::Literal)
                .map_err(|e| CliError::usage(format!("--pin-form `{text}`: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RawPin { index, coords })
}

/// Read pins from a JSON file: either `{"pins": […]}` or a full `analyze`
/// artifact (pins found under `result.pins`).  Each pin is
/// `{"index": k, "coords": [literal or {"re":…,"im":…}, …]}`.
pub fn load_pin_file(path: &Path) -> Result<Vec<RawPin>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("{}: invalid JSON: {e}", path.display())))?;
    let pins_v = v
        .get("pins")
        .or_else(|| v.get("result").and_then(|r| r.get("pins")))
        .ok_or_else(|| {
            CliError::usage(format!(
                "{}: no `pins` array found (neither top-level nor under `result`)",
                path.display()
            ))
        })?;
    let arr = pins_v
        .as_array()
        .ok_or_else(|| CliError::usage("`pins` must be an array"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, pv) in arr.iter().enumerate() {
        let ctx = format!("pins[{i}]");
        let index = pv
            .get("index")
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::usage(format!("{ctx}: missing 1-based `index`")))?
            as usize;
        if index == 0 {
            return Err(CliError::usage(format!("{ctx}: index is 1-based")));
        }
        let coords_v = pv
            .get("coords")
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::usage(format!("{ctx}: missing `coords` array")))?;
        let mut coords = Vec::with_capacity(coords_v.len());
        for (j, cv) in coords_v.iter().enumerate() {
            let cctx = format!("{ctx}.coords[{j}]");
            if let Some(obj) = cv.as_object() {
                let re = obj.get("re").and_then(Value::as_f64).ok_or_else(|| {
                    CliError::usage(format!("{cctx}: complex coordinate needs `re`"))
                })?;
                let im = obj.get("im").and_then(Value::as_f64).unwrap_or(0.0);
                coords.push(RawCoord::Complex(re, im));
            } else {
                coords.push(RawCoord::Literal(parse_scalar_field(&cctx, cv)?));
            }
        }
        out.push(RawPin { index, coords });
    }
    Ok(out)
}

fn pins_exact(pins: &[RawPin]) -> Result<Vec<PinnedForm<BigRational>>, CliError> {
    pins.iter()
        .map(|p| {
            let coords = p
                .coords
                .iter()
                .map(|c| match c {
                    RawCoord::Literal(Scalar::Rational(r)) => Ok(r.clone()),
                    RawCoord::Literal(Scalar::Float(v)) => Err(CliError::from(
                        ProcessError::from(ScalarError::FloatInExactMode(v.to_string())),
                    )),
                    RawCoord::Complex(re, im) => Err(CliError::from(ProcessError::from(
                        ScalarError::FloatInExactMode(format!("{re}+{im}i")),
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PinnedForm {
                index: p.index - 1,
                coords,
            })
        })
        .collect()
}

fn pins_numeric(pins: &[RawPin]) -> Vec<PinnedForm<Complex64>> {
    pins.iter()
        .map(|p| PinnedForm {
            index: p.index - 1,
            coords: p
                .coords
                .iter()
                .map(|c| match c {
                    RawCoord::Literal(s) => Complex64::new(s.to_f64(), 0.0),
                    RawCoord::Complex(re, im) => Complex64::new(*re, *im),
                })
                .collect(),
        })
        .collect()
}

fn pins_are_exactable(pins: &[RawPin]) -> bool {
    pins.iter().all(|p| {
        p.coords
            .iter()
            .all(|c| matches!(c, RawCoord::Literal(Scalar::Rational(_))))
    })
}

// --- mode resolution --------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Exact,
    Numeric,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Exact => "exact",
            Mode::Numeric => "numeric",
        }
    }
}

pub enum AnyAnalysis {
    Exact(Analysis<BigRational>),
    Numeric(Analysis<Complex64>),
}

impl AnyAnalysis {
    pub fn mode_used(&self) -> &'static str {
        match self {
            AnyAnalysis::Exact(_) => "exact",
            AnyAnalysis::Numeric(_) => "numeric",
        }
    }
}

fn exact_fallback_allowed(e: &AnalysisError) -> bool {
    matches!(
        e,
        AnalysisError::Process(ProcessError::Scalar(ScalarError::FloatInExactMode(_)))
            | AnalysisError::Spectral(SpectralError::IrrationalSpectrum(_))
    )
}

/// Validate and build the analysis in the requested arithmetic mode.
/// Returns the analysis together with the validation report.
pub fn build_analysis(
    spec: &ProcessSpec,
    pins: &[RawPin],
    tol: f64,
    mode: Mode,
    waive_tenability: bool,
) -> Result<(AnyAnalysis, ValidationReport), CliError> {
    let report = polya::process::validate_process(spec, waive_tenability)?;
    let an = match mode {
        Mode::Exact => {
            let p = pins_exact(pins)?;
            AnyAnalysis::Exact(Analysis::<BigRational>::exact(spec, &p, tol)?)
        }
        Mode::Numeric => {
            let p = pins_numeric(pins);
            AnyAnalysis::Numeric(Analysis::<Complex64>::numeric(spec, &p, tol)?)
        }
        Mode::Auto => {
            if spec.all_rational() && pins_are_exactable(pins) {
                let p = pins_exact(pins)?;
                match Analysis::<BigRational>::exact(spec, &p, tol) {
                    Ok(a) => AnyAnalysis::Exact(a),
                    Err(e) if exact_fallback_allowed(&e) => {
                        let p = pins_numeric(pins);
                        AnyAnalysis::Numeric(Analysis::<Complex64>::numeric(spec, &p, tol)?)
                    }
                    Err(e) => return Err(e.into()),
                }
            } else {
                let p = pins_numeric(pins);
                AnyAnalysis::Numeric(Analysis::<Complex64>::numeric(spec, &p, tol)?)
            }
        }
    };
    Ok((an, report))
}

/// Render the pins actually in effect (from the built analysis) in the
/// round-trip JSON shape.
pub fn effective_pins_json(an: &AnyAnalysis) -> Value {
    fn render<F: Field>(a: &Analysis<F>) -> Value {
        let pins: Vec<Value> = (0..a.dim())
            .map(|k| {
                let coords: Vec<Value> = a.sd.u[k]
                    .iter()
                    .map(|c| {
                        if F::EXACT {
                            Value::String(c.render())
                        } else {
                            json!({"re": c.re_f64(), "im": c.im_f64()})
                        }
                    })
                    .collect();
                json!({"index": k + 1, "coords": coords})
            })
            .collect();
        Value::Array(pins)
    }
    match an {
        AnyAnalysis::Exact(a) => render(a),
        AnyAnalysis::Numeric(a) => render(a),
    }
}
