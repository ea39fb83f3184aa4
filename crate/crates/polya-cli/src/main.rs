//! Batch front door for the balanced-urn pipeline: spec ingestion, fixture
//! library, subcommand dispatch, machine-readable output.

mod emit;
mod fixtures;
mod pipeline;
mod run;
mod verify;

use clap::{Args, Parser, Subcommand, ValueEnum};
use emit::{Format, Manifest, Rendered};
use pipeline::{AnyAnalysis, CliError, Mode, RawCoord, RawPin};
use serde_json::{json, Value};
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "polya",
    version,
    about = "Spectral analysis, reduced polynomials, moments and simulation for balanced urn processes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SourceArgs {
    /// Fixture name (see `--help` for the list) or path to a JSON process file.
    ///
    /// Known fixtures: polya, general2, triangular, two-three-tree,
    /// two-three-tree-10, cyclic, bst-congruence, ycart-4d, jordan3.
    source: String,
    /// Number of colors (cyclic, bst-congruence).
    #[arg(long)]
    s: Option<usize>,
    /// Diagonal ratio for the triangular fixture (rational, e.g. 3/4).
    #[arg(long, allow_hyphen_values = true)]
    l: Option<String>,
    /// Off-diagonal weight a for general2 (rational).
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Off-diagonal weight b for general2 (rational).
    #[arg(long, allow_hyphen_values = true)]
    b: Option<String>,
    /// Initial white mass for ycart-4d (rational).
    #[arg(long, allow_hyphen_values = true)]
    w: Option<String>,
    /// Replacement-probability parameter for ycart-4d (rational in [0,1]).
    #[arg(long, allow_hyphen_values = true)]
    p: Option<String>,
    /// Initial first coordinate (polya, triangular).
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<String>,
    /// Initial second coordinate (polya, triangular).
    #[arg(long, allow_hyphen_values = true)]
    y1: Option<String>,
}

#[derive(Args)]
struct CommonArgs {
    /// Arithmetic: exact rationals, double-precision, or exact with fallback.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    mode: ModeArg,
    /// Numeric tolerance for clustering and rank decisions.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Accept processes whose tenability check fails (extinction possible).
    #[arg(long)]
    waive_tenability: bool,
    /// Pin a basis form: `k:c1,c2,…` with 1-based index k (repeatable).
    #[arg(long = "pin-form")]
    pin_form: Vec<String>,
    /// JSON file with pinned forms (or a previous `analyze` artifact).
    #[arg(long = "pin-file")]
    pin_file: Option<PathBuf>,
    /// Also write the artifact to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Numeric,
}

impl ModeArg {
    fn to_mode(self) -> Mode {
        match self {
            ModeArg::Auto => Mode::Auto,
            ModeArg::Exact => Mode::Exact,
            ModeArg::Numeric => Mode::Numeric,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl FormatArg {
    fn to_format(self) -> Format {
        match self {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Full spectral analysis: basis of forms, blocks, classification, drift.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Small/large classification and the designated limit coordinates.
    Classify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reduced polynomials and coefficient tables on an initial segment.
    Reduce {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Power as comma-separated exponents, e.g. `0,2`.
        #[arg(long)]
        alpha: String,
    },
    /// The support cone and per-power polyhedra.
    Cone {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Optional power whose polyhedron to enumerate.
        #[arg(long)]
        alpha: Option<String>,
        /// Optional rational point to test for cone membership, e.g. `1,-1/2`.
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
    },
    /// Exact finite-time moments, or the joint limit moment with --limit-w.
    Moment {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Power as comma-separated exponents, e.g. `0,2`.
        #[arg(long)]
        alpha: String,
        /// Horizons to evaluate (repeatable or comma-separated).
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<u64>,
        /// Report the closed-form limit moment of the W coordinates instead.
        #[arg(long = "limit-w")]
        limit_w: bool,
    },
    /// Leading asymptotic term of a moment and the state drift.
    Asymptotics {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Power as comma-separated exponents, e.g. `0,2`.
        #[arg(long)]
        alpha: String,
    },
    /// Monte Carlo estimation of moments and limit coordinates.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Trajectory length.
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
        /// Number of independent trials.
        #[arg(long, default_value_t = 1_000)]
        trials: u64,
        /// Master seed; trial k draws from stream k.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads (0 = all cores). Results do not depend on this.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// What to estimate: `u:e1,…,es` or `w:k1[,k2,…]` (repeatable).
        #[arg(long = "estimand")]
        estimand: Vec<String>,
    },
    /// Run the named invariant suite; exits nonzero if any check fails.
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonArgs,
        /// Seed for the stochastic checks.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Worker threads (0 = all cores). Results do not depend on this.
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            let doc = emit::canonicalize(e.to_json());
            let text = serde_json::to_string_pretty(&doc)
                .unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.message));
            let mut stderr = std::io::stderr().lock();
            let _ = writeln!(stderr, "{text}");
            std::process::exit(e.class.exit_code());
        }
    }
}

fn fixture_params(src: &SourceArgs) -> fixtures::FixtureParams {
    fixtures::FixtureParams {
        s: src.s,
        l: src.l.clone(),
        a: src.a.clone(),
        b: src.b.clone(),
        w: src.w.clone(),
        p: src.p.clone(),
        x1: src.x1.clone(),
        y1: src.y1.clone(),
    }
}

/// Resolve the positional source into a process description.
fn load_source(src: &SourceArgs) -> Result<(polya::process::ProcessSpec, Value), CliError> {
    if fixtures::FIXTURE_NAMES.contains(&src.source.as_str()) {
        return fixtures::load_fixture(&src.source, &fixture_params(src));
    }
    let path = PathBuf::from(&src.source);
    if path.exists() {
        let spec = pipeline::load_spec_file(&path)?;
        return Ok((spec, json!({"path": src.source})));
    }
    Err(CliError::usage(format!(
        "`{}` is neither a known fixture ({}) nor an existing file",
        src.source,
        fixtures::FIXTURE_NAMES.join(", ")
    )))
}

fn collect_pins(common: &CommonArgs) -> Result<Vec<RawPin>, CliError> {
    let mut pins = Vec::new();
    if let Some(path) = &common.pin_file {
        pins.extend(pipeline::load_pin_file(path)?);
    }
    for text in &common.pin_form {
        pins.push(pipeline::parse_pin_form(text)?);
    }
    Ok(pins)
}

fn pins_manifest_json(pins: &[RawPin]) -> Value {
    Value::Array(
        pins.iter()
            .map(|p| {
                let coords: Vec<Value> = p
                    .coords
                    .iter()
                    .map(|c| match c {
                        RawCoord::Literal(s) => Value::String(s.render()),
                        RawCoord::Complex(re, im) => json!({"re": re, "im": im}),
                    })
                    .collect();
                json!({"index": p.index, "coords": coords})
            })
            .collect(),
    )
}

struct Prepared {
    analysis: AnyAnalysis,
    report: polya::process::ValidationReport,
    spec: polya::process::ProcessSpec,
    manifest: Manifest,
}

fn prepare(
    subcommand: &str,
    source: &SourceArgs,
    common: &CommonArgs,
    extra_params: Value,
) -> Result<Prepared, CliError> {
    let (spec, source_params) = load_source(source)?;
    let pins = collect_pins(common)?;
    let mode = common.mode.to_mode();
    let (analysis, report) =
        pipeline::build_analysis(&spec, &pins, common.tol, mode, common.waive_tenability)?;
    let mut parameters = json!({"source": source_params});
    if let Value::Object(extra) = extra_params {
        if let Value::Object(map) = &mut parameters {
            for (k, v) in extra {
                map.insert(k, v);
            }
        }
    }
    let manifest = Manifest {
        subcommand: subcommand.to_string(),
        source: source.source.clone(),
        parameters,
        mode_requested: mode.name().to_string(),
        mode_used: analysis.mode_used().to_string(),
        tol: common.tol,
        waive_tenability: common.waive_tenability,
        pins: pins_manifest_json(&pins),
        format: common.format.to_format(),
    };
    Ok(Prepared {
        analysis,
        report,
        spec,
        manifest,
    })
}

fn emit_json_only(p: &Prepared, common: &CommonArgs, result: Value) -> Result<i32, CliError> {
    if common.format == FormatArg::Csv {
        return Err(CliError::usage(format!(
            "`{}` has no tabular form; use --format json",
            p.manifest.subcommand
        )));
    }
    emit::emit(&p.manifest, Rendered::Json(result), common.out.as_ref())?;
    Ok(0)
}

fn emit_choice(
    p: &Prepared,
    common: &CommonArgs,
    result: Value,
    csv: Option<Rendered>,
) -> Result<i32, CliError> {
    match common.format {
        FormatArg::Json => {
            emit::emit(&p.manifest, Rendered::Json(result), common.out.as_ref())?
        }
        FormatArg::Csv => match csv {
            Some(rows) => emit::emit(&p.manifest, rows, common.out.as_ref())?,
            None => {
                return Err(CliError::usage(
                    "this request has no tabular form; use --format json",
                ))
            }
        },
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Analyze { source, common } => {
            let p = prepare("analyze", &source, &common, json!({}))?;
            let result = run::analyze(&p.analysis, &p.report);
            emit_json_only(&p, &common, result)
        }
        Cmd::Classify { source, common } => {
            let p = prepare("classify", &source, &common, json!({}))?;
            let result = run::classify(&p.analysis);
            emit_json_only(&p, &common, result)
        }
        Cmd::Reduce {
            source,
            common,
            alpha,
        } => {
            let p = prepare("reduce", &source, &common, json!({"alpha": alpha}))?;
            let (result, csv) = run::reduce(&p.analysis, &alpha)?;
            emit_choice(&p, &common, result, Some(csv))
        }
        Cmd::Cone {
            source,
            common,
            alpha,
            point,
        } => {
            let p = prepare(
                "cone",
                &source,
                &common,
                json!({"alpha": alpha, "point": point}),
            )?;
            let result = run::cone(&p.analysis, alpha.as_deref(), point.as_deref())?;
            emit_json_only(&p, &common, result)
        }
        Cmd::Moment {
            source,
            common,
            alpha,
            n,
            limit_w,
        } => {
            let p = prepare(
                "moment",
                &source,
                &common,
                json!({"alpha": alpha, "n": n, "limit_w": limit_w}),
            )?;
            let (result, csv) = run::moment(&p.analysis, &alpha, &n, limit_w)?;
            emit_choice(&p, &common, result, csv)
        }
        Cmd::Asymptotics {
            source,
            common,
            alpha,
        } => {
            let p = prepare("asymptotics", &source, &common, json!({"alpha": alpha}))?;
            let result = run::asymptotics(&p.analysis, &alpha)?;
            emit_json_only(&p, &common, result)
        }
        Cmd::Simulate {
            source,
            common,
            horizon,
            trials,
            seed,
            threads,
            estimand,
        } => {
            // Worker-thread count deliberately left out of the manifest:
            // results are identical for any value.
            let p = prepare(
                "simulate",
                &source,
                &common,
                json!({
                    "horizon": horizon,
                    "trials": trials,
                    "seed": seed,
                    "estimands": estimand,
                }),
            )?;
            let args = run::SimulateArgs {
                horizon,
                trials,
                seed,
                threads,
                estimands: estimand,
            };
            let (result, csv) = run::simulate(&p.analysis, &args)?;
            emit_choice(&p, &common, result, Some(csv))
        }
        Cmd::Verify {
            source,
            common,
            seed,
            threads,
        } => {
            let p = prepare("verify", &source, &common, json!({"seed": seed}))?;
            let args = verify::VerifyArgs { seed, threads };
            let outcome = verify::run_verify(&p.analysis, &p.spec, &p.report, &args)?;
            let rendered = match common.format {
                FormatArg::Json => Rendered::Json(outcome.to_json()),
                FormatArg::Csv => Rendered::Csv {
                    header: "check,status,detail".to_string(),
                    rows: outcome.csv_rows(),
                },
            };
            emit::emit(&p.manifest, rendered, common.out.as_ref())?;
            Ok(if outcome.all_pass { 0 } else { 1 })
        }
    }
}
