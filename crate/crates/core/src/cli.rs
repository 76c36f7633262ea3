//! Problem-file driver behind the `spflow` binary and the C ABI.
//!
//! A problem file is JSON with `version`, `algebra`, `rank`, `task`, `payload`
//! and an optional `config`. Complex matrices are nested arrays
//! `[row][col] = [re, im]`; an element is `[block]`, where scalar blocks hold one
//! matrix and loop blocks hold `theta_samples` matrices. See `docs/schema.md`.

use std::path::PathBuf;

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{AElement, AlgebraShape, BlockKind, BlockSpec};
use crate::error::Error;
use crate::maslov::{self, Lagrangian, LagrangianPath};
use crate::matfun::{CMatrix, C64};
use crate::oddflow::{self, GradedHermPath, LagrangianProjection};
use crate::oppath::{self, CurvePoint, HermPath, SegmentMode, Verdict};
use crate::oracle::{self, ShootingConfig};
use crate::relindex::{self, ProjectionPair};
use crate::signs::{SignConstants, SIGNS};
use crate::specflow::{self, FlowConfig, Route};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spflow", version, about = "Spectral flow and Maslov indices over matrix and loop algebras")]
pub struct Args {
    /// Problem file (JSON).
    #[arg(long)]
    pub input: PathBuf,
    /// Result file; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV of eigenvalue curves `t,block,curve_index,eigenvalue`.
    #[arg(long)]
    pub emit_curves: Option<PathBuf>,
    #[arg(long)]
    pub tol_zero: Option<f64>,
    #[arg(long)]
    pub gap_min: Option<f64>,
    #[arg(long)]
    pub refine_max: Option<u32>,
    /// Seed for the axiom suite.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Command-line overrides applied on top of the file's `config`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol_zero: Option<f64>,
    pub gap_min: Option<f64>,
    pub refine_max: Option<u32>,
    pub seed: Option<u64>,
    pub want_curves: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub gap_min: Option<f64>,
    pub motion_cap: Option<f64>,
    pub refine_max: Option<u32>,
    pub tol_zero: Option<f64>,
    /// `winding`, `sections`, `crossings`, or `all` (default: all, cross-checked).
    pub route: Option<String>,
    /// Seed for randomized segment levels; greedy when absent.
    pub segment_seed: Option<u64>,
    /// Transversality margin for Maslov tasks.
    pub margin: Option<f64>,
    /// Boundary samples for the even-to-odd suspension.
    pub x_samples: Option<usize>,
    /// Suspension samples for the bounded suspension.
    pub t_samples: Option<usize>,
    /// Trials for the axiom suite.
    pub trials: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraSpec {
    blocks: Vec<BlockSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    version: String,
    algebra: AlgebraSpec,
    #[serde(default = "one")]
    rank: usize,
    task: String,
    #[serde(default)]
    payload: Value,
    #[serde(default)]
    config: Config,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultFile {
    pub version: &'static str,
    pub task: String,
    /// `ok`, `refused`, `schema-error` or `internal-error`.
    pub status: &'static str,
    pub k0: Option<Vec<i64>>,
    pub k1: Option<Vec<i64>>,
    pub diagnostics: Value,
    pub sign_constants: SignConstants,
    pub error: Option<ErrorRecord>,
}

impl ResultFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub result: ResultFile,
    pub curves: Option<Vec<CurvePoint>>,
    pub exit_code: i32,
}

enum Failure {
    Schema(String),
    Lib(Error),
    /// Verdict not valid; carries the validity diagnostics.
    Refused(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn schema<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Schema(msg.into()))
}

/// Exit code for a library error: internal bug, malformed input, or refusal.
pub fn exit_code_for(e: &Error) -> i32 {
    use Error::*;
    if e.is_internal() {
        return EXIT_INTERNAL;
    }
    match e {
        NotHermitian { .. } | NonFinite | DimensionMismatch(_) | ShapeMismatch(_) | InvalidShape(_)
        | UnsupportedHomomorphism(_) | NonzeroScalarK1 { .. } | NotNormalizing(_) | NotProjection { .. }
        | NonConstantRank { .. } | EndpointMismatch { .. } | NotUnitary { .. } | NotOdd { .. }
        | NotLagrangian(_) | NotAlmostInvolution { .. } => EXIT_SCHEMA,
        _ => EXIT_REFUSED,
    }
}

struct Ctx {
    shape: AlgebraShape,
    rank: usize,
    config: Config,
    flow: FlowConfig,
    seed: u64,
    want_curves: bool,
}

fn parse_complex(v: &Value) -> Res<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => schema("complex entries must be [re, im] numbers"),
        },
        _ => schema("complex entries must be [re, im] pairs"),
    }
}

fn parse_matrix(v: &Value, n: Option<usize>) -> Res<CMatrix> {
    let rows = v.as_array().ok_or_else(|| Failure::Schema("matrix must be an array of rows".into()))?;
    let n = n.unwrap_or(rows.len());
    if rows.len() != n || n == 0 {
        return schema(format!("expected {n} rows, found {}", rows.len()));
    }
    let mut m = CMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let cols = row.as_array().ok_or_else(|| Failure::Schema("matrix row must be an array".into()))?;
        if cols.len() != n {
            return schema(format!("row {i} has {} entries, expected {n}", cols.len()));
        }
        for (j, z) in cols.iter().enumerate() {
            m[(i, j)] = parse_complex(z)?;
        }
    }
    Ok(m)
}

fn parse_element(v: &Value, shape: &AlgebraShape, rank: usize) -> Res<AElement> {
    let blocks = v.as_array().ok_or_else(|| Failure::Schema("element must be an array over blocks".into()))?;
    if blocks.len() != shape.len() {
        return schema(format!("element has {} blocks, algebra has {}", blocks.len(), shape.len()));
    }
    let mut out = Vec::new();
    for (spec, b) in shape.blocks.iter().zip(blocks) {
        let n = spec.dim * rank;
        out.push(match spec.kind {
            BlockKind::Scalar => vec![parse_matrix(b, Some(n))?],
            BlockKind::Loop { theta_samples } => {
                let thetas = b.as_array().ok_or_else(|| Failure::Schema("loop block must be an array over theta".into()))?;
                if thetas.len() != theta_samples {
                    return schema(format!("loop block has {} theta samples, expected {theta_samples}", thetas.len()));
                }
                thetas.iter().map(|m| parse_matrix(m, Some(n))).collect::<Res<Vec<_>>>()?
            }
        });
    }
    Ok(AElement::new(shape.clone(), rank, out)?)
}

fn field<'a>(payload: &'a Value, name: &str) -> Res<&'a Value> {
    payload.get(name).ok_or_else(|| Failure::Schema(format!("payload field `{name}` is missing")))
}

fn parse_grid(payload: &Value) -> Res<Vec<f64>> {
    let t = field(payload, "t")?.as_array().ok_or_else(|| Failure::Schema("`t` must be an array".into()))?;
    let t: Vec<f64> = t
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Failure::Schema("`t` entries must be numbers".into())))
        .collect::<Res<_>>()?;
    if t.len() < 2 || t[0] != 0.0 || t[t.len() - 1] != 1.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
        return schema("`t` must increase strictly from 0 to 1 with at least two points");
    }
    Ok(t)
}

fn parse_samples(payload: &Value, name: &str, ctx: &Ctx) -> Res<Vec<AElement>> {
    let s = field(payload, name)?.as_array().ok_or_else(|| Failure::Schema(format!("`{name}` must be an array")))?;
    s.iter().map(|e| parse_element(e, &ctx.shape, ctx.rank)).collect()
}

fn parse_path(payload: &Value, ctx: &Ctx) -> Res<HermPath> {
    let path = field(payload, "path")?;
    Ok(HermPath::new(ctx.shape.clone(), ctx.rank, parse_grid(path)?, parse_samples(path, "samples", ctx)?)?)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("diagnostics serialize")
}

struct TaskOutput {
    k0: Option<Vec<i64>>,
    k1: Option<Vec<i64>>,
    diagnostics: Value,
    curves: Option<Vec<CurvePoint>>,
}

impl TaskOutput {
    fn k0(k0: Vec<i64>, diagnostics: Value) -> Self {
        TaskOutput { k0: Some(k0), k1: None, diagnostics, curves: None }
    }

    fn k1(k1: Vec<i64>, diagnostics: Value) -> Self {
        TaskOutput { k0: None, k1: Some(k1), diagnostics, curves: None }
    }
}

fn require_valid(p: &HermPath, ctx: &Ctx) -> Res<Value> {
    let v = oppath::validate_path(p, ctx.flow.gap_min, ctx.flow.motion_cap)?;
    let value = to_value(&v);
    if v.verdict != Verdict::Valid {
        return Err(Failure::Refused(json!({ "validity": value })));
    }
    Ok(value)
}

fn curves_for(p: &HermPath, ctx: &Ctx) -> Res<Option<Vec<CurvePoint>>> {
    Ok(if ctx.want_curves { Some(oppath::eigen_curves(p)?) } else { None })
}

fn task_validate(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let p = parse_path(payload, ctx)?;
    let curves = curves_for(&p, ctx)?;
    let validity = require_valid(&p, ctx);
    match validity {
        Ok(v) => Ok(TaskOutput { k0: None, k1: None, diagnostics: json!({ "validity": v }), curves }),
        Err(e) => Err(e),
    }
}

fn task_spectral_flow(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let p = parse_path(payload, ctx)?;
    let curves = curves_for(&p, ctx)?;
    let validity = require_valid(&p, ctx)?;
    let route = ctx.config.route.as_deref().unwrap_or("all");
    let results = if route == "all" {
        specflow::spectral_flow_checked(&p, &ctx.flow)?
    } else {
        let r = Route::parse(route).ok_or_else(|| Failure::Schema(format!("unknown route `{route}`")))?;
        vec![specflow::spectral_flow(&p, r, &ctx.flow)?]
    };
    let primary = results.iter().find(|r| r.route == Route::Winding).unwrap_or(&results[0]);
    let k0 = primary.value.components.clone();
    let diagnostics = json!({
        "validity": validity,
        "route": primary.route,
        "routes": to_value(&results),
        "endpoint_law": specflow::endpoint_law(&p)?.components,
    });
    Ok(TaskOutput { curves, ..TaskOutput::k0(k0, diagnostics) })
}

fn task_relative_index(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let p = parse_element(field(payload, "p")?, &ctx.shape, ctx.rank)?;
    let q = parse_element(field(payload, "q")?, &ctx.shape, ctx.rank)?;
    let pair = ProjectionPair::new(p, q)?;
    let fredholm = relindex::rel_index_fredholm(&pair)?;
    let crossing = relindex::rel_index_crossing(&pair)?;
    if fredholm != crossing {
        return Err(Error::CrossCheckFailed(format!(
            "relative index {:?} (kernel) vs {:?} (crossings)",
            fredholm.components, crossing.components
        ))
        .into());
    }
    let diagnostics = json!({
        "ranks_p": pair.ranks_p,
        "ranks_q": pair.ranks_q,
        "fredholm": fredholm.components,
        "crossing": crossing.components,
    });
    Ok(TaskOutput::k0(fredholm.components, diagnostics))
}

fn margin(ctx: &Ctx) -> f64 {
    ctx.config.margin.unwrap_or(ctx.flow.gap_min)
}

fn task_maslov(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let lp = LagrangianPath::new(parse_grid(payload)?, parse_samples(payload, "u0", ctx)?, parse_samples(payload, "u1", ctx)?)?;
    let r = maslov::maslov_pair_with(&lp, margin(ctx), ctx.flow.refine_max)?;
    Ok(TaskOutput::k0(r.value.components.clone(), to_value(&r)))
}

fn task_maslov_triple(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let lag = |name: &str| -> Res<Lagrangian> { Ok(Lagrangian::new(parse_element(field(payload, name)?, &ctx.shape, ctx.rank)?)?) };
    let r = maslov::maslov_triple(&lag("u0")?, &lag("u1")?, &lag("u2")?, margin(ctx))?;
    if r.herm_defect >= maslov::TOL_FORM_HERM || r.cross_defect >= maslov::TOL_CROSS {
        return Err(Error::CrossCheckFailed(format!(
            "triple form defects: cross {:.3e}, hermiticity {:.3e}",
            r.cross_defect, r.herm_defect
        ))
        .into());
    }
    Ok(TaskOutput::k0(r.value.components.clone(), to_value(&r)))
}

fn task_odd_spectral_flow(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let g = GradedHermPath::new(parse_path(payload, ctx)?)?;
    let k1 = oddflow::odd_spectral_flow(&g, ctx.flow.gap_min)?;
    Ok(TaskOutput::k1(k1.components, json!({})))
}

fn task_odd_relative_index(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let proj = |name: &str| -> Res<LagrangianProjection> {
        Ok(LagrangianProjection::new(parse_element(field(payload, name)?, &ctx.shape, ctx.rank)?)?)
    };
    let k1 = oddflow::odd_rel_index(&proj("p")?, &proj("q")?)?;
    Ok(TaskOutput::k1(k1.components, json!({})))
}

fn holds_or_fail(holds: bool, what: &str, report: &Value) -> Res<()> {
    if holds {
        Ok(())
    } else {
        Err(Error::CrossCheckFailed(format!("{what} identity fails: {report}")).into())
    }
}

fn task_suspend_check(payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let kind = field(payload, "kind")?.as_str().unwrap_or_default();
    match kind {
        "even-to-odd" => {
            let p = parse_path(payload, ctx)?;
            require_valid(&p, ctx)?;
            let r = oddflow::suspend_even_to_odd(&p, ctx.config.x_samples.unwrap_or(64), &ctx.flow)?;
            let d = to_value(&r);
            holds_or_fail(r.holds, "even-to-odd suspension", &d)?;
            Ok(TaskOutput::k0(r.flow, d))
        }
        "odd-to-even" => {
            let g = GradedHermPath::new(parse_path(payload, ctx)?)?;
            let r = oddflow::suspend_odd_to_even(&g, ctx.flow.gap_min)?;
            let d = to_value(&r);
            holds_or_fail(r.holds, "odd-to-even suspension", &d)?;
            Ok(TaskOutput::k1(r.odd_flow, d))
        }
        "bounded" => {
            let f = parse_element(field(payload, "f")?, &ctx.shape, ctx.rank)?;
            let r = oddflow::suspend_bounded(&f, ctx.config.t_samples.unwrap_or(64))?;
            let d = to_value(&r);
            holds_or_fail(r.holds, "bounded suspension", &d)?;
            Ok(TaskOutput::k1(r.exp_winding, d))
        }
        other => schema(format!("suspend-check kind must be even-to-odd, odd-to-even or bounded, got `{other}`")),
    }
}

fn task_oracle_interval(payload: &Value, _ctx: &Ctx) -> Res<TaskOutput> {
    let u0 = parse_matrix(field(payload, "u0")?, None)?;
    let u1 = parse_matrix(field(payload, "u1")?, Some(u0.nrows()))?;
    crate::matfun::check_unitary(&u0)?;
    crate::matfun::check_unitary(&u1)?;
    let lo = payload.get("lo").and_then(Value::as_f64).unwrap_or(-std::f64::consts::PI);
    let hi = payload.get("hi").and_then(Value::as_f64).unwrap_or(std::f64::consts::PI);
    let shot = oracle::shooting_spectrum(&u0, &u1, &ShootingConfig::window(lo, hi))?;
    let closed = maslov::pair_interval_spectrum(&u0, &u1, lo, hi)?;
    let deviation = if shot.len() == closed.len() {
        shot.iter().zip(&closed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    if !(deviation < 1e-8) {
        return Err(Error::CrossCheckFailed(format!(
            "shooting found {} eigenvalues, closed form {} (deviation {deviation:.3e})",
            shot.len(),
            closed.len()
        ))
        .into());
    }
    let diagnostics = json!({ "shooting": shot, "closed_form": closed, "max_deviation": deviation });
    Ok(TaskOutput { k0: None, k1: None, diagnostics, curves: None })
}

fn task_axiom_suite(_payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    let r = relindex::rel_index_axiom_suite(&ctx.shape, ctx.rank, ctx.config.trials.unwrap_or(10), ctx.seed);
    let d = to_value(&r);
    holds_or_fail(r.all_passed(), "relative index axiom", &d)?;
    Ok(TaskOutput { k0: None, k1: None, diagnostics: d, curves: None })
}

pub const TASKS: [&str; 10] = [
    "validate",
    "spectral-flow",
    "relative-index",
    "maslov",
    "maslov-triple",
    "odd-spectral-flow",
    "odd-relative-index",
    "suspend-check",
    "oracle-interval",
    "axiom-suite",
];

fn dispatch(task: &str, payload: &Value, ctx: &Ctx) -> Res<TaskOutput> {
    match task {
        "validate" => task_validate(payload, ctx),
        "spectral-flow" => task_spectral_flow(payload, ctx),
        "relative-index" => task_relative_index(payload, ctx),
        "maslov" => task_maslov(payload, ctx),
        "maslov-triple" => task_maslov_triple(payload, ctx),
        "odd-spectral-flow" => task_odd_spectral_flow(payload, ctx),
        "odd-relative-index" => task_odd_relative_index(payload, ctx),
        "suspend-check" => task_suspend_check(payload, ctx),
        "oracle-interval" => task_oracle_interval(payload, ctx),
        "axiom-suite" => task_axiom_suite(payload, ctx),
        other => schema(format!("unknown task `{other}`")),
    }
}

fn build_ctx(file: ProblemFile, ov: &Overrides) -> Res<(String, Value, Ctx)> {
    if file.version != "1" {
        return schema(format!("unsupported version `{}`", file.version));
    }
    if file.rank == 0 {
        return schema("rank must be positive");
    }
    let shape = AlgebraShape::new(file.algebra.blocks)?;
    let config = file.config;
    let defaults = FlowConfig::default();
    let flow = FlowConfig {
        gap_min: ov.gap_min.or(config.gap_min).unwrap_or(defaults.gap_min),
        motion_cap: config.motion_cap,
        refine_max: ov.refine_max.or(config.refine_max).unwrap_or(defaults.refine_max),
        tol_zero: ov.tol_zero.or(config.tol_zero),
        segments: config.segment_seed.map_or(SegmentMode::Greedy, |seed| SegmentMode::Randomized { seed }),
    };
    let ctx = Ctx { shape, rank: file.rank, config, flow, seed: ov.seed.unwrap_or(0), want_curves: ov.want_curves };
    Ok((file.task, file.payload, ctx))
}

/// Runs one problem given as JSON text. Never panics on bad input; every
/// failure is reported in the result's `error` field and the exit code.
pub fn execute(input: &str, ov: &Overrides) -> Outcome {
    let mut task = String::new();
    let mut run = || -> Res<TaskOutput> {
        let file: ProblemFile = serde_json::from_str(input).map_err(|e| Failure::Schema(e.to_string()))?;
        let (t, payload, ctx) = build_ctx(file, ov)?;
        task = t;
        dispatch(&task, &payload, &ctx)
    };
    let outcome = run();
    let base = |status, exit_code, diagnostics, error: Option<ErrorRecord>| Outcome {
        result: ResultFile {
            version: "1",
            task: task.clone(),
            status,
            k0: None,
            k1: None,
            diagnostics,
            sign_constants: SIGNS,
            error,
        },
        curves: None,
        exit_code,
    };
    match outcome {
        Ok(out) => {
            let mut o = base("ok", EXIT_OK, out.diagnostics, None);
            o.result.k0 = out.k0;
            o.result.k1 = out.k1;
            o.curves = out.curves;
            o
        }
        Err(Failure::Refused(diag)) => {
            let verdict = diag["validity"]["verdict"].as_str().unwrap_or("invalid").to_string();
            let err = ErrorRecord { kind: "InvalidPath".into(), message: format!("path verdict is {verdict}; refine the grid or fix the endpoints") };
            base("refused", EXIT_REFUSED, diag, Some(err))
        }
        Err(Failure::Schema(message)) => {
            base("schema-error", EXIT_SCHEMA, json!({}), Some(ErrorRecord { kind: "SchemaError".into(), message }))
        }
        Err(Failure::Lib(e)) => {
            let code = exit_code_for(&e);
            let status = match code {
                EXIT_INTERNAL => "internal-error",
                EXIT_SCHEMA => "schema-error",
                _ => "refused",
            };
            base(status, code, json!({}), Some(ErrorRecord { kind: e.kind().into(), message: e.to_string() }))
        }
    }
}

/// Writes eigenvalue curves as CSV with header `t,block,curve_index,eigenvalue`.
pub fn write_curves<W: std::io::Write>(w: W, curves: &[CurvePoint]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for c in curves {
        wr.serialize(c)?;
    }
    wr.flush()?;
    Ok(())
}

/// Entry point of the binary; returns the process exit code.
pub fn run(args: Args) -> i32 {
    let input = match std::fs::read_to_string(&args.input) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("spflow: cannot read {}: {e}", args.input.display());
            return EXIT_SCHEMA;
        }
    };
    let ov = Overrides {
        tol_zero: args.tol_zero,
        gap_min: args.gap_min,
        refine_max: args.refine_max,
        seed: args.seed,
        want_curves: args.emit_curves.is_some(),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("spflow: cannot start thread pool: {e}");
            return EXIT_INTERNAL;
        }
    };
    let outcome = pool.install(|| execute(&input, &ov));
    let text = outcome.result.to_json();
    let written = match &args.output {
        Some(path) => std::fs::write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("spflow: cannot write result: {e}");
        return EXIT_INTERNAL;
    }
    if let (Some(path), Some(curves)) = (&args.emit_curves, &outcome.curves) {
        let res = std::fs::File::create(path).map_err(csv::Error::from).and_then(|f| write_curves(f, curves));
        if let Err(e) = res {
            eprintln!("spflow: cannot write curves: {e}");
            return EXIT_INTERNAL;
        }
    }
    if let Some(err) = &outcome.result.error {
        eprintln!("spflow: {}: {}", err.kind, err.message);
    }
    outcome.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_path_json(values: &[f64]) -> String {
        let n = values.len() - 1;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let samples: Vec<Value> = values.iter().map(|x| json!([[[[x, 0.0]]]])).collect();
        json!({
            "version": "1",
            "algebra": {"blocks": [{"kind": "scalar", "dim": 1}]},
            "task": "spectral-flow",
            "payload": {"path": {"t": t, "samples": samples}}
        })
        .to_string()
    }

    #[test]
    fn normalization_fixture() {
        let values: Vec<f64> = (0..=16).map(|i| 2.0 * i as f64 / 16.0 - 1.0).collect();
        let o = execute(&scalar_path_json(&values), &Overrides::default());
        assert_eq!(o.exit_code, EXIT_OK, "{:?}", o.result.error);
        assert_eq!(o.result.k0, Some(vec![1]));
    }

    #[test]
    fn singular_endpoint_is_refused() {
        let o = execute(&scalar_path_json(&[0.0, 1.0]), &Overrides::default());
        assert_eq!(o.exit_code, EXIT_REFUSED);
        assert_eq!(o.result.status, "refused");
    }

    #[test]
    fn malformed_input_is_schema_error() {
        let o = execute("{\"version\": \"1\"}", &Overrides::default());
        assert_eq!(o.exit_code, EXIT_SCHEMA);
        let o = execute(&scalar_path_json(&[1.0, 1.0]).replace("spectral-flow", "nope"), &Overrides::default());
        assert_eq!(o.exit_code, EXIT_SCHEMA);
    }

    #[test]
    fn curves_are_csv() {
        let values: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64 - 2.5).collect();
        let o = execute(&scalar_path_json(&values), &Overrides { want_curves: true, ..Default::default() });
        let mut buf = Vec::new();
        write_curves(&mut buf, o.curves.as_deref().unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,block,curve_index,eigenvalue\n"));
        assert_eq!(text.lines().count(), 18);
    }
}
