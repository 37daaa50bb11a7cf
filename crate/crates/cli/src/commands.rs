use std::path::Path;

use nestlab::combinatorics::{check_admissible, format_sequence, parse_sequence, CombSequence, Violation, ViolationKind};
use nestlab::nest::{build_nest, scaling_report, Nest, NestError, NestOptions, NestStatus};
use nestlab::polynomial::{make_cubic, make_symmetric_cubic, parse_real, CubicMap, FamilySign, PolyError};
use nestlab::realization::{default_a_range, solve, SolveError, SolveOptions};
use nestlab::separation::{default_eta, run_ledger, LedgerError};
use nestlab::walk::{aggregate, simulate_samples, Trajectory, WalkContext, WalkError, DEFAULT_REVISIT_LEVEL, DEFAULT_WALK_PRECISION};
use rug::Float;
use serde_json::{json, Value};

use crate::config::{OutputFormat, RunConfig};
use crate::{exit, CliError};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_DEPTH: usize = 12;

pub const ANALYZE_HEADER: [&str; 10] = ["n", "len_i", "len_j", "lambda", "s", "s_hat", "theta", "r", "t", "status"];
pub const CHECK_HEADER: [&str; 4] = ["admissible", "index", "rule", "kind"];
pub const SOLVE_HEADER: [&str; 7] = [
    "parameter",
    "parameter_lo",
    "parameter_hi",
    "achieved_depth",
    "extracted",
    "evaluations",
    "precision_bits",
];
pub const LEDGER_HEADER: [&str; 5] = ["step", "beta", "delta", "mu_lower", "rule_fired"];
pub const WALK_HEADER: [&str; 4] = ["sample_id", "k", "level", "stop_reason"];

/// Rendered output plus the exit code it should produce.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub body: String,
    pub exit_code: i32,
    /// Printed to stderr when the command still produced output.
    pub warning: Option<String>,
}

impl Report {
    fn ok(body: String) -> Self {
        Report { body, exit_code: exit::OK, warning: None }
    }
}

/// Significant decimal digits carried by `prec` bits.
pub fn decimal_digits(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).floor().max(1.0) as usize
}

pub fn decimal(x: &Float) -> String {
    x.to_string_radix(10, Some(decimal_digits(x.prec())))
}

fn hp_value(x: &Float) -> Value {
    json!({ "decimal": decimal(x), "precision_bits": x.prec() })
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

pub fn status_exit_code(status: NestStatus) -> i32 {
    match status {
        NestStatus::Ok => exit::OK,
        NestStatus::CentralReturn | NestStatus::NotInClassG => exit::NOT_IN_CLASS_G,
        NestStatus::PrecisionExhausted => exit::PRECISION_EXHAUSTED,
    }
}

fn poly_error(e: PolyError) -> CliError {
    match e {
        PolyError::PrecisionExhausted => CliError::PrecisionExhausted(e.to_string()),
        PolyError::InvalidPrecision(_) => CliError::Usage(e.to_string()),
        _ => CliError::NotBimodal(e.to_string()),
    }
}

fn nest_error(e: NestError) -> CliError {
    match e {
        NestError::Poly(p) => poly_error(p),
        NestError::PrecisionExhausted | NestError::BoundaryHit(_) => CliError::PrecisionExhausted(e.to_string()),
        NestError::FixedPointConfiguration(_) => CliError::NotBimodal(e.to_string()),
        _ => CliError::NotInClassG(e.to_string()),
    }
}

fn kind_name(kind: ViolationKind) -> &'static str {
    match kind {
        ViolationKind::Range => "range",
        ViolationKind::FirstType => "first_type",
        ViolationKind::Ordering => "ordering",
        ViolationKind::ForbiddenParity => "forbidden_parity",
        ViolationKind::NextType => "next_type",
    }
}

fn violation_json(v: &Violation) -> Value {
    json!({ "index": v.index, "rule": v.rule, "kind": kind_name(v.kind), "message": v.to_string() })
}

fn parse_admissible(text: &str) -> Result<CombSequence, CliError> {
    let seq = parse_sequence(text)?;
    check_admissible(&seq).map_err(CliError::Inadmissible)?;
    Ok(seq)
}

/// Builds the map from text parameters; `b` defaults to the symmetric slice.
pub fn parse_map(family: FamilySign, a: &str, b: Option<&str>, prec: u32) -> Result<CubicMap, CliError> {
    let a = parse_real(a, prec).map_err(CliError::Usage)?;
    match b {
        Some(b) => {
            let b = parse_real(b, prec).map_err(CliError::Usage)?;
            make_cubic(family, &a, &b, prec)
        }
        None => make_symmetric_cubic(family, &a, prec),
    }
    .map_err(poly_error)
}

fn nest_for(map: CubicMap, cfg: &RunConfig) -> Result<Nest, CliError> {
    let depth = cfg.depth.unwrap_or(DEFAULT_DEPTH);
    let mut options = NestOptions::for_precision(cfg.precision_bits);
    if depth > options.depth_cap {
        return Err(CliError::Usage(format!(
            "depth {depth} exceeds the cap of {} levels at {} bits; raise --precision-bits",
            options.depth_cap, cfg.precision_bits
        )));
    }
    options.max_iter = cfg.max_iter;
    build_nest(map, depth, options).map_err(nest_error)
}

fn map_json(map: &CubicMap) -> Value {
    json!({ "family": map.family_sign().to_string(), "a": hp_value(map.a()), "b": hp_value(map.b()) })
}

pub fn cmd_analyze(family: FamilySign, a: &str, b: Option<&str>, cfg: &RunConfig) -> Result<Report, CliError> {
    let map = parse_map(family, a, b, cfg.precision_bits)?;
    let nest = nest_for(map, cfg)?;
    let scaling = scaling_report(&nest);
    let last = nest.levels.len() - 1;
    let opt = |v: Option<String>| v.unwrap_or_default();
    let rows: Vec<Vec<String>> = nest
        .levels
        .iter()
        .zip(&scaling)
        .map(|(lvl, sc)| {
            let status = if lvl.n == last { nest.status.to_string() } else { NestStatus::Ok.to_string() };
            vec![
                lvl.n.to_string(),
                decimal(&sc.width_i),
                decimal(&sc.width_j),
                opt(sc.lambda.as_ref().map(decimal)),
                lvl.s.to_string(),
                lvl.s_hat.to_string(),
                opt(lvl.subtype.map(|s| s.to_string())),
                opt(lvl.r.map(|r| r.to_string())),
                opt(lvl.t.map(|t| t.to_string())),
                status,
            ]
        })
        .collect();
    let body = match cfg.format {
        OutputFormat::Csv => csv_string(&ANALYZE_HEADER, &rows)?,
        OutputFormat::Json => {
            let levels: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let mut obj = serde_json::Map::new();
                    for (key, cell) in ANALYZE_HEADER.iter().zip(row) {
                        let v = match *key {
                            "n" | "s" | "s_hat" | "r" | "t" if !cell.is_empty() => json!(cell.parse::<u64>().unwrap()),
                            _ if cell.is_empty() => Value::Null,
                            _ => json!(cell),
                        };
                        obj.insert(key.to_string(), v);
                    }
                    Value::Object(obj)
                })
                .collect();
            json_string(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "analyze",
                "map": map_json(&nest.map),
                "precision_bits": cfg.precision_bits,
                "decimal_digits": decimal_digits(cfg.precision_bits),
                "requested_depth": cfg.depth.unwrap_or(DEFAULT_DEPTH),
                "depth": nest.depth(),
                "status": nest.status.to_string(),
                "failure": nest.failure,
                "sequence": format_sequence(&nest.combinatorial_sequence(), true),
                "levels": levels,
            }))
        }
    };
    Ok(Report {
        body,
        exit_code: status_exit_code(nest.status),
        warning: nest.failure.as_ref().map(|f| format!("nest stopped at level {}: {} ({f})", nest.depth(), nest.status)),
    })
}

pub fn cmd_check(text: &str, cfg: &RunConfig) -> Result<Report, CliError> {
    let seq = parse_sequence(text)?;
    let verdict = check_admissible(&seq);
    let body = match cfg.format {
        OutputFormat::Csv => {
            let row = match &verdict {
                Ok(()) => vec!["true".into(), String::new(), String::new(), String::new()],
                Err(v) => vec!["false".into(), v.index.to_string(), v.rule.to_string(), kind_name(v.kind).into()],
            };
            csv_string(&CHECK_HEADER, &[row])?
        }
        OutputFormat::Json => json_string(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "check",
            "sequence": format_sequence(&seq, true),
            "length": seq.len(),
            "admissible": verdict.is_ok(),
            "violation": verdict.as_ref().err().map(violation_json),
        })),
    };
    Ok(match verdict {
        Ok(()) => Report::ok(body),
        Err(v) => Report { body, exit_code: exit::INADMISSIBLE, warning: Some(v.to_string()) },
    })
}

pub fn cmd_solve(text: &str, family: FamilySign, cfg: &RunConfig) -> Result<Report, CliError> {
    let target = parse_admissible(text)?;
    let depth = cfg.depth.unwrap_or(target.len());
    let prec = cfg.precision_bits;
    let options = SolveOptions {
        family,
        a_range: default_a_range(family),
        ..SolveOptions::symmetric_positive(prec)
    };
    let res = solve(&target, depth, &options).map_err(|e| match e {
        SolveError::NotAdmissible(v) => CliError::Inadmissible(v),
        SolveError::DepthExceedsTarget { .. } => CliError::Usage(e.to_string()),
        SolveError::NotFound(_) | SolveError::Incomparable(_) => CliError::NotFound(e.to_string()),
    })?;
    let extracted = format_sequence(&res.extracted, true);
    let body = match cfg.format {
        OutputFormat::Csv => csv_string(
            &SOLVE_HEADER,
            &[vec![
                decimal(&res.parameter),
                decimal(&res.parameter_interval.0),
                decimal(&res.parameter_interval.1),
                res.achieved_depth.to_string(),
                extracted,
                res.evaluations.to_string(),
                res.precision_bits.to_string(),
            ]],
        )?,
        OutputFormat::Json => json_string(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "solve",
            "family": family.to_string(),
            "target": format_sequence(&target, true),
            "depth": depth,
            "parameter": hp_value(&res.parameter),
            "parameter_interval": [hp_value(&res.parameter_interval.0), hp_value(&res.parameter_interval.1)],
            "achieved_depth": res.achieved_depth,
            "extracted": extracted,
            "evaluations": res.evaluations,
            "precision_bits": res.precision_bits,
        })),
    };
    Ok(Report::ok(body))
}

pub fn cmd_ledger(text: &str, check: bool, cfg: &RunConfig) -> Result<Report, CliError> {
    let seq = if check { parse_admissible(text)? } else { parse_sequence(text)? };
    let eta = cfg.eta.unwrap_or_else(|| default_eta(cfg.tau));
    let rows = run_ledger(&seq, cfg.tau, eta).map_err(|e| match e {
        LedgerError::InvalidInput(m) => CliError::Usage(m),
        other => CliError::Internal(other.to_string()),
    })?;
    let body = match cfg.format {
        OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.step.to_string(),
                        r.beta.to_string(),
                        r.delta.to_string(),
                        r.mu_lower.to_string(),
                        r.rule.as_str().to_string(),
                    ]
                })
                .collect();
            csv_string(&LEDGER_HEADER, &cells)?
        }
        OutputFormat::Json => json_string(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "ledger",
            "sequence": format_sequence(&seq, true),
            "tau": cfg.tau,
            "eta": eta,
            "rows": rows.iter().map(|r| json!({
                "step": r.step,
                "beta": r.beta,
                "delta": r.delta,
                "mu_lower": r.mu_lower,
                "rule_fired": r.rule.as_str(),
            })).collect::<Vec<_>>(),
        })),
    };
    Ok(Report::ok(body))
}

pub fn trajectories_csv(trajectories: &[Trajectory]) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for (id, t) in trajectories.iter().enumerate() {
        if t.levels.is_empty() {
            rows.push(vec![id.to_string(), String::new(), String::new(), t.stop.as_str().into()]);
        }
        for (k, level) in t.levels.iter().enumerate() {
            rows.push(vec![id.to_string(), k.to_string(), level.to_string(), t.stop.as_str().into()]);
        }
    }
    csv_string(&WALK_HEADER, &rows)
}

/// Runs the walk. The statistics go to the main output in JSON format, the
/// per-step levels in CSV format; `trajectories` additionally receives the
/// CSV.
pub fn cmd_walk(
    family: FamilySign,
    a: &str,
    b: Option<&str>,
    cfg: &RunConfig,
    trajectories: Option<&Path>,
) -> Result<Report, CliError> {
    let map = parse_map(family, a, b, cfg.precision_bits)?;
    let nest = nest_for(map, cfg)?;
    let walk_prec = DEFAULT_WALK_PRECISION.min(cfg.precision_bits);
    let ctx = WalkContext::from_nest(&nest, walk_prec, cfg.max_iter).map_err(|e| match e {
        WalkError::Poly(p) => poly_error(p),
        WalkError::Nest(n) => nest_error(n),
        other => CliError::NotInClassG(format!("{other} (nest status {})", nest.status)),
    })?;
    let trajs = simulate_samples(&ctx, cfg.samples, cfg.steps, cfg.seed);
    let stats = aggregate(&trajs, cfg.steps, DEFAULT_REVISIT_LEVEL);
    let csv = trajectories_csv(&trajs)?;
    if let Some(path) = trajectories {
        std::fs::write(path, &csv)?;
    }
    let body = match cfg.format {
        OutputFormat::Csv => csv,
        OutputFormat::Json => {
            let levels: Vec<Value> = stats
                .level_counts
                .iter()
                .map(|(&n, &visits)| {
                    json!({
                        "n": n,
                        "visits": visits,
                        "drift": stats.drift_estimates.get(&n),
                        "second_moment": stats.variance_estimates.get(&n),
                        "lambda": ctx.levels.get(n).and_then(|l| l.lambda),
                    })
                })
                .collect();
            let transitions: Vec<Value> = stats
                .transition_counts
                .iter()
                .map(|(&(n, jump), &count)| json!({ "level": n, "jump": jump, "count": count }))
                .collect();
            let stops: serde_json::Map<String, Value> =
                stats.stop_reasons.iter().map(|(r, &c)| (r.as_str().to_string(), json!(c))).collect();
            json_string(&json!({
                "schema_version": SCHEMA_VERSION,
                "command": "walk",
                "map": map_json(&nest.map),
                "nest_depth": nest.depth(),
                "nest_status": nest.status.to_string(),
                "walk_precision_bits": walk_prec,
                "samples": stats.samples,
                "steps_per_sample": stats.steps_per_sample,
                "seed": cfg.seed,
                "revisit_level": stats.revisit_level,
                "revisits": stats.revisits,
                "revisit_fraction": stats.revisit_fraction(),
                "min_jump": stats.min_jump(),
                "levels": levels,
                "transitions": transitions,
                "stop_reasons": stops,
            }))
        }
    };
    Ok(Report::ok(body))
}
