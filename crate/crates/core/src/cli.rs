//! Command-line front end: argument parsing, dispatch, schema-validated
//! result envelopes, and CSV sweeps.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::arithmetic::{
    gamma_ball, min_nontrivial_opnorm, quotient_norm, quotient_norm_auto, set_scan_cap, CongruenceLevel,
};
use crate::certify::{
    certificate_with, level_threshold, CertificateOptions, NonvanishingCertificate, DEFAULT_PROBE_RADIUS,
};
use crate::discrete_series::{casimir_report, lp_norm_closed_form, MatrixCoefficientParam};
use crate::error::{LabError, Result};
use crate::group::{CartanCoords, GroupElement};
use crate::poincare::PoincareSeries;
use crate::quadrature::{lp_norm_numeric, DecayEnvelope, QuadratureSpec};

pub const SCHEMA_VERSION: &str = "1";
pub const CAP_ENV: &str = "POINCARE_LAB_CAP";

const EXIT_OK: i32 = 0;
const EXIT_FAILURE: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    LpNorm,
    PoincareEval,
    Cuspidality,
    Certificate,
    LevelThreshold,
    GammaBall,
    QuotientNorm,
    CasimirReport,
    Sweep,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::LpNorm => "lp-norm",
            Self::PoincareEval => "poincare-eval",
            Self::Cuspidality => "cuspidality",
            Self::Certificate => "certificate",
            Self::LevelThreshold => "level-threshold",
            Self::GammaBall => "gamma-ball",
            Self::QuotientNorm => "quotient-norm",
            Self::CasimirReport => "casimir-report",
            Self::Sweep => "sweep",
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Self::LpNorm => &["k", "p"],
            Self::PoincareEval | Self::Cuspidality => &["k", "N", "radius"],
            Self::Certificate => &["k", "N"],
            Self::LevelThreshold | Self::CasimirReport => &["k"],
            Self::GammaBall => &["N", "radius"],
            Self::QuotientNorm => &["N", "probe"],
            Self::Sweep => &["k", "N"],
        }
    }

    fn schema(self) -> &'static str {
        match self {
            Self::LpNorm => include_str!("../../../docs/schemas/v1/lp-norm.schema.json"),
            Self::PoincareEval => include_str!("../../../docs/schemas/v1/poincare-eval.schema.json"),
            Self::Cuspidality => include_str!("../../../docs/schemas/v1/cuspidality.schema.json"),
            Self::Certificate => include_str!("../../../docs/schemas/v1/certificate.schema.json"),
            Self::LevelThreshold => include_str!("../../../docs/schemas/v1/level-threshold.schema.json"),
            Self::GammaBall => include_str!("../../../docs/schemas/v1/gamma-ball.schema.json"),
            Self::QuotientNorm => include_str!("../../../docs/schemas/v1/quotient-norm.schema.json"),
            Self::CasimirReport => include_str!("../../../docs/schemas/v1/casimir-report.schema.json"),
            Self::Sweep => include_str!("../../../docs/schemas/v1/sweep.schema.json"),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const ENVELOPE_SCHEMA: &str = include_str!("../../../docs/schemas/v1/envelope.schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "poincare-lab",
    version,
    about = "Poincaré series of discrete-series coefficients on SL2(R)"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Weight (sweep: range such as 4..6)
    #[arg(long)]
    pub k: Option<String>,
    /// Level (sweep: range such as 1..3)
    #[arg(long = "N")]
    pub level: Option<String>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Truncation, search, or probe radius
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Group element entries a,b,c,d
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Option<String>,
    /// Quadrature nodes (cuspidality)
    #[arg(long)]
    pub nodes: Option<u64>,
    /// Sample count (casimir-report)
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Record wall-clock time (makes output non-reproducible)
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, Value>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
    #[serde(skip)]
    pub timing: bool,
}

fn usage(msg: impl Into<String>) -> LabError {
    LabError::Usage(msg.into())
}

fn parse_range(s: &str) -> Result<[i64; 2]> {
    let bad = || usage(format!("expected an integer or range lo..hi, got {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(usage(format!("empty range {s}")));
    }
    Ok([lo, hi])
}

fn parse_int(key: &str, s: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| usage(format!("--{key} expects an integer, got {s:?}")))
}

impl RunConfig {
    pub fn from_args(args: Args) -> Result<Self> {
        let sweep = args.command == Command::Sweep;
        let mut params = BTreeMap::new();
        for (key, raw) in [("k", &args.k), ("N", &args.level)] {
            if let Some(s) = raw {
                let v = if sweep {
                    json!(parse_range(s)?)
                } else {
                    json!(parse_int(key, s)?)
                };
                params.insert(key.to_string(), v);
            }
        }
        for (key, v) in [("p", args.p), ("radius", args.radius), ("tol", args.tol)] {
            if let Some(v) = v {
                params.insert(key.to_string(), json!(v));
            }
        }
        for (key, v) in [("nodes", args.nodes), ("samples", args.samples)] {
            if let Some(v) = v {
                params.insert(key.to_string(), json!(v));
            }
        }
        if let Some(s) = &args.probe {
            let entries: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| usage(format!("--probe expects a,b,c,d, got {s:?}")))?;
            params.insert("probe".to_string(), json!(entries));
        }
        let config = Self {
            command: args.command,
            params,
            output_path: args.out,
            format: args.format,
            timing: args.timing,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.command.required() {
            if !self.params.contains_key(*key) {
                return Err(usage(format!("{} requires --{key}", self.command)));
            }
        }
        if let Some(tol) = self.params.get("tol") {
            if !tol.as_f64().is_some_and(|t| t > 0.0) {
                return Err(usage("--tol must be > 0"));
            }
        }
        if let Some(p) = self.params.get("probe") {
            if p.as_array().is_none_or(|a| a.len() != 4) {
                return Err(usage("--probe needs exactly four entries"));
            }
        }
        if self.format == Format::Csv && self.command != Command::Sweep {
            return Err(usage("csv output is only available for sweep"));
        }
        if self.command == Command::Sweep {
            for key in ["k", "N"] {
                let r = self.range(key)?;
                if r[0] > r[1] {
                    return Err(usage(format!("empty range for --{key}")));
                }
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.params
            .get(key)
            .ok_or_else(|| usage(format!("{} requires --{key}", self.command)))
    }

    fn int(&self, key: &str) -> Result<i64> {
        self.get(key)?
            .as_i64()
            .ok_or_else(|| usage(format!("--{key} must be an integer")))
    }

    fn float(&self, key: &str) -> Result<f64> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| usage(format!("--{key} must be a number")))
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.params.contains_key(key) {
            self.float(key)
        } else {
            Ok(default)
        }
    }

    fn uint_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            Some(v) => v
                .as_u64()
                .map(|v| v as usize)
                .ok_or_else(|| usage(format!("--{key} must be a non-negative integer"))),
            None => Ok(default),
        }
    }

    fn range(&self, key: &str) -> Result<[i64; 2]> {
        serde_json::from_value(self.get(key)?.clone()).map_err(|_| usage(format!("--{key} must be a range lo..hi")))
    }

    fn probe_or_identity(&self) -> Result<GroupElement> {
        match self.params.get("probe") {
            Some(v) => {
                let e: [f64; 4] = serde_json::from_value(v.clone()).map_err(|_| usage("--probe needs four numbers"))?;
                GroupElement::from_entries(e)
            }
            None => Ok(GroupElement::identity()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&LabError> for ErrorReport {
    fn from(e: &LabError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub schema_version: String,
    pub config: RunConfig,
    pub status: String,
    pub result: Value,
    pub error: Option<ErrorReport>,
    pub wall_time: Option<f64>,
    pub library_version: String,
    pub determinism_seed: Option<u64>,
}

impl ResultEnvelope {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("envelope serializes");
        s.push('\n');
        s
    }
}

/// Output of one dispatched command.
struct Outcome {
    result: Value,
    summary: String,
    error: Option<LabError>,
}

impl Outcome {
    fn ok(result: Value, summary: String) -> Self {
        Self {
            result,
            summary,
            error: None,
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("result serializes")
}

/// Deterministic spread of `n` points with `t ∈ (0, 4)`.
pub fn casimir_samples(n: usize) -> Vec<GroupElement> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    (0..n)
        .map(|i| {
            let i = i as f64;
            CartanCoords {
                theta1: TAU * (i * phi).fract(),
                t: 4.0 * (i + 0.5) / n as f64,
                theta2: TAU * (i * phi * phi).fract(),
            }
            .recompose()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: i64,
    #[serde(rename = "N")]
    pub level: i64,
    pub verified: bool,
    #[serde(rename = "T")]
    pub mass_radius: f64,
    pub min_nontrivial_opnorm: f64,
    pub probe_margin: Option<f64>,
}

pub fn sweep_row(k: i64, level: i64, probe_radius: f64) -> Result<SweepRow> {
    let opts = CertificateOptions {
        probe_radius: Some(probe_radius),
    };
    let cert: NonvanishingCertificate = certificate_with(k, level, opts)?;
    // n(N) has ‖·‖_F = √(N² + 2) ≤ N + 2, so the search always succeeds
    let min = min_nontrivial_opnorm(CongruenceLevel::new(level)?, level as f64 + 2.0)?;
    let min = min
        .value
        .ok_or_else(|| LabError::Consistency(format!("no nontrivial element of Γ({level}) found")))?;
    Ok(SweepRow {
        k,
        level,
        verified: cert.verified,
        mass_radius: cert.mass_radius,
        min_nontrivial_opnorm: min,
        probe_margin: cert.best_probe_margin(),
    })
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    let cmd = cfg.command;
    match cmd {
        Command::LpNorm => {
            let (k, p) = (cfg.int("k")?, cfg.float("p")?);
            let param = MatrixCoefficientParam::new(k)?;
            let closed = lp_norm_closed_form(param.k(), p)?;
            let pk = p * param.k() as f64;
            let spec =
                QuadratureSpec::for_envelope(DecayEnvelope::new(2f64.powf(pk), pk / 2.0), cfg.float_or("tol", 1e-12)?)?;
            let r = lp_norm_numeric(param.k(), p, &spec)?;
            let summary = format!("{cmd} k={k} p={p}: {} (closed form {closed})", r.value);
            Ok(Outcome::ok(
                json!({"k": k, "p": p, "value": r.value,
                       "discretization_error_estimate": r.discretization_error_estimate,
                       "tail_bound": r.tail_bound, "closed_form": closed}),
                summary,
            ))
        }
        Command::PoincareEval => {
            let series = PoincareSeries::new(
                cfg.int("k")?,
                CongruenceLevel::new(cfg.int("N")?)?,
                cfg.float("radius")?,
            )?;
            let v = series.eval(&cfg.probe_or_identity()?)?;
            let summary = format!(
                "{cmd} k={} N={}: {} ± {:e} ({} terms)",
                v.k,
                v.level,
                v.value(),
                v.tail_bound,
                v.term_count
            );
            Ok(Outcome::ok(to_value(&v), summary))
        }
        Command::Cuspidality => {
            let (k, n, radius) = (cfg.int("k")?, cfg.int("N")?, cfg.float("radius")?);
            let series = PoincareSeries::new(k, CongruenceLevel::new(n)?, radius)?;
            let g = cfg.probe_or_identity()?;
            let r = series.cuspidality_residual(&g, cfg.uint_or("nodes", 64)?)?;
            let summary = format!("{cmd} k={k} N={n}: residual {:e}, tail {:e}", r.residual, r.tail_bound);
            let mut v = json!({"k": k, "N": n, "g": g, "radius": radius});
            v.as_object_mut()
                .unwrap()
                .extend(to_value(&r).as_object().unwrap().clone());
            Ok(Outcome::ok(v, summary))
        }
        Command::Certificate => {
            let opts = CertificateOptions {
                probe_radius: Some(cfg.float_or("radius", DEFAULT_PROBE_RADIUS)?),
            };
            let c = certificate_with(cfg.int("k")?, cfg.int("N")?, opts)?;
            let summary = format!(
                "{cmd} k={} N={}: verified={} T={}",
                c.k, c.level, c.verified, c.mass_radius
            );
            Ok(Outcome::ok(to_value(&c), summary))
        }
        Command::LevelThreshold => {
            let t = level_threshold(cfg.int("k")?)?;
            let summary = format!(
                "{cmd} k={}: n0={} ({} rejected levels)",
                t.k,
                t.threshold,
                t.rejected.len()
            );
            Ok(Outcome::ok(to_value(&t), summary))
        }
        Command::GammaBall => {
            let b = gamma_ball(CongruenceLevel::new(cfg.int("N")?)?, cfg.float("radius")?)?;
            let summary = format!("{cmd} N={} radius={}: {} elements", b.level.get(), b.radius, b.count);
            Ok(Outcome::ok(to_value(&b), summary))
        }
        Command::QuotientNorm => {
            let n = cfg.int("N")?;
            let level = CongruenceLevel::new(n)?;
            let g = cfg.probe_or_identity()?;
            let (value, search_radius) = match cfg.params.get("radius") {
                Some(_) => {
                    let r = cfg.float("radius")?;
                    (quotient_norm(level, &g, r)?, r)
                }
                None => (
                    quotient_norm_auto(level, &g)?,
                    crate::arithmetic::quotient_norm_radius(&g),
                ),
            };
            let summary = format!("{cmd} N={n}: {value}");
            Ok(Outcome::ok(
                json!({"N": n, "g": g, "value": value, "search_radius": search_radius}),
                summary,
            ))
        }
        Command::CasimirReport => {
            let k = cfg.int("k")?;
            let param = MatrixCoefficientParam::new(k)?;
            let r = casimir_report(&param, &casimir_samples(cfg.uint_or("samples", 100)?))?;
            let summary = format!(
                "{cmd} k={k}: eigenvalue {} spread {:e}",
                r.eigenvalue_estimate, r.relative_spread
            );
            let mut v = json!({"k": k});
            v.as_object_mut()
                .unwrap()
                .extend(to_value(&r).as_object().unwrap().clone());
            Ok(Outcome::ok(v, summary))
        }
        Command::Sweep => {
            let [k1, k2] = cfg.range("k")?;
            let [n1, n2] = cfg.range("N")?;
            let radius = cfg.float_or("radius", DEFAULT_PROBE_RADIUS)?;
            let cells: Vec<(i64, i64)> = (k1..=k2).flat_map(|k| (n1..=n2).map(move |n| (k, n))).collect();
            let results: Vec<Result<SweepRow>> = cells.par_iter().map(|&(k, n)| sweep_row(k, n, radius)).collect();
            let mut rows = Vec::new();
            let mut error = None;
            for r in results {
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            let verified = rows.iter().filter(|r| r.verified).count();
            let summary = format!("{cmd}: {} rows, {verified} verified", rows.len());
            Ok(Outcome {
                result: json!({"rows": rows, "truncated": error.is_some()}),
                summary,
                error,
            })
        }
    }
}

fn validate_against(schema: &str, instance: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(schema).map_err(|e| LabError::Consistency(format!("bad schema: {e}")))?;
    let validator =
        jsonschema::validator_for(&schema).map_err(|e| LabError::Consistency(format!("bad schema: {e}")))?;
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(LabError::Consistency(format!(
            "envelope fails schema: {}",
            errors.join("; ")
        )))
    }
}

/// Checks the envelope and, for successful runs and partial sweeps, the
/// payload against the shipped schemas.
pub fn validate_envelope(env: &ResultEnvelope) -> Result<()> {
    let value = to_value(env);
    validate_against(ENVELOPE_SCHEMA, &value)?;
    if !env.result.is_null() {
        validate_against(env.config.command.schema(), &env.result)?;
    }
    Ok(())
}

/// Runs a validated config. Errors from the computation are captured in
/// the envelope; only schema violations surface as `Err`.
pub fn run(cfg: &RunConfig) -> Result<(ResultEnvelope, String)> {
    let start = Instant::now();
    let outcome = dispatch(cfg).unwrap_or_else(|e| Outcome {
        result: Value::Null,
        summary: format!("{}: error: {e}", cfg.command),
        error: Some(e),
    });
    let env = ResultEnvelope {
        schema_version: SCHEMA_VERSION.to_string(),
        config: cfg.clone(),
        status: if outcome.error.is_none() { "ok" } else { "error" }.to_string(),
        result: outcome.result,
        error: outcome.error.as_ref().map(ErrorReport::from),
        wall_time: cfg.timing.then(|| start.elapsed().as_secs_f64()),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        determinism_seed: None,
    };
    validate_envelope(&env)?;
    Ok((env, outcome.summary))
}

/// CSV rendering of a sweep envelope; a failed cell ends the table with a
/// `# truncated` line.
pub fn sweep_csv(env: &ResultEnvelope) -> Result<String> {
    let rows: Vec<SweepRow> = serde_json::from_value(env.result["rows"].clone())
        .map_err(|e| LabError::Consistency(format!("sweep rows: {e}")))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "N", "verified", "T", "min_nontrivial_opnorm", "probe_margin"])
        .map_err(|e| LabError::Io(e.to_string()))?;
    for r in &rows {
        w.write_record([
            r.k.to_string(),
            r.level.to_string(),
            r.verified.to_string(),
            r.mass_radius.to_string(),
            r.min_nontrivial_opnorm.to_string(),
            r.probe_margin.map(|m| m.to_string()).unwrap_or_default(),
        ])
        .map_err(|e| LabError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Io(e.to_string()))?;
    let mut out = String::from_utf8(bytes).map_err(|e| LabError::Io(e.to_string()))?;
    if let Some(e) = &env.error {
        out.push_str(&format!("# truncated: {}\n", e.message));
    }
    Ok(out)
}

fn apply_cap_env() -> Result<()> {
    if let Ok(s) = std::env::var(CAP_ENV) {
        let cap: u64 = s
            .trim()
            .parse()
            .map_err(|_| usage(format!("{CAP_ENV} must be a positive integer, got {s:?}")))?;
        if cap == 0 {
            return Err(usage(format!("{CAP_ENV} must be positive")));
        }
        set_scan_cap(cap);
    }
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match apply_cap_env().and_then(|()| RunConfig::from_args(args)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let (env, summary) = match run(&cfg) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let body = match cfg.format {
        Format::Json => Ok(env.to_json()),
        Format::Csv => sweep_csv(&env),
    };
    let body = match body {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    match &cfg.output_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_FAILURE;
            }
            println!("{summary}");
        }
        None => {
            let _ = std::io::stdout().write_all(body.as_bytes());
            eprintln!("{summary}");
        }
    }
    if env.is_ok() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
