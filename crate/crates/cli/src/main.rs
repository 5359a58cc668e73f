//! `quatrace`: exact and Monte Carlo moments of quaternionic random matrices.
//!
//! Exit codes: 0 ok, 1 other failure, 2 parse error, 3 cap exceeded,
//! 4 manifest error, 5 not bracketable.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use quatrace::bracket::{bracketize, is_planar_on, upper_bound_status};
use quatrace::ensemble::Manifest;
use quatrace::expansion::{
    compare_mc, default_cap, evaluate, term_ledger, CompareReport, EvalOptions, ExpansionValue, ExpressionSpec,
};
use quatrace::perm::{
    enumerate_alternating_premaps, enumerate_premaps, Pairing, PreMap, SignedDomain, SignedPermutation, Sym,
};
use quatrace::sample::mc_expectation;
use quatrace::weingarten::{pairings, weingarten_table};
use num_rational::BigRational;
use quatrace::Error;
use serde_json::{json, Value};

const SCHEMA: &str = "1";

#[derive(Parser)]
#[command(name = "quatrace", version, about = "Exact moments of quaternionic random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact expectation by the topological expansion.
    Eval {
        #[command(flatten)]
        input: Input,
        /// Evaluate at a fixed N.
        #[arg(long, value_name = "N", conflicts_with = "symbolic")]
        at: Option<u64>,
        /// Keep N symbolic (the default without --at).
        #[arg(long)]
        symbolic: bool,
        /// Write the term ledger to this file.
        #[arg(long, value_name = "FILE")]
        ledger: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Monte Carlo estimate of Re ntr of the expression.
    Mc {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "N")]
        at: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Exact value against Monte Carlo; PASS iff |z| ≤ 5.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "N")]
        at: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        /// Added to the exact value before comparing (harness self-test).
        #[arg(long, hide = true, allow_hyphen_values = true)]
        exact_offset: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Bracket expression for a pair of premaps given as JSON cycles.
    Bracketize {
        /// JSON file, or inline JSON text: {"n":…,"infinity":…,"phi_re":…,"phi_tr":…}.
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Planarity of π on ρ and the upper-bound conditions.
    CheckPlanar {
        /// JSON file, or inline JSON text: {"n":…,"infinity":…,"pi":…,"rho":…}.
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Weingarten table on n points.
    WgTable {
        n: u32,
        #[arg(long, value_name = "N")]
        at: Option<u64>,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
    },
    /// Enumerate premaps, alternating premaps or pairings on n symbols.
    Enumerate {
        kind: EnumKind,
        n: u32,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
#[group(skip)]
#[command(group = ArgGroup::new("source").required(true).args(["expr", "spec"]))]
struct Input {
    /// Expression text, e.g. "E[Re(tr(X1 X1*))]".
    #[arg(short = 'e', long = "expr", group = "source")]
    expr: Option<String>,
    /// Spec JSON file with permutations in cycle form.
    #[arg(short = 's', long = "spec", group = "source")]
    spec: Option<PathBuf>,
    /// Ensemble manifest JSON file.
    #[arg(short = 'm', long = "manifest")]
    manifest: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumKind {
    Premaps,
    Alternating,
    Pairings,
}

impl EnumKind {
    fn name(self) -> &'static str {
        match self {
            EnumKind::Premaps => "premaps",
            EnumKind::Alternating => "alternating",
            EnumKind::Pairings => "pairings",
        }
    }
}

/// A failure with its exit code and machine-readable payload.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    extra: Option<Value>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Parse { .. } => (2, "parse"),
            Error::CapExceeded { .. } => (3, "cap-exceeded"),
            Error::Manifest(_) => (4, "manifest"),
            Error::NotBracketable(_) => (5, "not-bracketable"),
            _ => (1, "error"),
        };
        let extra = match &e {
            Error::NotBracketable(o) => Some(json!({"obstruction": o.name()})),
            _ => None,
        };
        Failure { code, kind, message: e.to_string(), extra }
    }
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure { code: 2, kind: "parse", message: message.into(), extra: None }
    }

    fn manifest(message: impl Into<String>) -> Self {
        Failure { code: 4, kind: "manifest", message: message.into(), extra: None }
    }
}

type Outcome = Result<Output, Failure>;

/// What a command prints: JSON payload and its human rendering.
struct Output {
    json: Value,
    text: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let as_json = match &cli.command {
        Command::Eval { json, .. }
        | Command::Mc { json, .. }
        | Command::Compare { json, .. }
        | Command::Bracketize { json, .. }
        | Command::CheckPlanar { json, .. }
        | Command::Enumerate { json, .. } => *json,
        Command::WgTable { json, .. } => *json,
    };
    match run(cli.command) {
        Ok(out) => {
            if as_json {
                println!("{}", serde_json::to_string_pretty(&out.json).unwrap());
            } else {
                println!("{}", out.text);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            let mut payload = json!({"schema": SCHEMA, "error": f.kind, "message": f.message});
            if let (Some(Value::Object(extra)), Value::Object(p)) = (&f.extra, &mut payload) {
                p.extend(extra.clone());
            }
            if as_json {
                println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            } else if f.extra.is_some() {
                println!("{}", f.message);
            } else {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Eval { input, at, ledger, .. } => cmd_eval(&input, at, ledger.as_deref()),
        Command::Mc { input, at, samples, seed, .. } => cmd_mc(&input, at, samples, seed),
        Command::Compare { input, at, samples, seed, exact_offset, .. } => {
            cmd_compare(&input, at, samples, seed, exact_offset.as_deref())
        }
        Command::Bracketize { input, .. } => cmd_bracketize(&input),
        Command::CheckPlanar { input, .. } => cmd_check_planar(&input),
        Command::WgTable { n, at, csv, .. } => cmd_wg_table(n, at, csv),
        Command::Enumerate { kind, n, .. } => cmd_enumerate(kind, n),
    }
}

fn read_json(source: &str) -> Result<Value, Failure> {
    let text = if source.trim_start().starts_with('{') || source.trim_start().starts_with('[') {
        source.to_string()
    } else {
        fs::read_to_string(source).map_err(|e| Failure::parse(format!("{source}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::parse(format!("invalid JSON: {e}")))
}

fn load_manifest(path: Option<&Path>) -> Result<Option<Manifest>, Failure> {
    let Some(p) = path else { return Ok(None) };
    let text = fs::read_to_string(p).map_err(|e| Failure::manifest(format!("{}: {e}", p.display())))?;
    Ok(Some(Manifest::from_str(&text)?))
}

fn load_spec(input: &Input) -> Result<ExpressionSpec, Failure> {
    let manifest = load_manifest(input.manifest.as_deref())?;
    if let Some(e) = &input.expr {
        return Ok(ExpressionSpec::from_expr(e, manifest.unwrap_or_default())?);
    }
    let path = input.spec.as_ref().expect("clap enforces one input");
    let text = fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::parse(format!("invalid spec JSON: {e}")))?;
    Ok(ExpressionSpec::from_json(&v, manifest)?)
}

fn cmd_eval(input: &Input, at: Option<u64>, ledger: Option<&Path>) -> Outcome {
    let spec = load_spec(input)?;
    let cap = default_cap();
    let start = Instant::now();
    let r = evaluate(&spec, &EvalOptions { at, cap })?;
    // timing goes to stderr so stdout stays byte-identical across runs
    eprintln!("evaluated {} terms in {:.3}s", r.term_count, start.elapsed().as_secs_f64());
    let value = r.value_string();
    let mut j = json!({
        "schema": SCHEMA,
        "value": value,
        "terms": r.term_count,
        "at": at,
        "times_identity": r.times_identity,
        "y_mode": r.y_mode.name(),
    });
    if let ExpansionValue::Residual(ts) = &r.value {
        j["residual"] = Value::Array(
            ts.iter()
                .map(|t| {
                    json!({
                        "weight": t.weight.to_string(),
                        "sigma_re": t.sigma_re.perm().to_string(),
                        "sigma_tr": t.sigma_tr.perm().to_string(),
                        "expression": t.expression(),
                    })
                })
                .collect(),
        );
    }
    if let Some(path) = ledger {
        let terms = term_ledger(&spec, cap)?
            .map(|t| t.map(|t| t.to_json()))
            .collect::<quatrace::Result<Vec<_>>>()?;
        let doc = json!({"schema": SCHEMA, "spec": spec.to_json(), "terms": terms});
        fs::write(path, serde_json::to_string_pretty(&doc).unwrap())
            .map_err(|e| Failure { code: 1, kind: "io", message: format!("{}: {e}", path.display()), extra: None })?;
    }
    let text = if r.times_identity { format!("({value})·I") } else { value };
    Ok(Output { json: j, text, code: 0 })
}

fn cmd_mc(input: &Input, at: u64, samples: u64, seed: u64) -> Outcome {
    let spec = load_spec(input)?;
    let est = mc_expectation(&spec, at as usize, samples, seed)?;
    let mut j = est.to_json();
    j["schema"] = json!(SCHEMA);
    j["at"] = json!(at);
    let text = format!("{:.6} ± {:.6} ({} samples, seed {})", est.mean, est.std_error, est.sample_count, seed);
    Ok(Output { json: j, text, code: 0 })
}

fn cmd_compare(input: &Input, at: u64, samples: u64, seed: u64, offset: Option<&str>) -> Outcome {
    let spec = load_spec(input)?;
    let mut report = compare_mc(&spec, at, samples, seed, default_cap())?;
    if let Some(o) = offset {
        let q: BigRational = o.parse().map_err(|_| Failure::parse(format!("bad offset {o:?}")))?;
        report = CompareReport::new(report.exact + q, report.mc);
    }
    let mut j = report.to_json();
    j["schema"] = json!(SCHEMA);
    j["at"] = json!(at);
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    let text = format!(
        "{verdict} exact={} mc={:.6}±{:.6} z={:.3}",
        report.exact, report.mc.mean, report.mc.std_error, report.z
    );
    Ok(Output { json: j, text, code: if report.pass { 0 } else { 1 } })
}

fn perm_field(v: &Value, key: &str, d: SignedDomain) -> Result<SignedPermutation, Failure> {
    let p = match v.get(key) {
        Some(Value::String(s)) => SignedPermutation::parse_cycles(d, s)?,
        Some(Value::Array(cycles)) => {
            let mut cs: Vec<Vec<Sym>> = Vec::new();
            for c in cycles {
                let arr = c.as_array().ok_or_else(|| Failure::parse(format!("{key}: cycle is not an array")))?;
                let mut cyc = Vec::new();
                for x in arr {
                    let s = match x {
                        Value::String(s) if s == "inf" || s == "∞" => d.inf(),
                        Value::String(s) if s == "-inf" || s == "-∞" => -d.inf(),
                        Value::Number(n) => n.as_i64().ok_or_else(|| Failure::parse(format!("{key}: bad symbol")))? as Sym,
                        _ => return Err(Failure::parse(format!("{key}: bad symbol {x}"))),
                    };
                    cyc.push(s);
                }
                cs.push(cyc);
            }
            SignedPermutation::from_cycles(d, &cs)?
        }
        Some(o @ Value::Object(_)) => SignedPermutation::from_json(o)?,
        _ => return Err(Failure::parse(format!("missing {key}"))),
    };
    Ok(p)
}

/// A premap as given, or the double of a permutation of positive symbols.
fn premap_field(v: &Value, key: &str, d: SignedDomain) -> Result<PreMap, Failure> {
    let p = perm_field(v, key, d)?;
    if p.support().iter().any(|&s| s < 0) {
        Ok(PreMap::new(p)?)
    } else {
        Ok(PreMap::double(&p)?)
    }
}

fn domain_of(v: &Value, default_inf: bool) -> Result<SignedDomain, Failure> {
    let n = v.get("n").and_then(Value::as_u64).ok_or_else(|| Failure::parse("missing n"))? as u32;
    let inf = v.get("infinity").and_then(Value::as_bool).unwrap_or(default_inf);
    Ok(SignedDomain::new(n, inf))
}

fn cmd_bracketize(source: &str) -> Outcome {
    let v = read_json(source)?;
    let d = domain_of(&v, true)?;
    let re = premap_field(&v, "phi_re", d)?;
    let tr = premap_field(&v, "phi_tr", d)?;
    match bracketize(&re, &tr) {
        Ok(diagram) => {
            let expr = diagram.render("X");
            Ok(Output { json: json!({"schema": SCHEMA, "expression": expr}), text: expr, code: 0 })
        }
        Err(o) => Err(Failure {
            code: 5,
            kind: "not-bracketable",
            message: format!("not bracketable: {o}"),
            extra: Some(json!({"obstruction": o.name(), "detail": o.to_string()})),
        }),
    }
}

fn cmd_check_planar(source: &str) -> Outcome {
    let v = read_json(source)?;
    let d = domain_of(&v, false)?;
    let pi = perm_field(&v, "pi", d)?;
    let rho = perm_field(&v, "rho", d)?;
    if pi.support() != rho.support() {
        return Err(Error::DomainMismatch.into());
    }
    let planar = is_planar_on(&pi, &rho);
    let st = upper_bound_status(&pi, &rho);
    let j = json!({
        "schema": SCHEMA,
        "planar": planar,
        "upper_bound_conditions": st.conditions,
        "witness": st.witness.as_ref().map(|w| w.sigma.to_string()),
    });
    let text = format!("planar: {planar}\nupper-bound conditions: {:?}", st.conditions);
    Ok(Output { json: j, text, code: 0 })
}

fn cmd_wg_table(n: u32, at: Option<u64>, csv: bool) -> Outcome {
    if n % 2 != 0 {
        return Err(Failure { code: 1, kind: "error", message: format!("n = {n} must be even"), extra: None });
    }
    let table = weingarten_table(n, at)?;
    let ps = pairings(n);
    let matrix: Vec<Vec<String>> =
        ps.iter().map(|p| ps.iter().map(|q| table.entry(p, q).to_string()).collect()).collect();
    let mut j = table.to_json();
    j["pairings"] = json!(ps.iter().map(|p| p.to_string()).collect::<Vec<_>>());
    j["matrix"] = json!(matrix);
    let text = if csv {
        let mut s = String::from("lambda,Wg,wg\n");
        for e in j["entries"].as_array().unwrap() {
            let lam: Vec<String> = e["lambda"].as_array().unwrap().iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{},{},{}\n", lam.join(" "), e["value"].as_str().unwrap(), e["wg"].as_str().unwrap()));
        }
        s.trim_end().to_string()
    } else {
        let mut s = String::new();
        for e in j["entries"].as_array().unwrap() {
            s.push_str(&format!("{}  Wg = {}  wg = {}\n", e["lambda"], e["value"].as_str().unwrap(), e["wg"].as_str().unwrap()));
        }
        for row in &matrix {
            s.push_str(&format!("[{}]\n", row.join(", ")));
        }
        s.trim_end().to_string()
    };
    Ok(Output { json: j, text, code: 0 })
}

fn cmd_enumerate(kind: EnumKind, n: u32) -> Outcome {
    let d = SignedDomain::new(n, false);
    let syms: Vec<Sym> = (1..=n as Sym).collect();
    let items: Vec<String> = match kind {
        EnumKind::Premaps => enumerate_premaps(d, &syms).iter().map(|p| p.perm().to_string()).collect(),
        EnumKind::Alternating => enumerate_alternating_premaps(d, &syms).iter().map(|p| p.perm().to_string()).collect(),
        EnumKind::Pairings => Pairing::enumerate(d, &syms).iter().map(|p| p.to_string()).collect(),
    };
    let j = json!({"schema": SCHEMA, "kind": kind.name(), "n": n, "count": items.len(), "items": items});
    let mut text = format!("{} {}: {}", kind.name(), n, items.len());
    for it in &items {
        text.push('\n');
        text.push_str(it);
    }
    Ok(Output { json: j, text, code: 0 })
}
