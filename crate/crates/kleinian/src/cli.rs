//! Command-line surface of the `kleinian` binary.
//!
//! Subcommands: `ops`, `rfun`, `sigma`, `basis`, `relation`, `selftest`.
//! Text output is the default; `--format json` switches every command to a
//! single JSON document. Expansions can be cached in the directory named by
//! `KLEINIAN_CACHE_DIR`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::abelfun::{r_oracle, r_to_p, render_ppoly, PVar, RFunctionId};
use crate::basis::{
    build_basis, build_basis_auto, find_relation, render_relation, verify_relation, AutoOptions, AutoStep, BasisOptions, BasisReport,
    FunctionSpec, Relation, RelationOptions, RelationOutcome,
};
use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::hirota::{hirota_d, hirota_h, render_diffpoly, render_tensor, symmetrize, to_rational, DerivSymbol, Factor, Label, Names, Slot, TensorPoly};
use crate::rational::fmt_q;
use crate::sigma::{load_expansion, random_specialization, solve_with, store_expansion, Mode, SigmaExpansion, SolveOptions};

pub const CACHE_ENV: &str = "KLEINIAN_CACHE_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNDERDETERMINED: i32 = 3;
pub const EXIT_DEPTH: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;
pub const EXIT_SELFTEST: i32 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Symbolic,
    Specialized,
    Zero,
}

#[derive(Debug, Parser)]
#[command(name = "kleinian", version, about = "Generalized Hirota operators, R-functions and σ-expansions of cyclic (n,s)-curves")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Worker threads for parallel stages (output does not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Progress and timing on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply operators to a tensor, e.g. `S D[i] D[j] (f^x2)`.
    Ops {
        #[arg(required = true, allow_hyphen_values = true)]
        program: Vec<String>,
    },
    /// Expand an R-function in ℘-functions.
    Rfun {
        #[arg(short, long)]
        m: usize,
        /// Comma-separated labels, numeric or symbolic.
        #[arg(short, long)]
        indices: String,
        /// Cross-check against the σ = e^φ expansion.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        unicode: bool,
    },
    /// Solve a σ-expansion and store it.
    Sigma {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_enum, default_value = "symbolic")]
        mode: ModeArg,
        /// Seed of the λ-specialization and of the vanishing points.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
        /// Number of terms to list.
        #[arg(long, default_value_t = 10)]
        show: usize,
    },
    /// Build a basis of Γ(m).
    Basis {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long)]
        pole: usize,
        /// Use this stored expansion instead of solving.
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        max_depth: Option<u32>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Express a function through basis entries with λ-coefficients.
    Relation {
        /// ℘₁₁℘₂₂ − ℘₁₂² against 1, R2[1,1], R2[1,2], R2[2,2], R3[1,2,2,2,2,2].
        #[arg(long, conflicts_with = "target")]
        delta: bool,
        #[arg(long)]
        target: Option<String>,
        /// Semicolon-separated basis, e.g. `1;R2[1,1];R2[1,2]`.
        #[arg(long)]
        basis: Option<String>,
        /// Stored symbolic expansion.
        #[arg(long)]
        sigma: Option<PathBuf>,
        #[arg(long, default_value = "2,5")]
        curve: String,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Depth of the confirming expansion (default: twice the depth).
        #[arg(long)]
        verify_depth: Option<u32>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        unicode: bool,
    },
    /// Quick end-to-end checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct CurveArg {
    /// `n,s`
    #[arg(long, default_value = "2,5")]
    pub curve: String,
}

/// Settings shared by all commands, validated before dispatch.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub format: Format,
    pub threads: Option<usize>,
    pub verbose: bool,
    pub cache_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        if cli.threads == Some(0) {
            return Err(Error::Invalid("--threads must be positive".into()));
        }
        let cache_dir = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Ok(RunConfig { format: cli.format, threads: cli.threads, verbose: cli.verbose, cache_dir })
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Result of a command: text for stdout and the process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Underdetermined { .. } | Error::Inconsistent { .. } => EXIT_UNDERDETERMINED,
        Error::DepthInsufficient { .. } => EXIT_DEPTH,
        Error::Budget(_) => EXIT_BUDGET,
        _ => EXIT_ERROR,
    }
}

pub fn parse_curve(s: &str) -> Result<CurveModel> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Invalid(format!("curve must be given as n,s (got {s:?})"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let n = parts[0].parse().map_err(|_| bad())?;
    let s = parts[1].parse().map_err(|_| bad())?;
    CurveModel::cyclic(n, s)
}

fn header(cmd: &str, extra: &str) -> String {
    format!("# kleinian {} {cmd}{}{extra}\n", env!("CARGO_PKG_VERSION"), if extra.is_empty() { "" } else { " " })
}

fn json_out(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn meta(cmd: &str) -> Value {
    json!({ "generator": format!("kleinian {}", env!("CARGO_PKG_VERSION")), "command": cmd })
}

// ---------------------------------------------------------------- ops

#[derive(Debug, Clone, PartialEq)]
enum Op {
    D(Label),
    H(usize, Label),
}

/// Parsed operator program.
#[derive(Debug, Clone)]
pub struct Program {
    symmetrize: bool,
    ops: Vec<Op>,
    tensor: TensorPoly,
    pub names: Names,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { pos: self.pos, msg: msg.into() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}'")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let len: usize = self.rest().chars().take_while(|c| c.is_alphanumeric() || *c == '_').map(char::len_utf8).sum();
        if len == 0 {
            return Err(self.err("expected a name"));
        }
        let s = self.rest()[..len].to_string();
        self.pos += len;
        Ok(s)
    }

    fn number(&mut self) -> Result<usize> {
        let at = self.pos;
        let s = self.ident()?;
        s.parse().map_err(|_| Error::Parse { pos: at, msg: format!("expected an integer, found {s:?}") })
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }
}

fn parse_slot(lx: &mut Lexer, names: &mut Names) -> Result<Slot> {
    let name = lx.ident()?;
    if name == "exp" {
        lx.expect("(")?;
        let f = lx.ident()?;
        lx.expect(")")?;
        return Ok(vec![(Factor::Sym(DerivSymbol::exp_linear(&f)), 1)]);
    }
    let mut derivs = Vec::new();
    if lx.eat("[") {
        loop {
            derivs.push(names.intern(&lx.ident()?));
            if !lx.eat(",") {
                break;
            }
        }
        lx.expect("]")?;
    }
    Ok(vec![(Factor::Sym(DerivSymbol::new(&name, &derivs)), 1)])
}

/// Parses `[S] op* (tensor)` where `op` is `D[i]` or `H[m,i]` and the
/// tensor is `f^xN` or a comma-separated list of slots such as
/// `(f, g[1])`; `exp(h)` denotes `χ e^L`.
pub fn parse_program(src: &str) -> Result<Program> {
    let mut lx = Lexer { src, pos: 0 };
    let mut names = Names::default();
    let symmetrize = lx.eat("S ") || lx.eat("S(") && {
        lx.pos -= 1;
        true
    };
    let mut ops = Vec::new();
    loop {
        lx.skip_ws();
        if lx.eat("D[") {
            let l = names.intern(&lx.ident()?);
            lx.expect("]")?;
            ops.push(Op::D(l));
        } else if lx.eat("H[") {
            let m = lx.number()?;
            lx.expect(",")?;
            let l = names.intern(&lx.ident()?);
            lx.expect("]")?;
            if m < 2 {
                return Err(lx.err("operator order must be at least 2"));
            }
            ops.push(Op::H(m, l));
        } else {
            break;
        }
    }
    let order = match ops.first() {
        Some(Op::H(m, _)) => *m,
        _ => 2,
    };
    if ops.iter().any(|o| match o {
        Op::D(_) => order != 2,
        Op::H(m, _) => *m != order,
    }) {
        return Err(lx.err("operators of different orders cannot be composed"));
    }
    lx.expect("(")?;
    let first = parse_slot(&mut lx, &mut names)?;
    let tensor = if lx.eat("^x") {
        let k = lx.number()?;
        let Factor::Sym(sym) = &first[0].0 else { unreachable!() };
        let mut t = TensorPoly::tensor_power(sym, k);
        if t.order != order as u32 {
            t = TensorPoly::single(order as u32, vec![first.clone(); k], crate::cyclo::Cyclo::one(order as u32));
        }
        t
    } else {
        let mut slots = vec![first];
        while lx.eat(",") {
            slots.push(parse_slot(&mut lx, &mut names)?);
        }
        TensorPoly::single(order as u32, slots, crate::cyclo::Cyclo::one(order as u32))
    };
    lx.expect(")")?;
    if !lx.at_end() {
        return Err(lx.err("unexpected trailing input"));
    }
    Ok(Program { symmetrize, ops, tensor, names })
}

/// Evaluates a program and renders the result.
pub fn eval_program(p: &Program) -> Result<String> {
    let mut t = p.tensor.clone();
    for op in p.ops.iter().rev() {
        t = match op {
            Op::D(i) => hirota_d(*i, &t)?,
            Op::H(m, i) => hirota_h(*i, *m, &t)?,
        };
    }
    if !p.symmetrize {
        return Ok(render_tensor(&t, &p.names));
    }
    let s = symmetrize(&t);
    Ok(match to_rational(&s) {
        Some(r) => render_diffpoly(&r, &p.names),
        None => s
            .terms
            .iter()
            .map(|(m, c)| format!("({c})*{}", crate::hirota::render_mono(m, &p.names, "*")))
            .collect::<Vec<_>>()
            .join(" + "),
    })
}

fn cmd_ops(cfg: &RunConfig, program: &[String]) -> Result<String> {
    let src = program.join(" ");
    let p = parse_program(&src)?;
    let r = eval_program(&p)?;
    Ok(match cfg.format {
        Format::Text => format!("{r}\n"),
        Format::Json => json_out(json!({ "meta": meta("ops"), "program": src, "result": r })),
    })
}

// ---------------------------------------------------------------- rfun

fn cmd_rfun(cfg: &RunConfig, m: usize, indices: &str, check: bool, unicode: bool) -> Result<String> {
    let mut names = Names::default();
    let labels: Vec<Label> = indices.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| names.intern(s)).collect();
    if labels.is_empty() {
        return Err(Error::Invalid("at least one index is required".into()));
    }
    let id = RFunctionId::new(m, &labels)?;
    let (p, note) = r_to_p(&id);
    let text = render_ppoly(&p, &names, unicode);
    let agrees = if check { Some(r_oracle(&id)? == p) } else { None };
    let parity = if id.n() % 2 == 0 { "even" } else { "odd" };
    Ok(match cfg.format {
        Format::Text => {
            let mut s = format!("{} = {text}\n", crate::abelfun::render_rid(&id, &names));
            if let Some(n) = &note {
                s.push_str(&format!("note: {n}\n"));
            }
            s.push_str(&format!("terms: {}, parity: {parity}\n", p.len()));
            if let Some(a) = agrees {
                s.push_str(&format!("oracle: {}\n", if a { "agrees" } else { "DISAGREES" }));
            }
            s
        }
        Format::Json => {
            let terms: Vec<Value> = p
                .terms
                .iter()
                .map(|(mono, c)| {
                    let f: Vec<Value> = mono
                        .iter()
                        .map(|(v, e)| match v {
                            PVar::P(ix) => json!({ "p": ix.iter().map(|&l| names.name(l)).collect::<Vec<_>>(), "exp": e }),
                            PVar::Lambda(j) => json!({ "lambda": j, "exp": e }),
                        })
                        .collect();
                    json!({ "factors": f, "coeff": fmt_q(c) })
                })
                .collect();
            json_out(json!({
                "meta": meta("rfun"),
                "function": crate::abelfun::render_rid(&id, &names),
                "expansion": text,
                "note": note,
                "parity": parity,
                "terms": terms,
                "oracle_agrees": agrees,
            }))
        }
    })
}

// ---------------------------------------------------------------- sigma

fn mode_of(arg: ModeArg, s: usize, seed: u64) -> Mode {
    match arg {
        ModeArg::Symbolic => Mode::Symbolic,
        ModeArg::Specialized => Mode::Specialized(random_specialization(s, seed)),
        ModeArg::Zero => Mode::Zero,
    }
}

fn cache_name(c: &CurveModel, depth: u32, mode: &Mode, seed: u64) -> String {
    match mode {
        Mode::Specialized(_) => format!("sigma-{}-{}-d{depth}-specialized-seed{seed}.json", c.n, c.s),
        m => format!("sigma-{}-{}-d{depth}-{}-seed{seed}.json", c.n, c.s, m.name()),
    }
}

/// Solves an expansion, consulting and filling the cache directory.
pub fn obtain_expansion(cfg: &RunConfig, c: &CurveModel, depth: u32, mode: Mode, seed: u64, budget: Option<u64>) -> Result<SigmaExpansion> {
    let path = cfg.cache_dir.as_ref().map(|d| d.join(cache_name(c, depth, &mode, seed)));
    if let Some(p) = &path {
        if p.exists() {
            match load_expansion(p) {
                Ok(e) => {
                    cfg.log(format!("cache hit {}", p.display()));
                    return Ok(e);
                }
                Err(err) => cfg.log(format!("ignoring cache entry {}: {err}", p.display())),
            }
        }
    }
    let t = Instant::now();
    let mut opts = SolveOptions::new(depth, mode);
    opts.seed = seed;
    opts.budget_secs = budget;
    let e = solve_with(c, &opts)?;
    cfg.log(format!("({},{}) depth {depth} {} expansion in {:.2?}", c.n, c.s, e.mode.name(), t.elapsed()));
    if let Some(p) = &path {
        std::fs::create_dir_all(p.parent().unwrap())?;
        store_expansion(&e, p)?;
    }
    Ok(e)
}

/// Loads a stored expansion, or explains how to create it.
pub fn open_expansion(path: &Path, suggestion: &str) -> Result<SigmaExpansion> {
    if !path.exists() {
        return Err(Error::Invalid(format!(
            "expansion file {} does not exist; create it with `kleinian sigma {suggestion} --out {}`",
            path.display(),
            path.display()
        )));
    }
    load_expansion(path)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sigma(cfg: &RunConfig, curve: &str, depth: u32, mode: ModeArg, seed: u64, out: Option<&Path>, budget: Option<u64>, show: usize) -> Result<String> {
    let c = parse_curve(curve)?;
    let e = obtain_expansion(cfg, &c, depth, mode_of(mode, c.s, seed), seed, budget)?;
    if let Some(p) = out {
        store_expansion(&e, p)?;
    }
    let terms = e.term_list();
    Ok(match cfg.format {
        Format::Text => {
            let mut s = header("sigma", &format!("curve=({},{}) seed={seed}", c.n, c.s));
            s.push_str(&format!(
                "wt(sigma) = {}, genus {}, u-weights {:?}, depth {}, mode {}, {} terms\n",
                e.wt_sigma,
                e.genus(),
                e.u_weights(),
                e.depth,
                e.mode.name(),
                terms.len()
            ));
            if let Some(p) = out {
                s.push_str(&format!("written to {}\n", p.display()));
            }
            for t in terms.iter().take(show) {
                s.push_str(&format!("  {:>12}  u^{:?}  lambda^{:?}\n", fmt_q(&t.coeff), t.u_exp, t.lambda_exp));
            }
            s
        }
        Format::Json => json_out(json!({
            "meta": meta("sigma"),
            "curve": [c.n, c.s],
            "seed": seed,
            "wt_sigma": e.wt_sigma,
            "depth": e.depth,
            "mode": e.mode.name(),
            "terms": terms.len(),
            "out": out.map(|p| p.display().to_string()),
        })),
    })
}

// ---------------------------------------------------------------- basis

fn basis_output(cfg: &RunConfig, rep: &BasisReport, log: &[AutoStep], seed: Option<u64>) -> String {
    match cfg.format {
        Format::Text => {
            let lam = seed.map(|x| format!(" seed={x}")).unwrap_or_default();
            let mut s = header("basis", &format!("curve=({},{}){lam} ray-seed={} rays={}", rep.n, rep.s, rep.seed, rep.rays));
            for st in log {
                s.push_str(&format!("depth {:>3}: {:>3} entries, {}\n", st.depth, st.entries, st.note));
            }
            s.push_str(&rep.table());
            let replay = if log.is_empty() { "not run".to_string() } else { rep.verified.to_string() };
            s.push_str(&format!("rank {} at depth {}, replay verified: {replay}\n", rep.rank, rep.depth));
            s
        }
        Format::Json => json_out(json!({ "meta": meta("basis"), "seed": seed, "report": rep, "log": log })),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_basis(
    cfg: &RunConfig,
    curve: &str,
    pole: usize,
    sigma: Option<&Path>,
    depth: Option<u32>,
    max_depth: Option<u32>,
    seed: u64,
    budget: Option<u64>,
    out: Option<&Path>,
) -> Result<(String, i32)> {
    let c = parse_curve(curve)?;
    let (rep, log, seed) = if let Some(p) = sigma {
        let e = open_expansion(p, &format!("--curve {curve} --depth 20 --mode specialized"))?;
        if (e.curve.n, e.curve.s) != (c.n, c.s) {
            return Err(Error::Invalid(format!("{} holds a ({},{}) expansion, not ({},{})", p.display(), e.curve.n, e.curve.s, c.n, c.s)));
        }
        (build_basis(&c, pole, &e, &BasisOptions::default())?, Vec::new(), None)
    } else {
        let mut opts = AutoOptions::new(&c, pole);
        opts.seed = seed;
        opts.budget_secs = budget;
        if let Some(d) = depth {
            opts.start_depth = d;
            opts.max_depth = opts.max_depth.max(d);
        }
        if let Some(d) = max_depth {
            opts.max_depth = d;
        }
        let (r, l) = build_basis_auto(&c, pole, &opts, |d, sd| obtain_expansion(cfg, &c, d, Mode::Specialized(random_specialization(c.s, sd)), sd, budget))?;
        (r, l, Some(seed))
    };
    let text = basis_output(cfg, &rep, &log, seed);
    if let Some(p) = out {
        std::fs::write(p, json_out(json!({ "meta": meta("basis"), "seed": seed, "report": rep, "log": log })))?;
    }
    Ok((text, if rep.complete { EXIT_OK } else { EXIT_DEPTH }))
}

// ---------------------------------------------------------------- relation

pub fn delta_basis() -> Vec<FunctionSpec> {
    ["1", "R2[1,1]", "R2[1,2]", "R2[2,2]", "R3[1,2,2,2,2,2]"].iter().map(|s| FunctionSpec::parse(s).expect("valid")).collect()
}

fn relation_json(rel: &Relation) -> Value {
    let mut terms = Vec::new();
    for (b, p) in &rel.terms {
        for (m, c) in &p.terms {
            let lam: serde_json::Map<String, Value> = m
                .iter()
                .filter_map(|(v, e)| if let PVar::Lambda(j) = v { Some((j.to_string(), json!(e))) } else { None })
                .collect();
            terms.push(json!({ "function": b.to_string(), "lambda": lam, "coeff": fmt_q(c) }));
        }
    }
    json!({ "target": rel.target.to_string(), "terms": terms })
}

#[allow(clippy::too_many_arguments)]
fn cmd_relation(
    cfg: &RunConfig,
    delta: bool,
    target: Option<&str>,
    basis: Option<&str>,
    sigma: Option<&Path>,
    curve: &str,
    depth: u32,
    verify_depth: Option<u32>,
    seed: u64,
    unicode: bool,
) -> Result<String> {
    let target = match (delta, target) {
        (true, _) => FunctionSpec::delta(),
        (false, Some(t)) => FunctionSpec::parse(t)?,
        (false, None) => return Err(Error::Invalid("give --delta or --target".into())),
    };
    let basis: Vec<FunctionSpec> = match basis {
        Some(b) => b.split(';').filter(|s| !s.trim().is_empty()).map(FunctionSpec::parse).collect::<Result<_>>()?,
        None if delta => delta_basis(),
        None => return Err(Error::Invalid("--basis is required with --target".into())),
    };
    let e = match sigma {
        Some(p) => open_expansion(p, &format!("--curve {curve} --depth {depth}"))?,
        None => obtain_expansion(cfg, &parse_curve(curve)?, depth, Mode::Symbolic, seed, None)?,
    };
    let c = e.curve.clone();
    let outcome = find_relation(&target, &basis, &e, &RelationOptions::default())?;
    let vd = verify_depth.unwrap_or(2 * e.depth);
    let verified = match &outcome {
        RelationOutcome::Found(rel) => {
            let check = obtain_expansion(cfg, &c, vd, Mode::Specialized(random_specialization(c.s, seed + 1)), seed + 1, None)?;
            Some(verify_relation(rel, &check, 3, seed + 2, true)?)
        }
        RelationOutcome::Independent { .. } => None,
    };
    Ok(match cfg.format {
        Format::Text => {
            let mut s = header("relation", &format!("curve=({},{}) depth={} seed={seed}", c.n, c.s, e.depth));
            match &outcome {
                RelationOutcome::Found(rel) => {
                    s.push_str(&render_relation(rel, unicode));
                    s.push('\n');
                    s.push_str(&format!("verified at depth {vd}: {}\n", verified.unwrap_or(false)));
                }
                RelationOutcome::Independent { witness } => s.push_str(&format!("independent: no relation; first failing coefficient {witness}\n")),
            }
            s
        }
        Format::Json => json_out(match &outcome {
            RelationOutcome::Found(rel) => json!({
                "meta": meta("relation"),
                "curve": [c.n, c.s],
                "depth": e.depth,
                "seed": seed,
                "relation": relation_json(rel),
                "verify_depth": vd,
                "verified": verified,
            }),
            RelationOutcome::Independent { witness } => json!({
                "meta": meta("relation"),
                "curve": [c.n, c.s],
                "depth": e.depth,
                "independent": true,
                "witness": witness,
            }),
        }),
    })
}

// ---------------------------------------------------------------- selftest

fn selftest_checks() -> Vec<(&'static str, Box<dyn Fn() -> Result<bool>>)> {
    vec![
        (
            "S D[i] D[j] (f^x2)",
            Box::new(|| Ok(eval_program(&parse_program("S D[i] D[j] (f^x2)")?)? == "2*(f*f[i,j] - f[i]*f[j])")),
        ),
        ("S H[3,i] (f^x3) vanishes", Box::new(|| Ok(eval_program(&parse_program("S H[3,i] (f^x3)")?)? == "0"))),
        (
            "R3[1,1,2,2,2,2] matches the σ = e^φ oracle",
            Box::new(|| {
                let id = RFunctionId::new(3, &[1, 1, 2, 2, 2, 2])?;
                Ok(r_oracle(&id)? == r_to_p(&id).0)
            }),
        ),
        (
            "(2,5) Γ(2) has rank 4",
            Box::new(|| {
                let c = CurveModel::cyclic(2, 5)?;
                let e = solve_with(&c, &SolveOptions::new(12, Mode::Specialized(random_specialization(5, 7))))?;
                Ok(build_basis(&c, 2, &e, &BasisOptions::default())?.complete)
            }),
        ),
        (
            "(2,5) Δ relation re-verifies",
            Box::new(|| {
                let c = CurveModel::cyclic(2, 5)?;
                let e = solve_with(&c, &SolveOptions::new(10, Mode::Symbolic))?;
                let RelationOutcome::Found(rel) = find_relation(&FunctionSpec::delta(), &delta_basis(), &e, &RelationOptions::default())? else {
                    return Ok(false);
                };
                let check = solve_with(&c, &SolveOptions::new(16, Mode::Specialized(random_specialization(5, 8))))?;
                verify_relation(&rel, &check, 2, 9, false)
            }),
        ),
    ]
}

fn cmd_selftest(cfg: &RunConfig) -> Result<(String, i32)> {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, f) in selftest_checks() {
        let r = f();
        let pass = matches!(r, Ok(true));
        ok &= pass;
        lines.push((name, pass, r.err().map(|e| e.to_string())));
    }
    let code = if ok { EXIT_OK } else { EXIT_SELFTEST };
    Ok(match cfg.format {
        Format::Text => {
            let mut s = header("selftest", "");
            for (n, p, e) in &lines {
                s.push_str(&format!("{} {n}{}\n", if *p { "PASS" } else { "FAIL" }, e.as_ref().map(|e| format!(": {e}")).unwrap_or_default()));
            }
            (s, code)
        }
        Format::Json => {
            let v: Vec<Value> = lines.iter().map(|(n, p, e)| json!({ "check": n, "pass": p, "error": e })).collect();
            (json_out(json!({ "meta": meta("selftest"), "checks": v })), code)
        }
    })
}

// ---------------------------------------------------------------- dispatch

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = RunConfig::from_cli(cli)?;
    if let Some(n) = cfg.threads {
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let done = |stdout: String| Ok(Outcome { stdout, code: EXIT_OK });
    match &cli.command {
        Command::Ops { program } => done(cmd_ops(&cfg, program)?),
        Command::Rfun { m, indices, check, unicode } => done(cmd_rfun(&cfg, *m, indices, *check, *unicode)?),
        Command::Sigma { curve, depth, mode, seed, out, budget, show } => {
            done(cmd_sigma(&cfg, &curve.curve, *depth, *mode, *seed, out.as_deref(), *budget, *show)?)
        }
        Command::Basis { curve, pole, sigma, depth, max_depth, seed, budget, out } => {
            let (stdout, code) = cmd_basis(&cfg, &curve.curve, *pole, sigma.as_deref(), *depth, *max_depth, *seed, *budget, out.as_deref())?;
            Ok(Outcome { stdout, code })
        }
        Command::Relation { delta, target, basis, sigma, curve, depth, verify_depth, seed, unicode } => done(cmd_relation(
            &cfg,
            *delta,
            target.as_deref(),
            basis.as_deref(),
            sigma.as_deref(),
            curve,
            *depth,
            *verify_depth,
            *seed,
            *unicode,
        )?),
        Command::Selftest => {
            let (stdout, code) = cmd_selftest(&cfg)?;
            Ok(Outcome { stdout, code })
        }
    }
}

/// Parses arguments and runs; returns stdout, stderr and the exit code.
pub fn run_args<I, T>(args: I) -> (String, String, i32)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            return if e.use_stderr() { (String::new(), e.to_string(), code) } else { (e.to_string(), String::new(), code) };
        }
    };
    match run(&cli) {
        Ok(o) => (o.stdout, String::new(), o.code),
        Err(e) => (String::new(), format!("error: {e}\n"), exit_code(&e)),
    }
}

pub fn main() -> i32 {
    let (out, err, code) = run_args(std::env::args_os());
    print!("{out}");
    eprint!("{err}");
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(s: &str) -> Result<String> {
        eval_program(&parse_program(s)?)
    }

    #[test]
    fn ops_examples() {
        assert_eq!(ops("S D[i] D[j] (f^x2)").unwrap(), "2*(f*f[i,j] - f[i]*f[j])");
        assert_eq!(ops("S H[3,i] (f^x3)").unwrap(), "0");
        assert_eq!(ops("S D[1] (f, g)").unwrap(), "-(f*g[1] - f[1]*g)");
        assert_eq!(ops("S D[i] D[j] (exp(h)^x2)").unwrap(), "0");
        assert_eq!(ops("D[i] (f, g)").unwrap(), "f[i]⊗g − f⊗g[i]");
    }

    #[test]
    fn ops_errors_carry_positions() {
        for (src, pos) in [("S D[i (f^x2)", 6), ("S H[3,i] (f^x3", 14), ("S H[3,i] D[j] (f^x3)", 14)] {
            match parse_program(src) {
                Err(Error::Parse { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn rfun_outputs() {
        let (out, _, code) = run_args(["kleinian", "rfun", "-m", "3", "-i", "1,1,1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("R3[1,1,1] = p[1,1,1]\n"), "{out}");
        let (out, _, _) = run_args(["kleinian", "rfun", "-m", "3", "-i", "1,2"]);
        assert!(out.contains("= 0\n") && out.contains("does not divide"), "{out}");
        let (out, _, _) = run_args(["kleinian", "rfun", "-m", "2", "-i", "i,j,k,l"]);
        assert!(out.contains("terms: 4"), "{out}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(["kleinian", "ops", "S", "D[i", "(f^x2)"]).2, EXIT_ERROR);
        assert_eq!(run_args(["kleinian", "frobnicate"]).2, EXIT_USAGE);
        assert_eq!(exit_code(&Error::Budget(1)), EXIT_BUDGET);
        assert_eq!(exit_code(&Error::DepthInsufficient { have: 1, need: 2 }), EXIT_DEPTH);
        assert_eq!(exit_code(&Error::Underdetermined { level: 0, nullity: 2 }), EXIT_UNDERDETERMINED);
        let (_, err, code) = run_args(["kleinian", "relation", "--delta", "--sigma", "/nonexistent/s25.sig"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("kleinian sigma --curve 2,5"), "{err}");
    }
}
