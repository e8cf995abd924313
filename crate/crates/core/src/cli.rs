//! Command implementations behind the `cpgcl` binary. Each command returns
//! a [`Report`] that renders as text, TSV or JSON.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::Signed;
use serde_json::{json, Value as Json};

use crate::check::{self, Property};
use crate::expectation::Expectation;
use crate::operational::{self, Rmdp};
use crate::solver::{self, DEFAULT_BUDGET};
use crate::syntax::{self, Program, Stmt};
use crate::transform;
use crate::transformer;
use crate::{corpus, format_decimal, parse_rational, AnalysisValue, Error, Rational, Result, State};

/// Environment variable naming a directory that replaces the built-in corpus.
pub const EXAMPLES_ENV: &str = "CPGCL_EXAMPLES";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Tsv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "tsv" => Ok(Format::Tsv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Usage(format!("unknown format `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Symbolic first, operational refinement when loops leave a gap.
    #[default]
    Auto,
    Denotational,
    Operational,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Engine::Auto),
            "denotational" => Ok(Engine::Denotational),
            "operational" => Ok(Engine::Operational),
            _ => Err(Error::Usage(format!("unknown engine `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Hoist,
    Deobserve,
    Deloop,
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hoist" => Ok(TransformKind::Hoist),
            "deobserve" => Ok(TransformKind::Deobserve),
            "deloop" => Ok(TransformKind::Deloop),
            _ => Err(Error::Usage(format!("unknown transformation `{s}`"))),
        }
    }
}

/// `name=values` for a parameter or an initial-state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub values: Vec<Rational>,
}

/// Parses `v`, `v1,v2,...`, or an integer range `lo..hi` (inclusive).
/// The empty string is the empty grid.
pub fn parse_values(text: &str) -> Result<Vec<Rational>> {
    let bad = || Error::Usage(format!("cannot read `{text}` as values"));
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: BigInt = lo.trim().parse().map_err(|_| bad())?;
        let hi: BigInt = hi.trim().parse().map_err(|_| bad())?;
        let mut out = Vec::new();
        let mut v = lo;
        while v <= hi {
            out.push(Rational::from_integer(v.clone()));
            v += 1;
        }
        return Ok(out);
    }
    text.split(',').map(|v| parse_rational(v).ok_or_else(bad)).collect()
}

pub fn parse_binding(text: &str) -> Result<Binding> {
    let (name, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("expected name=value, got `{text}`")))?;
    Ok(Binding {
        name: name.trim().to_string(),
        values: parse_values(values)?,
    })
}

/// Reads `1e-6` style tolerances as well as plain rationals.
pub fn parse_tolerance(text: &str) -> Result<Rational> {
    let bad = || Error::Usage(format!("cannot read tolerance `{text}`"));
    let t = text.trim().to_ascii_lowercase();
    let v = match t.split_once('e') {
        Some((m, e)) => {
            let m = parse_rational(m).ok_or_else(bad)?;
            let e: i32 = e.parse().map_err(|_| bad())?;
            let ten = Rational::from_integer(10.into());
            m * num_traits::pow::Pow::pow(&ten, e)
        }
        None => parse_rational(&t).ok_or_else(bad)?,
    };
    if v.is_positive() {
        Ok(v)
    } else {
        Err(Error::Usage("tolerance must be positive".into()))
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Path or corpus name of the program or explicit model.
    pub program: String,
    /// Inline source text; takes precedence over `program`.
    pub source: Option<String>,
    pub post: String,
    pub bindings: Vec<Binding>,
    pub unroll: usize,
    pub max_states: usize,
    pub post_bound: Option<Rational>,
    pub tol: Rational,
    pub format: Format,
    pub engine: Engine,
    /// Four normalisations instead of one value.
    pub table: bool,
    /// Credit divergence (cwlp) instead of cwp.
    pub liberal: bool,
    /// Root state for explicit models.
    pub root: Option<usize>,
    pub budget: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            program: String::new(),
            source: None,
            post: "1".into(),
            bindings: Vec::new(),
            unroll: 20,
            max_states: 100_000,
            post_bound: None,
            tol: Rational::new(1.into(), 1_000_000.into()),
            format: Format::Text,
            engine: Engine::Auto,
            table: false,
            liberal: false,
            root: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(usize),
    Rat(Rational),
    Value(AnalysisValue),
}

impl Cell {
    fn plain(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(n) => n.to_string(),
            Cell::Rat(r) => crate::numeric::format_rational(r),
            Cell::Value(v) => v.to_string(),
        }
    }

    fn json(&self) -> Json {
        match self {
            Cell::Text(s) => json!(s),
            Cell::Int(n) => json!(n),
            Cell::Rat(r) => json!(crate::numeric::format_rational(r)),
            Cell::Value(v) => serde_json::to_value(v).expect("serialisable"),
        }
    }
}

/// Tabular command output, plus an optional free-form text rendering and
/// diagnostics for the error stream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Replaces the aligned table in text format.
    pub text: Option<String>,
    pub notes: Vec<String>,
}

impl Report {
    fn table(columns: &[&str]) -> Self {
        Report {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Report::default()
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => match &self.text {
                Some(t) => t.clone(),
                None => self.aligned(),
            },
            Format::Tsv => {
                let mut out = self.columns.join("\t");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::plain).collect();
                    out.push_str(&cells.join("\t"));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let rows: Vec<Json> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, Json> = self
                            .columns
                            .iter()
                            .cloned()
                            .zip(row.iter().map(Cell::json))
                            .collect();
                        Json::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&json!({
                    "rows": rows,
                    "notes": self.notes,
                }))
                .expect("serialisable");
                s.push('\n');
                s
            }
        }
    }

    fn aligned(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::plain).collect())
            .collect();
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([self.columns[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |row: &[String]| {
            let padded: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.columns);
        for r in &cells {
            out.push_str(&line(r));
        }
        out
    }
}

/// Source text and display name of a program or model.
///
/// A path that does not exist is looked up by file stem in the directory
/// named by `CPGCL_EXAMPLES`, then in the built-in corpus.
pub fn load_source(path: &str) -> Result<(String, String)> {
    let p = Path::new(path);
    if p.is_file() {
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Usage(format!("cannot read {path}: {e}")))?;
        return Ok((path.to_string(), text));
    }
    let stem = p
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::Usage(format!("no such file: {path}")))?;
    if let Ok(dir) = std::env::var(EXAMPLES_ENV) {
        for ext in ["cpgcl", "rmdp"] {
            let candidate = Path::new(&dir).join(format!("{stem}.{ext}"));
            if candidate.is_file() {
                let text = std::fs::read_to_string(&candidate)
                    .map_err(|e| Error::Usage(format!("cannot read {}: {e}", candidate.display())))?;
                return Ok((candidate.display().to_string(), text));
            }
        }
        return Err(Error::Usage(format!("no such file: {path} (also not in {dir})")));
    }
    corpus::program(stem)
        .or_else(|| corpus::model(stem))
        .map(|t| (path.to_string(), t.to_string()))
        .ok_or_else(|| Error::Usage(format!("no such file or example: {path}")))
}

fn is_explicit(text: &str) -> bool {
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("//"))
        .is_some_and(|l| l.starts_with("states "))
}

fn located(name: &str, e: Error) -> Error {
    match e {
        Error::Syntax { pos, message } => Error::Usage(format!("{name}:{pos}: {message}")),
        Error::Format { line, message } => Error::Usage(format!("{name}:{line}: {message}")),
        other => other,
    }
}

fn source(cfg: &RunConfig) -> Result<(String, String)> {
    match &cfg.source {
        Some(text) => Ok(("<input>".into(), text.clone())),
        None => load_source(&cfg.program),
    }
}

fn load_program(cfg: &RunConfig) -> Result<Program> {
    let (name, text) = source(cfg)?;
    if is_explicit(&text) {
        return Err(Error::Usage(format!("{name} is an explicit model, not a program")));
    }
    syntax::parse(&text).map_err(|e| located(&name, e))
}

fn load_model(cfg: &RunConfig) -> Result<Option<Rmdp>> {
    let (name, text) = source(cfg)?;
    if !is_explicit(&text) {
        return Ok(None);
    }
    let m = operational::load_explicit(&text).map_err(|e| located(&name, e))?;
    Ok(Some(match cfg.root {
        Some(r) if r >= m.len() => {
            return Err(Error::Usage(format!("root {r} is not a state of {name}")))
        }
        Some(r) => m.rooted_at(r),
        None => m,
    }))
}

/// One fully bound run: instantiated program and initial state.
#[derive(Debug, Clone)]
struct Instance {
    program: Program,
    state: State,
    /// Bound names and values, in binding order.
    values: Vec<(String, Rational)>,
}

fn instances(
    cfg: &RunConfig,
    p: &Program,
    f: &Expectation,
    allow_grid: bool,
) -> Result<Vec<Instance>> {
    let mut vars: Vec<String> = p.declared_vars.clone();
    for v in f.vars() {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let mut seen = BTreeSet::new();
    for b in &cfg.bindings {
        if !seen.insert(b.name.clone()) {
            return Err(Error::Usage(format!("`{}` is bound more than once", b.name)));
        }
        if !p.params.contains(&b.name) && !vars.contains(&b.name) {
            return Err(Error::Usage(format!(
                "`{}` is neither a parameter nor a variable of the program",
                b.name
            )));
        }
        if vars.contains(&b.name) && b.values.iter().any(|v| !v.is_integer()) {
            return Err(Error::Usage(format!("variable `{}` needs integer values", b.name)));
        }
        if !allow_grid && b.values.len() != 1 {
            return Err(Error::Usage(format!(
                "`{}` needs exactly one value here; use sweep for grids",
                b.name
            )));
        }
    }
    if let Some(q) = p.params.iter().find(|q| !seen.contains(*q)) {
        return Err(Error::UninstantiatedParameter(q.clone()));
    }
    let mut combos: Vec<Vec<(String, Rational)>> = vec![Vec::new()];
    for b in &cfg.bindings {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                b.values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((b.name.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|values| {
            let params = values
                .iter()
                .filter(|(n, _)| p.params.contains(n))
                .cloned()
                .collect();
            let program = p.instantiate(&params)?;
            let mut state = State::zeros(&vars);
            for (n, v) in &values {
                if vars.contains(n) {
                    state.set(n, v.to_integer());
                }
            }
            Ok(Instance {
                program,
                state,
                values,
            })
        })
        .collect()
}

fn single(cfg: &RunConfig, p: &Program, f: &Expectation) -> Result<Instance> {
    Ok(instances(cfg, p, f, false)?.remove(0))
}

fn post(cfg: &RunConfig) -> Result<Expectation> {
    syntax::parse_expectation(&cfg.post).map_err(|e| located("--post", e))
}

fn post_bound(cfg: &RunConfig, f: &Expectation) -> Option<Rational> {
    cfg.post_bound.clone().or_else(|| f.upper_bound())
}

/// One row of a bounds computation.
#[derive(Debug, Clone)]
struct Step {
    states: usize,
    frontier: usize,
    value: AnalysisValue,
}

/// Explores with doubling state budgets until the enclosure is narrower
/// than the tolerance. A model that closes yields a single exact step.
fn explore(inst: &Instance, f: &Expectation, cfg: &RunConfig, liberal: bool) -> Result<Vec<Step>> {
    let bound = post_bound(cfg, f);
    let mut steps = Vec::new();
    let mut size = 16usize.min(cfg.max_states.max(1));
    loop {
        let m = operational::build(&inst.program, &inst.state, f, size)?;
        let frontier = m.frontier().len();
        if frontier == 0 {
            let value = solver::conditional_expected_reward(&m, liberal)?;
            return Ok(vec![Step {
                states: m.len(),
                frontier,
                value,
            }]);
        }
        if liberal {
            return Err(Error::Usage(
                "liberal values of infinite models are not supported; drop --liberal".into(),
            ));
        }
        let bound = bound.clone().ok_or_else(|| {
            Error::Usage("the model is infinite; supply --post-bound".into())
        })?;
        let value = solver::bounded_conditional(&m, &bound)?;
        let narrow = value.width().is_none_or(|w| w < cfg.tol);
        steps.push(Step {
            states: m.len(),
            frontier,
            value,
        });
        if narrow || size >= cfg.max_states {
            return Ok(steps);
        }
        size = (size * 2).min(cfg.max_states);
    }
}

fn narrower(a: &AnalysisValue, b: &AnalysisValue) -> bool {
    matches!((a.width(), b.width()), (Some(x), Some(y)) if x < y)
}

/// The conditional value of a fully probabilistic instance.
fn conditional(inst: &Instance, f: &Expectation, cfg: &RunConfig) -> Result<AnalysisValue> {
    let s = &inst.program.body;
    let denotational = || -> Result<AnalysisValue> {
        if cfg.liberal {
            Ok(transformer::quotient_table(s, f, &inst.state, cfg.unroll)?[1].clone())
        } else {
            transformer::cwp_with_bound(s, f, &inst.state, cfg.unroll, post_bound(cfg, f).as_ref())
        }
    };
    let operational = || -> Result<AnalysisValue> {
        let steps = explore(inst, f, cfg, cfg.liberal)?;
        Ok(steps.last().expect("at least one step").value.clone())
    };
    match cfg.engine {
        Engine::Denotational => denotational(),
        Engine::Operational => operational(),
        Engine::Auto => match denotational() {
            Ok(v @ (AnalysisValue::Exact(_) | AnalysisValue::Undefined)) => Ok(v),
            Ok(v) => match operational() {
                Ok(w) if narrower(&w, &v) => Ok(w),
                _ => Ok(v),
            },
            Err(Error::NonConvergent(_)) => operational(),
            Err(e) => Err(e),
        },
    }
}

fn explain(v: &AnalysisValue) -> String {
    match v {
        AnalysisValue::Undefined => {
            "Undefined (0/0: runs satisfying every observation have probability 0)".into()
        }
        other => other.render(),
    }
}

fn scheduler_name(a: &solver::SchedulerAssignment) -> String {
    if a.0.is_empty() {
        return "-".into();
    }
    a.0.iter()
        .map(|(s, act)| format!("s{s}={act}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn scheduler_report(m: &Rmdp, budget: usize) -> Result<Report> {
    let values = solver::scheduler_values(m, budget)?;
    let (min, best) = solver::min_conditional(m, budget)?;
    let mut r = Report::table(&["scheduler", "value"]);
    for (a, v) in &values {
        r.rows.push(vec![Cell::Text(scheduler_name(a)), Cell::Value(v.clone())]);
    }
    r.rows.push(vec![
        Cell::Text(format!("min ({})", scheduler_name(&best))),
        Cell::Value(min.clone()),
    ]);
    let mut text = r.aligned();
    text.push_str(&format!("minimum: {}\n", explain(&min)));
    r.text = Some(text);
    Ok(r)
}

fn value_report(v: AnalysisValue) -> Report {
    let mut r = Report::table(&["value"]);
    r.text = Some(explain(&v) + "\n");
    r.rows.push(vec![Cell::Value(v)]);
    r
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Report> {
    if let Some(m) = load_model(cfg)? {
        if m.is_fully_probabilistic() {
            return Ok(value_report(solver::conditional_expected_reward(&m, cfg.liberal)?));
        }
        return scheduler_report(&m, cfg.budget);
    }
    let p = load_program(cfg)?;
    let f = post(cfg)?;
    let inst = single(cfg, &p, &f)?;
    if !inst.program.body.is_fully_probabilistic() {
        let m = operational::build(&inst.program, &inst.state, &f, cfg.max_states)?;
        return scheduler_report(&m, cfg.budget);
    }
    if cfg.table {
        let t = transformer::quotient_table(&inst.program.body, &f, &inst.state, cfg.unroll)?;
        let mut r = Report::table(&["wp/wlp(1)", "wlp/wlp(1)", "wp/wp(1)", "wlp/wp(1)"]);
        r.rows.push(t.into_iter().map(Cell::Value).collect());
        return Ok(r);
    }
    Ok(value_report(conditional(&inst, &f, cfg)?))
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Report> {
    let p = load_program(cfg)?;
    let f = post(cfg)?;
    let inst = single(cfg, &p, &f)?;
    let steps = explore(&inst, &f, cfg, false)?;
    let mut r = Report::table(&["states", "frontier", "lower", "upper", "width"]);
    for s in &steps {
        let (lo, hi) = match &s.value {
            AnalysisValue::Exact(v) => (Cell::Rat(v.clone()), Cell::Rat(v.clone())),
            AnalysisValue::Interval { lo, hi } => (Cell::Rat(lo.clone()), Cell::Rat(hi.clone())),
            AnalysisValue::Undefined => (Cell::Text("Undefined".into()), Cell::Text("Undefined".into())),
        };
        let width = match s.value.width() {
            Some(w) => Cell::Text(format_decimal(&w)),
            None => Cell::Text("-".into()),
        };
        r.rows.push(vec![Cell::Int(s.states), Cell::Int(s.frontier), lo, hi, width]);
    }
    let last = steps.last().expect("at least one step");
    let mut text = String::new();
    for s in &steps {
        text.push_str(&format!(
            "{:>8} states  {:>6} frontier  {}\n",
            s.states,
            s.frontier,
            s.value.render()
        ));
    }
    r.text = Some(text);
    if last.value.width().is_some_and(|w| w >= cfg.tol) {
        r.notes.push(format!(
            "tolerance not reached: {} frontier states remain at --max-states {}",
            last.frontier, cfg.max_states
        ));
    }
    Ok(r)
}

/// Replaces every `while` on the top-level sequence by its observe form.
fn deloop(s: &Stmt, found: &mut bool) -> Result<Stmt> {
    match s {
        Stmt::Seq(a, b) => Ok(Stmt::seq(deloop(a, found)?, deloop(b, found)?)),
        Stmt::While(..) => {
            *found = true;
            transform::loop_to_observe(s)
        }
        other => Ok(other.clone()),
    }
}

fn revalidate(p: &Program) -> Result<String> {
    let text = syntax::pretty_print_indented(p);
    let back = syntax::parse(&text)
        .map_err(|e| Error::Invariant(format!("transformed program does not reparse: {e}")))?;
    syntax::validate_generated(&back)?;
    Ok(text)
}

pub fn cmd_transform(cfg: &RunConfig, kind: TransformKind, simplify: bool) -> Result<Report> {
    let p = load_program(cfg)?;
    let f = post(cfg)?;
    let inst = single(cfg, &p, &f)?;
    let mut h = None;
    let out = match kind {
        TransformKind::Hoist => {
            let r = transform::hoist(&inst.program.body, &f, transform::DEFAULT_LOOP_ITERS)?;
            h = Some(r.h);
            Program::from_stmt(r.program)
        }
        TransformKind::Deobserve => transform::observe_to_loop(&inst.program),
        TransformKind::Deloop => {
            let mut found = false;
            let body = deloop(&inst.program.body, &mut found)?;
            if !found {
                return Err(Error::Usage("no while loop at the top level".into()));
            }
            Program::from_stmt(body)
        }
    };
    let out = if simplify {
        Program::from_stmt(transform::remove_dead_branches(&out.body))
    } else {
        out
    };
    let text = revalidate(&out)?;
    let mut r = Report::table(&["program", "h"]);
    let h_text = h.as_ref().map(|h| h.to_string()).unwrap_or_default();
    r.rows.push(vec![Cell::Text(text.trim_end().to_string()), Cell::Text(h_text.clone())]);
    let mut shown = text;
    if !shown.ends_with('\n') {
        shown.push('\n');
    }
    if h.is_some() {
        shown.push_str(&format!("// h = {h_text}\n"));
    }
    r.text = Some(shown);
    Ok(r)
}

pub fn cmd_model(cfg: &RunConfig, dot: bool) -> Result<Report> {
    let m = match load_model(cfg)? {
        Some(m) => m,
        None => {
            let p = load_program(cfg)?;
            let f = post(cfg)?;
            let inst = single(cfg, &p, &f)?;
            operational::build(&inst.program, &inst.state, &f, cfg.max_states)?
        }
    };
    let text = if dot {
        operational::export_dot(&m)
    } else {
        operational::save_explicit(&m)
    };
    let mut r = Report::table(&["states", "transitions", "frontier", "model"]);
    r.rows.push(vec![
        Cell::Int(m.len()),
        Cell::Int(m.transition_count()),
        Cell::Int(m.frontier().len()),
        Cell::Text(text.clone()),
    ]);
    r.text = Some(text);
    r.notes.push(format!(
        "{} states, {} transitions",
        m.len(),
        m.transition_count()
    ));
    let frontier = m.frontier().len();
    if frontier > 0 {
        r.notes.push(format!(
            "partial model: {frontier} unexpanded states at --max-states {}",
            cfg.max_states
        ));
    }
    Ok(r)
}

pub fn cmd_check(properties: &[Property], n: usize, seed: u64) -> Report {
    let mut r = Report::table(&["property", "result", "checked", "skipped", "detail"]);
    let mut text = String::new();
    for &p in properties {
        let rep = check::run(p, n, seed);
        text.push_str(&format!("{rep}\n"));
        r.rows.push(vec![
            Cell::Text(p.name().into()),
            Cell::Text(if rep.passed() { "pass" } else { "fail" }.into()),
            Cell::Int(rep.checked),
            Cell::Int(rep.skipped),
            Cell::Text(
                rep.failure
                    .map(|c| format!("case {}: {} [{}] {}", c.case, c.program, c.state, c.detail))
                    .unwrap_or_default(),
            ),
        ]);
    }
    r.text = Some(text);
    r
}

fn sweep_row(inst: &Instance, f: &Expectation, cfg: &RunConfig) -> Result<Vec<Cell>> {
    let v = if inst.program.body.is_fully_probabilistic() {
        conditional(inst, f, cfg)?
    } else {
        let m = operational::build(&inst.program, &inst.state, f, cfg.max_states)?;
        solver::min_conditional(&m, cfg.budget)?.0
    };
    let decimal = match &v {
        AnalysisValue::Exact(r) => format_decimal(r),
        AnalysisValue::Interval { lo, hi } => format_decimal(&((lo + hi) / Rational::from_integer(2.into()))),
        AnalysisValue::Undefined => "-".into(),
    };
    let mut row: Vec<Cell> = inst.values.iter().map(|(_, v)| Cell::Rat(v.clone())).collect();
    row.push(Cell::Value(v));
    row.push(Cell::Text(decimal));
    Ok(row)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Report> {
    let p = load_program(cfg)?;
    let f = post(cfg)?;
    let all = instances(cfg, &p, &f, true)?;
    let mut columns: Vec<&str> = cfg.bindings.iter().map(|b| b.name.as_str()).collect();
    columns.extend(["value", "decimal"]);
    let mut r = Report::table(&columns);
    #[cfg(feature = "parallel")]
    let rows: Vec<Result<Vec<Cell>>> = {
        use rayon::prelude::*;
        all.par_iter().map(|i| sweep_row(i, &f, cfg)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Result<Vec<Cell>>> = all.iter().map(|i| sweep_row(i, &f, cfg)).collect();
    for row in rows {
        r.rows.push(row?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(program: &str, post: &str) -> RunConfig {
        RunConfig {
            program: program.into(),
            post: post.into(),
            ..RunConfig::default()
        }
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn values_and_bindings() {
        assert_eq!(parse_values("0.6,0.8").unwrap(), vec![r(3, 5), r(4, 5)]);
        assert_eq!(parse_values("1..3").unwrap().len(), 3);
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("a").is_err());
        let b = parse_binding("q=1/2").unwrap();
        assert_eq!(b.values, vec![r(1, 2)]);
        assert_eq!(parse_tolerance("1e-6").unwrap(), r(1, 1_000_000));
        assert!(parse_tolerance("0").is_err());
    }

    #[test]
    fn analyze_corpus() {
        let out = cmd_analyze(&cfg("examples/example2.cpgcl", "10 + x")).unwrap();
        assert_eq!(out.render(Format::Text), "135/13 (≈10.3846)\n");
        let mut c = cfg("abort_coin", "[y = 0]");
        c.table = true;
        let t = cmd_analyze(&c).unwrap().render(Format::Tsv);
        assert_eq!(t.lines().nth(1).unwrap(), "2/7\t6/7\t2/3\t2");
        let out = cmd_analyze(&cfg("p_andiv", "x")).unwrap().render(Format::Text);
        assert!(out.starts_with("Undefined"));
    }

    #[test]
    fn bindings_are_checked() {
        let c = cfg("example1", "x");
        assert!(matches!(cmd_analyze(&c), Err(Error::UninstantiatedParameter(_))));
        let mut c = cfg("example1", "x");
        c.bindings = vec![parse_binding("q=1/2").unwrap(), parse_binding("q=1/3").unwrap()];
        assert!(matches!(cmd_analyze(&c), Err(Error::Usage(_))));
        c.bindings = vec![parse_binding("nope=1").unwrap()];
        assert!(matches!(cmd_analyze(&c), Err(Error::Usage(_))));
        c.bindings = vec![parse_binding("q=1/2").unwrap()];
        let out = cmd_analyze(&c).unwrap().render(Format::Text);
        assert!(out.contains("minimum: Undefined"), "{out}");
    }

    #[test]
    fn sweep_in_grid_order() {
        let mut c = cfg("two_coins", "[x = 0]");
        c.bindings = vec![
            parse_binding("p=1/2,1/3").unwrap(),
            parse_binding("q=1/2,1/4").unwrap(),
        ];
        let out = cmd_sweep(&c).unwrap();
        let values: Vec<String> = out.rows.iter().map(|r| r[2].plain()).collect();
        assert_eq!(values, vec!["1/2", "1/4", "1/3", "1/7"]);
        c.bindings = vec![parse_binding("p=").unwrap(), parse_binding("q=1/2").unwrap()];
        assert!(cmd_sweep(&c).unwrap().rows.is_empty());
    }

    #[test]
    fn json_rows() {
        let out = cmd_analyze(&cfg("p_obs1", "x")).unwrap().render(Format::Json);
        let j: Json = serde_json::from_str(&out).unwrap();
        assert_eq!(j["rows"][0]["value"]["kind"], "exact");
        assert_eq!(j["rows"][0]["value"]["value"], "1");
    }
}
