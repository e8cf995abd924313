//! Executable cross-checks between the denotational and operational engines
//! and the transformations, on seeded random programs.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::Serialize;

use crate::expectation::Expectation;
use crate::gen::{GenConfig, Generator};
use crate::operational::{self, Label, Rmdp};
use crate::syntax::{self, Program, Stmt};
use crate::transform;
use crate::transformer::{self, cwp_pair, wlp, wp};
use crate::{AnalysisValue, Error, Rational, Result, State};

/// Loop unrolling depth used for loop-free programs (never reached).
const DEPTH: usize = 8;
const MAX_STATES: usize = 200_000;
const VARS: [&str; 4] = ["x", "y", "z", "w"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    /// wp and cwp agree with the operational (conditional) expected reward.
    Correspondence,
    /// The paired transformer equals `(wp, wlp)`.
    Decoupling,
    /// `wlp(P, 1) = 1 - Pr(◊↯)`.
    Violation,
    /// cwp is linear and monotone on feasible instances.
    Linearity,
    /// Observe-to-loop preserves the conditional value.
    Deobserve,
    /// Unrolled bounds move monotonically in the depth.
    Unrolling,
    /// Hoisted programs compute the conditional value without observations.
    Hoist,
    /// Printing and parsing are inverse on syntax trees.
    Roundtrip,
    /// Saving and loading explicit models are inverse.
    Explicit,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::Correspondence,
        Property::Decoupling,
        Property::Violation,
        Property::Linearity,
        Property::Deobserve,
        Property::Unrolling,
        Property::Hoist,
        Property::Roundtrip,
        Property::Explicit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Correspondence => "correspondence",
            Property::Decoupling => "decoupling",
            Property::Violation => "violation",
            Property::Linearity => "linearity",
            Property::Deobserve => "deobserve",
            Property::Unrolling => "unrolling",
            Property::Hoist => "hoist",
            Property::Roundtrip => "roundtrip",
            Property::Explicit => "explicit",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub case: usize,
    pub program: String,
    pub state: String,
    pub post: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub property: Property,
    pub seed: u64,
    /// Cases that were checked.
    pub checked: usize,
    /// Cases outside the property's hypothesis (e.g. infeasible).
    pub skipped: usize,
    pub failure: Option<Counterexample>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(
                f,
                "{}: pass ({} checked, {} skipped, seed {})",
                self.property, self.checked, self.skipped, self.seed
            ),
            Some(c) => write!(
                f,
                "{}: FAIL at case {} (seed {})\n  program: {}\n  state:   {}\n  post:    {}\n  {}",
                self.property, c.case, self.seed, c.program, c.state, c.post, c.detail
            ),
        }
    }
}

/// Outcome of one case.
enum Case {
    Pass,
    Skip,
    Fail(String),
}

fn full_state(g: &mut Generator) -> State {
    let vars: Vec<String> = VARS.iter().map(|v| v.to_string()).collect();
    g.state(&vars)
}

fn at(e: &Expectation, st: &State) -> Result<Rational> {
    e.eval_finite(st)
}

fn model(s: &Stmt, st: &State, f: &Expectation) -> Result<Rmdp> {
    let m = operational::build_stmt(s, st, f, MAX_STATES)?;
    if !m.frontier().is_empty() {
        return Err(Error::NonConvergent(format!(
            "model exceeds {MAX_STATES} states"
        )));
    }
    Ok(m)
}

fn expect_eq<T: PartialEq + fmt::Display>(what: &str, a: &T, b: &T) -> Option<String> {
    (a != b).then(|| format!("{what}: {a} vs {b}"))
}

fn feasible(p: &Stmt, st: &State) -> Result<bool> {
    Ok(at(wlp(p, &Expectation::one(), DEPTH)?.value(), st)?.is_positive())
}

fn correspondence(p: &Program, st: &State, f: &Expectation, g: &Expectation) -> Result<Case> {
    let s = &p.body;
    let m = model(s, st, f)?;
    let den_wp = at(wp(s, f, DEPTH)?.value(), st)?;
    if let Some(e) = expect_eq("wp vs ExpRew", &den_wp, &crate::solver::expected_reward(&m)?) {
        return Ok(Case::Fail(e));
    }
    let c = transformer::cwp(s, f, st, DEPTH)?;
    let op = crate::solver::conditional_expected_reward(&m, false)?;
    if let Some(e) = expect_eq("cwp vs CExpRew", &c, &op) {
        return Ok(Case::Fail(e));
    }
    let mg = model(s, st, g)?;
    let den_wlp = at(wlp(s, g, DEPTH)?.value(), st)?;
    if let Some(e) = expect_eq(
        "wlp vs LExpRew",
        &den_wlp,
        &crate::solver::liberal_expected_reward(&mg)?,
    ) {
        return Ok(Case::Fail(e));
    }
    let table = transformer::quotient_table(s, g, st, DEPTH)?;
    let op = crate::solver::conditional_expected_reward(&mg, true)?;
    Ok(match expect_eq("cwlp vs CLExpRew", &table[1], &op) {
        Some(e) => Case::Fail(e),
        None => Case::Pass,
    })
}

fn decoupling(g: &mut Generator, p: &Program, f: &Expectation, h: &Expectation) -> Result<Case> {
    let (a, b) = cwp_pair(&p.body, f, h, DEPTH)?;
    let x = wp(&p.body, f, DEPTH)?;
    let y = wlp(&p.body, h, DEPTH)?;
    for _ in 0..20 {
        let st = full_state(g);
        if let Some(e) = expect_eq("first component vs wp", &at(a.value(), &st)?, &at(x.value(), &st)?)
        {
            return Ok(Case::Fail(format!("{e} at {st}")));
        }
        if let Some(e) = expect_eq("second component vs wlp", &at(b.value(), &st)?, &at(y.value(), &st)?)
        {
            return Ok(Case::Fail(format!("{e} at {st}")));
        }
    }
    Ok(Case::Pass)
}

fn violation(p: &Program, st: &State) -> Result<Case> {
    let m = model(&p.body, st, &Expectation::one())?;
    let bad = crate::solver::reach_prob(&m, Label::Bad)?;
    let w = at(wlp(&p.body, &Expectation::one(), DEPTH)?.value(), st)?;
    Ok(match expect_eq("wlp(1) vs 1 - Pr(bad)", &w, &(Rational::one() - bad)) {
        Some(e) => Case::Fail(e),
        None => Case::Pass,
    })
}

fn linearity(
    gen: &mut Generator,
    p: &Program,
    st: &State,
    f: &Expectation,
    g: &Expectation,
) -> Result<Case> {
    let s = &p.body;
    if !feasible(s, st)? {
        return Ok(Case::Skip);
    }
    let a = Rational::new(gen.int(0..=4).into(), gen.int(1..=3).into());
    let b = Rational::new(gen.int(0..=4).into(), gen.int(1..=3).into());
    let exact = |e: &Expectation| -> Result<Rational> {
        match transformer::cwp(s, e, st, DEPTH)? {
            AnalysisValue::Exact(r) => Ok(r),
            other => Err(Error::Evaluation(format!("expected an exact value, got {other}"))),
        }
    };
    let (cf, cg) = (exact(f)?, exact(g)?);
    let combined = exact(&f.scale(&a).add(&g.scale(&b)))?;
    if let Some(e) = expect_eq("cwp(a f + b g) vs a cwp(f) + b cwp(g)", &combined, &(&a * &cf + &b * &cg)) {
        return Ok(Case::Fail(e));
    }
    // f <= f + g pointwise since g is non-negative.
    let bigger = exact(&f.add(g))?;
    if bigger < cf {
        return Ok(Case::Fail(format!("monotonicity: cwp(f + g) = {bigger} < cwp(f) = {cf}")));
    }
    Ok(Case::Pass)
}

fn with_fresh(st: &State, p: &Program) -> State {
    let mut out = st.clone();
    out.extend_zeros(&p.declared_vars);
    out
}

fn deobserve(p: &Program, st: &State, f: &Expectation) -> Result<Case> {
    if !feasible(&p.body, st)? {
        return Ok(Case::Skip);
    }
    let c = transformer::cwp(&p.body, f, st, DEPTH)?;
    let mut p_all = p.clone();
    for v in VARS {
        if !p_all.declared_vars.iter().any(|x| x == v) {
            p_all.declared_vars.push(v.to_string());
        }
    }
    let looped = transform::observe_to_loop(&p_all);
    let m = model(&looped.body, &with_fresh(st, &looped), f)?;
    let v = AnalysisValue::Exact(crate::solver::expected_reward(&m)?);
    Ok(match expect_eq("cwp(P) vs wp(P'')", &c, &v) {
        Some(e) => Case::Fail(e),
        None => Case::Pass,
    })
}

fn unrolling(p: &Program, st: &State, f: &Expectation) -> Result<Case> {
    let mut prev: Option<(Rational, Rational)> = None;
    for k in 0..=12 {
        let lo = at(wp(&p.body, f, k)?.value(), st)?;
        let hi = at(wlp(&p.body, f, k)?.value(), st)?;
        if lo > hi {
            return Ok(Case::Fail(format!("k = {k}: wp {lo} above wlp {hi}")));
        }
        if let Some((plo, phi)) = &prev {
            if lo < *plo || hi > *phi {
                return Ok(Case::Fail(format!(
                    "k = {k}: [{lo}, {hi}] not inside previous [{plo}, {phi}]"
                )));
            }
        }
        prev = Some((lo, hi));
    }
    Ok(Case::Pass)
}

fn hoist(p: &Program, st: &State, f: &Expectation, g: &Expectation) -> Result<Case> {
    let s = &p.body;
    let r = transform::hoist(s, &Expectation::one(), transform::DEFAULT_LOOP_ITERS)?;
    if r.program.has_observe() {
        return Ok(Case::Fail("hoisted program contains observe".into()));
    }
    let w1 = wlp(s, &Expectation::one(), DEPTH)?;
    if let Some(e) = expect_eq("h vs wlp(P, 1)", &at(&r.h, st)?, &at(w1.value(), st)?) {
        return Ok(Case::Fail(e));
    }
    if !feasible(s, st)? {
        return Ok(Case::Skip);
    }
    let c = transformer::cwp(s, f, st, DEPTH)?;
    let m = model(&r.program, st, f)?;
    let v = AnalysisValue::Exact(crate::solver::expected_reward(&m)?);
    if let Some(e) = expect_eq("cwp(P) vs wp(hoisted)", &c, &v) {
        return Ok(Case::Fail(e));
    }
    let liberal = transformer::quotient_table(s, g, st, DEPTH)?[1].clone();
    let mg = model(&r.program, st, g)?;
    let v = AnalysisValue::Exact(crate::solver::liberal_expected_reward(&mg)?);
    Ok(match expect_eq("cwlp(P) vs wlp(hoisted)", &liberal, &v) {
        Some(e) => Case::Fail(e),
        None => Case::Pass,
    })
}

fn roundtrip(p: &Program) -> Result<Case> {
    for text in [syntax::pretty_print(p), syntax::pretty_print_indented(p)] {
        let back = syntax::parse_unchecked(&text)?;
        if back.body != p.body {
            return Ok(Case::Fail(format!("reparsed as {}", back.body)));
        }
    }
    Ok(Case::Pass)
}

fn explicit(m: &Rmdp) -> Result<Case> {
    let text = operational::save_explicit(m);
    let back = operational::load_explicit(&text)?;
    Ok(if back == *m {
        Case::Pass
    } else {
        Case::Fail(format!("reloaded model differs:\n{}", operational::save_explicit(&back)))
    })
}

/// Runs `n` random cases of `property` from `seed`, stopping at the first
/// counterexample. Engine errors on a case count as failures.
pub fn run(property: Property, n: usize, seed: u64) -> CheckReport {
    let config = match property {
        Property::Roundtrip => GenConfig {
            nondet: true,
            loops: true,
            params: true,
            ..GenConfig::default()
        },
        Property::Explicit => GenConfig {
            nondet: true,
            ..GenConfig::default()
        },
        _ => GenConfig::default(),
    };
    let mut gen = Generator::with_config(seed, config);
    let mut report = CheckReport {
        property,
        seed,
        checked: 0,
        skipped: 0,
        failure: None,
    };
    for case in 0..n {
        let mut program = String::new();
        let mut state = String::new();
        let mut post = String::new();
        let outcome = (|| -> Result<Case> {
            if property == Property::Explicit {
                let m = gen.rmdp();
                program = operational::save_explicit(&m);
                return explicit(&m);
            }
            let p = if property == Property::Unrolling {
                gen.loopy()
            } else {
                gen.program()
            };
            program = p.body.to_string();
            if property == Property::Roundtrip {
                return roundtrip(&p);
            }
            let st = full_state(&mut gen);
            let f = if property == Property::Unrolling {
                gen.predicate()
            } else {
                gen.post()
            };
            let g = gen.predicate();
            state = st.to_string();
            post = format!("{f}  (liberal: {g})");
            match property {
                Property::Correspondence => correspondence(&p, &st, &f, &g),
                Property::Decoupling => decoupling(&mut gen, &p, &f, &g),
                Property::Violation => violation(&p, &st),
                Property::Linearity => linearity(&mut gen, &p, &st, &f, &g),
                Property::Deobserve => deobserve(&p, &st, &f),
                Property::Unrolling => unrolling(&p, &st, &f),
                Property::Hoist => hoist(&p, &st, &f, &g),
                Property::Roundtrip | Property::Explicit => unreachable!(),
            }
        })();
        let detail = match outcome {
            Ok(Case::Pass) => {
                report.checked += 1;
                continue;
            }
            Ok(Case::Skip) => {
                report.skipped += 1;
                continue;
            }
            Ok(Case::Fail(d)) => d,
            Err(e) => format!("engine error: {e}"),
        };
        report.failure = Some(Counterexample {
            case,
            program,
            state,
            post,
            detail,
        });
        break;
    }
    report
}
