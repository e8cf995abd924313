//! Acceptance criteria. Prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use cpgcl::check::{self, Property};
use cpgcl::expectation::Expectation;
use cpgcl::operational::{self, Action, Rmdp};
use cpgcl::solver;
use cpgcl::syntax::{self, Program};
use cpgcl::transform;
use cpgcl::transformer;
use cpgcl::{corpus, parse_rational, AnalysisValue, Rational, State};
use num_traits::Signed;

const DEPTH: usize = 20;
const MAX_STATES: usize = 100_000;
/// Criterion 1 runtime limit.
const FAST: Duration = Duration::from_millis(100);
/// Criterion 9: distance to the closed form and per-instance time limit.
const CROWDS_TOL: (i64, i64) = (1, 1_000_000);
const CROWDS_TIME: Duration = Duration::from_secs(5);
/// Criterion 10: random cases per suite and total time limit.
const SUITE_N: usize = 300;
const UNROLL_N: usize = 50;
const SUITE_TIME: Duration = Duration::from_secs(60);
const SEED: u64 = 2024;

type Outcome = Result<String, String>;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn q(s: &str) -> Rational {
    parse_rational(s).unwrap()
}

fn exact(n: i64, d: i64) -> AnalysisValue {
    AnalysisValue::Exact(r(n, d))
}

fn post(s: &str) -> Expectation {
    syntax::parse_expectation(s).unwrap()
}

fn program(name: &str, params: &[(&str, Rational)]) -> Program {
    let p = syntax::parse(corpus::program(name).unwrap()).unwrap();
    let b: BTreeMap<String, Rational> =
        params.iter().map(|(n, v)| (n.to_string(), v.clone())).collect();
    p.instantiate(&b).unwrap()
}

fn state(p: &Program, f: &Expectation, pairs: &[(&str, i64)]) -> State {
    let mut vars = p.declared_vars.clone();
    vars.extend(f.vars());
    let mut s = State::zeros(&vars);
    for (n, v) in pairs {
        s.set(n, (*v).into());
    }
    s
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

fn denotational(p: &Program, f: &Expectation, s: &State) -> AnalysisValue {
    transformer::cwp(&p.body, f, s, DEPTH).unwrap()
}

fn operational(p: &Program, f: &Expectation, s: &State) -> AnalysisValue {
    let m = operational::build(p, s, f, MAX_STATES).unwrap();
    solver::conditional_expected_reward(&m, false).unwrap()
}

fn c1() -> Outcome {
    let start = Instant::now();
    let f = post("x");
    for name in ["p_obs1", "p_obs2"] {
        let p = program(name, &[]);
        let s = state(&p, &f, &[]);
        expect(name, denotational(&p, &f, &s), exact(1, 1))?;
        expect(name, operational(&p, &f, &s), exact(1, 1))?;
    }
    let t = start.elapsed();
    if t > FAST {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("both engines give 1 in {t:?}"))
}

fn c2() -> Outcome {
    let p = program("example2", &[]);
    let f = post("10 + x");
    let s = state(&p, &f, &[]);
    let (a, b) = transformer::cwp_pair(&p.body, &f, &Expectation::one(), DEPTH).unwrap();
    let pair = (a.value().eval_finite(&s).unwrap(), b.value().eval_finite(&s).unwrap());
    expect("cwp_pair", pair, (r(27, 4), r(13, 20)))?;
    expect("cwp(10 + x)", denotational(&p, &f, &s), exact(135, 13))?;
    Ok("(27/4, 13/20) and 135/13".into())
}

fn c3() -> Outcome {
    let p = program("abort_coin", &[]);
    let f = post("[y = 0]");
    let s = state(&p, &f, &[]);
    let t = transformer::quotient_table(&p.body, &f, &s, DEPTH).unwrap();
    expect("table", t, [exact(2, 7), exact(6, 7), exact(2, 3), exact(2, 1)])?;
    Ok("(2/7, 6/7, 2/3, 2)".into())
}

fn c4() -> Outcome {
    let f = post("x");
    let p = program("p_div", &[]);
    let s = state(&p, &f, &[]);
    expect("p_div", denotational(&p, &f, &s), exact(0, 1))?;
    expect("p_div operational", operational(&p, &f, &s), exact(0, 1))?;
    let p = program("p_andiv", &[]);
    let s = state(&p, &f, &[]);
    expect("p_andiv", denotational(&p, &f, &s), AnalysisValue::Undefined)?;
    expect("p_andiv operational", operational(&p, &f, &s), AnalysisValue::Undefined)?;
    Ok("0 and Undefined".into())
}

fn by_action(values: &[(solver::SchedulerAssignment, AnalysisValue)], a: Action) -> AnalysisValue {
    values
        .iter()
        .find(|(s, _)| s.0.values().all(|x| *x == a))
        .map(|(_, v)| v.clone())
        .unwrap()
}

fn c5() -> Outcome {
    let p = program("example1", &[("q", r(1, 2))]);
    let f = post("x");
    let m = operational::build(&p, &state(&p, &f, &[]), &f, MAX_STATES).unwrap();
    let values = solver::scheduler_values(&m, solver::DEFAULT_BUDGET).unwrap();
    expect("left", by_action(&values, Action::Left), exact(5, 1))?;
    expect("right", by_action(&values, Action::Right), AnalysisValue::Undefined)?;
    let (min, _) = solver::min_conditional(&m, solver::DEFAULT_BUDGET).unwrap();
    expect("min", min, AnalysisValue::Undefined)?;
    Ok("left 5, right Undefined, minimum Undefined".into())
}

fn schedulers(m: &Rmdp) -> Result<(Vec<AnalysisValue>, AnalysisValue), String> {
    let values = solver::scheduler_values(m, solver::DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let (min, _) = solver::min_conditional(m, solver::DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    Ok((values.into_iter().map(|(_, v)| v).collect(), min))
}

fn c6() -> Outcome {
    let m = operational::load_explicit(corpus::model("context_min").unwrap()).unwrap();
    let (all, min) = schedulers(&m)?;
    expect("root", (all, min), (vec![exact(3, 2), exact(7, 5)], exact(7, 5)))?;
    let sub = m.rooted_at(2);
    let (all, min) = schedulers(&sub)?;
    expect("sub-model", (all, min), (vec![exact(2, 1), exact(11, 5)], exact(2, 1)))?;
    Ok("3/2, 7/5 -> 7/5; sub-model 2, 11/5 -> 2".into())
}

fn c7() -> Outcome {
    let p = program("example2", &[]);
    let f = post("10 + x");
    let h = transform::hoist(&p.body, &Expectation::one(), transform::DEFAULT_LOOP_ITERS).unwrap();
    let text = syntax::pretty_print(&Program::from_stmt(h.program.clone()));
    if !text.contains("[8/13]") {
        return Err(format!("no 8/13 in {text}"));
    }
    let s = state(&p, &f, &[]);
    expect("h", h.h.eval_finite(&s).unwrap(), r(13, 20))?;
    let hoisted = Program::from_stmt(h.program);
    let m = operational::build(&hoisted, &s, &f, MAX_STATES).unwrap();
    expect("wp of hoisted", solver::expected_reward(&m).unwrap(), r(135, 13))?;
    Ok("8/13, h = 13/20, hoisted wp = 135/13".into())
}

fn c8() -> Outcome {
    let f = post("[x = 0]");
    for (pv, qv, want) in [((1, 2), (1, 2), (1, 2)), ((1, 3), (1, 4), (1, 7))] {
        let (p, qq) = (r(pv.0, pv.1), r(qv.0, qv.1));
        let one = Rational::from_integer(1.into());
        let formula = &p * &qq / (&p * &qq + (&one - &p) * (&one - &qq));
        expect("formula", formula, r(want.0, want.1))?;
        let prog = program("two_coins", &[("p", p), ("q", qq)]);
        let s = state(&prog, &f, &[]);
        expect("cwp", denotational(&prog, &f, &s), exact(want.0, want.1))?;
    }
    Ok("1/2 and 1/7".into())
}

/// (1−c)(1−p)(1−(p(1−c))^k) / (1−p(1−c)) · 1/(1−p^k)
fn crowds_closed_form(p: &Rational, c: &Rational, k: u32) -> Rational {
    let one = Rational::from_integer(1.into());
    let a = p * (&one - c);
    let pow = |x: &Rational| num_traits::pow(x.clone(), k as usize);
    (&one - c) * (&one - p) * (&one - pow(&a)) / (&one - &a) / (&one - pow(p))
}

fn c9() -> Outcome {
    let f = post("[intercepted = 0]");
    let tol = r(CROWDS_TOL.0, CROWDS_TOL.1);
    let mut lines = Vec::new();
    for (p, c, k) in [("1/2", "1/2", 2), ("0.8", "0.1", 10), ("0.6", "0.2", 5)] {
        let start = Instant::now();
        let want = crowds_closed_form(&q(p), &q(c), k);
        let prog = program("crowds", &[("p", q(p)), ("c", q(c))]);
        let s = state(&prog, &f, &[("k", k as i64)]);
        let mut size = 16;
        let got = loop {
            let m = operational::build(&prog, &s, &f, size).unwrap();
            let v = solver::bounded_conditional(&m, &Rational::from_integer(1.into())).unwrap();
            if v.width().is_some_and(|w| w < tol) || size >= MAX_STATES {
                break v;
            }
            size *= 2;
        };
        let t = start.elapsed();
        let AnalysisValue::Interval { lo, hi } = &got else {
            return Err(format!("({p},{c},{k}): {got}"));
        };
        let mid = (lo + hi) / Rational::from_integer(2.into());
        let err = (mid - &want).abs();
        if !got.contains(&want) || err >= tol || t > CROWDS_TIME {
            return Err(format!(
                "({p},{c},{k}): {} vs {} in {t:?}",
                got.render(),
                cpgcl::format_decimal(&want)
            ));
        }
        lines.push(format!("({p},{c},{k}) {} in {t:.1?}", cpgcl::format_decimal(&want)));
    }
    Ok(lines.join("; "))
}

fn c10() -> Outcome {
    let start = Instant::now();
    let suites = [
        (Property::Correspondence, SUITE_N),
        (Property::Decoupling, SUITE_N),
        (Property::Violation, SUITE_N),
        (Property::Linearity, SUITE_N),
        (Property::Deobserve, SUITE_N),
        (Property::Unrolling, UNROLL_N),
    ];
    let mut summary = Vec::new();
    for (prop, n) in suites {
        let rep = check::run(prop, n, SEED);
        if !rep.passed() {
            return Err(rep.to_string());
        }
        summary.push(format!("{} {}/{}", prop.name(), rep.checked, n));
    }
    let t = start.elapsed();
    if t > SUITE_TIME {
        return Err(format!("suites took {t:?}"));
    }
    Ok(format!("{} in {t:.1?}", summary.join(", ")))
}

fn c11() -> Outcome {
    for (prop, n) in [(Property::Roundtrip, 1000), (Property::Explicit, 100)] {
        let rep = check::run(prop, n, SEED);
        if !rep.passed() {
            return Err(rep.to_string());
        }
    }
    Ok("1000 programs, 100 models".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("observe-only programs give 1", c1),
        ("Example 2 pair and quotient", c2),
        ("abort program quotient table", c3),
        ("divergence: 0 and Undefined", c4),
        ("Example 1 schedulers", c5),
        ("explicit model schedulers", c6),
        ("hoisting Example 2", c7),
        ("two-coin closed form", c8),
        ("Crowds bounds", c9),
        ("property suites", c10),
        ("round trips", c11),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run)
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
