//! Property tests over seeded random programs, expectations and models.

use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use cpgcl::expectation::{Expectation, Guard};
use cpgcl::gen::{GenConfig, Generator};
use cpgcl::operational::{self, Action, Label, Rmdp};
use cpgcl::solver;
use cpgcl::syntax::{self, AExp, BExp, Program, ProbExp, Stmt};
use cpgcl::transform;
use cpgcl::transformer::{self, cwp_pair, wlp, wp};
use cpgcl::{AnalysisValue, Error, Rational, State, Value};

const DEPTH: usize = 8;
const MAX_STATES: usize = 50_000;
const VARS: [&str; 4] = ["x", "y", "z", "w"];

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn vars() -> Vec<String> {
    VARS.iter().map(|v| v.to_string()).collect()
}

fn at(e: &Expectation, s: &State) -> Rational {
    e.eval_finite(s).unwrap()
}

fn closed(p: &Stmt, s: &State, f: &Expectation) -> Option<Rmdp> {
    let m = operational::build_stmt(p, s, f, MAX_STATES).unwrap();
    m.frontier().is_empty().then_some(m)
}

fn feasible(p: &Stmt, s: &State) -> bool {
    at(wlp(p, &Expectation::one(), DEPTH).unwrap().value(), s).is_positive()
}

/// Random program, state, and post-expectation from one seed.
fn instance(seed: u64) -> (Program, State, Expectation) {
    let mut g = Generator::new(seed);
    let p = g.program();
    let s = g.state(&vars());
    let f = g.post();
    (p, s, f)
}

fn eval(e: &Expectation, s: &State) -> Option<Value> {
    e.eval(s).ok()
}

proptest! {
    #![proptest_config(config())]

    // syntax

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let cfg = GenConfig { nondet: true, loops: true, params: true, ..GenConfig::default() };
        let p = Generator::with_config(seed, cfg).program();
        let back = syntax::parse_unchecked(&syntax::pretty_print(&p)).unwrap();
        prop_assert_eq!(&back.body, &p.body);
        let back = syntax::parse_unchecked(&syntax::pretty_print_indented(&p)).unwrap();
        prop_assert_eq!(back.body, p.body);
    }

    #[test]
    fn parser_is_total(text in "[a-z0-9 :=;{}()\\[\\]/+*<>!&|-]{0,40}") {
        match syntax::parse_unchecked(&text) {
            Ok(_) | Err(Error::Syntax { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e:?}"),
        }
    }

    #[test]
    fn parser_is_total_on_damaged_programs(seed in any::<u64>(), cut in 0usize..200, len in 1usize..6) {
        let text = syntax::pretty_print(&Generator::new(seed).program());
        let chars: Vec<char> = text.chars().collect();
        let cut = cut.min(chars.len());
        let end = (cut + len).min(chars.len());
        let damaged: String = chars[..cut].iter().chain(&chars[end..]).collect();
        match syntax::parse_unchecked(&damaged) {
            Ok(_) | Err(Error::Syntax { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e:?}"),
        }
    }

    #[test]
    fn stored_rationals_are_canonical(n in -50i64..50, d in 1i64..50) {
        let text = format!("{{x := 0}} [{}/{}] {{x := 1}}", n.abs() % d, d * 2);
        let p = syntax::parse(&text).unwrap();
        let Stmt::PChoice(_, ProbExp::Const(r), _) = &p.body else {
            panic!("unexpected shape")
        };
        prop_assert!(r.denom().is_positive());
        prop_assert!(num_integer::Integer::gcd(r.numer(), r.denom()).is_one());
    }

    // expectations

    #[test]
    fn substitution_is_evaluation_in_the_updated_state(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let f = g.post();
        let e = g.aexp(2);
        let s = g.state(&vars());
        let x = VARS[(seed % 4) as usize];
        let updated = s.with(x, e.eval(&s).unwrap());
        prop_assert_eq!(eval(&f.substitute(x, &e), &s), eval(&f, &updated));
    }

    #[test]
    fn operations_are_pointwise(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let (f, h) = (g.post(), g.post());
        let guard = g.bexp(1);
        let k = Rational::new(((seed % 7) as i64).into(), 3.into());
        let s = g.state(&vars());
        let (a, b) = (at(&f, &s), at(&h, &s));
        prop_assert_eq!(at(&f.simplify(), &s), a.clone());
        prop_assert_eq!(at(&f.min_with(&h), &s), a.clone().min(b.clone()));
        prop_assert_eq!(at(&f.add(&h), &s), &a + &b);
        prop_assert_eq!(at(&f.scale(&k), &s), &a * &k);
        let holds = guard.eval(&s).unwrap();
        let gm = at(&f.guard_mul(&Guard::from_bexp(&guard)), &s);
        prop_assert_eq!(gm, if holds { a } else { Rational::zero() });
    }

    #[test]
    fn evaluation_is_never_negative(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let e = Expectation::from_aexp(&g.aexp(2));
        let s = g.state(&vars());
        if let Ok(Value::Finite(v)) = e.eval(&s) {
            prop_assert!(!v.is_negative());
        }
    }

    // transformers

    #[test]
    fn paired_transformer_decouples(seed in any::<u64>()) {
        let (p, s, f) = instance(seed);
        let h = Generator::new(seed ^ 1).predicate();
        let (a, b) = cwp_pair(&p.body, &f, &h, DEPTH).unwrap();
        prop_assert_eq!(at(a.value(), &s), at(wp(&p.body, &f, DEPTH).unwrap().value(), &s));
        prop_assert_eq!(at(b.value(), &s), at(wlp(&p.body, &h, DEPTH).unwrap().value(), &s));
    }

    #[test]
    fn observe_free_programs_are_conservative(seed in any::<u64>()) {
        let cfg = GenConfig { observe: false, abort: false, ..GenConfig::default() };
        let mut g = Generator::with_config(seed, cfg);
        let p = g.program();
        let s = g.state(&vars());
        let f = g.post();
        prop_assert_eq!(at(wlp(&p.body, &Expectation::one(), DEPTH).unwrap().value(), &s), Rational::one());
        let c = transformer::cwp(&p.body, &f, &s, DEPTH).unwrap();
        prop_assert_eq!(c, AnalysisValue::Exact(at(wp(&p.body, &f, DEPTH).unwrap().value(), &s)));
    }

    #[test]
    fn cwp_is_linear_and_monotone(seed in any::<u64>()) {
        let (p, s, f) = instance(seed);
        prop_assume!(feasible(&p.body, &s));
        let h = Generator::new(seed ^ 2).post();
        let (alpha, beta) = (Rational::new(1.into(), 2.into()), Rational::from_integer(3.into()));
        let c = |e: &Expectation| match transformer::cwp(&p.body, e, &s, DEPTH).unwrap() {
            AnalysisValue::Exact(v) => v,
            other => panic!("{other}"),
        };
        let mix = f.scale(&alpha).add(&h.scale(&beta));
        prop_assert_eq!(c(&mix), &alpha * c(&f) + &beta * c(&h));
        prop_assert!(c(&f) <= c(&f.add(&h)));
    }

    #[test]
    fn unrolling_is_monotone(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let p = g.loopy();
        let s = g.state(&vars());
        let f = g.predicate();
        for k in 0..8 {
            let (lo0, lo1) = (at(wp(&p.body, &f, k).unwrap().value(), &s), at(wp(&p.body, &f, k + 1).unwrap().value(), &s));
            let (hi0, hi1) = (at(wlp(&p.body, &f, k).unwrap().value(), &s), at(wlp(&p.body, &f, k + 1).unwrap().value(), &s));
            prop_assert!(lo0 <= lo1 && hi1 <= hi0, "k = {k}");
        }
    }

    #[test]
    fn observe_is_the_same_in_both_transformers(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let guard = g.bexp(2);
        let f = g.post();
        let s = g.state(&vars());
        let obs = Stmt::Observe(guard.clone());
        let expected = if guard.eval(&s).unwrap() { at(&f, &s) } else { Rational::zero() };
        prop_assert_eq!(at(wp(&obs, &f, 0).unwrap().value(), &s), expected.clone());
        prop_assert_eq!(at(wlp(&obs, &f, 0).unwrap().value(), &s), expected);
    }

    // operational models

    #[test]
    fn model_shape(seed in any::<u64>()) {
        let cfg = GenConfig { nondet: true, ..GenConfig::default() };
        let mut g = Generator::with_config(seed, cfg);
        let p = g.program();
        let s = g.state(&vars());
        let f = g.post();
        let m = operational::build(&p, &s, &f, MAX_STATES).unwrap();
        let sink = m.find_label(Label::Sink);
        for (i, st) in m.states.iter().enumerate() {
            prop_assert!(!(st.has(Label::Term) && st.has(Label::Bad)));
            if !st.reward.is_zero() {
                prop_assert!(st.has(Label::Term), "reward on state {i}");
            }
            let actions: Vec<Action> = st.choices.iter().map(|c| c.action).collect();
            prop_assert!(actions == [Action::Unique] || actions == [Action::Left, Action::Right] || actions.is_empty());
            for c in &st.choices {
                if Some(c.dist[0].0) == sink && c.dist.len() == 1 && Some(i) != sink {
                    prop_assert!(st.has(Label::Term) || st.has(Label::Bad), "state {i} enters the sink");
                }
            }
        }
        if p.body.is_fully_probabilistic() {
            prop_assert!(m.is_fully_probabilistic());
        }
    }

    #[test]
    fn larger_budgets_extend_the_model(seed in any::<u64>(), n in 1usize..60) {
        let mut g = Generator::new(seed);
        let p = g.loopy();
        let s = g.state(&vars());
        let f = g.predicate();
        let small = operational::build(&p, &s, &f, n).unwrap();
        let big = operational::build(&p, &s, &f, 2 * n).unwrap();
        prop_assert!(small.len() <= big.len());
        let explored = |m: &Rmdp| m.states.iter().take_while(|s| !s.has(Label::Sink)).count();
        prop_assert!(explored(&small) <= explored(&big));
        for (a, b) in small.states[..explored(&small)].iter().zip(&big.states) {
            prop_assert_eq!(&a.origin, &b.origin);
        }
    }

    // solver

    #[test]
    fn rewards_match_transformers(seed in any::<u64>()) {
        let (p, s, f) = instance(seed);
        let m = closed(&p.body, &s, &f).unwrap();
        prop_assert_eq!(solver::expected_reward(&m).unwrap(), at(wp(&p.body, &f, DEPTH).unwrap().value(), &s));
        prop_assert_eq!(
            solver::conditional_expected_reward(&m, false).unwrap(),
            transformer::cwp(&p.body, &f, &s, DEPTH).unwrap()
        );
        let never_bad = Rational::one() - solver::reach_prob(&m, Label::Bad).unwrap();
        prop_assert_eq!(never_bad, at(wlp(&p.body, &Expectation::one(), DEPTH).unwrap().value(), &s));
    }

    #[test]
    fn intervals_enclose_and_shrink(seed in any::<u64>()) {
        let mut g = Generator::new(seed);
        let p = g.loopy();
        let s = g.state(&vars());
        let f = g.predicate();
        let exact = closed(&p.body, &s, &f).map(|m| solver::conditional_expected_reward(&m, false).unwrap());
        let mut prev: Option<Rational> = None;
        for n in [4, 8, 16, 32, 64, 128] {
            let m = operational::build(&p, &s, &f, n).unwrap();
            let v = solver::bounded_conditional(&m, &Rational::one()).unwrap();
            if let Some(AnalysisValue::Exact(e)) = &exact {
                prop_assert!(v.contains(e), "{v} misses {e}");
            }
            if let (Some(w), Some(pw)) = (v.width(), &prev) {
                prop_assert!(w <= *pw, "width grew at {n}");
            }
            prev = v.width().or(prev);
        }
    }

    #[test]
    fn deterministic_models_have_one_scheduler(seed in any::<u64>()) {
        let (p, s, f) = instance(seed);
        let m = closed(&p.body, &s, &f).unwrap();
        let values = solver::scheduler_values(&m, solver::DEFAULT_BUDGET).unwrap();
        let plain = solver::conditional_expected_reward(&m, false).unwrap();
        prop_assert_eq!(values.len(), 1);
        prop_assert_eq!(&values[0].1, &plain);
        prop_assert_eq!(solver::min_conditional(&m, solver::DEFAULT_BUDGET).unwrap().0, plain);
    }

    // transformations

    #[test]
    fn hoisting_removes_observations(seed in any::<u64>()) {
        let (p, s, f) = instance(seed);
        let h = transform::hoist(&p.body, &Expectation::one(), DEPTH).unwrap();
        prop_assert!(!h.program.has_observe());
        prop_assert_eq!(at(&h.h, &s), at(wlp(&p.body, &Expectation::one(), DEPTH).unwrap().value(), &s));
        prop_assume!(feasible(&p.body, &s));
        let m = closed(&h.program, &s, &f).unwrap();
        prop_assert_eq!(
            AnalysisValue::Exact(solver::expected_reward(&m).unwrap()),
            transformer::cwp(&p.body, &f, &s, DEPTH).unwrap()
        );
        // Liberal rewards need a post-expectation bounded by 1.
        let g = Generator::new(seed ^ 3).predicate();
        let liberal = transformer::quotient_table(&p.body, &g, &s, DEPTH).unwrap()[1].clone();
        let mg = closed(&h.program, &s, &g).unwrap();
        prop_assert_eq!(AnalysisValue::Exact(solver::liberal_expected_reward(&mg).unwrap()), liberal);
    }

    #[test]
    fn rerun_loop_preserves_the_conditional_value(seed in any::<u64>()) {
        let (mut p, s, f) = instance(seed);
        prop_assume!(feasible(&p.body, &s));
        for v in VARS {
            if !p.declared_vars.iter().any(|x| x == v) {
                p.declared_vars.push(v.to_string());
            }
        }
        let looped = transform::observe_to_loop(&p);
        let mut s2 = s.clone();
        s2.extend_zeros(&looped.declared_vars);
        let m = closed(&looped.body, &s2, &f).unwrap();
        prop_assert_eq!(
            AnalysisValue::Exact(solver::expected_reward(&m).unwrap()),
            transformer::cwp(&p.body, &f, &s, DEPTH).unwrap()
        );
    }

    #[test]
    fn iid_loops_round_trip(a in -2i64..=2, b in -2i64..=2, c in -2i64..=2, d in -2i64..=2, k in 0usize..4) {
        // while (x = y) { {x := a} [p] {x := b}; {y := c} [q] {y := d} }
        let probs = [(1, 2), (1, 3), (2, 3), (1, 4)];
        let pr = |i: usize| ProbExp::constant(probs[i].0, probs[i].1);
        let flip = |v: &str, l: i64, r: i64, p: ProbExp| Stmt::pchoice(
            Stmt::assign(v, AExp::int(l)), p, Stmt::assign(v, AExp::int(r)));
        let body = Stmt::seq(flip("x", a, b, pr(k)), flip("y", c, d, pr((k + 1) % 4)));
        let guard = BExp::eq(AExp::var("x"), AExp::var("y"));
        let l = Stmt::while_loop(guard, body);
        prop_assert!(transform::iid_check(&l));
        let o = transform::loop_to_observe(&l).unwrap();
        let f = Expectation::from_aexp(&AExp::add(AExp::var("x"), AExp::int(2)));
        // From a state entering the loop; the loop must be able to exit.
        let s = State::zeros(&["x".to_string(), "y".to_string()]);
        prop_assume!(feasible(&o, &s));
        let loop_model = operational::build_stmt(&l, &s, &f, MAX_STATES).unwrap();
        let looped_value = solver::conditional_expected_reward(&loop_model, false).unwrap();
        prop_assert_eq!(&transformer::cwp(&o, &f, &s, DEPTH).unwrap(), &looped_value);
        // Back to a rerun loop.
        let back = transform::observe_to_loop(&Program::from_stmt(o));
        let mut s2 = s.clone();
        s2.extend_zeros(&back.declared_vars);
        let back_model = operational::build(&back, &s2, &f, MAX_STATES).unwrap();
        prop_assert_eq!(
            solver::conditional_expected_reward(&back_model, false).unwrap(),
            looped_value
        );
    }
}
