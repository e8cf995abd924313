//! Weakest (liberal) pre-expectations, the paired conditional transformer and
//! the conditional quotient.
//!
//! Loops are evaluated by iterating their characteristic functional. A
//! syntactic fixpoint (after simplification) or an exact affine acceleration
//! gives an exact result; otherwise the `k`-th iterate is returned as a bound
//! (the `while^k` unrolling).

use num_traits::{One, Zero};
use serde::Serialize;

use crate::expectation::{Expectation, Guard};
use crate::fixpoint::{self, Outcome};
use crate::syntax::{ProbExp, Stmt};
use crate::{AnalysisValue, Error, Rational, Result, State, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Under-approximation (wp iterates from 0).
    Lower,
    /// Over-approximation (wlp iterates from 1).
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PreExpectationResult {
    Exact(Expectation),
    UnrolledBound {
        k: usize,
        value: Expectation,
        direction: Direction,
    },
}

impl PreExpectationResult {
    pub fn value(&self) -> &Expectation {
        match self {
            PreExpectationResult::Exact(e) => e,
            PreExpectationResult::UnrolledBound { value, .. } => value,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, PreExpectationResult::Exact(_))
    }

    fn new(value: Expectation, exact: bool, k: usize, direction: Direction) -> Self {
        if exact {
            PreExpectationResult::Exact(value)
        } else {
            PreExpectationResult::UnrolledBound {
                k,
                value,
                direction,
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Wp,
    Wlp,
}

pub(crate) fn probability(p: &ProbExp) -> Result<Rational> {
    match p {
        ProbExp::Const(r) => Ok(r.clone()),
        ProbExp::Param(name) => Err(Error::UninstantiatedParameter(name.clone())),
        ProbExp::Quotient(..) => Err(Error::QuotientProbabilityUnsupported),
    }
}

fn transform(s: &Stmt, f: &Expectation, mode: Mode, depth: usize) -> Result<(Expectation, bool)> {
    Ok(match s {
        Stmt::Skip => (f.clone(), true),
        Stmt::Abort => match mode {
            Mode::Wp => (Expectation::zero(), true),
            Mode::Wlp => (Expectation::one(), true),
        },
        Stmt::Assign(x, e) => (f.substitute(x, e), true),
        Stmt::Observe(g) => (f.guard_mul_bexp(g), true),
        Stmt::Seq(a, b) => {
            let (mid, ok1) = transform(b, f, mode, depth)?;
            let (pre, ok2) = transform(a, &mid, mode, depth)?;
            (pre, ok1 && ok2)
        }
        Stmt::Ite(g, a, b) => {
            let g = Guard::from_bexp(g);
            let (x, ok1) = transform(a, f, mode, depth)?;
            let (y, ok2) = transform(b, f, mode, depth)?;
            (x.guard_mul(&g).add(&y.guard_mul(&g.not())), ok1 && ok2)
        }
        Stmt::PChoice(a, p, b) => {
            let p = probability(p)?;
            let (x, ok1) = transform(a, f, mode, depth)?;
            let (y, ok2) = transform(b, f, mode, depth)?;
            (
                x.scale(&p).add(&y.scale(&(Rational::one() - &p))),
                ok1 && ok2,
            )
        }
        Stmt::NDChoice(a, b) => {
            let (x, ok1) = transform(a, f, mode, depth)?;
            let (y, ok2) = transform(b, f, mode, depth)?;
            (x.min_with(&y), ok1 && ok2)
        }
        Stmt::While(g, body) => {
            let g = Guard::from_bexp(g);
            let exit = f.guard_mul(&g.not());
            let start = match mode {
                Mode::Wp => Expectation::zero(),
                Mode::Wlp => Expectation::one(),
            };
            let out = fixpoint::iterate(start, depth, body.is_fully_probabilistic(), |x| {
                let (inner, ok) = transform(body, x, mode, depth)?;
                Ok((inner.guard_mul(&g).add(&exit), ok))
            })?;
            match out {
                Outcome::Exact(x) => (x, true),
                Outcome::Bound(x, _) => (x, false),
            }
        }
    })
}

/// `wp[s](f)`; loops are unrolled at most `depth` times.
pub fn wp(s: &Stmt, f: &Expectation, depth: usize) -> Result<PreExpectationResult> {
    let (e, exact) = transform(s, f, Mode::Wp, depth)?;
    Ok(PreExpectationResult::new(e, exact, depth, Direction::Lower))
}

/// `wlp[s](g)`; `g` should be bounded by 1.
pub fn wlp(s: &Stmt, g: &Expectation, depth: usize) -> Result<PreExpectationResult> {
    let (e, exact) = transform(s, g, Mode::Wlp, depth)?;
    Ok(PreExpectationResult::new(e, exact, depth, Direction::Upper))
}

type Pair = (Expectation, Expectation);

fn pair_scale(x: &Pair, k: &Rational) -> Pair {
    (x.0.scale(k), x.1.scale(k))
}

fn pair_add(x: &Pair, y: &Pair) -> Pair {
    (x.0.add(&y.0), x.1.add(&y.1))
}

fn pair_guard(x: &Pair, g: &Guard) -> Pair {
    (x.0.guard_mul(g), x.1.guard_mul(g))
}

fn transform_pair(s: &Stmt, fg: &Pair, depth: usize) -> Result<(Pair, bool)> {
    Ok(match s {
        Stmt::Skip => (fg.clone(), true),
        Stmt::Abort => ((Expectation::zero(), Expectation::one()), true),
        Stmt::Assign(x, e) => ((fg.0.substitute(x, e), fg.1.substitute(x, e)), true),
        Stmt::Observe(g) => (pair_guard(fg, &Guard::from_bexp(g)), true),
        Stmt::Seq(a, b) => {
            let (mid, ok1) = transform_pair(b, fg, depth)?;
            let (pre, ok2) = transform_pair(a, &mid, depth)?;
            (pre, ok1 && ok2)
        }
        Stmt::Ite(g, a, b) => {
            let g = Guard::from_bexp(g);
            let (x, ok1) = transform_pair(a, fg, depth)?;
            let (y, ok2) = transform_pair(b, fg, depth)?;
            (
                pair_add(&pair_guard(&x, &g), &pair_guard(&y, &g.not())),
                ok1 && ok2,
            )
        }
        Stmt::PChoice(a, p, b) => {
            let p = probability(p)?;
            let (x, ok1) = transform_pair(a, fg, depth)?;
            let (y, ok2) = transform_pair(b, fg, depth)?;
            (
                pair_add(&pair_scale(&x, &p), &pair_scale(&y, &(Rational::one() - &p))),
                ok1 && ok2,
            )
        }
        Stmt::NDChoice(..) => return Err(Error::NondeterminismUnsupported),
        Stmt::While(g, body) => {
            let g = Guard::from_bexp(g);
            let exit = pair_guard(fg, &g.not());
            let start = (Expectation::zero(), Expectation::one());
            let out = fixpoint::iterate(start, depth, true, |x: &Pair| {
                let (inner, ok) = transform_pair(body, x, depth)?;
                Ok((pair_add(&pair_guard(&inner, &g), &exit), ok))
            })?;
            match out {
                Outcome::Exact(x) => (x, true),
                Outcome::Bound(x, _) => (x, false),
            }
        }
    })
}

/// The paired transformer `cwp[s](f, g)` computed by its own rules.
pub fn cwp_pair(
    s: &Stmt,
    f: &Expectation,
    g: &Expectation,
    depth: usize,
) -> Result<(PreExpectationResult, PreExpectationResult)> {
    if !s.is_fully_probabilistic() {
        return Err(Error::NondeterminismUnsupported);
    }
    let ((a, b), exact) = transform_pair(s, &(f.clone(), g.clone()), depth)?;
    Ok((
        PreExpectationResult::new(a, exact, depth, Direction::Lower),
        PreExpectationResult::new(b, exact, depth, Direction::Upper),
    ))
}

/// Enclosure `[lo, hi]` of a real quantity; `hi = None` is unbounded.
#[derive(Debug, Clone)]
struct Enclosure {
    lo: Rational,
    hi: Option<Rational>,
}

impl Enclosure {
    fn exact(v: Rational) -> Self {
        Enclosure {
            hi: Some(v.clone()),
            lo: v,
        }
    }

    fn is_exact(&self) -> bool {
        self.hi.as_ref() == Some(&self.lo)
    }
}

fn eval_finite(e: &Expectation, state: &State) -> Result<Rational> {
    match e.eval(state)? {
        Value::Finite(r) => Ok(r),
        Value::Infinity => Err(Error::NonConvergent(format!(
            "pre-expectation is infinite at {state}"
        ))),
    }
}

/// Everything the quotients need, evaluated at one state.
struct Evaluated {
    wp_f: Enclosure,
    wlp_f: Option<Enclosure>,
    wp_1: Enclosure,
    wlp_1: Enclosure,
}

fn evaluate(
    s: &Stmt,
    f: &Expectation,
    state: &State,
    depth: usize,
    bound: Option<&Rational>,
    with_wlp_f: bool,
) -> Result<Evaluated> {
    if !s.is_fully_probabilistic() {
        return Err(Error::NondeterminismUnsupported);
    }
    let one = Expectation::one();
    let wp_f = wp(s, f, depth)?;
    let wp_1 = wp(s, &one, depth)?;
    let wlp_1 = wlp(s, &one, depth)?;
    let wp_f_v = eval_finite(wp_f.value(), state)?;
    let wp_1_v = eval_finite(wp_1.value(), state)?;
    let wlp_1_v = eval_finite(wlp_1.value(), state)?;
    if wlp_1_v > Rational::one() {
        return Err(Error::BoundExceeded(wlp_1_v));
    }
    let unresolved = &wlp_1_v - &wp_1_v;
    let wp_f_enc = if wp_f.is_exact() {
        Enclosure::exact(wp_f_v)
    } else {
        Enclosure {
            hi: bound.map(|b| &wp_f_v + &unresolved * b),
            lo: wp_f_v.clone(),
        }
    };
    let wlp_f_enc = if with_wlp_f {
        let w = wlp(s, f, depth)?;
        let v = eval_finite(w.value(), state)?;
        if v > Rational::one() {
            return Err(Error::BoundExceeded(v));
        }
        Some(if w.is_exact() {
            Enclosure::exact(v)
        } else {
            Enclosure {
                lo: wp_f_enc.lo.clone(),
                hi: Some(v),
            }
        })
    } else {
        None
    };
    let denominator = |exact: bool, v: Rational| {
        if exact {
            Enclosure::exact(v)
        } else {
            Enclosure {
                lo: wp_1_v.clone(),
                hi: Some(wlp_1_v.clone()),
            }
        }
    };
    Ok(Evaluated {
        wp_f: wp_f_enc,
        wlp_f: wlp_f_enc,
        wp_1: denominator(wp_1.is_exact(), wp_1_v.clone()),
        wlp_1: denominator(wlp_1.is_exact(), wlp_1_v.clone()),
    })
}

fn divide(
    n: &Enclosure,
    d: &Enclosure,
    clamp: Option<&Rational>,
    state: &State,
) -> Result<AnalysisValue> {
    let d_hi = d.hi.as_ref().expect("denominators are bounded");
    if d_hi.is_zero() {
        if n.is_exact() && !n.lo.is_zero() {
            return Err(Error::Infeasible(state.to_string()));
        }
        return Ok(AnalysisValue::Undefined);
    }
    if n.is_exact() && d.is_exact() {
        return Ok(AnalysisValue::quotient(&n.lo, &d.lo));
    }
    let lo = &n.lo / d_hi;
    let mut hi = match &n.hi {
        Some(h) if !d.lo.is_zero() => Some(h / &d.lo),
        _ => None,
    };
    if let Some(c) = clamp {
        hi = Some(match hi {
            Some(h) if h < *c => h,
            _ => c.clone(),
        });
    }
    match hi {
        None => Err(Error::NonConvergent(
            "loop bounds leave the quotient unbounded; supply a post bound".into(),
        )),
        Some(hi) if hi == lo => Ok(AnalysisValue::Exact(lo)),
        Some(hi) => Ok(AnalysisValue::Interval {
            lo: lo.clone(),
            hi: hi.max(lo),
        }),
    }
}

/// The conditional value `wp[s](f)(σ) / wlp[s](1)(σ)`.
///
/// The post bound used for interval answers is derived from `f` when `f` is
/// a guarded constant; see [`cwp_with_bound`] otherwise.
pub fn cwp(s: &Stmt, f: &Expectation, state: &State, depth: usize) -> Result<AnalysisValue> {
    cwp_with_bound(s, f, state, depth, f.upper_bound().as_ref())
}

pub fn cwp_with_bound(
    s: &Stmt,
    f: &Expectation,
    state: &State,
    depth: usize,
    post_bound: Option<&Rational>,
) -> Result<AnalysisValue> {
    let ev = evaluate(s, f, state, depth, post_bound, false)?;
    divide(&ev.wp_f, &ev.wlp_1, post_bound, state)
}

/// The four normalisations `wp/wlp(1)`, `wlp/wlp(1)`, `wp/wp(1)`, `wlp/wp(1)`.
pub fn quotient_table(
    s: &Stmt,
    f: &Expectation,
    state: &State,
    depth: usize,
) -> Result<[AnalysisValue; 4]> {
    let bound = f.upper_bound();
    let ev = evaluate(s, f, state, depth, bound.as_ref(), true)?;
    let wlp_f = ev.wlp_f.expect("requested");
    let q = |n: &Enclosure, d: &Enclosure| match divide(n, d, None, state) {
        Err(Error::Infeasible(_)) => Ok(AnalysisValue::Undefined),
        other => other,
    };
    Ok([
        q(&ev.wp_f, &ev.wlp_1)?,
        q(&wlp_f, &ev.wlp_1)?,
        q(&ev.wp_f, &ev.wp_1)?,
        q(&wlp_f, &ev.wp_1)?,
    ])
}
