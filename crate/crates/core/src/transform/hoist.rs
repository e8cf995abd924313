use num_traits::{One, Zero};

use crate::expectation::{Expectation, Guard};
use crate::syntax::{ProbExp, Stmt};
use crate::transformer::{self, probability};
use crate::{Error, Rational, Result, Value};

/// Iteration limit for the greatest fixpoint of a loop.
pub const DEFAULT_LOOP_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct HoistResult {
    /// Observe-free program.
    pub program: Stmt,
    /// Probability of passing every observation, as an expectation.
    pub h: Expectation,
}

fn constant(e: &Expectation) -> Option<Rational> {
    match e.constant_value()? {
        Value::Finite(r) => Some(r),
        Value::Infinity => None,
    }
}

fn tr(s: &Stmt, f: &Expectation, max_iters: usize) -> Result<(Stmt, Expectation)> {
    Ok(match s {
        Stmt::Skip => (Stmt::Skip, f.clone()),
        Stmt::Abort => (Stmt::Abort, Expectation::one()),
        Stmt::Assign(x, e) => (s.clone(), f.substitute(x, e)),
        Stmt::Observe(g) => (Stmt::Skip, f.guard_mul_bexp(g)),
        Stmt::Ite(g, a, b) => {
            let (a2, fa) = tr(a, f, max_iters)?;
            let (b2, fb) = tr(b, f, max_iters)?;
            let guard = Guard::from_bexp(g);
            (
                Stmt::ite(g.clone(), a2, b2),
                fa.guard_mul(&guard).add(&fb.guard_mul(&guard.not())),
            )
        }
        Stmt::PChoice(a, p, b) => {
            let p = probability(p)?;
            let (a2, fa) = tr(a, f, max_iters)?;
            let (b2, fb) = tr(b, f, max_iters)?;
            let left = fa.scale(&p);
            let total = left.add(&fb.scale(&(Rational::one() - &p)));
            let q = match (constant(&left), constant(&total)) {
                (Some(n), Some(d)) if !d.is_zero() => ProbExp::Const(n / d),
                // Both branches are infeasible here; keep the original weight.
                (_, Some(d)) if d.is_zero() => ProbExp::Const(p),
                _ => ProbExp::Quotient(Box::new(left), Box::new(total.clone())),
            };
            (Stmt::pchoice(a2, q, b2), total)
        }
        Stmt::Seq(a, b) => {
            let (b2, fb) = tr(b, f, max_iters)?;
            let (a2, fa) = tr(a, &fb, max_iters)?;
            (Stmt::seq(a2, b2), fa)
        }
        Stmt::While(g, body) => {
            let fixed = transformer::wlp(s, f, max_iters)?;
            if !fixed.is_exact() {
                return Err(Error::LoopFixpointNotFound(format!("while ({g}) {{...}}")));
            }
            let fixed = fixed.value().clone();
            let (body2, _) = tr(body, &fixed, max_iters)?;
            (Stmt::while_loop(g.clone(), body2), fixed)
        }
        Stmt::NDChoice(..) => return Err(Error::NondeterminismUnsupported),
    })
}

/// Moves all observations into branch probabilities: returns an
/// observe-free program and the expectation `ĥ` of passing them.
pub fn hoist(s: &Stmt, f: &Expectation, max_loop_iters: usize) -> Result<HoistResult> {
    if !s.is_fully_probabilistic() {
        return Err(Error::NondeterminismUnsupported);
    }
    let (program, h) = tr(s, f, max_loop_iters)?;
    Ok(HoistResult { program, h })
}

/// Drops branches of probability 0, `skip` in sequences, and conditionals
/// with identical branches.
pub fn remove_dead_branches(s: &Stmt) -> Stmt {
    match s {
        Stmt::PChoice(a, ProbExp::Const(p), _) if p.is_one() => remove_dead_branches(a),
        Stmt::PChoice(_, ProbExp::Const(p), b) if p.is_zero() => remove_dead_branches(b),
        Stmt::PChoice(a, p, b) => {
            Stmt::pchoice(remove_dead_branches(a), p.clone(), remove_dead_branches(b))
        }
        Stmt::NDChoice(a, b) => Stmt::ndchoice(remove_dead_branches(a), remove_dead_branches(b)),
        Stmt::Ite(g, a, b) => {
            let (a, b) = (remove_dead_branches(a), remove_dead_branches(b));
            if a == b {
                a
            } else {
                Stmt::ite(g.clone(), a, b)
            }
        }
        Stmt::While(g, body) => Stmt::while_loop(g.clone(), remove_dead_branches(body)),
        Stmt::Seq(a, b) => match (remove_dead_branches(a), remove_dead_branches(b)) {
            (Stmt::Skip, b) => b,
            (a, Stmt::Skip) => a,
            (a, b) => Stmt::seq(a, b),
        },
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    #[test]
    fn example_two() {
        let p = parse(
            "{x := 0} [1/2] {x := 1}; \
             if (x = 1) { {y := 0} [1/2] {y := 2} } else { {y := 0} [4/5] {y := 3} }; \
             observe (y = 0)",
        )
        .unwrap();
        let r = hoist(&p.body, &Expectation::one(), 50).unwrap();
        assert_eq!(r.h, Expectation::parse("13/20").unwrap());
        assert!(!r.program.has_observe());
        let Stmt::Seq(first, _) = &r.program else { panic!() };
        let Stmt::PChoice(_, q, _) = &**first else { panic!() };
        assert_eq!(*q, ProbExp::constant(8, 13));
        let short = remove_dead_branches(&r.program);
        assert_eq!(short, parse("{x := 0} [8/13] {x := 1}; y := 0").unwrap().body);
    }

    #[test]
    fn trivial_rows() {
        let f = Expectation::parse("[x = 1]").unwrap();
        let r = hoist(&Stmt::Skip, &f, 5).unwrap();
        assert_eq!((r.program, r.h), (Stmt::Skip, f));
        let p = parse("observe (true); x := 1").unwrap();
        let r = hoist(&p.body, &Expectation::one(), 5).unwrap();
        assert_eq!(r.program, Stmt::seq(Stmt::Skip, Stmt::assign("x", crate::syntax::AExp::int(1))));
        assert_eq!(r.h, Expectation::one());
    }

    #[test]
    fn state_dependent_probability() {
        let p = parse("{y := 0} [1/2] {y := 1}; observe (x = y)").unwrap();
        let r = hoist(&p.body, &Expectation::one(), 5).unwrap();
        assert!(matches!(&r.program, Stmt::Seq(a, _) if matches!(&**a, Stmt::PChoice(_, ProbExp::Quotient(..), _))));
        let text = r.program.to_string();
        assert_eq!(parse(&text).unwrap().body, r.program);
    }

    #[test]
    fn loops_use_the_liberal_fixpoint() {
        let p = parse("x := 1; while (x = 1) { {x := 1} [1/2] {x := 0}; observe (x = 1) }")
            .unwrap();
        let r = hoist(&p.body, &Expectation::one(), 50).unwrap();
        assert_eq!(r.h, Expectation::zero());
        // Recurrent walk: the liberal fixpoint is found by acceleration.
        let q = parse("while (x < 10) { {x := x + 1} [1/2] {x := x - 1} }").unwrap();
        let r = hoist(&q.body, &Expectation::parse("[x = 10]").unwrap(), 50).unwrap();
        assert_eq!(r.h, Expectation::parse("[x <= 10]").unwrap());
        let q = parse("while (0 < x && x < 10) { {x := x + 1} [1/3] {x := x - 1} }").unwrap();
        let r = hoist(&q.body, &Expectation::parse("[x = 10]").unwrap(), 50);
        assert!(matches!(
            r,
            Err(Error::LoopFixpointNotFound(_))
        ), "{r:?}");
    }
}
