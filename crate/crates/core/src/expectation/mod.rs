//! Symbolic expectations: sums of guarded polynomials, pointwise minima, and
//! a guarded infinity.

mod guard;
mod poly;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub use guard::{Atom, Guard, Lit, Rel};
pub use poly::{Monomial, Poly};

use crate::syntax::{AExp, BExp};
use crate::{Error, Rational, Result, Value};

/// Total assignment of variables to integers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State(BTreeMap<String, BigInt>);

impl State {
    pub fn zeros(vars: &[String]) -> Self {
        State(vars.iter().map(|v| (v.clone(), BigInt::zero())).collect())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, BigInt)>) -> Self {
        State(pairs.into_iter().collect())
    }

    pub fn get(&self, var: &str) -> Result<&BigInt> {
        self.0
            .get(var)
            .ok_or_else(|| Error::UnboundVariable(var.to_string()))
    }

    pub fn set(&mut self, var: &str, value: BigInt) {
        self.0.insert(var.to_string(), value);
    }

    pub fn with(&self, var: &str, value: BigInt) -> State {
        let mut s = self.clone();
        s.set(var, value);
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BigInt)> {
        self.0.iter()
    }

    pub fn contains(&self, var: &str) -> bool {
        self.0.contains_key(var)
    }

    /// Adds zero-valued entries for missing variables.
    pub fn extend_zeros(&mut self, vars: &[String]) {
        for v in vars {
            self.0.entry(v.clone()).or_insert_with(BigInt::zero);
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

/// `[guard] * poly`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term {
    pub guard: Guard,
    pub poly: Poly,
}

/// Sum of guarded polynomials; the value is infinite where `top` holds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermSum {
    pub terms: Vec<Term>,
    pub top: Guard,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expectation {
    Sum(TermSum),
    Min(Box<Expectation>, Box<Expectation>),
}

impl Default for Expectation {
    fn default() -> Self {
        Expectation::zero()
    }
}

impl Expectation {
    pub fn zero() -> Self {
        Expectation::Sum(TermSum {
            terms: Vec::new(),
            top: Guard::ff(),
        })
    }

    pub fn one() -> Self {
        Expectation::constant(Rational::one())
    }

    pub fn infinity() -> Self {
        Expectation::Sum(TermSum {
            terms: Vec::new(),
            top: Guard::tt(),
        })
    }

    pub fn constant(c: Rational) -> Self {
        Expectation::poly(Poly::constant(c))
    }

    pub fn int(n: i64) -> Self {
        Expectation::constant(Rational::from_integer(n.into()))
    }

    pub fn poly(p: Poly) -> Self {
        Expectation::guarded(Guard::tt(), p)
    }

    pub fn guarded(guard: Guard, poly: Poly) -> Self {
        Expectation::Sum(TermSum {
            terms: vec![Term { guard, poly }],
            top: Guard::ff(),
        })
        .simplify()
    }

    /// `[G]`.
    pub fn indicator(g: &BExp) -> Self {
        Expectation::guarded(Guard::from_bexp(g), Poly::int(1))
    }

    pub fn from_aexp(e: &AExp) -> Self {
        Expectation::poly(Poly::from_aexp(e))
    }

    /// Parses the surface syntax, e.g. `[y = 0]*(10 + x) + min(x, 2)`.
    pub fn parse(text: &str) -> Result<Self> {
        crate::syntax::parse_expectation(text)
    }

    pub fn eval(&self, state: &State) -> Result<Value> {
        match self {
            Expectation::Sum(s) => {
                if s.top.eval(state)? {
                    return Ok(Value::Infinity);
                }
                let mut total = Rational::zero();
                for t in &s.terms {
                    if t.guard.eval(state)? {
                        total += t.poly.eval(state)?;
                    }
                }
                if total.is_negative() {
                    return Err(Error::NegativeExpectation {
                        state: state.to_string(),
                        value: total,
                    });
                }
                Ok(Value::Finite(total))
            }
            Expectation::Min(a, b) => Ok(a.eval(state)?.min(b.eval(state)?)),
        }
    }

    /// Evaluates and requires a finite result.
    pub fn eval_finite(&self, state: &State) -> Result<Rational> {
        match self.eval(state)? {
            Value::Finite(r) => Ok(r),
            Value::Infinity => Err(Error::Evaluation(format!(
                "expectation `{self}` is infinite at {state}"
            ))),
        }
    }

    /// `f[x/E]`.
    pub fn substitute(&self, var: &str, e: &AExp) -> Self {
        self.substitute_poly(var, &Poly::from_aexp(e))
    }

    pub fn substitute_poly(&self, var: &str, by: &Poly) -> Self {
        match self {
            Expectation::Sum(s) => Expectation::Sum(TermSum {
                terms: s
                    .terms
                    .iter()
                    .map(|t| Term {
                        guard: t.guard.substitute(var, by),
                        poly: t.poly.substitute(var, by),
                    })
                    .collect(),
                top: s.top.substitute(var, by),
            })
            .simplify(),
            Expectation::Min(a, b) => a
                .substitute_poly(var, by)
                .min_with(&b.substitute_poly(var, by)),
        }
    }

    /// `[G]·f`.
    pub fn guard_mul(&self, g: &Guard) -> Self {
        if g.is_true() {
            return self.clone();
        }
        match self {
            Expectation::Sum(s) => Expectation::Sum(TermSum {
                terms: s
                    .terms
                    .iter()
                    .map(|t| Term {
                        guard: t.guard.and(g),
                        poly: t.poly.clone(),
                    })
                    .collect(),
                top: s.top.and(g),
            })
            .simplify(),
            Expectation::Min(a, b) => a.guard_mul(g).min_with(&b.guard_mul(g)),
        }
    }

    pub fn guard_mul_bexp(&self, g: &BExp) -> Self {
        self.guard_mul(&Guard::from_bexp(g))
    }

    /// `α·f` with `0·∞ = 0`. Negative factors are only allowed on term sums
    /// (the parser builds differences this way).
    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Expectation::zero();
        }
        if k.is_one() {
            return self.clone();
        }
        match self {
            Expectation::Sum(s) => Expectation::Sum(TermSum {
                terms: s
                    .terms
                    .iter()
                    .map(|t| Term {
                        guard: t.guard.clone(),
                        poly: t.poly.scale(k),
                    })
                    .collect(),
                top: s.top.clone(),
            })
            .simplify(),
            Expectation::Min(a, b) => {
                debug_assert!(k.is_positive());
                a.scale(k).min_with(&b.scale(k))
            }
        }
    }

    pub fn add(&self, other: &Expectation) -> Self {
        match (self, other) {
            (Expectation::Sum(a), Expectation::Sum(b)) => Expectation::Sum(TermSum {
                terms: a.terms.iter().chain(&b.terms).cloned().collect(),
                top: a.top.or(&b.top),
            })
            .simplify(),
            (Expectation::Min(a, b), c) | (c, Expectation::Min(a, b)) => {
                a.add(c).min_with(&b.add(c))
            }
        }
    }

    pub fn min_with(&self, other: &Expectation) -> Self {
        Expectation::Min(Box::new(self.clone()), Box::new(other.clone())).simplify()
    }

    /// Product; used by the surface-syntax parser. At least one side must be
    /// a term sum without infinity, or a nonnegative constant.
    pub fn mul(&self, other: &Expectation) -> Result<Self> {
        if let Some(c) = self.constant_value() {
            if let Value::Finite(c) = c {
                if !c.is_negative() || matches!(other, Expectation::Sum(_)) {
                    return Ok(other.scale(&c));
                }
            }
        }
        if let Some(Value::Finite(c)) = other.constant_value() {
            if !c.is_negative() || matches!(self, Expectation::Sum(_)) {
                return Ok(self.scale(&c));
            }
        }
        match (self, other) {
            (Expectation::Sum(a), Expectation::Sum(b)) => {
                let top_only_guards = |s: &TermSum| {
                    s.terms
                        .iter()
                        .all(|t| t.poly.constant_value().is_some_and(|c| c.is_positive()))
                };
                if !(a.top.is_false() || top_only_guards(b))
                    || !(b.top.is_false() || top_only_guards(a))
                {
                    return Err(Error::Evaluation(
                        "infinity may only be multiplied by guards and positive constants".into(),
                    ));
                }
                let mut terms = Vec::new();
                for x in &a.terms {
                    for y in &b.terms {
                        terms.push(Term {
                            guard: x.guard.and(&y.guard),
                            poly: x.poly.mul(&y.poly),
                        });
                    }
                }
                let support =
                    |s: &TermSum| s.terms.iter().fold(Guard::ff(), |acc, t| acc.or(&t.guard));
                let top = a
                    .top
                    .and(&b.top.or(&support(b)))
                    .or(&b.top.and(&support(a)));
                Ok(Expectation::Sum(TermSum { terms, top }).simplify())
            }
            _ => Err(Error::Evaluation(
                "products involving min are only supported with constants".into(),
            )),
        }
    }

    /// Constant value if the expectation is state-independent after
    /// simplification.
    pub fn constant_value(&self) -> Option<Value> {
        match self {
            Expectation::Sum(s) => {
                if s.top.is_true() {
                    return Some(Value::Infinity);
                }
                if !s.top.is_false() {
                    return None;
                }
                match s.terms.as_slice() {
                    [] => Some(Value::zero()),
                    [t] if t.guard.is_true() => t.poly.constant_value().map(Value::Finite),
                    _ => None,
                }
            }
            Expectation::Min(..) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant_value() == Some(Value::zero())
    }

    pub fn has_min(&self) -> bool {
        matches!(self, Expectation::Min(..))
    }

    pub fn has_infinity(&self) -> bool {
        match self {
            Expectation::Sum(s) => !s.top.is_false(),
            Expectation::Min(a, b) => a.has_infinity() || b.has_infinity(),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |vs: Vec<String>| {
            for v in vs {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            Expectation::Sum(s) => {
                for t in &s.terms {
                    push(t.guard.vars());
                    push(t.poly.vars());
                }
                push(s.top.vars());
            }
            Expectation::Min(a, b) => {
                push(a.vars());
                push(b.vars());
            }
        }
        out
    }

    /// Rough size measure (number of atoms and monomials).
    pub fn size(&self) -> usize {
        match self {
            Expectation::Sum(s) => {
                s.top.size()
                    + s.terms
                        .iter()
                        .map(|t| t.guard.size() + t.poly.size())
                        .sum::<usize>()
            }
            Expectation::Min(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Normal form: drops false or zero terms, merges equal guards, merges
    /// equal polynomials over disjoint guards, orders terms canonically.
    /// Semantically equal to `self`.
    pub fn simplify(&self) -> Self {
        match self {
            Expectation::Sum(s) => Expectation::Sum(simplify_sum(s)),
            Expectation::Min(a, b) => {
                let a = a.simplify();
                let b = b.simplify();
                if a == b {
                    return a;
                }
                match (a.constant_value(), b.constant_value()) {
                    (Some(x), Some(y)) => return Expectation::from_value(x.min(y)),
                    (Some(Value::Infinity), _) => return b,
                    (_, Some(Value::Infinity)) => return a,
                    (Some(x), _) | (_, Some(x)) if x == Value::zero() => {
                        return Expectation::zero()
                    }
                    _ => {}
                }
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                Expectation::Min(Box::new(a), Box::new(b))
            }
        }
    }

    /// A syntactic upper bound on the values of `self`, when every term is
    /// a constant.
    pub fn upper_bound(&self) -> Option<Rational> {
        match self {
            Expectation::Sum(s) => {
                if !s.top.is_false() {
                    return None;
                }
                let mut total = Rational::zero();
                for t in &s.terms {
                    let c = t.poly.constant_value()?;
                    if c.is_positive() {
                        total += c;
                    }
                }
                Some(total)
            }
            Expectation::Min(a, b) => match (a.upper_bound(), b.upper_bound()) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn from_value(v: Value) -> Self {
        match v {
            Value::Finite(r) => Expectation::constant(r),
            Value::Infinity => Expectation::infinity(),
        }
    }

    /// Terms of a sum expectation (empty for `Min`).
    pub fn terms(&self) -> &[Term] {
        match self {
            Expectation::Sum(s) => &s.terms,
            Expectation::Min(..) => &[],
        }
    }
}

fn simplify_sum(s: &TermSum) -> TermSum {
    let top = s.top.clone();
    if top.is_true() {
        return TermSum {
            terms: Vec::new(),
            top,
        };
    }
    let mut by_guard: BTreeMap<Guard, Poly> = BTreeMap::new();
    for t in &s.terms {
        if t.guard.is_false() || t.poly.is_zero() {
            continue;
        }
        let poly = propagate_equalities(&t.guard, &t.poly);
        let e = by_guard.entry(t.guard.clone()).or_default();
        *e = e.add(&poly);
    }
    loop {
        by_guard.retain(|_, p| !p.is_zero());
        // Merge equal polynomials over disjoint guards when the union is
        // smaller than the two guards.
        let entries: Vec<(Guard, Poly)> = by_guard
            .iter()
            .map(|(g, p)| (g.clone(), p.clone()))
            .collect();
        let mut merged = None;
        'outer: for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if entries[i].1 != entries[j].1 {
                    continue;
                }
                let (gi, gj) = (&entries[i].0, &entries[j].0);
                let u = gi.or(gj);
                if u.size() < gi.size() + gj.size() && gi.disjoint(gj) {
                    merged = Some((i, j, u));
                    break 'outer;
                }
            }
        }
        let Some((i, j, u)) = merged else { break };
        let poly = entries[i].1.clone();
        by_guard.remove(&entries[i].0);
        by_guard.remove(&entries[j].0);
        let e = by_guard.entry(u.clone()).or_default();
        *e = e.add(&propagate_equalities(&u, &poly));
    }
    TermSum {
        terms: by_guard
            .into_iter()
            .map(|(guard, poly)| Term { guard, poly })
            .collect(),
        top,
    }
}

/// Replaces variables fixed by the guard inside the polynomial.
fn propagate_equalities(g: &Guard, p: &Poly) -> Poly {
    let mut p = p.clone();
    for (v, c) in g.unit_equalities() {
        p = p.substitute(&v, &Poly::constant(Rational::from_integer(c)));
    }
    p
}

fn fmt_term(t: &Term, alone: bool) -> String {
    let simple_poly = t.poly.len() == 1 && !t.poly.terms().next().unwrap().1.is_negative();
    if t.guard.is_true() {
        return if alone || simple_poly {
            t.poly.to_string()
        } else {
            format!("({})", t.poly)
        };
    }
    if t.poly.constant_value() == Some(Rational::one()) {
        format!("[{}]", t.guard)
    } else if simple_poly {
        format!("[{}]*{}", t.guard, t.poly)
    } else {
        format!("[{}]*({})", t.guard, t.poly)
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Sum(s) => {
                let mut parts: Vec<String> = Vec::new();
                let alone = s.terms.len() == 1 && s.top.is_false();
                for t in &s.terms {
                    parts.push(fmt_term(t, alone));
                }
                if s.top.is_true() {
                    parts.push("inf".into());
                } else if !s.top.is_false() {
                    parts.push(format!("[{}]*inf", s.top));
                }
                if parts.is_empty() {
                    f.write_str("0")
                } else {
                    f.write_str(&parts.join(" + "))
                }
            }
            Expectation::Min(a, b) => write!(f, "min({a}, {b})"),
        }
    }
}

/// A pair of expectations with componentwise operations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpectationPair {
    pub first: Expectation,
    pub second: Expectation,
}

impl ExpectationPair {
    pub fn new(first: Expectation, second: Expectation) -> Self {
        ExpectationPair { first, second }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        ExpectationPair::new(self.first.scale(k), self.second.scale(k))
    }

    pub fn add(&self, o: &ExpectationPair) -> Self {
        ExpectationPair::new(self.first.add(&o.first), self.second.add(&o.second))
    }

    pub fn guard_mul(&self, g: &Guard) -> Self {
        ExpectationPair::new(self.first.guard_mul(g), self.second.guard_mul(g))
    }

    pub fn substitute(&self, var: &str, e: &AExp) -> Self {
        ExpectationPair::new(
            self.first.substitute(var, e),
            self.second.substitute(var, e),
        )
    }
}

impl fmt::Display for ExpectationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.first, self.second)
    }
}
