//! Boolean guards in disjunctive normal form over integer polynomial
//! constraints.
//!
//! Every clause groups its constraints by their non-constant part `q`
//! (integer coefficients, gcd 1, first coefficient positive) and keeps, per
//! `q`, the admissible values as an interval minus finitely many points.
//! That makes many semantically equal guards syntactically equal as well.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::poly::Poly;
use crate::syntax::{BExp, CmpOp};
use crate::{Rational, Result, State};

/// Relation of an atom `p rel 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Le,
}

/// A single constraint `poly rel 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub poly: Poly,
    pub rel: Rel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lit {
    True,
    False,
    Atom(Atom),
}

fn ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

impl Atom {
    /// Canonical form of `poly rel 0`, or its truth value if it is closed or
    /// decided by integrality.
    pub fn make(poly: Poly, rel: Rel) -> Lit {
        if let Some(c) = poly.constant_value() {
            let holds = match rel {
                Rel::Eq => c.is_zero(),
                Rel::Ne => !c.is_zero(),
                Rel::Le => !c.is_positive(),
            };
            return if holds { Lit::True } else { Lit::False };
        }
        let p = poly.scale(&Rational::from_integer(poly.denominator_lcm()));
        let g = Rational::from_integer(p.content_without_constant());
        let mut q = p.without_constant().scale(&g.recip());
        let mut c = p.constant_term() / g;
        match rel {
            Rel::Le => {
                let c = Rational::from_integer(ceil(&c));
                Lit::Atom(Atom {
                    poly: q.add(&Poly::constant(c)),
                    rel,
                })
            }
            Rel::Eq | Rel::Ne => {
                if !c.is_integer() {
                    return if rel == Rel::Eq {
                        Lit::False
                    } else {
                        Lit::True
                    };
                }
                if q.leading_sign_negative() {
                    q = q.neg();
                    c = -c;
                }
                Lit::Atom(Atom {
                    poly: q.add(&Poly::constant(c)),
                    rel,
                })
            }
        }
    }

    pub fn from_cmp(op: CmpOp, a: &Poly, b: &Poly) -> Lit {
        let d = a.sub(b);
        match op {
            CmpOp::Eq => Atom::make(d, Rel::Eq),
            CmpOp::Ne => Atom::make(d, Rel::Ne),
            CmpOp::Le => Atom::make(d, Rel::Le),
            CmpOp::Lt => Atom::make(d.add(&Poly::int(1)), Rel::Le),
            CmpOp::Ge => Atom::make(d.neg(), Rel::Le),
            CmpOp::Gt => Atom::make(d.neg().add(&Poly::int(1)), Rel::Le),
        }
    }

    pub fn eval(&self, state: &State) -> Result<bool> {
        let v = self.poly.eval(state)?;
        Ok(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Ne => !v.is_zero(),
            Rel::Le => !v.is_positive(),
        })
    }

    pub fn substitute(&self, var: &str, by: &Poly) -> Lit {
        if !self.poly.mentions(var) {
            return Lit::Atom(self.clone());
        }
        Atom::make(self.poly.substitute(var, by), self.rel)
    }

    /// Key (normalized non-constant part) and the admissible value range.
    fn key_range(&self) -> (Poly, Range) {
        let q = self.poly.without_constant();
        let c = self.poly.constant_term().to_integer();
        match self.rel {
            Rel::Eq => (q, Range::point(-c)),
            Rel::Ne => (q, Range::excluding(-c)),
            Rel::Le if q.leading_sign_negative() => (q.neg(), Range::at_least(c)),
            Rel::Le => (q, Range::at_most(-c)),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pos, neg) = self.poly.split_signs();
        let op = match self.rel {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Le => "<=",
        };
        write!(f, "{pos} {op} {neg}")
    }
}

/// Integers in `[lo, hi]` except `ne`; `None` bounds are infinite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Range {
    lo: Option<BigInt>,
    hi: Option<BigInt>,
    ne: BTreeSet<BigInt>,
}

impl Range {
    fn point(v: BigInt) -> Self {
        Range {
            lo: Some(v.clone()),
            hi: Some(v),
            ne: BTreeSet::new(),
        }
    }

    fn excluding(v: BigInt) -> Self {
        Range {
            ne: [v].into(),
            ..Range::default()
        }
    }

    fn at_least(v: BigInt) -> Self {
        Range {
            lo: Some(v),
            ..Range::default()
        }
    }

    fn at_most(v: BigInt) -> Self {
        Range {
            hi: Some(v),
            ..Range::default()
        }
    }

    fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none() && self.ne.is_empty()
    }

    fn contains(&self, v: &BigInt) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= v)
            && self.hi.as_ref().is_none_or(|h| v <= h)
            && !self.ne.contains(v)
    }

    fn intersect(&self, other: &Range) -> Option<Range> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (a, b) => a.clone().or(b.clone()),
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (a, b) => a.clone().or(b.clone()),
        };
        let ne = self.ne.union(&other.ne).cloned().collect();
        Range { lo, hi, ne }.normalize()
    }

    /// Tightens bounds past excluded points; `None` if empty.
    fn normalize(mut self) -> Option<Range> {
        if let Some(l) = &mut self.lo {
            while self.ne.contains(l) {
                *l += 1;
            }
        }
        if let Some(h) = &mut self.hi {
            while self.ne.contains(h) {
                *h -= 1;
            }
        }
        if let (Some(l), Some(h)) = (&self.lo, &self.hi) {
            if l > h {
                return None;
            }
        }
        let (lo, hi) = (self.lo.clone(), self.hi.clone());
        self.ne
            .retain(|v| lo.as_ref().is_none_or(|l| l < v) && hi.as_ref().is_none_or(|h| v < h));
        Some(self)
    }

    /// Union if it is again a range.
    fn union(&self, other: &Range) -> Option<Range> {
        let adjacent = |h: &Option<BigInt>, l: &Option<BigInt>| match (h, l) {
            (Some(h), Some(l)) => *l <= h + 1,
            _ => true,
        };
        if !adjacent(&self.hi, &other.lo) || !adjacent(&other.hi, &self.lo) {
            return None;
        }
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            _ => None,
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            _ => None,
        };
        let ne = self
            .ne
            .iter()
            .filter(|v| !other.contains(v))
            .chain(other.ne.iter().filter(|v| !self.contains(v)))
            .cloned()
            .collect();
        Range { lo, hi, ne }.normalize()
    }

    fn atoms(&self, q: &Poly) -> Vec<Atom> {
        let shifted = |v: &BigInt| q.sub(&Poly::constant(Rational::from_integer(v.clone())));
        if let (Some(l), Some(h)) = (&self.lo, &self.hi) {
            if l == h {
                return vec![Atom {
                    poly: shifted(l),
                    rel: Rel::Eq,
                }];
            }
        }
        let mut out = Vec::new();
        if let Some(l) = &self.lo {
            out.push(Atom {
                poly: shifted(l).neg(),
                rel: Rel::Le,
            });
        }
        if let Some(h) = &self.hi {
            out.push(Atom {
                poly: shifted(h),
                rel: Rel::Le,
            });
        }
        for v in &self.ne {
            out.push(Atom {
                poly: shifted(v),
                rel: Rel::Ne,
            });
        }
        out
    }

    /// Complement as a list of ranges (a disjunction).
    fn complement(&self) -> Vec<Range> {
        if let (Some(l), Some(h)) = (&self.lo, &self.hi) {
            if l == h {
                return vec![Range::excluding(l.clone())];
            }
        }
        if self.lo.is_none() && self.hi.is_none() && self.ne.len() == 1 {
            let v = self.ne.iter().next().unwrap().clone();
            return vec![Range::point(v)];
        }
        let mut out = Vec::new();
        if let Some(l) = &self.lo {
            out.push(Range::at_most(l - 1));
        }
        if let Some(h) = &self.hi {
            out.push(Range::at_least(h + 1));
        }
        for v in &self.ne {
            out.push(Range::point(v.clone()));
        }
        out
    }
}

/// Conjunction of constraints, one range per non-constant part.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    ranges: BTreeMap<Poly, Range>,
}

impl Clause {
    /// Builds a simplified clause; `None` if unsatisfiable.
    fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Option<Clause> {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        loop {
            let mut ranges: BTreeMap<Poly, Range> = BTreeMap::new();
            for a in &atoms {
                let (q, r) = a.key_range();
                let merged = match ranges.get(&q) {
                    Some(old) => old.intersect(&r)?,
                    None => r.normalize()?,
                };
                ranges.insert(q, merged);
            }
            ranges.retain(|_, r| !r.is_full());
            let clause = Clause { ranges };
            // Propagate `v = c` into the other constraints.
            let unit = clause.ranges.iter().find_map(|(q, r)| {
                let (v, c) = q.as_unit_linear()?;
                match (&r.lo, &r.hi) {
                    (Some(l), Some(h))
                        if l == h && c.is_zero() && clause.mentions_elsewhere(&v, q) =>
                    {
                        Some((v, l.clone()))
                    }
                    _ => None,
                }
            });
            let Some((v, value)) = unit else {
                return Some(clause);
            };
            let by = Poly::constant(Rational::from_integer(value));
            let key = Poly::var(&v);
            let mut next = Vec::new();
            for (q, r) in &clause.ranges {
                for a in r.atoms(q) {
                    if *q == key {
                        next.push(a);
                        continue;
                    }
                    match a.substitute(&v, &by) {
                        Lit::True => {}
                        Lit::False => return None,
                        Lit::Atom(a) => next.push(a),
                    }
                }
            }
            atoms = next;
        }
    }

    fn mentions_elsewhere(&self, v: &str, key: &Poly) -> bool {
        self.ranges.keys().any(|q| q != key && q.mentions(v))
    }

    pub fn atoms(&self) -> Vec<Atom> {
        self.ranges.iter().flat_map(|(q, r)| r.atoms(q)).collect()
    }

    fn eval(&self, state: &State) -> Result<bool> {
        for (q, r) in &self.ranges {
            let v = q.eval(state)?;
            if !v.is_integer() || !r.contains(&v.to_integer()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn and(&self, other: &Clause) -> Option<Clause> {
        Clause::from_atoms(self.atoms().into_iter().chain(other.atoms()))
    }

    /// Merges two clauses that differ only in the range of one key.
    fn merge(&self, other: &Clause) -> Option<Clause> {
        if self.ranges.len().abs_diff(other.ranges.len()) > 1 {
            return None;
        }
        let keys: BTreeSet<&Poly> = self.ranges.keys().chain(other.ranges.keys()).collect();
        let mut differing = None;
        for k in keys {
            if self.ranges.get(k) != other.ranges.get(k) {
                if differing.is_some() {
                    return None;
                }
                differing = Some(k.clone());
            }
        }
        let k = differing?;
        let full = Range::default();
        let a = self.ranges.get(&k).unwrap_or(&full);
        let b = other.ranges.get(&k).unwrap_or(&full);
        let u = a.union(b)?;
        let mut ranges = self.ranges.clone();
        if u.is_full() {
            ranges.remove(&k);
        } else {
            ranges.insert(k, u);
        }
        Some(Clause { ranges })
    }

    /// True if every state satisfying `self` satisfies `other`, judged per
    /// key.
    fn implies(&self, other: &Clause) -> bool {
        other.ranges.iter().all(|(k, r)| match self.ranges.get(k) {
            Some(mine) => mine.intersect(r).as_ref() == Some(mine) || mine == r,
            None => false,
        })
    }

    fn substitute(&self, var: &str, by: &Poly) -> Option<Clause> {
        let mut atoms = Vec::new();
        for a in self.atoms() {
            match a.substitute(var, by) {
                Lit::True => {}
                Lit::False => return None,
                Lit::Atom(a) => atoms.push(a),
            }
        }
        Clause::from_atoms(atoms)
    }

    fn negate(&self) -> Guard {
        let clauses = self
            .ranges
            .iter()
            .flat_map(|(q, r)| {
                r.complement().into_iter().map(move |c| Clause {
                    ranges: [(q.clone(), c)].into(),
                })
            })
            .collect();
        Guard::normalize(clauses)
    }

    fn vars(&self, out: &mut Vec<String>) {
        for q in self.ranges.keys() {
            for v in q.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }

    fn size(&self) -> usize {
        self.atoms().len()
    }
}

/// A guard in disjunctive normal form. No clauses is `false`; a single empty
/// clause is `true`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Guard {
    clauses: Vec<Clause>,
}

impl Guard {
    pub fn tt() -> Self {
        Guard {
            clauses: vec![Clause::default()],
        }
    }

    pub fn ff() -> Self {
        Guard { clauses: vec![] }
    }

    pub fn is_true(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0].ranges.is_empty()
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn from_lit(l: Lit) -> Self {
        match l {
            Lit::True => Guard::tt(),
            Lit::False => Guard::ff(),
            Lit::Atom(a) => Guard::normalize(Clause::from_atoms([a]).into_iter().collect()),
        }
    }

    pub fn from_bexp(b: &BExp) -> Self {
        match b {
            BExp::True => Guard::tt(),
            BExp::False => Guard::ff(),
            BExp::Cmp(op, x, y) => Guard::from_lit(Atom::from_cmp(
                *op,
                &Poly::from_aexp(x),
                &Poly::from_aexp(y),
            )),
            BExp::And(x, y) => Guard::from_bexp(x).and(&Guard::from_bexp(y)),
            BExp::Or(x, y) => Guard::from_bexp(x).or(&Guard::from_bexp(y)),
            BExp::Not(x) => Guard::from_bexp(x).not(),
        }
    }

    fn normalize(clauses: Vec<Clause>) -> Guard {
        if clauses.iter().any(|c| c.ranges.is_empty()) {
            return Guard::tt();
        }
        let mut cs: Vec<Clause> = clauses;
        cs.sort();
        cs.dedup();
        loop {
            let before = cs.len();
            // Drop clauses implied by another clause.
            let mut keep = vec![true; cs.len()];
            for i in 0..cs.len() {
                for j in 0..cs.len() {
                    if i != j && keep[j] && keep[i] && cs[i].implies(&cs[j]) {
                        keep[i] = false;
                    }
                }
            }
            cs = cs
                .into_iter()
                .zip(keep)
                .filter_map(|(c, k)| k.then_some(c))
                .collect();
            let mut merged = false;
            'outer: for i in 0..cs.len() {
                for j in i + 1..cs.len() {
                    if let Some(m) = cs[i].merge(&cs[j]) {
                        if m.ranges.is_empty() {
                            return Guard::tt();
                        }
                        cs.remove(j);
                        cs[i] = m;
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged && cs.len() == before {
                break;
            }
            cs.sort();
            cs.dedup();
        }
        Guard { clauses: cs }
    }

    pub fn and(&self, other: &Guard) -> Guard {
        if self.is_true() {
            return other.clone();
        }
        if other.is_true() {
            return self.clone();
        }
        let mut out = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                if let Some(c) = a.and(b) {
                    out.push(c);
                }
            }
        }
        Guard::normalize(out)
    }

    pub fn or(&self, other: &Guard) -> Guard {
        Guard::normalize(self.clauses.iter().chain(&other.clauses).cloned().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(&self) -> Guard {
        let mut acc = Guard::tt();
        for c in &self.clauses {
            acc = acc.and(&c.negate());
            if acc.is_false() {
                break;
            }
        }
        acc
    }

    pub fn substitute(&self, var: &str, by: &Poly) -> Guard {
        Guard::normalize(
            self.clauses
                .iter()
                .filter_map(|c| c.substitute(var, by))
                .collect(),
        )
    }

    pub fn eval(&self, state: &State) -> Result<bool> {
        for c in &self.clauses {
            if c.eval(state)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Sound check that `self` and `other` never hold together.
    pub fn disjoint(&self, other: &Guard) -> bool {
        self.and(other).is_false()
    }

    /// Sound check that `self` implies `other`.
    pub fn implies(&self, other: &Guard) -> bool {
        self.and(&other.not()).is_false()
    }

    /// Equalities `v = c` on single variables that hold whenever the guard
    /// holds (only for single-clause guards).
    pub fn unit_equalities(&self) -> Vec<(String, BigInt)> {
        if self.clauses.len() != 1 {
            return Vec::new();
        }
        self.clauses[0]
            .ranges
            .iter()
            .filter_map(|(q, r)| {
                let (v, c) = q.as_unit_linear()?;
                match (&r.lo, &r.hi) {
                    (Some(l), Some(h)) if l == h && c.is_zero() => Some((v, l.clone())),
                    _ => None,
                }
            })
            .collect()
    }

    pub fn clauses(&self) -> Vec<Vec<Atom>> {
        self.clauses.iter().map(Clause::atoms).collect()
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.clauses {
            c.vars(&mut out);
        }
        out
    }

    /// Number of atoms, a rough size measure.
    pub fn size(&self) -> usize {
        self.clauses.iter().map(Clause::size).sum::<usize>() + self.clauses.len()
    }

    /// Equivalent boolean expression in program syntax.
    pub fn to_bexp(&self) -> BExp {
        use crate::syntax::AExp;
        let poly_to_aexp = |p: &Poly| -> AExp {
            let mut acc: Option<AExp> = None;
            for (m, c) in p.terms() {
                let mut t = AExp::Int(c.abs().to_integer());
                for (v, e) in m {
                    for _ in 0..*e {
                        t = if matches!(&t, AExp::Int(n) if n.is_one()) {
                            AExp::var(v)
                        } else {
                            AExp::mul(t, AExp::var(v))
                        };
                    }
                }
                acc = Some(match acc {
                    None if c.is_negative() => AExp::sub(AExp::int(0), t),
                    None => t,
                    Some(a) if c.is_negative() => AExp::sub(a, t),
                    Some(a) => AExp::add(a, t),
                });
            }
            acc.unwrap_or_else(|| AExp::int(0))
        };
        let atom = |a: &Atom| {
            let (pos, neg) = a.poly.split_signs();
            let op = match a.rel {
                Rel::Eq => CmpOp::Eq,
                Rel::Ne => CmpOp::Ne,
                Rel::Le => CmpOp::Le,
            };
            BExp::Cmp(op, poly_to_aexp(&pos), poly_to_aexp(&neg))
        };
        let mut disj: Option<BExp> = None;
        for c in &self.clauses {
            let mut conj: Option<BExp> = None;
            for a in c.atoms() {
                let b = atom(&a);
                conj = Some(match conj {
                    None => b,
                    Some(x) => BExp::and(x, b),
                });
            }
            let conj = conj.unwrap_or(BExp::True);
            disj = Some(match disj {
                None => conj,
                Some(x) => BExp::or(x, conj),
            });
        }
        disj.unwrap_or(BExp::False)
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_false() {
            return f.write_str("false");
        }
        if self.is_true() {
            return f.write_str("true");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| {
                c.atoms()
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" && ")
            })
            .collect();
        f.write_str(&parts.join(" || "))
    }
}
