use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::syntax::AExp;
use crate::{Rational, Result, State};

/// Product of variables with exponents, sorted by variable name.
/// The empty monomial is the constant 1.
pub type Monomial = Vec<(String, u32)>;

/// Polynomial with rational coefficients; no zero coefficients are stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational>,
}

fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out: BTreeMap<String, u32> = a.iter().cloned().collect();
    for (v, e) in b {
        *out.entry(v.clone()).or_insert(0) += e;
    }
    out.into_iter().collect()
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(Rational::from_integer(n.into()))
    }

    pub fn var(name: &str) -> Self {
        Poly::monomial(vec![(name.to_string(), 1)], Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_aexp(e: &AExp) -> Self {
        match e {
            AExp::Int(n) => Poly::constant(Rational::from_integer(n.clone())),
            AExp::Var(v) => Poly::var(v),
            AExp::Add(a, b) => Poly::from_aexp(a).add(&Poly::from_aexp(b)),
            AExp::Sub(a, b) => Poly::from_aexp(a).sub(&Poly::from_aexp(b)),
            AExp::Mul(a, b) => Poly::from_aexp(a).mul(&Poly::from_aexp(b)),
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_value(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    /// Constant term.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Vec::new())
    }

    /// The polynomial without its constant term.
    pub fn without_constant(&self) -> Poly {
        let mut p = self.clone();
        p.terms.remove(&Vec::new());
        p
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, k: &Rational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(mono_mul(m1, m2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::int(1);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Replaces `var` by `by`.
    pub fn substitute(&self, var: &str, by: &Poly) -> Poly {
        if !self.mentions(var) {
            return self.clone();
        }
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut rest = Vec::new();
            let mut power = 0;
            for (v, e) in m {
                if v == var {
                    power = *e;
                } else {
                    rest.push((v.clone(), *e));
                }
            }
            let term = Poly::monomial(rest, c.clone()).mul(&by.pow(power));
            out = out.add(&term);
        }
        out
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.terms.keys().any(|m| m.iter().any(|(v, _)| v == var))
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in self.terms.keys() {
            for (v, _) in m {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn eval(&self, state: &State) -> Result<Rational> {
        let mut total = Rational::zero();
        for (m, c) in &self.terms {
            let mut v = BigInt::one();
            for (x, e) in m {
                v *= num_traits::pow(state.get(x)?.clone(), *e as usize);
            }
            total += c * Rational::from_integer(v);
        }
        Ok(total)
    }

    /// Smallest positive integer `k` such that `k * self` has integer
    /// coefficients.
    pub fn denominator_lcm(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Gcd of the numerators of the non-constant coefficients (integer
    /// polynomials only); zero if there are none.
    pub fn content_without_constant(&self) -> BigInt {
        self.terms
            .iter()
            .filter(|(m, _)| !m.is_empty())
            .fold(BigInt::zero(), |acc, (_, c)| acc.gcd(c.numer()))
    }

    /// Sign of the first non-constant coefficient.
    pub fn leading_sign_negative(&self) -> bool {
        self.terms
            .iter()
            .find(|(m, _)| !m.is_empty())
            .is_some_and(|(_, c)| c.is_negative())
    }

    /// If the polynomial is `v + c` for a single variable `v`, returns
    /// `(v, c)`.
    pub fn as_unit_linear(&self) -> Option<(String, Rational)> {
        let mut var = None;
        for (m, c) in &self.terms {
            if m.is_empty() {
                continue;
            }
            if var.is_some() || m.len() != 1 || m[0].1 != 1 || !c.is_one() {
                return None;
            }
            var = Some(m[0].0.clone());
        }
        var.map(|v| (v, self.constant_term()))
    }

    /// Positive and negated-negative parts, so that `self = pos - neg`.
    pub fn split_signs(&self) -> (Poly, Poly) {
        let mut pos = Poly::zero();
        let mut neg = Poly::zero();
        for (m, c) in &self.terms {
            if c.is_negative() {
                neg.add_term(m.clone(), -c.clone());
            } else {
                pos.add_term(m.clone(), c.clone());
            }
        }
        (pos, neg)
    }

    /// Number of monomials, used as a size measure.
    pub fn size(&self) -> usize {
        self.terms.len()
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (v, e) in m {
        for _ in 0..*e {
            parts.push(v.clone());
        }
    }
    parts.join("*")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            if i == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if negative { " - " } else { " + " })?;
            }
            let a = c.abs();
            if m.is_empty() {
                write!(f, "{}", crate::numeric::format_rational(&a))?;
            } else if a.is_one() {
                f.write_str(&fmt_monomial(m))?;
            } else {
                write!(
                    f,
                    "{}*{}",
                    crate::numeric::format_rational(&a),
                    fmt_monomial(m)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(pairs: &[(&str, i64)]) -> State {
        State::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), BigInt::from(*v))))
    }

    #[test]
    fn arithmetic() {
        let x = Poly::var("x");
        let y = Poly::var("y");
        let p = x.add(&Poly::int(1)).mul(&x.sub(&Poly::int(1)));
        assert_eq!(p, x.mul(&x).sub(&Poly::int(1)));
        assert_eq!(p.to_string(), "-1 + x*x");
        let q = x.mul(&y).substitute("x", &y.add(&Poly::int(2)));
        assert_eq!(
            q.eval(&st(&[("y", 3)])).unwrap(),
            Rational::from_integer(15.into())
        );
        assert!(x.sub(&x).is_zero());
    }

    #[test]
    fn unit_linear() {
        let p = Poly::var("x").sub(&Poly::int(3));
        assert_eq!(
            p.as_unit_linear(),
            Some(("x".into(), Rational::from_integer((-3).into())))
        );
        assert_eq!(
            Poly::var("x")
                .scale(&Rational::from_integer(2.into()))
                .as_unit_linear(),
            None
        );
    }
}
