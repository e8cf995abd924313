//! Kleene iteration for loop functionals with syntactic fixpoint detection
//! and exact acceleration of affine iterations.
//!
//! When the iterates of a fully probabilistic loop keep the same shape
//! (the same guarded monomials) and only their coefficients change, the
//! functional restricted to that shape is `x ↦ M x + b`. If `M` is a
//! contraction in some power, the iterates converge to the unique solution
//! of `(I - M) x = b`, which is then the exact limit.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::expectation::{Expectation, Guard, Monomial, Poly, Term, TermSum};
use crate::linalg;
use crate::{Rational, Result};

/// Largest template dimension tried for acceleration.
const MAX_DIMENSION: usize = 40;

pub(crate) type Key = (usize, Guard, Monomial);

/// Values the iteration runs over: single expectations or pairs.
pub(crate) trait Iterand: Clone + PartialEq {
    fn zero() -> Self;
    /// Guarded monomials spanning `self`, or `None` if `self` contains `min`
    /// or infinity.
    fn shape(&self) -> Option<BTreeSet<Key>>;
    fn from_coordinates(keys: &[Key], c: &[Rational]) -> Self;
    /// Coordinates of `self` in the span of `keys`, if it lies there
    /// (provably).
    fn coordinates(&self, keys: &[Key]) -> Option<Vec<Rational>>;
}

fn expectation_shape(e: &Expectation, component: usize, out: &mut BTreeSet<Key>) -> Option<()> {
    let Expectation::Sum(s) = e else { return None };
    if !s.top.is_false() {
        return None;
    }
    for t in &s.terms {
        for (m, _) in t.poly.terms() {
            out.insert((component, t.guard.clone(), m.clone()));
        }
    }
    Some(())
}

fn expectation_from(keys: &[Key], c: &[Rational], component: usize) -> Expectation {
    let mut by_guard: BTreeMap<&Guard, Poly> = BTreeMap::new();
    for ((comp, g, m), v) in keys.iter().zip(c) {
        if *comp == component {
            let e = by_guard.entry(g).or_default();
            *e = e.add(&Poly::monomial(m.clone(), v.clone()));
        }
    }
    Expectation::Sum(TermSum {
        terms: by_guard
            .into_iter()
            .map(|(g, p)| Term {
                guard: g.clone(),
                poly: p,
            })
            .collect(),
        top: Guard::ff(),
    })
    .simplify()
}

fn expectation_coordinates(
    e: &Expectation,
    keys: &[Key],
    component: usize,
    out: &mut [Rational],
) -> Option<()> {
    let Expectation::Sum(s) = e else { return None };
    if !s.top.is_false() {
        return None;
    }
    let index: BTreeMap<(&Guard, &Monomial), usize> = keys
        .iter()
        .enumerate()
        .filter(|(_, k)| k.0 == component)
        .map(|(i, (_, g, m))| ((g, m), i))
        .collect();
    let guards: BTreeSet<&Guard> = index.keys().map(|(g, _)| *g).collect();
    for t in &s.terms {
        // Split the term's guard into template guards it is a union of.
        let parts: Vec<&Guard> = if guards.contains(&t.guard) {
            vec![&t.guard]
        } else {
            let inside: Vec<&Guard> = guards
                .iter()
                .copied()
                .filter(|g| g.implies(&t.guard))
                .collect();
            let union = inside.iter().fold(Guard::ff(), |acc, g| acc.or(g));
            if !t.guard.implies(&union) {
                return None;
            }
            inside
        };
        for g in parts {
            for (m, c) in t.poly.terms() {
                let i = *index.get(&(g, m))?;
                out[i] += c;
            }
        }
    }
    Some(())
}

/// Template guards must be pairwise disjoint for coordinates to be sound.
fn disjoint_guards(keys: &BTreeSet<Key>) -> bool {
    let mut per_component: BTreeMap<usize, BTreeSet<&Guard>> = BTreeMap::new();
    for (c, g, _) in keys {
        per_component.entry(*c).or_default().insert(g);
    }
    per_component.values().all(|gs| {
        let gs: Vec<&&Guard> = gs.iter().collect();
        (0..gs.len()).all(|i| (i + 1..gs.len()).all(|j| gs[i].disjoint(gs[j])))
    })
}

impl Iterand for Expectation {
    fn zero() -> Self {
        Expectation::zero()
    }

    fn shape(&self) -> Option<BTreeSet<Key>> {
        let mut out = BTreeSet::new();
        expectation_shape(self, 0, &mut out)?;
        Some(out)
    }

    fn from_coordinates(keys: &[Key], c: &[Rational]) -> Self {
        expectation_from(keys, c, 0)
    }

    fn coordinates(&self, keys: &[Key]) -> Option<Vec<Rational>> {
        let mut out = vec![Rational::zero(); keys.len()];
        expectation_coordinates(self, keys, 0, &mut out)?;
        Some(out)
    }
}

impl Iterand for (Expectation, Expectation) {
    fn zero() -> Self {
        (Expectation::zero(), Expectation::zero())
    }

    fn shape(&self) -> Option<BTreeSet<Key>> {
        let mut out = BTreeSet::new();
        expectation_shape(&self.0, 0, &mut out)?;
        expectation_shape(&self.1, 1, &mut out)?;
        Some(out)
    }

    fn from_coordinates(keys: &[Key], c: &[Rational]) -> Self {
        (expectation_from(keys, c, 0), expectation_from(keys, c, 1))
    }

    fn coordinates(&self, keys: &[Key]) -> Option<Vec<Rational>> {
        let mut out = vec![Rational::zero(); keys.len()];
        expectation_coordinates(&self.0, keys, 0, &mut out)?;
        expectation_coordinates(&self.1, keys, 1, &mut out)?;
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Outcome<T> {
    /// The least (or greatest) fixpoint itself.
    Exact(T),
    /// The iterate after the given number of steps.
    Bound(T, usize),
}

/// Iterates `step` from `start` at most `max_iters` times.
///
/// `step` returns the next iterate and whether it was computed exactly.
/// With `affine` set, `step` must be affine on term sums (no
/// nondeterminism in the loop), which enables acceleration.
pub(crate) fn iterate<T: Iterand>(
    start: T,
    max_iters: usize,
    affine: bool,
    mut step: impl FnMut(&T) -> Result<(T, bool)>,
) -> Result<Outcome<T>> {
    let mut x = start;
    let mut exact = true;
    let mut tried: BTreeSet<BTreeSet<Key>> = BTreeSet::new();
    for k in 0..max_iters {
        let (next, ok) = step(&x)?;
        exact &= ok;
        if next == x {
            return Ok(if exact {
                Outcome::Exact(x)
            } else {
                Outcome::Bound(x, k)
            });
        }
        if affine && exact {
            if let (Some(a), Some(b)) = (x.shape(), next.shape()) {
                if a == b && !tried.contains(&a) {
                    tried.insert(a.clone());
                    if let Some(fp) = accelerate(&a, &mut step)? {
                        return Ok(Outcome::Exact(fp));
                    }
                }
            }
        }
        x = next;
    }
    Ok(Outcome::Bound(x, max_iters))
}

fn accelerate<T: Iterand>(
    shape: &BTreeSet<Key>,
    step: &mut impl FnMut(&T) -> Result<(T, bool)>,
) -> Result<Option<T>> {
    let n = shape.len();
    if n == 0 || n > MAX_DIMENSION || !disjoint_guards(shape) {
        return Ok(None);
    }
    let keys: Vec<Key> = shape.iter().cloned().collect();
    let (f0, ok) = step(&T::zero())?;
    let Some(b) = f0.coordinates(&keys).filter(|_| ok) else {
        return Ok(None);
    };
    let mut m = vec![vec![Rational::zero(); n]; n];
    for j in 0..n {
        let mut unit = vec![Rational::zero(); n];
        unit[j] = Rational::one();
        let (fj, ok) = step(&T::from_coordinates(&keys, &unit))?;
        let Some(col) = fj.coordinates(&keys).filter(|_| ok) else {
            return Ok(None);
        };
        for i in 0..n {
            m[i][j] = &col[i] - &b[i];
        }
    }
    if !linalg::is_contraction(&m, 6) {
        return Ok(None);
    }
    let mut a = linalg::identity(n);
    for i in 0..n {
        for j in 0..n {
            a[i][j] -= &m[i][j];
        }
    }
    let Some(c) = linalg::solve(a, b) else {
        return Ok(None);
    };
    let candidate = T::from_coordinates(&keys, &c);
    let (image, _) = step(&candidate)?;
    if image == candidate || image.coordinates(&keys).as_ref() == Some(&c) {
        Ok(Some(candidate))
    } else {
        Ok(None)
    }
}
