//! Exact analysis of finite reward Markov chains and small MDPs.
//!
//! Linear systems are split into strongly connected components and solved
//! bottom-up; each component is solved by exact Gaussian elimination. States
//! that cannot reach the target are fixed to zero first, which makes every
//! component system nonsingular.

use std::collections::{BTreeMap, VecDeque};

use num_traits::{One, Signed, Zero};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::linalg;
use crate::operational::{Action, Label, Rmdp};
use crate::{AnalysisValue, Error, Rational, Result};

/// Default number of nondeterministic states [`min_conditional`] enumerates.
pub const DEFAULT_BUDGET: usize = 20;

/// Chosen action per nondeterministic state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SchedulerAssignment(pub BTreeMap<usize, Action>);

fn check_chain(m: &Rmdp, allow_frontier: bool) -> Result<()> {
    if let Some(s) = m.nondeterministic_states().first() {
        return Err(Error::Nondeterministic(*s));
    }
    let frontier = m.frontier().len();
    if frontier > 0 && !allow_frontier {
        return Err(Error::PartialModel(frontier));
    }
    Ok(())
}

fn successors(m: &Rmdp, s: usize) -> &[(usize, Rational)] {
    m.states[s]
        .choices
        .first()
        .map_or(&[][..], |c| c.dist.as_slice())
}

/// States from which some state in `target` is reachable.
fn can_reach(m: &Rmdp, target: &[bool]) -> Vec<bool> {
    let n = m.len();
    let mut preds = vec![Vec::new(); n];
    for s in 0..n {
        for t in m.successors(s) {
            preds[t].push(s);
        }
    }
    let mut seen = target.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&s| target[s]).collect();
    while let Some(t) = queue.pop_front() {
        for &s in &preds[t] {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
    }
    seen
}

/// Strongly connected components of the subgraph induced by `include`, in
/// reverse topological order (successor components first).
pub(crate) fn components(m: &Rmdp, include: &[bool]) -> Vec<Vec<usize>> {
    let mut g: DiGraph<usize, ()> = DiGraph::new();
    let mut node = vec![None; m.len()];
    for s in 0..m.len() {
        if include[s] {
            node[s] = Some(g.add_node(s));
        }
    }
    for s in 0..m.len() {
        if let Some(a) = node[s] {
            for t in m.successors(s) {
                if let Some(b) = node[t] {
                    g.update_edge(a, b, ());
                }
            }
        }
    }
    petgraph::algo::tarjan_scc(&g)
        .into_iter()
        .map(|c| c.into_iter().map(|i: NodeIndex| g[i]).collect())
        .collect()
}

/// Solves `y_s = c_s + Σ_t P(s,t)·y_t` for the states in `unknown`, keeping
/// `y` as given elsewhere.
fn solve_linear(
    m: &Rmdp,
    unknown: &[bool],
    c: &[Rational],
    mut y: Vec<Rational>,
) -> Result<Vec<Rational>> {
    for comp in components(m, unknown) {
        let pos: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let k = comp.len();
        let mut a = linalg::identity(k);
        let mut b = vec![Rational::zero(); k];
        for (i, &s) in comp.iter().enumerate() {
            b[i] = c[s].clone();
            for (t, p) in successors(m, s) {
                match pos.get(t) {
                    Some(&j) => a[i][j] -= p,
                    None => b[i] += p * &y[*t],
                }
            }
        }
        let x = if k == 1 {
            if a[0][0].is_zero() {
                None
            } else {
                Some(vec![&b[0] / &a[0][0]])
            }
        } else {
            linalg::solve(a, b)
        };
        let x = x.ok_or_else(|| {
            Error::Invariant(format!("singular system on component of state {}", comp[0]))
        })?;
        for (i, &s) in comp.iter().enumerate() {
            y[s] = x[i].clone();
        }
    }
    Ok(y)
}

/// Probability of eventually reaching a state in `target`, from every state.
fn reach_all(m: &Rmdp, target: &[bool]) -> Result<Vec<Rational>> {
    let reach = can_reach(m, target);
    let unknown: Vec<bool> = (0..m.len()).map(|s| reach[s] && !target[s]).collect();
    let y = (0..m.len())
        .map(|s| {
            if target[s] {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
        .collect();
    solve_linear(m, &unknown, &vec![Rational::zero(); m.len()], y)
}

fn labelled(m: &Rmdp, l: Label) -> Vec<bool> {
    m.states.iter().map(|s| s.has(l)).collect()
}

/// Expected reward collected on paths that reach the sink, from every state,
/// together with the sink reachability probabilities.
fn reward_all(m: &Rmdp) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let sink = labelled(m, Label::Sink);
    let x = reach_all(m, &sink)?;
    let unknown: Vec<bool> = (0..m.len()).map(|s| !sink[s] && x[s].is_positive()).collect();
    let c: Vec<Rational> = (0..m.len()).map(|s| &m.states[s].reward * &x[s]).collect();
    let y = solve_linear(m, &unknown, &c, vec![Rational::zero(); m.len()])?;
    Ok((y, x))
}

/// `Pr(◊ l)` from the initial state of a finite Markov chain.
pub fn reach_prob(m: &Rmdp, l: Label) -> Result<Rational> {
    check_chain(m, false)?;
    Ok(reach_all(m, &labelled(m, l))?[m.initial].clone())
}

/// `ExpRew(◊ sink)`: rewards collected on paths that reach the sink.
pub fn expected_reward(m: &Rmdp) -> Result<Rational> {
    check_chain(m, false)?;
    Ok(reward_all(m)?.0[m.initial].clone())
}

fn check_bound(m: &Rmdp, bound: &Rational) -> Result<()> {
    match m.states.iter().find(|s| s.reward > *bound) {
        Some(s) => Err(Error::BoundExceeded(s.reward.clone())),
        None => Ok(()),
    }
}

/// `ExpRew(◊ sink) + Pr(¬◊ sink)`; rewards must be at most 1.
pub fn liberal_expected_reward(m: &Rmdp) -> Result<Rational> {
    check_chain(m, false)?;
    check_bound(m, &Rational::one())?;
    let (y, x) = reward_all(m)?;
    Ok(&y[m.initial] + Rational::one() - &x[m.initial])
}

/// Expected reward conditioned on never reaching `↯`. With `liberal`, the
/// mass of diverging runs is credited to the numerator.
pub fn conditional_expected_reward(m: &Rmdp, liberal: bool) -> Result<AnalysisValue> {
    check_chain(m, false)?;
    if liberal {
        check_bound(m, &Rational::one())?;
    }
    let (y, x) = reward_all(m)?;
    let mut num = y[m.initial].clone();
    if liberal {
        num += Rational::one() - &x[m.initial];
    }
    let bad = reach_all(m, &labelled(m, Label::Bad))?;
    let den = Rational::one() - &bad[m.initial];
    Ok(AnalysisValue::quotient(&num, &den))
}

/// Sound enclosure of the conditional expected reward of a partially
/// explored chain whose rewards are bounded by `post_bound`.
pub fn bounded_conditional(m: &Rmdp, post_bound: &Rational) -> Result<AnalysisValue> {
    check_chain(m, true)?;
    check_bound(m, post_bound)?;
    let (y, _) = reward_all(m)?;
    let lower_num = y[m.initial].clone();
    let lower_bad = reach_all(m, &labelled(m, Label::Bad))?[m.initial].clone();
    let frontier: Vec<bool> = m.states.iter().map(|s| s.choices.is_empty()).collect();
    let unresolved = reach_all(m, &frontier)?[m.initial].clone();
    let lower_den = Rational::one() - &lower_bad - &unresolved;
    let upper_den = Rational::one() - &lower_bad;
    if upper_den.is_zero() {
        return Ok(AnalysisValue::Undefined);
    }
    let lo = &lower_num / &upper_den;
    let hi = if lower_den.is_positive() {
        ((&lower_num + &unresolved * post_bound) / &lower_den).min(post_bound.clone())
    } else {
        post_bound.clone()
    };
    let hi = hi.max(lo.clone());
    Ok(if hi == lo {
        AnalysisValue::Exact(lo)
    } else {
        AnalysisValue::Interval { lo, hi }
    })
}

/// Checks that no nondeterministic state lies on a cycle.
fn check_acyclic_choices(m: &Rmdp) -> Result<()> {
    let all = vec![true; m.len()];
    for comp in components(m, &all) {
        for &s in &comp {
            let cyclic = comp.len() > 1 || m.successors(s).any(|t| t == s);
            if cyclic && m.states[s].is_nondeterministic() {
                return Err(Error::CyclicNondeterminism(s));
            }
        }
    }
    Ok(())
}

/// The conditional value of every deterministic scheduler, in enumeration
/// order (assignment `i` picks `right` at the `j`-th nondeterministic state
/// iff bit `j` of `i` is set).
pub fn scheduler_values(
    m: &Rmdp,
    budget: usize,
) -> Result<Vec<(SchedulerAssignment, AnalysisValue)>> {
    let frontier = m.frontier().len();
    if frontier > 0 {
        return Err(Error::PartialModel(frontier));
    }
    let nd = m.nondeterministic_states();
    if nd.len() > budget {
        return Err(Error::BudgetExceeded {
            count: nd.len(),
            budget,
        });
    }
    check_acyclic_choices(m)?;
    let evaluate = |i: u64| -> Result<(SchedulerAssignment, AnalysisValue)> {
        let pick = |s: usize| {
            nd.iter()
                .position(|&t| t == s)
                .map_or(0, |j| ((i >> j) & 1) as usize)
        };
        let chain = m.induced(&pick);
        let assignment = nd
            .iter()
            .map(|&s| (s, m.states[s].choices[pick(s)].action))
            .collect();
        Ok((
            SchedulerAssignment(assignment),
            conditional_expected_reward(&chain, false)?,
        ))
    };
    let count = 1u64 << nd.len();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(evaluate).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(evaluate).collect()
    }
}

/// Demonic minimum of the conditional expected reward over deterministic
/// schedulers, with `Undefined` below every number. Ties go to the first
/// assignment in enumeration order.
pub fn min_conditional(m: &Rmdp, budget: usize) -> Result<(AnalysisValue, SchedulerAssignment)> {
    let values = scheduler_values(m, budget)?;
    let mut best: Option<(SchedulerAssignment, AnalysisValue)> = None;
    for (a, v) in values {
        if best.as_ref().is_none_or(|(_, b)| v.demonic_cmp(b).is_lt()) {
            best = Some((a, v));
        }
    }
    let (a, v) = best.expect("at least one scheduler");
    Ok((v, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::Expectation;
    use crate::operational::{build, load_explicit};
    use crate::syntax::parse;
    use crate::State;

    fn model(src: &str, f: &str) -> Rmdp {
        let p = parse(src).unwrap();
        let st = State::zeros(&p.declared_vars);
        build(&p, &st, &Expectation::parse(f).unwrap(), 100_000).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn first_snippet() {
        let m = model("{x := 0} [1/2] {x := 1}; observe (x = 1)", "x");
        assert_eq!(reach_prob(&m, Label::Bad).unwrap(), r(1, 2));
        assert_eq!(expected_reward(&m).unwrap(), r(1, 2));
        assert_eq!(
            conditional_expected_reward(&m, false).unwrap(),
            AnalysisValue::exact_int(1)
        );
        assert_eq!(reach_prob(&model("skip", "0"), Label::Sink).unwrap(), r(1, 1));
    }

    #[test]
    fn divergence() {
        let a = model("abort", "1");
        assert_eq!(expected_reward(&a).unwrap(), r(0, 1));
        assert_eq!(liberal_expected_reward(&a).unwrap(), r(1, 1));
        let div = model("x := 1; while (x = 1) { x := 1 }", "x");
        assert_eq!(
            conditional_expected_reward(&div, false).unwrap(),
            AnalysisValue::exact_int(0)
        );
        let andiv = model(
            "x := 1; while (x = 1) { {x := 1} [1/2] {x := 0}; observe (x = 1) }",
            "x",
        );
        assert_eq!(reach_prob(&andiv, Label::Bad).unwrap(), r(1, 1));
        assert_eq!(
            conditional_expected_reward(&andiv, false).unwrap(),
            AnalysisValue::Undefined
        );
    }

    #[test]
    fn geometric_loop_is_solved_exactly() {
        let m = model("c := 0; x := 1; while (x = 1) { {x := 0} [1/3] {c := 1 - c} }", "c");
        // Pr(odd number of flips) = (2/3)/(1 + 2/3)
        assert_eq!(expected_reward(&m).unwrap(), r(2, 5));
    }

    #[test]
    fn bounded_is_exact_on_closed_models() {
        let m = model("{x := 0} [1/3] {x := 1}; observe (x = 1)", "x");
        assert_eq!(
            bounded_conditional(&m, &r(1, 1)).unwrap(),
            AnalysisValue::exact_int(1)
        );
        let p = parse("c := 0; while (c < 1000) { {c := c + 1} [1/2] {c := 1000}; observe (c != 3) }")
            .unwrap();
        let f = Expectation::parse("[c = 1000]").unwrap();
        let st = State::zeros(&p.declared_vars);
        let exact = conditional_expected_reward(&build(&p, &st, &f, 1_000_000).unwrap(), false)
            .unwrap();
        let exact = exact.as_exact().unwrap().clone();
        let mut prev = None;
        for n in [5, 10, 20, 40] {
            let v = bounded_conditional(&build(&p, &st, &f, n).unwrap(), &r(1, 1)).unwrap();
            assert!(v.contains(&exact), "{v} vs {exact}");
            if let Some(w) = prev {
                assert!(v.width().unwrap() <= w);
            }
            prev = v.width();
        }
    }

    const CONTEXT_MIN: &str = "states 8 initial 0
state 0 labels {} reward 0
state 1 labels {term} reward 1
state 2 labels {} reward 0
state 3 labels {term} reward 2
state 4 labels {} reward 0
state 5 labels {bad} reward 0
state 6 labels {term} reward 11/5
state 7 labels {sink} reward 0
trans 0 unique { 1:1/2, 2:1/2 }
trans 1 unique { 7:1 }
trans 2 left { 3:1 }
trans 2 right { 4:1 }
trans 3 unique { 7:1 }
trans 4 unique { 5:1/2, 6:1/2 }
trans 5 unique { 7:1 }
trans 6 unique { 7:1 }
trans 7 unique { 7:1 }
";

    #[test]
    fn context_dependent_minimum() {
        let m = load_explicit(CONTEXT_MIN).unwrap();
        let values: Vec<AnalysisValue> = scheduler_values(&m, 20)
            .unwrap()
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        assert_eq!(values, vec![AnalysisValue::ratio(3, 2), AnalysisValue::ratio(7, 5)]);
        let (v, a) = min_conditional(&m, 20).unwrap();
        assert_eq!(v, AnalysisValue::ratio(7, 5));
        assert_eq!(a.0[&2], Action::Right);
        let sub = m.rooted_at(2);
        let (v, a) = min_conditional(&sub, 20).unwrap();
        assert_eq!(v, AnalysisValue::exact_int(2));
        assert_eq!(a.0[&0], Action::Left);
        assert!(matches!(
            min_conditional(&m, 0),
            Err(Error::BudgetExceeded { count: 1, budget: 0 })
        ));
    }

    #[test]
    fn undefined_is_demonically_least() {
        let m = model("{ {x := 5} [] {x := 2} } [1/2] {x := 2}; observe (x > 3)", "x");
        let values = scheduler_values(&m, 20).unwrap();
        assert_eq!(values[0].1, AnalysisValue::exact_int(5));
        assert_eq!(values[1].1, AnalysisValue::Undefined);
        let (v, a) = min_conditional(&m, 20).unwrap();
        assert_eq!(v, AnalysisValue::Undefined);
        assert_eq!(a.0.values().next(), Some(&Action::Right));
        let cyc = model("x := 1; while (x = 1) { {x := 0} [] {x := 1} }", "x");
        assert!(matches!(
            min_conditional(&cyc, 20),
            Err(Error::CyclicNondeterminism(_))
        ));
    }
}
