//! Operational reward MDPs of programs.
//!
//! [`build`] unfolds a program from an initial state by breadth-first
//! application of the small-step rules. Identical configurations are merged,
//! so loops close into finite graphs whenever the reachable state space is
//! finite. Exploration stops after `max_states`; unexpanded states form the
//! frontier of a partial model.

mod dot;
mod explicit;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::expectation::Expectation;
use crate::syntax::{Program, Stmt};
use crate::{Error, Rational, Result, State, Value};

pub use dot::export_dot;
pub use explicit::{load_explicit, save_explicit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Left,
    Right,
    Unique,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Unique => "unique",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Successful termination (✓).
    Term,
    /// Violated observation (↯).
    Bad,
    Sink,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Term => "term",
            Label::Bad => "bad",
            Label::Sink => "sink",
        }
    }
}

/// Remaining program of a configuration: `↓`, a statement, or `c; Q` where
/// `c` is itself a remaining program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Cont {
    Down,
    Run(Stmt),
    Then(Box<Cont>, Stmt),
}

impl Cont {
    fn then(self, q: &Stmt) -> Cont {
        match self {
            Cont::Run(p) => Cont::Run(Stmt::seq(p, q.clone())),
            c => Cont::Then(Box::new(c), q.clone()),
        }
    }
}

impl fmt::Display for Cont {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cont::Down => f.write_str("↓"),
            Cont::Run(s) => write!(f, "{s}"),
            Cont::Then(c, q) => write!(f, "{c}; {q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OpState {
    Conf(Cont, State),
    Term(State),
    Bad,
    Sink,
}

impl fmt::Display for OpState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpState::Conf(c, s) => write!(f, "⟨{c}, {s}⟩"),
            OpState::Term(s) => write!(f, "⟨↓, {s}⟩"),
            OpState::Bad => f.write_str("⟨↯⟩"),
            OpState::Sink => f.write_str("⟨sink⟩"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Choice {
    pub action: Action,
    /// Successors with positive probabilities, sorted by index.
    pub dist: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelState {
    /// The configuration this state stands for; `None` in loaded models.
    pub origin: Option<OpState>,
    pub labels: BTreeSet<Label>,
    pub reward: Rational,
    /// Enabled actions; empty for frontier states.
    pub choices: Vec<Choice>,
}

impl ModelState {
    pub fn has(&self, l: Label) -> bool {
        self.labels.contains(&l)
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.choices.len() > 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rmdp {
    pub states: Vec<ModelState>,
    pub initial: usize,
}

impl Rmdp {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.states
            .iter()
            .flat_map(|s| &s.choices)
            .map(|c| c.dist.len())
            .sum()
    }

    /// Unexpanded states.
    pub fn frontier(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.states[i].choices.is_empty())
            .collect()
    }

    pub fn nondeterministic_states(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.states[i].is_nondeterministic())
            .collect()
    }

    pub fn is_fully_probabilistic(&self) -> bool {
        self.states.iter().all(|s| !s.is_nondeterministic())
    }

    pub fn find_label(&self, l: Label) -> Option<usize> {
        self.states.iter().position(|s| s.has(l))
    }

    /// Successor indices over all actions.
    pub fn successors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.states[s]
            .choices
            .iter()
            .flat_map(|c| c.dist.iter().map(|(t, _)| *t))
    }

    /// The chain obtained by fixing the choice at every nondeterministic
    /// state (`pick[s]` is the index into `choices`).
    pub fn induced(&self, pick: &dyn Fn(usize) -> usize) -> Rmdp {
        let mut m = self.clone();
        for (i, s) in m.states.iter_mut().enumerate() {
            if s.choices.len() > 1 {
                let c = s.choices[pick(i)].clone();
                s.choices = vec![Choice {
                    action: Action::Unique,
                    dist: c.dist,
                }];
            }
        }
        m
    }

    /// The same model with a different initial state, restricted to the
    /// states reachable from it.
    pub fn rooted_at(&self, root: usize) -> Rmdp {
        let mut order = vec![root];
        let mut index: HashMap<usize, usize> = HashMap::from([(root, 0)]);
        let mut i = 0;
        while i < order.len() {
            for t in self.successors(order[i]).collect::<Vec<_>>() {
                if !index.contains_key(&t) {
                    index.insert(t, order.len());
                    order.push(t);
                }
            }
            i += 1;
        }
        let states = order
            .iter()
            .map(|&old| {
                let mut s = self.states[old].clone();
                for c in &mut s.choices {
                    for (t, _) in &mut c.dist {
                        *t = index[t];
                    }
                    c.dist.sort_by_key(|(t, _)| *t);
                }
                s
            })
            .collect();
        Rmdp { states, initial: 0 }
    }

    /// Checks distributions, indices, actions and label constraints.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let bad = |msg: String| Err(Error::Invariant(msg));
        if self.initial >= n {
            return bad(format!("initial state {} out of range", self.initial));
        }
        for (i, s) in self.states.iter().enumerate() {
            if s.reward.is_negative() {
                return bad(format!("state {i} has negative reward"));
            }
            if !s.reward.is_zero() && !s.has(Label::Term) {
                return bad(format!("state {i} has a reward but is not terminal"));
            }
            if s.labels.len() > 1 {
                return bad(format!("state {i} carries several labels"));
            }
            let actions: Vec<Action> = s.choices.iter().map(|c| c.action).collect();
            match actions.as_slice() {
                [] | [Action::Unique] | [Action::Left, Action::Right] => {}
                _ => return bad(format!("state {i} has actions {actions:?}")),
            }
            for c in &s.choices {
                let mut total = Rational::zero();
                for (t, p) in &c.dist {
                    if *t >= n {
                        return bad(format!("state {i} points to missing state {t}"));
                    }
                    if !p.is_positive() {
                        return bad(format!("state {i} has a non-positive probability"));
                    }
                    total += p;
                }
                if !total.is_one() {
                    return bad(format!(
                        "distribution of state {i} ({}) sums to {total}",
                        c.action
                    ));
                }
            }
            let to_sink = |m: &Rmdp| {
                s.choices.len() == 1
                    && s.choices[0].dist.len() == 1
                    && m.states[s.choices[0].dist[0].0].has(Label::Sink)
            };
            if (s.has(Label::Term) || s.has(Label::Bad)) && !s.choices.is_empty() && !to_sink(self)
            {
                return bad(format!("terminal state {i} does not lead to the sink"));
            }
            if s.has(Label::Sink)
                && !s.choices.is_empty()
                && s.choices[0].dist != vec![(i, Rational::one())]
            {
                return bad(format!("sink state {i} does not self-loop"));
            }
        }
        Ok(())
    }
}

enum Step {
    Bad,
    Nondet(Cont, Cont),
    Dist(Vec<(Cont, State, Rational)>),
}

fn step(c: &Cont, st: &State) -> Result<Step> {
    let det = |c: Cont, s: State| Step::Dist(vec![(c, s, Rational::one())]);
    Ok(match c {
        Cont::Down => unreachable!("terminal configurations are not stepped"),
        Cont::Then(inner, q) => match &**inner {
            Cont::Down => det(Cont::Run(q.clone()), st.clone()),
            inner => match step(inner, st)? {
                Step::Bad => Step::Bad,
                Step::Nondet(l, r) => Step::Nondet(l.then(q), r.then(q)),
                Step::Dist(d) => {
                    Step::Dist(d.into_iter().map(|(c, s, p)| (c.then(q), s, p)).collect())
                }
            },
        },
        Cont::Run(s) => match s {
            Stmt::Skip => det(Cont::Down, st.clone()),
            Stmt::Abort => det(Cont::Run(Stmt::Abort), st.clone()),
            Stmt::Assign(x, e) => det(Cont::Down, st.with(x, e.eval(st)?)),
            Stmt::Observe(g) => {
                if g.eval(st)? {
                    det(Cont::Down, st.clone())
                } else {
                    Step::Bad
                }
            }
            Stmt::Seq(a, b) => {
                return step(&Cont::Then(Box::new(Cont::Run((**a).clone())), (**b).clone()), st)
            }
            Stmt::Ite(g, a, b) => {
                let next = if g.eval(st)? { a } else { b };
                det(Cont::Run((**next).clone()), st.clone())
            }
            Stmt::While(g, body) => {
                if g.eval(st)? {
                    det(Cont::Run(Stmt::seq((**body).clone(), s.clone())), st.clone())
                } else {
                    det(Cont::Down, st.clone())
                }
            }
            Stmt::PChoice(a, p, b) => {
                let p = p.eval(st)?;
                let q = Rational::one() - &p;
                Step::Dist(vec![
                    (Cont::Run((**a).clone()), st.clone(), p),
                    (Cont::Run((**b).clone()), st.clone(), q),
                ])
            }
            Stmt::NDChoice(a, b) => Step::Nondet(Cont::Run((**a).clone()), Cont::Run((**b).clone())),
        },
    })
}

fn op_state(c: Cont, s: State) -> OpState {
    match c {
        Cont::Down => OpState::Term(s),
        c => OpState::Conf(c, s),
    }
}

struct Builder<'a> {
    f: &'a Expectation,
    states: Vec<ModelState>,
    index: HashMap<OpState, usize>,
    queue: VecDeque<usize>,
}

impl Builder<'_> {
    fn intern(&mut self, s: OpState) -> Result<usize> {
        if let Some(&i) = self.index.get(&s) {
            return Ok(i);
        }
        let (labels, reward) = match &s {
            OpState::Term(t) => {
                let r = match self.f.eval(t)? {
                    Value::Finite(r) => r,
                    Value::Infinity => {
                        return Err(Error::Evaluation(format!("infinite reward at {t}")))
                    }
                };
                (BTreeSet::from([Label::Term]), r)
            }
            OpState::Bad => (BTreeSet::from([Label::Bad]), Rational::zero()),
            OpState::Sink => (BTreeSet::from([Label::Sink]), Rational::zero()),
            OpState::Conf(..) => (BTreeSet::new(), Rational::zero()),
        };
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(ModelState {
            origin: Some(s),
            labels,
            reward,
            choices: Vec::new(),
        });
        self.queue.push_back(i);
        Ok(i)
    }

    fn dist(&mut self, succ: Vec<(OpState, Rational)>) -> Result<Vec<(usize, Rational)>> {
        let mut out: Vec<(usize, Rational)> = Vec::new();
        for (s, p) in succ {
            if p.is_zero() {
                continue;
            }
            let i = self.intern(s)?;
            match out.iter_mut().find(|(t, _)| *t == i) {
                Some((_, q)) => *q += p,
                None => out.push((i, p)),
            }
        }
        out.sort_by_key(|(t, _)| *t);
        Ok(out)
    }

    fn expand(&mut self, i: usize) -> Result<()> {
        let origin = self.states[i].origin.clone().expect("built states have origins");
        let unique = |dist| {
            vec![Choice {
                action: Action::Unique,
                dist,
            }]
        };
        let choices = match origin {
            // Patched once the sink exists; see `attach_sink`.
            OpState::Term(_) | OpState::Bad => unique(vec![(usize::MAX, Rational::one())]),
            OpState::Sink => unique(vec![(i, Rational::one())]),
            OpState::Conf(c, st) => match step(&c, &st)? {
                Step::Bad => unique(self.dist(vec![(OpState::Bad, Rational::one())])?),
                Step::Nondet(l, r) => {
                    let l = self.dist(vec![(op_state(l, st.clone()), Rational::one())])?;
                    let r = self.dist(vec![(op_state(r, st), Rational::one())])?;
                    vec![
                        Choice {
                            action: Action::Left,
                            dist: l,
                        },
                        Choice {
                            action: Action::Right,
                            dist: r,
                        },
                    ]
                }
                Step::Dist(d) => unique(
                    self.dist(d.into_iter().map(|(c, s, p)| (op_state(c, s), p)).collect())?,
                ),
            },
        };
        self.states[i].choices = choices;
        Ok(())
    }

    /// Adds the sink as the last state, so that a smaller budget explores a
    /// prefix of a larger one.
    fn attach_sink(&mut self) -> Result<()> {
        let absorbed: Vec<usize> = (0..self.states.len())
            .filter(|&i| self.states[i].choices.iter().any(|c| c.dist[0].0 == usize::MAX))
            .collect();
        if absorbed.is_empty() {
            return Ok(());
        }
        let sink = self.intern(OpState::Sink)?;
        self.expand(sink)?;
        for i in absorbed {
            self.states[i].choices[0].dist[0].0 = sink;
        }
        Ok(())
    }
}

/// Builds the operational model of `p` from `init` with reward `f` on
/// terminal states, expanding at most `max_states` configurations (terminal,
/// `↯` and sink states are always completed).
pub fn build(p: &Program, init: &State, f: &Expectation, max_states: usize) -> Result<Rmdp> {
    build_stmt(&p.body, init, f, max_states)
}

pub fn build_stmt(body: &Stmt, init: &State, f: &Expectation, max_states: usize) -> Result<Rmdp> {
    if let Some(q) = body.first_param() {
        return Err(Error::UninstantiatedParameter(q));
    }
    let mut b = Builder {
        f,
        states: Vec::new(),
        index: HashMap::new(),
        queue: VecDeque::new(),
    };
    b.intern(op_state(Cont::Run(body.clone()), init.clone()))?;
    while let Some(i) = b.queue.pop_front() {
        let absorbing = !matches!(b.states[i].origin, Some(OpState::Conf(..)));
        if absorbing || b.states.len() < max_states {
            b.expand(i)?;
        }
    }
    b.attach_sink()?;
    Ok(Rmdp {
        states: b.states,
        initial: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn model(src: &str, f: &str) -> Rmdp {
        let p = parse(src).unwrap();
        let st = State::zeros(&p.declared_vars);
        build(&p, &st, &Expectation::parse(f).unwrap(), 10_000).unwrap()
    }

    #[test]
    fn skip_chain() {
        let m = model("skip", "7");
        assert_eq!(m.len(), 3);
        assert_eq!(m.states[1].reward, Rational::from_integer(7.into()));
        assert!(m.states[2].has(Label::Sink));
        m.validate().unwrap();
    }

    #[test]
    fn example_one_shape() {
        let m = model("{ {x := 5} [] {x := 2} } [1/2] {x := 2}; observe (x > 3)", "x");
        m.validate().unwrap();
        assert_eq!(m.nondeterministic_states().len(), 1);
        let rewarded: Vec<_> = m.states.iter().filter(|s| !s.reward.is_zero()).collect();
        assert_eq!(rewarded.len(), 1);
        assert_eq!(rewarded[0].reward, Rational::from_integer(5.into()));
        assert_eq!((m.len(), m.transition_count()), (11, 13));
    }

    #[test]
    fn loops_close() {
        let m = model("x := 1; while (x = 1) { x := 1 }", "x");
        assert!(m.frontier().is_empty());
        assert!(m.find_label(Label::Term).is_none());
        let a = model("abort", "1");
        assert_eq!(a.len(), 1);
        assert_eq!(a.states[0].choices[0].dist, vec![(0, Rational::one())]);
    }

    #[test]
    fn partial_models_extend() {
        let p = parse("while (0 <= x) { x := x + 1 }").unwrap();
        let st = State::zeros(&p.declared_vars);
        let f = Expectation::one();
        let small = build(&p, &st, &f, 5).unwrap();
        let large = build(&p, &st, &f, 9).unwrap();
        assert!(!small.frontier().is_empty());
        for (i, s) in small.states.iter().enumerate() {
            assert_eq!(s.origin, large.states[i].origin);
            if !s.choices.is_empty() {
                assert_eq!(s.choices, large.states[i].choices);
            }
        }
    }
}
