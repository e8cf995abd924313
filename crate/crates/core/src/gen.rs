//! Seeded random programs, expectations, states and models for property
//! checks.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expectation::Expectation;
use crate::operational::{Action, Choice, Label, ModelState, Rmdp};
use crate::syntax::{AExp, BExp, CmpOp, ProbExp, Program, Stmt};
use crate::{Rational, State};

const VARS: [&str; 4] = ["x", "y", "z", "w"];
const PARAMS: [&str; 2] = ["p", "q"];
const OPS: [CmpOp; 6] = [
    CmpOp::Eq,
    CmpOp::Ne,
    CmpOp::Lt,
    CmpOp::Le,
    CmpOp::Gt,
    CmpOp::Ge,
];

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    pub vars: usize,
    /// Constants are drawn from `-range..=range`.
    pub range: i64,
    pub observe: bool,
    pub abort: bool,
    pub nondet: bool,
    pub loops: bool,
    pub params: bool,
}

impl Default for GenConfig {
    /// Loop-free, fully probabilistic programs with observations.
    fn default() -> Self {
        GenConfig {
            max_depth: 6,
            vars: 4,
            range: 3,
            observe: true,
            abort: true,
            nondet: false,
            loops: false,
            params: false,
        }
    }
}

pub struct Generator {
    rng: ChaCha8Rng,
    pub config: GenConfig,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, GenConfig::default())
    }

    pub fn with_config(seed: u64, config: GenConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        }
    }

    pub fn int(&mut self, range: std::ops::RangeInclusive<i64>) -> i64 {
        self.rng.gen_range(range)
    }

    fn constant(&mut self) -> i64 {
        let r = self.config.range;
        self.rng.gen_range(-r..=r)
    }

    fn var(&mut self) -> &'static str {
        VARS[self.rng.gen_range(0..self.config.vars.clamp(1, VARS.len()))]
    }

    fn probability(&mut self) -> Rational {
        const CHOICES: [(i64, i64); 9] = [
            (1, 2),
            (1, 3),
            (2, 3),
            (1, 4),
            (3, 4),
            (1, 5),
            (4, 5),
            (0, 1),
            (1, 1),
        ];
        let (n, d) = *CHOICES.choose(&mut self.rng).unwrap();
        Rational::new(n.into(), d.into())
    }

    pub fn aexp(&mut self, depth: usize) -> AExp {
        match self.rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
            0 => AExp::int(self.constant()),
            1 => AExp::var(self.var()),
            2 => AExp::add(self.aexp(depth - 1), self.aexp(depth - 1)),
            3 => AExp::sub(self.aexp(depth - 1), self.aexp(depth - 1)),
            _ => AExp::mul(self.aexp(depth - 1), self.aexp(depth - 1)),
        }
    }

    /// `x`, `c`, or `x ± c`: keeps values small in generated programs.
    fn small_aexp(&mut self) -> AExp {
        match self.rng.gen_range(0..4) {
            0 | 1 => AExp::int(self.constant()),
            2 => AExp::var(self.var()),
            _ => AExp::add(AExp::var(self.var()), AExp::int(self.rng.gen_range(-1..=1))),
        }
    }

    fn atom(&mut self) -> BExp {
        let op = *OPS.choose(&mut self.rng).unwrap();
        let lhs = AExp::var(self.var());
        let rhs = if self.rng.gen_bool(0.7) {
            AExp::int(self.constant())
        } else {
            AExp::var(self.var())
        };
        BExp::cmp(op, lhs, rhs)
    }

    pub fn bexp(&mut self, depth: usize) -> BExp {
        match self.rng.gen_range(0..if depth == 0 { 1 } else { 6 }) {
            0..=2 => self.atom(),
            3 => BExp::and(self.bexp(depth - 1), self.bexp(depth - 1)),
            4 => BExp::or(self.bexp(depth - 1), self.bexp(depth - 1)),
            _ => BExp::not(self.bexp(depth - 1)),
        }
    }

    fn leaf(&mut self) -> Stmt {
        let mut weights = vec![(0, 6), (1, 1)];
        if self.config.observe {
            weights.push((2, 2));
        }
        if self.config.abort {
            weights.push((3, 1));
        }
        match weights.choose_weighted(&mut self.rng, |w| w.1).unwrap().0 {
            0 => Stmt::assign(self.var(), self.small_aexp()),
            1 => Stmt::Skip,
            2 => Stmt::Observe(self.bexp(1)),
            _ => Stmt::Abort,
        }
    }

    fn prob_exp(&mut self) -> ProbExp {
        if self.config.params && self.rng.gen_bool(0.3) {
            ProbExp::param(PARAMS.choose(&mut self.rng).unwrap())
        } else {
            ProbExp::Const(self.probability())
        }
    }

    /// A statement whose syntax tree has at most `depth` levels.
    pub fn stmt(&mut self, depth: usize) -> Stmt {
        if depth <= 1 || self.rng.gen_bool(0.25) {
            return self.leaf();
        }
        let mut weights = vec![(0, 4), (1, 2), (2, 3)];
        if self.config.nondet {
            weights.push((3, 1));
        }
        if self.config.loops {
            weights.push((4, 1));
        }
        let d = depth - 1;
        match weights.choose_weighted(&mut self.rng, |w| w.1).unwrap().0 {
            0 => Stmt::seq(self.stmt(d), self.stmt(d)),
            1 => Stmt::ite(self.bexp(1), self.stmt(d), self.stmt(d)),
            2 => {
                let p = self.prob_exp();
                Stmt::pchoice(self.stmt(d), p, self.stmt(d))
            }
            3 => Stmt::ndchoice(self.stmt(d), self.stmt(d)),
            _ => Stmt::while_loop(self.bexp(1), self.stmt(d)),
        }
    }

    /// A program with the configured features.
    pub fn program(&mut self) -> Program {
        let depth = self.config.max_depth;
        Program::from_stmt(self.stmt(depth))
    }

    /// A terminating-or-not loop `init; while (G) { body }` over one
    /// counter, with a probabilistic body.
    pub fn loopy(&mut self) -> Program {
        let x = self.var();
        let bound = self.rng.gen_range(1..=3);
        let guard = match self.rng.gen_range(0..3) {
            0 => BExp::cmp(CmpOp::Lt, AExp::var(x), AExp::int(bound)),
            1 => BExp::and(
                BExp::cmp(CmpOp::Lt, AExp::int(-bound), AExp::var(x)),
                BExp::cmp(CmpOp::Lt, AExp::var(x), AExp::int(bound)),
            ),
            _ => BExp::eq(AExp::var(x), AExp::int(0)),
        };
        let step = |d: i64| Stmt::assign(x, AExp::add(AExp::var(x), AExp::int(d)));
        let up = step(1);
        let other = match self.rng.gen_range(0..3) {
            0 => step(-1),
            1 => Stmt::Skip,
            _ => Stmt::assign(x, AExp::int(self.constant())),
        };
        let inner = GenConfig {
            max_depth: 2,
            loops: false,
            nondet: false,
            ..self.config.clone()
        };
        let saved = std::mem::replace(&mut self.config, inner);
        let extra = self.stmt(2);
        self.config = saved;
        let body = Stmt::seq(Stmt::pchoice(up, ProbExp::Const(self.probability()), other), extra);
        Program::from_stmt(Stmt::seq(
            Stmt::assign(x, AExp::int(self.rng.gen_range(-1..=1))),
            Stmt::while_loop(guard, body),
        ))
    }

    /// A non-negative post-expectation over the generator's variables.
    pub fn post(&mut self) -> Expectation {
        let mut e = Expectation::zero();
        for _ in 0..self.rng.gen_range(1..=2) {
            let g = self.bexp(1);
            let c = Rational::from_integer(self.rng.gen_range(1..=3).into());
            let term = if self.rng.gen_bool(0.5) {
                Expectation::indicator(&g).scale(&c)
            } else {
                // [0 <= x]·x
                let x = self.var();
                let nonneg = BExp::cmp(CmpOp::Le, AExp::int(0), AExp::var(x));
                Expectation::from_aexp(&AExp::var(x)).guard_mul_bexp(&nonneg)
            };
            e = e.add(&term);
        }
        e
    }

    /// A post-expectation bounded by 1.
    pub fn predicate(&mut self) -> Expectation {
        let g = self.bexp(1);
        if self.rng.gen_bool(0.5) {
            Expectation::indicator(&g)
        } else {
            Expectation::indicator(&g).scale(&self.probability())
        }
    }

    pub fn state(&mut self, vars: &[String]) -> State {
        State::from_pairs(vars.iter().map(|v| (v.clone(), self.constant().into())))
    }

    /// A random closed model: state 0 initial, one `term` state with a
    /// reward, possibly a `bad` state, a sink, and otherwise random
    /// distributions (some states nondeterministic when `nondet` is set).
    pub fn rmdp(&mut self) -> Rmdp {
        let inner = self.rng.gen_range(1..=8);
        let with_bad = self.rng.gen_bool(0.7);
        let term = inner;
        let bad = if with_bad { Some(inner + 1) } else { None };
        let sink = inner + 1 + usize::from(with_bad);
        let n = sink + 1;
        let blank = ModelState {
            origin: None,
            labels: BTreeSet::new(),
            reward: Rational::zero(),
            choices: Vec::new(),
        };
        let mut states = vec![blank; n];
        for i in 0..inner {
            let actions: &[Action] = if self.config.nondet && self.rng.gen_bool(0.3) {
                &[Action::Left, Action::Right]
            } else {
                &[Action::Unique]
            };
            for &action in actions {
                let dist = self.distribution(n - 1);
                states[i].choices.push(Choice { action, dist });
            }
        }
        let to_sink = vec![Choice {
            action: Action::Unique,
            dist: vec![(sink, Rational::one())],
        }];
        states[term].labels.insert(Label::Term);
        states[term].reward = Rational::new(self.rng.gen_range(0..=12).into(), 4.into());
        states[term].choices = to_sink.clone();
        if let Some(b) = bad {
            states[b].labels.insert(Label::Bad);
            states[b].choices = to_sink;
        }
        states[sink].labels.insert(Label::Sink);
        states[sink].choices = vec![Choice {
            action: Action::Unique,
            dist: vec![(sink, Rational::one())],
        }];
        Rmdp { states, initial: 0 }
    }

    /// Positive weights over up to three distinct targets below `n`.
    fn distribution(&mut self, n: usize) -> Vec<(usize, Rational)> {
        let k = self.rng.gen_range(1..=3.min(n));
        let mut targets: Vec<usize> = (0..n).collect();
        targets.shuffle(&mut self.rng);
        targets.truncate(k);
        targets.sort_unstable();
        let weights: Vec<i64> = (0..k).map(|_| self.rng.gen_range(1..=4)).collect();
        let total: i64 = weights.iter().sum();
        targets
            .into_iter()
            .zip(weights)
            .map(|(t, w)| (t, Rational::new(w.into(), total.into())))
            .collect()
    }
}
