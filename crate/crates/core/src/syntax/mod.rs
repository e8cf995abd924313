//! Abstract syntax, concrete grammar, printer and static checks for cpGCL.

mod lexer;
mod parser;
mod printer;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;

use crate::expectation::Expectation;
use crate::{Error, Rational, Result};

pub use parser::{parse, parse_aexp, parse_bexp, parse_expectation, parse_guard, parse_unchecked};
pub use validate::{validate, validate_generated};

/// Names starting with this prefix are reserved for transformation output.
pub const RESERVED_PREFIX: &str = "__";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AExp {
    Int(BigInt),
    Var(String),
    Add(Box<AExp>, Box<AExp>),
    Sub(Box<AExp>, Box<AExp>),
    Mul(Box<AExp>, Box<AExp>),
}

impl AExp {
    pub fn int(n: i64) -> Self {
        AExp::Int(n.into())
    }

    pub fn var(name: &str) -> Self {
        AExp::Var(name.to_string())
    }

    pub fn add(a: AExp, b: AExp) -> Self {
        AExp::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: AExp, b: AExp) -> Self {
        AExp::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: AExp, b: AExp) -> Self {
        AExp::Mul(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, state: &crate::State) -> Result<BigInt> {
        Ok(match self {
            AExp::Int(n) => n.clone(),
            AExp::Var(v) => state.get(v)?.clone(),
            AExp::Add(a, b) => a.eval(state)? + b.eval(state)?,
            AExp::Sub(a, b) => a.eval(state)? - b.eval(state)?,
            AExp::Mul(a, b) => a.eval(state)? * b.eval(state)?,
        })
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            AExp::Int(_) => {}
            AExp::Var(v) => push_unique(out, v),
            AExp::Add(a, b) | AExp::Sub(a, b) | AExp::Mul(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces every occurrence of `var` by `by`.
    pub fn substitute(&self, var: &str, by: &AExp) -> AExp {
        match self {
            AExp::Var(v) if v == var => by.clone(),
            AExp::Int(_) | AExp::Var(_) => self.clone(),
            AExp::Add(a, b) => AExp::add(a.substitute(var, by), b.substitute(var, by)),
            AExp::Sub(a, b) => AExp::sub(a.substitute(var, by), b.substitute(var, by)),
            AExp::Mul(a, b) => AExp::mul(a.substitute(var, by), b.substitute(var, by)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BExp {
    True,
    False,
    Cmp(CmpOp, AExp, AExp),
    And(Box<BExp>, Box<BExp>),
    Or(Box<BExp>, Box<BExp>),
    Not(Box<BExp>),
}

impl BExp {
    pub fn cmp(op: CmpOp, a: AExp, b: AExp) -> Self {
        BExp::Cmp(op, a, b)
    }

    pub fn eq(a: AExp, b: AExp) -> Self {
        BExp::Cmp(CmpOp::Eq, a, b)
    }

    pub fn and(a: BExp, b: BExp) -> Self {
        BExp::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BExp, b: BExp) -> Self {
        BExp::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: BExp) -> Self {
        BExp::Not(Box::new(a))
    }

    pub fn eval(&self, state: &crate::State) -> Result<bool> {
        Ok(match self {
            BExp::True => true,
            BExp::False => false,
            BExp::Cmp(op, a, b) => op.holds(&a.eval(state)?, &b.eval(state)?),
            BExp::And(a, b) => a.eval(state)? && b.eval(state)?,
            BExp::Or(a, b) => a.eval(state)? || b.eval(state)?,
            BExp::Not(a) => !a.eval(state)?,
        })
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            BExp::True | BExp::False => {}
            BExp::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BExp::And(a, b) | BExp::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            BExp::Not(a) => a.collect_vars(out),
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, var: &str, by: &AExp) -> BExp {
        match self {
            BExp::True | BExp::False => self.clone(),
            BExp::Cmp(op, a, b) => BExp::Cmp(*op, a.substitute(var, by), b.substitute(var, by)),
            BExp::And(a, b) => BExp::and(a.substitute(var, by), b.substitute(var, by)),
            BExp::Or(a, b) => BExp::or(a.substitute(var, by), b.substitute(var, by)),
            BExp::Not(a) => BExp::not(a.substitute(var, by)),
        }
    }
}

/// Probability of a binary probabilistic choice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProbExp {
    Const(Rational),
    Param(String),
    /// State-dependent probability `numerator / denominator`, produced by
    /// observation hoisting.
    Quotient(Box<Expectation>, Box<Expectation>),
}

impl ProbExp {
    pub fn constant(n: i64, d: i64) -> Self {
        ProbExp::Const(Rational::new(n.into(), d.into()))
    }

    pub fn param(name: &str) -> Self {
        ProbExp::Param(name.to_string())
    }

    /// Evaluates the probability at `state`; must lie in `[0, 1]`.
    pub fn eval(&self, state: &crate::State) -> Result<Rational> {
        let value = match self {
            ProbExp::Const(r) => r.clone(),
            ProbExp::Param(p) => return Err(Error::UninstantiatedParameter(p.clone())),
            ProbExp::Quotient(num, den) => {
                let n = num.eval(state)?;
                let d = den.eval(state)?;
                match (n, d) {
                    (crate::Value::Finite(n), crate::Value::Finite(d)) => {
                        if num_traits::Zero::is_zero(&d) {
                            return Err(Error::Evaluation(format!(
                                "probability denominator is 0 at {state}"
                            )));
                        }
                        n / d
                    }
                    _ => {
                        return Err(Error::Evaluation(format!(
                            "infinite probability quotient at {state}"
                        )))
                    }
                }
            }
        };
        if value < Rational::from_integer(0.into()) || value > Rational::from_integer(1.into()) {
            return Err(Error::Evaluation(format!(
                "probability {value} outside [0, 1] at {state}"
            )));
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Stmt {
    Skip,
    Abort,
    Assign(String, AExp),
    Seq(Box<Stmt>, Box<Stmt>),
    Ite(BExp, Box<Stmt>, Box<Stmt>),
    PChoice(Box<Stmt>, ProbExp, Box<Stmt>),
    NDChoice(Box<Stmt>, Box<Stmt>),
    While(BExp, Box<Stmt>),
    Observe(BExp),
}

impl Stmt {
    pub fn assign(var: &str, e: AExp) -> Self {
        Stmt::Assign(var.to_string(), e)
    }

    pub fn seq(a: Stmt, b: Stmt) -> Self {
        Stmt::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of `stmts`; `skip` when empty.
    pub fn seq_all(stmts: impl IntoIterator<Item = Stmt>) -> Self {
        let mut items: Vec<Stmt> = stmts.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Stmt::Skip;
        };
        while let Some(s) = items.pop() {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    pub fn ite(g: BExp, a: Stmt, b: Stmt) -> Self {
        Stmt::Ite(g, Box::new(a), Box::new(b))
    }

    pub fn pchoice(a: Stmt, p: ProbExp, b: Stmt) -> Self {
        Stmt::PChoice(Box::new(a), p, Box::new(b))
    }

    pub fn ndchoice(a: Stmt, b: Stmt) -> Self {
        Stmt::NDChoice(Box::new(a), Box::new(b))
    }

    pub fn while_loop(g: BExp, body: Stmt) -> Self {
        Stmt::While(g, Box::new(body))
    }

    pub fn is_fully_probabilistic(&self) -> bool {
        !self.any(&mut |s| matches!(s, Stmt::NDChoice(..)))
    }

    pub fn has_observe(&self) -> bool {
        self.any(&mut |s| matches!(s, Stmt::Observe(_)))
    }

    pub fn has_loop(&self) -> bool {
        self.any(&mut |s| matches!(s, Stmt::While(..)))
    }

    /// True if `pred` holds for some sub-statement (including `self`).
    pub fn any(&self, pred: &mut impl FnMut(&Stmt) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Stmt::Seq(a, b)
            | Stmt::Ite(_, a, b)
            | Stmt::PChoice(a, _, b)
            | Stmt::NDChoice(a, b) => a.any(pred) || b.any(pred),
            Stmt::While(_, body) => body.any(pred),
            _ => false,
        }
    }

    /// Variables in first-occurrence order, and probability parameters.
    pub fn names(&self) -> (Vec<String>, BTreeSet<String>) {
        let mut vars = Vec::new();
        let mut params = BTreeSet::new();
        self.collect_names(&mut vars, &mut params);
        (vars, params)
    }

    fn collect_names(&self, vars: &mut Vec<String>, params: &mut BTreeSet<String>) {
        match self {
            Stmt::Skip | Stmt::Abort => {}
            Stmt::Assign(x, e) => {
                push_unique(vars, x);
                e.collect_vars(vars);
            }
            Stmt::Seq(a, b) | Stmt::NDChoice(a, b) => {
                a.collect_names(vars, params);
                b.collect_names(vars, params);
            }
            Stmt::Ite(g, a, b) => {
                g.collect_vars(vars);
                a.collect_names(vars, params);
                b.collect_names(vars, params);
            }
            Stmt::PChoice(a, p, b) => {
                match p {
                    ProbExp::Const(_) => {}
                    ProbExp::Param(name) => {
                        params.insert(name.clone());
                    }
                    ProbExp::Quotient(n, d) => {
                        for v in n.vars().into_iter().chain(d.vars()) {
                            push_unique(vars, &v);
                        }
                    }
                }
                a.collect_names(vars, params);
                b.collect_names(vars, params);
            }
            Stmt::While(g, body) => {
                g.collect_vars(vars);
                body.collect_names(vars, params);
            }
            Stmt::Observe(g) => g.collect_vars(vars),
        }
    }

    /// Replaces parameters by the given constants.
    pub fn instantiate(&self, bindings: &BTreeMap<String, Rational>) -> Stmt {
        let rec = |s: &Stmt| Box::new(s.instantiate(bindings));
        match self {
            Stmt::Seq(a, b) => Stmt::Seq(rec(a), rec(b)),
            Stmt::Ite(g, a, b) => Stmt::Ite(g.clone(), rec(a), rec(b)),
            Stmt::PChoice(a, p, b) => {
                let p = match p {
                    ProbExp::Param(name) => match bindings.get(name) {
                        Some(v) => ProbExp::Const(v.clone()),
                        None => p.clone(),
                    },
                    _ => p.clone(),
                };
                Stmt::PChoice(rec(a), p, rec(b))
            }
            Stmt::NDChoice(a, b) => Stmt::NDChoice(rec(a), rec(b)),
            Stmt::While(g, body) => Stmt::While(g.clone(), rec(body)),
            _ => self.clone(),
        }
    }

    /// First uninstantiated parameter, if any.
    pub fn first_param(&self) -> Option<String> {
        let (_, params) = self.names();
        params.into_iter().next()
    }
}

fn push_unique(out: &mut Vec<String>, v: &str) {
    if !out.iter().any(|x| x == v) {
        out.push(v.to_string());
    }
}

/// A parsed program together with its variables and parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub body: Stmt,
    /// Program variables in first-occurrence order.
    pub declared_vars: Vec<String>,
    /// Probability parameters without a bound value.
    pub params: BTreeSet<String>,
}

impl Program {
    /// Wraps a statement, inferring variables and parameters from it.
    pub fn from_stmt(body: Stmt) -> Self {
        let (declared_vars, params) = body.names();
        Program {
            body,
            declared_vars,
            params,
        }
    }

    /// Binds parameters; returns an error for values outside `[0, 1]`.
    pub fn instantiate(&self, bindings: &BTreeMap<String, Rational>) -> Result<Program> {
        let zero = Rational::from_integer(0.into());
        let one = Rational::from_integer(1.into());
        let mut issues = Vec::new();
        for (name, v) in bindings {
            if self.params.contains(name) && (*v < zero || *v > one) {
                issues.push(crate::ValidationIssue::Range(v.clone()));
            }
        }
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        let body = self.body.instantiate(bindings);
        let params = self
            .params
            .iter()
            .filter(|p| !bindings.contains_key(*p))
            .cloned()
            .collect();
        Ok(Program {
            body,
            declared_vars: self.declared_vars.clone(),
            params,
        })
    }

    pub fn pretty(&self) -> String {
        printer::print_stmt(&self.body)
    }
}

impl std::fmt::Display for Stmt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&printer::print_stmt(self))
    }
}

impl std::fmt::Display for AExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&printer::print_aexp(self))
    }
}

impl std::fmt::Display for BExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&printer::print_bexp(self))
    }
}

impl std::fmt::Display for ProbExp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&printer::print_pexp(self))
    }
}

/// Pretty-prints a program; the output parses back to the same AST.
pub fn pretty_print(p: &Program) -> String {
    p.pretty()
}

/// Multi-line layout for humans (same grammar, also parses back).
pub fn pretty_print_indented(p: &Program) -> String {
    printer::print_stmt_indented(&p.body)
}
