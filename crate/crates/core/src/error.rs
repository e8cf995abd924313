use std::fmt;

use crate::Rational;

/// Line/column position in program text (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A single static-validation finding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    /// Variable used but not declared.
    Scope(String),
    /// Probability parameter used but not listed.
    UnknownParameter(String),
    /// Probability constant outside `[0, 1]`.
    Range(Rational),
    /// Name with the reserved `__` prefix in user code.
    Reserved(String),
    /// A name is used both as a variable and as a parameter.
    Clash(String),
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::Scope(v) => write!(f, "undeclared variable `{v}`"),
            ValidationIssue::UnknownParameter(p) => write!(f, "undeclared parameter `{p}`"),
            ValidationIssue::Range(r) => write!(f, "probability {r} is outside [0, 1]"),
            ValidationIssue::Reserved(v) => {
                write!(f, "`{v}` uses the reserved `__` prefix")
            }
            ValidationIssue::Clash(v) => {
                write!(f, "`{v}` is used both as a variable and as a parameter")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },

    #[error("invalid program: {}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),

    #[error("expectation evaluates to the negative value {value} at {state}")]
    NegativeExpectation { state: String, value: Rational },

    #[error("variable `{0}` has no value in the state")]
    UnboundVariable(String),

    #[error("parameter `{0}` must be instantiated before analysis")]
    UninstantiatedParameter(String),

    #[error("state-dependent probabilities are not supported by the symbolic transformer")]
    QuotientProbabilityUnsupported,

    #[error(
        "conditional pre-expectations are not defined for nondeterministic programs; \
         positional schedulers do not determine the conditional expected reward"
    )]
    NondeterminismUnsupported,

    #[error("program is infeasible from {0}")]
    Infeasible(String),

    #[error("bounded expectation exceeds 1 (value {0})")]
    BoundExceeded(Rational),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("model invariant violated: {0}")]
    Invariant(String),

    #[error("model has nondeterministic states on a cycle (state {0})")]
    CyclicNondeterminism(usize),

    #[error("{count} nondeterministic states exceed the enumeration budget of {budget}")]
    BudgetExceeded { count: usize, budget: usize },

    #[error("expected reward does not converge: {0}")]
    NonConvergent(String),

    #[error("loop is not iid: {0}")]
    NotIid(String),

    #[error("no fixpoint found for loop `{0}` within the iteration limit")]
    LoopFixpointNotFound(String),

    #[error("model is not fully probabilistic (state {0} has a nondeterministic choice)")]
    Nondeterministic(usize),

    #[error("model is only partially explored ({0} frontier states)")]
    PartialModel(usize),

    #[error("{0}")]
    Usage(String),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
