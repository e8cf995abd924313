use num_traits::{One, Zero};

use super::{ProbExp, Program, Stmt, RESERVED_PREFIX};
use crate::{Error, Rational, Result, ValidationIssue};

/// Full static check for user-written programs: scoping, parameters,
/// probability ranges, name clashes, and the reserved `__` prefix.
pub fn validate(p: &Program) -> Result<()> {
    check(p, true)
}

/// As [`validate`], but accepts reserved names (transformation output).
pub fn validate_generated(p: &Program) -> Result<()> {
    check(p, false)
}

fn check(p: &Program, strict: bool) -> Result<()> {
    let mut issues = Vec::new();
    let (vars, params) = p.body.names();
    for v in &vars {
        if !p.declared_vars.contains(v) {
            issues.push(ValidationIssue::Scope(v.clone()));
        }
        if params.contains(v) || p.params.contains(v) {
            issues.push(ValidationIssue::Clash(v.clone()));
        }
        if strict && v.starts_with(RESERVED_PREFIX) {
            issues.push(ValidationIssue::Reserved(v.clone()));
        }
    }
    for q in &params {
        if !p.params.contains(q) {
            issues.push(ValidationIssue::UnknownParameter(q.clone()));
        }
        if strict && q.starts_with(RESERVED_PREFIX) {
            issues.push(ValidationIssue::Reserved(q.clone()));
        }
    }
    check_ranges(&p.body, &mut issues);
    if issues.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(issues))
    }
}

fn check_ranges(s: &Stmt, issues: &mut Vec<ValidationIssue>) {
    match s {
        Stmt::PChoice(a, p, b) => {
            if let ProbExp::Const(r) = p {
                if *r < Rational::zero() || *r > Rational::one() {
                    issues.push(ValidationIssue::Range(r.clone()));
                }
            }
            check_ranges(a, issues);
            check_ranges(b, issues);
        }
        Stmt::Seq(a, b) | Stmt::Ite(_, a, b) | Stmt::NDChoice(a, b) => {
            check_ranges(a, issues);
            check_ranges(b, issues);
        }
        Stmt::While(_, body) => check_ranges(body, issues),
        _ => {}
    }
}
