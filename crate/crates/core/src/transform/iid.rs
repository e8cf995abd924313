use std::collections::BTreeSet;

use super::{append, negate};
use crate::syntax::{BExp, ProbExp, Stmt};
use crate::{Error, Result};

type Clean = BTreeSet<String>;

fn read(vars: Vec<String>, clean: &Clean) -> std::result::Result<(), String> {
    match vars.into_iter().find(|v| !clean.contains(v)) {
        Some(v) => Err(format!("`{v}` carries data between iterations")),
        None => Ok(()),
    }
}

/// Variables definitely written, from fresh data only, after `s`.
fn scan(s: &Stmt, clean: &Clean) -> std::result::Result<Clean, String> {
    Ok(match s {
        Stmt::Skip | Stmt::Abort => clean.clone(),
        Stmt::Assign(x, e) => {
            let mut vars = Vec::new();
            e.collect_vars(&mut vars);
            read(vars, clean)?;
            let mut out = clean.clone();
            out.insert(x.clone());
            out
        }
        Stmt::Seq(a, b) => scan(b, &scan(a, clean)?)?,
        Stmt::Ite(g, a, b) => {
            read(g.vars(), clean)?;
            let (x, y) = (scan(a, clean)?, scan(b, clean)?);
            x.intersection(&y).cloned().collect()
        }
        Stmt::PChoice(a, p, b) => {
            if let ProbExp::Quotient(n, d) = p {
                read(n.vars().into_iter().chain(d.vars()).collect(), clean)?;
            }
            let (x, y) = (scan(a, clean)?, scan(b, clean)?);
            x.intersection(&y).cloned().collect()
        }
        Stmt::While(g, body) => {
            read(g.vars(), clean)?;
            scan(body, clean)?;
            clean.clone()
        }
        Stmt::NDChoice(..) => return Err("loop body is nondeterministic".into()),
        Stmt::Observe(_) => return Err("loop body contains observe".into()),
    })
}

/// Why `l` fails the syntactic iid criterion, or `None` if it passes.
///
/// Every variable read in the body or the guard must first be written in
/// the same iteration on every path, from values computed there.
pub fn iid_violation(l: &Stmt) -> Option<String> {
    let Stmt::While(g, body) = l else {
        return Some("not a while loop".into());
    };
    if *g == BExp::True {
        return Some("guard is constantly true".into());
    }
    let clean = match scan(body, &Clean::new()) {
        Ok(c) => c,
        Err(why) => return Some(why),
    };
    read(g.vars(), &clean).err()
}

pub fn iid_check(l: &Stmt) -> bool {
    iid_violation(l).is_none()
}

/// `while (G) { P }` ↦ `P; observe (¬G)` for loops passing [`iid_check`].
///
/// The two agree when started in a state satisfying `G`.
pub fn loop_to_observe(l: &Stmt) -> Result<Stmt> {
    if let Some(why) = iid_violation(l) {
        return Err(Error::NotIid(why));
    }
    let Stmt::While(g, body) = l else {
        unreachable!()
    };
    Ok(append(body, Stmt::Observe(negate(g))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::Expectation;
    use crate::syntax::parse;
    use crate::{operational, solver, transformer, AnalysisValue, Rational, State};

    fn stmt(src: &str) -> Stmt {
        parse(src).unwrap().body
    }

    #[test]
    fn example_three_loop() {
        let l = stmt("while (x = y) { {x := 0} [1/3] {x := 1}; {y := 0} [1/3] {y := 1} }");
        assert!(iid_check(&l));
        let q = loop_to_observe(&l).unwrap();
        assert_eq!(
            q.to_string(),
            stmt("{x := 0} [1/3] {x := 1}; {y := 0} [1/3] {y := 1}; observe (x != y)").to_string()
        );
        let f = Expectation::parse("[x = 0]").unwrap();
        let st = State::zeros(&["x".to_string(), "y".to_string()]);
        let m = operational::build_stmt(&l, &st, &f, 1000).unwrap();
        let loop_value = solver::expected_reward(&m).unwrap();
        assert_eq!(loop_value, Rational::new(1.into(), 2.into()));
        assert_eq!(
            transformer::cwp(&q, &f, &st, 50).unwrap(),
            AnalysisValue::Exact(loop_value)
        );
    }

    #[test]
    fn crowds_loop_is_rejected() {
        let l = stmt(
            "while (delivered = 0) { {counter := counter + 1; {intercepted := 1} [1/5] {skip}} \
             [4/5] {delivered := 1} }",
        );
        assert_eq!(
            loop_to_observe(&l),
            Err(Error::NotIid("`counter` carries data between iterations".into()))
        );
    }

    #[test]
    fn degenerate_loops() {
        assert!(!iid_check(&stmt("while (true) { skip }")));
        assert!(iid_check(&stmt("while (false) { skip }")));
        assert!(!iid_check(&stmt("while (x = 0) { skip }")));
        // Written on one branch only.
        assert!(!iid_check(&stmt("while (x = 0) { {x := 1} [1/2] {skip} }")));
        assert!(iid_check(&stmt("while (x = 0) { {x := 1} [1/2] {x := 0}; y := x + 1 }")));
        assert!(!iid_check(&stmt("while (x = 0) { x := y }")));
        assert!(!iid_check(&stmt("while (x = 0) { {x := 1} [] {x := 0} }")));
    }
}
