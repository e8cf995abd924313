use super::negate;
use crate::syntax::{AExp, BExp, Program, Stmt};

/// Flag set when an observation fails; 1 means "restart".
pub const RERUN: &str = "__rerun";

fn saved(x: &str) -> String {
    format!("__s_{x}")
}

fn rerun_is(v: i64) -> BExp {
    BExp::eq(AExp::var(RERUN), AExp::int(v))
}

fn rewrite(s: &Stmt) -> Stmt {
    match s {
        Stmt::Observe(g) => Stmt::ite(negate(g), Stmt::assign(RERUN, AExp::int(1)), Stmt::Skip),
        Stmt::Abort => Stmt::ite(rerun_is(0), Stmt::Abort, Stmt::Skip),
        Stmt::While(g, body) => Stmt::while_loop(BExp::and(g.clone(), rerun_is(0)), rewrite(body)),
        Stmt::Seq(a, b) => Stmt::seq(rewrite(a), rewrite(b)),
        Stmt::Ite(g, a, b) => Stmt::ite(g.clone(), rewrite(a), rewrite(b)),
        Stmt::PChoice(a, p, b) => Stmt::pchoice(rewrite(a), p.clone(), rewrite(b)),
        Stmt::NDChoice(a, b) => Stmt::ndchoice(rewrite(a), rewrite(b)),
        Stmt::Skip | Stmt::Assign(..) => s.clone(),
    }
}

/// Replaces observations by restarting the program from its initial state:
///
/// ```text
/// __s_x := x; ...; __rerun := 1;
/// while (__rerun = 1) { x := __s_x; ...; __rerun := 0; P' }
/// ```
///
/// where `P'` sets `__rerun` instead of failing an observation.
pub fn observe_to_loop(p: &Program) -> Program {
    let vars = &p.declared_vars;
    let save = vars
        .iter()
        .map(|x| Stmt::assign(&saved(x), AExp::var(x)));
    let restore = vars
        .iter()
        .map(|x| Stmt::assign(x, AExp::var(&saved(x))));
    let body = Stmt::seq_all(
        restore
            .chain([Stmt::assign(RERUN, AExp::int(0)), rewrite(&p.body)]),
    );
    let program = Stmt::seq_all(save.chain([
        Stmt::assign(RERUN, AExp::int(1)),
        Stmt::while_loop(rerun_is(1), body),
    ]));
    let mut out = Program::from_stmt(program);
    out.params = p.params.clone();
    out
}
