//! Source-to-source transformations around `observe`:
//! observation hoisting, observe-to-loop (rejection by restarting) and
//! loop-to-observe for loops with independent iterations.

mod hoist;
mod iid;
mod rerun;

pub use hoist::{hoist, remove_dead_branches, HoistResult, DEFAULT_LOOP_ITERS};
pub use iid::{iid_check, iid_violation, loop_to_observe};
pub use rerun::{observe_to_loop, RERUN};

use crate::syntax::{BExp, CmpOp, Stmt};

/// `¬g`, folding the negation into comparisons and double negations.
pub(crate) fn negate(g: &BExp) -> BExp {
    match g {
        BExp::True => BExp::False,
        BExp::False => BExp::True,
        BExp::Not(x) => (**x).clone(),
        BExp::Cmp(op, a, b) => {
            let flipped = match op {
                CmpOp::Eq => CmpOp::Ne,
                CmpOp::Ne => CmpOp::Eq,
                CmpOp::Lt => CmpOp::Ge,
                CmpOp::Le => CmpOp::Gt,
                CmpOp::Gt => CmpOp::Le,
                CmpOp::Ge => CmpOp::Lt,
            };
            BExp::Cmp(flipped, a.clone(), b.clone())
        }
        other => BExp::not(other.clone()),
    }
}

/// `s; t`, keeping sequences nested to the right.
pub(crate) fn append(s: &Stmt, t: Stmt) -> Stmt {
    match s {
        Stmt::Seq(a, b) => Stmt::seq((**a).clone(), append(b, t)),
        _ => Stmt::seq(s.clone(), t),
    }
}
