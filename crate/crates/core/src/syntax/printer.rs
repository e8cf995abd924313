use super::{AExp, BExp, ProbExp, Stmt};
use crate::numeric::format_rational;

pub(crate) fn print_aexp(e: &AExp) -> String {
    match e {
        AExp::Int(n) => n.to_string(),
        AExp::Var(v) => v.clone(),
        AExp::Add(a, b) => format!("{} + {}", print_aexp(a), sum_operand(b)),
        AExp::Sub(a, b) => format!("{} - {}", print_aexp(a), sum_operand(b)),
        AExp::Mul(a, b) => format!(
            "{} * {}",
            product_operand(a, false),
            product_operand(b, true)
        ),
    }
}

fn sum_operand(e: &AExp) -> String {
    match e {
        AExp::Add(..) | AExp::Sub(..) => format!("({})", print_aexp(e)),
        _ => print_aexp(e),
    }
}

fn product_operand(e: &AExp, right: bool) -> String {
    match e {
        AExp::Add(..) | AExp::Sub(..) => format!("({})", print_aexp(e)),
        AExp::Mul(..) if right => format!("({})", print_aexp(e)),
        _ => print_aexp(e),
    }
}

pub(crate) fn print_bexp(b: &BExp) -> String {
    match b {
        BExp::True => "true".into(),
        BExp::False => "false".into(),
        BExp::Cmp(op, x, y) => format!("{} {} {}", print_aexp(x), op.symbol(), print_aexp(y)),
        BExp::Or(x, y) => {
            let rhs = match **y {
                BExp::Or(..) => format!("({})", print_bexp(y)),
                _ => print_bexp(y),
            };
            format!("{} || {}", print_bexp(x), rhs)
        }
        BExp::And(x, y) => {
            let lhs = match **x {
                BExp::Or(..) => format!("({})", print_bexp(x)),
                _ => print_bexp(x),
            };
            let rhs = match **y {
                BExp::Or(..) | BExp::And(..) => format!("({})", print_bexp(y)),
                _ => print_bexp(y),
            };
            format!("{lhs} && {rhs}")
        }
        BExp::Not(x) => match **x {
            BExp::True | BExp::False | BExp::Not(_) => format!("!{}", print_bexp(x)),
            _ => format!("!({})", print_bexp(x)),
        },
    }
}

pub(crate) fn print_pexp(p: &ProbExp) -> String {
    match p {
        ProbExp::Const(r) => format_rational(r),
        ProbExp::Param(name) => name.clone(),
        ProbExp::Quotient(n, d) => format!("({n}) / ({d})"),
    }
}

pub(crate) fn print_stmt(s: &Stmt) -> String {
    match s {
        Stmt::Skip => "skip".into(),
        Stmt::Abort => "abort".into(),
        Stmt::Assign(x, e) => format!("{x} := {}", print_aexp(e)),
        Stmt::Seq(a, b) => {
            let lhs = match **a {
                Stmt::Seq(..) => format!("{{{}}}", print_stmt(a)),
                _ => print_stmt(a),
            };
            format!("{lhs}; {}", print_stmt(b))
        }
        Stmt::Ite(g, a, b) => format!(
            "if ({}) {{{}}} else {{{}}}",
            print_bexp(g),
            print_stmt(a),
            print_stmt(b)
        ),
        Stmt::PChoice(a, p, b) => {
            format!(
                "{{{}}} [{}] {{{}}}",
                print_stmt(a),
                print_pexp(p),
                print_stmt(b)
            )
        }
        Stmt::NDChoice(a, b) => format!("{{{}}} [] {{{}}}", print_stmt(a), print_stmt(b)),
        Stmt::While(g, body) => format!("while ({}) {{{}}}", print_bexp(g), print_stmt(body)),
        Stmt::Observe(g) => format!("observe ({})", print_bexp(g)),
    }
}

/// Multi-line rendering with four-space indentation.
pub(crate) fn print_stmt_indented(s: &Stmt) -> String {
    let mut out = String::new();
    indented(s, 0, &mut out);
    out
}

fn pad(level: usize) -> String {
    "    ".repeat(level)
}

fn indented_block(s: &Stmt, level: usize, out: &mut String) {
    out.push_str("{\n");
    indented(s, level + 1, out);
    out.push('\n');
    out.push_str(&pad(level));
    out.push('}');
}

fn indented(s: &Stmt, level: usize, out: &mut String) {
    match s {
        Stmt::Seq(a, b) => {
            if matches!(**a, Stmt::Seq(..)) {
                out.push_str(&pad(level));
                indented_block(a, level, out);
            } else {
                indented(a, level, out);
            }
            out.push_str(";\n");
            indented(b, level, out);
        }
        Stmt::Ite(g, a, b) => {
            out.push_str(&format!("{}if ({}) ", pad(level), print_bexp(g)));
            indented_block(a, level, out);
            out.push_str(" else ");
            indented_block(b, level, out);
        }
        Stmt::PChoice(a, p, b) => {
            out.push_str(&pad(level));
            indented_block(a, level, out);
            out.push_str(&format!(" [{}] ", print_pexp(p)));
            indented_block(b, level, out);
        }
        Stmt::NDChoice(a, b) => {
            out.push_str(&pad(level));
            indented_block(a, level, out);
            out.push_str(" [] ");
            indented_block(b, level, out);
        }
        Stmt::While(g, body) => {
            out.push_str(&format!("{}while ({}) ", pad(level), print_bexp(g)));
            indented_block(body, level, out);
        }
        _ => {
            out.push_str(&pad(level));
            out.push_str(&print_stmt(s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse, parse_bexp};
    use super::*;

    #[test]
    fn minimal_parentheses() {
        for src in [
            "x := (1 + y) * 2 - (3 - z)",
            "x := -3 * -y",
            "x := 0 - (0 - 2)",
            "observe (x = 1 || y = 2 && !(z < 3))",
            "observe ((x = 1 || y = 2) && z = 3)",
            "observe (!!true)",
            "{a := 1; b := 2}; c := 3",
            "{ {x := 0} [1/3] {x := 1} } [] {skip}",
        ] {
            let p = parse(src).unwrap();
            let printed = print_stmt(&p.body);
            assert_eq!(parse(&printed).unwrap(), p, "{src} -> {printed}");
            let long = print_stmt_indented(&p.body);
            assert_eq!(parse(&long).unwrap(), p, "{long}");
        }
        assert_eq!(print_stmt(&Stmt::Skip), "skip");
        let b = parse_bexp("x = 1 && (y = 2 && z = 3)").unwrap();
        assert_eq!(print_bexp(&b), "x = 1 && (y = 2 && z = 3)");
    }
}
