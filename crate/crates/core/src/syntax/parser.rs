use num_bigint::BigInt;
use num_traits::One;

use super::lexer::{lex, Tok};
use super::{AExp, BExp, CmpOp, ProbExp, Program, Stmt};
use crate::expectation::{Expectation, Guard};
use crate::{numeric::parse_rational, Error, Pos, Rational, Result};

const KEYWORDS: &[&str] = &[
    "skip", "abort", "if", "else", "while", "observe", "true", "false", "min", "inf",
];

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(text)?,
            at: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T> {
        self.error(format!(
            "expected {wanted}, found {}",
            self.peek().describe()
        ))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, wanted: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.unexpected(wanted)
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => self.error(format!("`{s}` is a reserved word")),
            _ => self.unexpected("an identifier"),
        }
    }

    fn end(&self) -> Result<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    // Statements.

    fn stmt(&mut self) -> Result<Stmt> {
        let mut items = vec![self.basic()?];
        while self.eat(&Tok::Semi) {
            if matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                break;
            }
            items.push(self.basic()?);
        }
        Ok(Stmt::seq_all(items))
    }

    fn block(&mut self) -> Result<Stmt> {
        self.expect(Tok::LBrace, "`{`")?;
        let s = self.stmt()?;
        self.expect(Tok::RBrace, "`}`")?;
        Ok(s)
    }

    fn paren_bexp(&mut self) -> Result<BExp> {
        self.expect(Tok::LParen, "`(`")?;
        let b = self.bexp()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(b)
    }

    fn basic(&mut self) -> Result<Stmt> {
        match self.peek().clone() {
            Tok::Ident(kw) if kw == "skip" => {
                self.bump();
                Ok(Stmt::Skip)
            }
            Tok::Ident(kw) if kw == "abort" => {
                self.bump();
                Ok(Stmt::Abort)
            }
            Tok::Ident(kw) if kw == "if" => {
                self.bump();
                let g = self.paren_bexp()?;
                let a = self.block()?;
                if !self.is_keyword("else") {
                    return self.unexpected("`else`");
                }
                self.bump();
                let b = self.block()?;
                Ok(Stmt::ite(g, a, b))
            }
            Tok::Ident(kw) if kw == "while" => {
                self.bump();
                let g = self.paren_bexp()?;
                let body = self.block()?;
                Ok(Stmt::while_loop(g, body))
            }
            Tok::Ident(kw) if kw == "observe" => {
                self.bump();
                Ok(Stmt::Observe(self.paren_bexp()?))
            }
            Tok::Ident(_) => {
                let x = self.ident()?;
                self.expect(Tok::Assign, "`:=`")?;
                Ok(Stmt::Assign(x, self.aexp()?))
            }
            Tok::LBrace => {
                let left = self.block()?;
                if !self.eat(&Tok::LBracket) {
                    return Ok(left);
                }
                if self.eat(&Tok::RBracket) {
                    let right = self.block()?;
                    return Ok(Stmt::ndchoice(left, right));
                }
                let p = self.pexp()?;
                self.expect(Tok::RBracket, "`]`")?;
                let right = self.block()?;
                Ok(Stmt::pchoice(left, p, right))
            }
            _ => self.unexpected("a statement"),
        }
    }

    fn number(&mut self) -> Result<Rational> {
        let pos = self.pos();
        let Tok::Num(n) = self.bump() else {
            return Err(Error::Syntax {
                pos,
                message: "expected a number".into(),
            });
        };
        let mut r = parse_rational(&n).expect("lexer produces valid numbers");
        if *self.peek() == Tok::Slash && matches!(self.peek2(), Tok::Num(_)) {
            self.bump();
            let dpos = self.pos();
            let d = self.number_plain()?;
            if d == Rational::from_integer(0.into()) {
                return Err(Error::Syntax {
                    pos: dpos,
                    message: "division by zero in rational literal".into(),
                });
            }
            r /= d;
        }
        Ok(r)
    }

    fn number_plain(&mut self) -> Result<Rational> {
        match self.bump() {
            Tok::Num(n) => Ok(parse_rational(&n).expect("lexer produces valid numbers")),
            _ => self.unexpected("a number"),
        }
    }

    fn pexp(&mut self) -> Result<ProbExp> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(ProbExp::Const(self.number()?)),
            Tok::Ident(_) => Ok(ProbExp::Param(self.ident()?)),
            Tok::LParen => {
                self.bump();
                let num = self.expectation()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Slash, "`/`")?;
                self.expect(Tok::LParen, "`(`")?;
                let den = self.expectation()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(ProbExp::Quotient(Box::new(num), Box::new(den)))
            }
            _ => self.unexpected("a probability"),
        }
    }

    // Arithmetic.

    fn aexp(&mut self) -> Result<AExp> {
        let mut e = self.aterm()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = AExp::add(e, self.aterm()?);
            } else if self.eat(&Tok::Minus) {
                e = AExp::sub(e, self.aterm()?);
            } else {
                return Ok(e);
            }
        }
    }

    fn aterm(&mut self) -> Result<AExp> {
        let mut e = self.afactor()?;
        while self.eat(&Tok::Star) {
            e = AExp::mul(e, self.afactor()?);
        }
        Ok(e)
    }

    fn afactor(&mut self) -> Result<AExp> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                if let Tok::Num(n) = self.peek().clone() {
                    if !n.contains('.') {
                        self.bump();
                        let v: BigInt = n.parse().expect("digits");
                        return Ok(AExp::Int(-v));
                    }
                }
                Ok(AExp::sub(AExp::int(0), self.afactor()?))
            }
            Tok::Num(n) => {
                if n.contains('.') {
                    return self
                        .error("decimal literals are not allowed in arithmetic expressions");
                }
                self.bump();
                Ok(AExp::Int(n.parse().expect("digits")))
            }
            Tok::Ident(_) => Ok(AExp::Var(self.ident()?)),
            Tok::LParen => {
                self.bump();
                let e = self.aexp()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => self.unexpected("an arithmetic expression"),
        }
    }

    // Boolean expressions.

    fn bexp(&mut self) -> Result<BExp> {
        let mut b = self.bconj()?;
        while self.eat(&Tok::Or) {
            b = BExp::or(b, self.bconj()?);
        }
        Ok(b)
    }

    fn bconj(&mut self) -> Result<BExp> {
        let mut b = self.bunary()?;
        while self.eat(&Tok::And) {
            b = BExp::and(b, self.bunary()?);
        }
        Ok(b)
    }

    fn bunary(&mut self) -> Result<BExp> {
        if self.eat(&Tok::Bang) {
            return Ok(BExp::not(self.bunary()?));
        }
        self.batom()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        };
        self.bump();
        Some(op)
    }

    fn batom(&mut self) -> Result<BExp> {
        if self.is_keyword("true") {
            self.bump();
            return Ok(BExp::True);
        }
        if self.is_keyword("false") {
            self.bump();
            return Ok(BExp::False);
        }
        let start = self.at;
        let first_err = match self.aexp() {
            Ok(a) => match self.cmp_op() {
                Some(op) => return Ok(BExp::Cmp(op, a, self.aexp()?)),
                None => self
                    .unexpected::<BExp>("a comparison operator")
                    .unwrap_err(),
            },
            Err(e) => e,
        };
        self.at = start;
        if *self.peek() == Tok::LParen {
            self.bump();
            let b = self.bexp()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(b);
        }
        Err(first_err)
    }

    // Expectations.

    fn expectation(&mut self) -> Result<Expectation> {
        let mut e = self.eterm()?;
        loop {
            if self.eat(&Tok::Plus) {
                e = e.add(&self.eterm()?);
            } else if *self.peek() == Tok::Minus {
                let pos = self.pos();
                self.bump();
                let t = self.eterm()?;
                e = e.add(&negate(t, pos)?);
            } else {
                return Ok(e);
            }
        }
    }

    fn eterm(&mut self) -> Result<Expectation> {
        let mut e = self.eunary()?;
        while *self.peek() == Tok::Star {
            let pos = self.pos();
            self.bump();
            let rhs = self.eunary()?;
            e = e.mul(&rhs).map_err(|err| Error::Syntax {
                pos,
                message: err.to_string(),
            })?;
        }
        Ok(e)
    }

    fn eunary(&mut self) -> Result<Expectation> {
        if *self.peek() == Tok::Minus {
            let pos = self.pos();
            self.bump();
            let e = self.eunary()?;
            return negate(e, pos);
        }
        self.efactor()
    }

    fn efactor(&mut self) -> Result<Expectation> {
        match self.peek().clone() {
            Tok::Num(_) => Ok(Expectation::constant(self.number()?)),
            Tok::LBracket => {
                self.bump();
                let g = self.bexp()?;
                self.expect(Tok::RBracket, "`]`")?;
                Ok(Expectation::indicator(&g))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expectation()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(kw) if kw == "inf" => {
                self.bump();
                Ok(Expectation::infinity())
            }
            Tok::Ident(kw) if kw == "min" => {
                self.bump();
                self.expect(Tok::LParen, "`(`")?;
                let a = self.expectation()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.expectation()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(a.min_with(&b))
            }
            Tok::Ident(_) => {
                let v = self.ident()?;
                Ok(Expectation::from_aexp(&AExp::Var(v)))
            }
            _ => self.unexpected("an expectation"),
        }
    }
}

fn negate(e: Expectation, pos: Pos) -> Result<Expectation> {
    if e.has_min() || e.has_infinity() {
        return Err(Error::Syntax {
            pos,
            message: "cannot negate an expectation containing min or inf".into(),
        });
    }
    Ok(e.scale(&-Rational::one()))
}

/// Parses and validates a program. Names with the reserved `__` prefix are
/// accepted so that transformation output parses back.
pub fn parse(text: &str) -> Result<Program> {
    let p = parse_unchecked(text)?;
    super::validate::validate_generated(&p)?;
    Ok(p)
}

/// Parses without static validation.
pub fn parse_unchecked(text: &str) -> Result<Program> {
    let mut parser = Parser::new(text)?;
    let body = parser.stmt()?;
    parser.end()?;
    Ok(Program::from_stmt(body))
}

pub fn parse_bexp(text: &str) -> Result<BExp> {
    let mut parser = Parser::new(text)?;
    let b = parser.bexp()?;
    parser.end()?;
    Ok(b)
}

pub fn parse_aexp(text: &str) -> Result<AExp> {
    let mut parser = Parser::new(text)?;
    let a = parser.aexp()?;
    parser.end()?;
    Ok(a)
}

/// Parses the expectation surface syntax, e.g. `[y = 0]*(10 + x)`.
pub fn parse_expectation(text: &str) -> Result<Expectation> {
    let mut parser = Parser::new(text)?;
    let e = parser.expectation()?;
    parser.end()?;
    Ok(e.simplify())
}

/// Parses a guard, e.g. `x = 1 && y <= 2`.
pub fn parse_guard(text: &str) -> Result<Guard> {
    Ok(Guard::from_bexp(&parse_bexp(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_snippet() {
        let p = parse("{x := 0} [1/2] {x := 1}; observe (x = 1)").unwrap();
        let expected = Stmt::seq(
            Stmt::pchoice(
                Stmt::assign("x", AExp::int(0)),
                ProbExp::constant(1, 2),
                Stmt::assign("x", AExp::int(1)),
            ),
            Stmt::Observe(BExp::eq(AExp::var("x"), AExp::int(1))),
        );
        assert_eq!(p.body, expected);
        assert_eq!(p.declared_vars, vec!["x".to_string()]);
    }

    #[test]
    fn skip_and_range() {
        let p = parse("skip").unwrap();
        assert_eq!(p.body, Stmt::Skip);
        assert!(p.declared_vars.is_empty());
        assert!(matches!(
            parse("{x := 0} [3/2] {x := 1}"),
            Err(Error::Validation(_))
        ));
        assert_eq!(
            parse("{x := 0} [0.25] {x := 1}").unwrap().body,
            Stmt::pchoice(
                Stmt::assign("x", AExp::int(0)),
                ProbExp::constant(1, 4),
                Stmt::assign("x", AExp::int(1))
            )
        );
    }

    #[test]
    fn precedence() {
        let b = parse_bexp("x = 1 || y = 2 && !z < 3").unwrap();
        match b {
            BExp::Or(_, rhs) => assert!(matches!(*rhs, BExp::And(..))),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            parse_aexp("1 + 2 * x - 3").unwrap(),
            AExp::sub(
                AExp::add(AExp::int(1), AExp::mul(AExp::int(2), AExp::var("x"))),
                AExp::int(3)
            )
        );
        assert_eq!(
            parse_bexp("((x) = 1)").unwrap(),
            BExp::eq(AExp::var("x"), AExp::int(1))
        );
        assert_eq!(parse_aexp("-3").unwrap(), AExp::int(-3));
        assert_eq!(
            parse_aexp("-x").unwrap(),
            AExp::sub(AExp::int(0), AExp::var("x"))
        );
    }

    #[test]
    fn blocks_and_choices() {
        let p = parse("{ {a := 1; b := 2}; c := 3 }; { skip } [] { abort };").unwrap();
        let expected = Stmt::seq(
            Stmt::seq(
                Stmt::seq(
                    Stmt::assign("a", AExp::int(1)),
                    Stmt::assign("b", AExp::int(2)),
                ),
                Stmt::assign("c", AExp::int(3)),
            ),
            Stmt::ndchoice(Stmt::Skip, Stmt::Abort),
        );
        assert_eq!(p.body, expected);
    }

    #[test]
    fn errors_are_located() {
        match parse("x := 1;\nwhile (x = 1 { skip }") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, Pos { line: 2, col: 14 }),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("if (x = 1) { skip }"),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(parse("x := "), Err(Error::Syntax { .. })));
        assert!(matches!(parse("skip := 1"), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse("{x := 1} [1/0] {skip}"),
            Err(Error::Syntax { .. })
        ));
    }

    #[test]
    fn quotient_probability() {
        let p = parse("{x := 0} [(y + 1) / (y + 2)] {x := 1}").unwrap();
        match &p.body {
            Stmt::PChoice(_, ProbExp::Quotient(n, d), _) => {
                assert_eq!(n.to_string(), "1 + y");
                assert_eq!(d.to_string(), "2 + y");
            }
            other => panic!("{other:?}"),
        }
    }
}
