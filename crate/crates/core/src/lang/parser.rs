//! Recursive-descent parser.
//!
//! Precedence, loosest first: `let`/`lam`/`if`/`match` (extend as far right
//! as possible), `;`, `||`, `&&`, comparisons, `::`, `+ -`, `* /`, unary
//! `- !`, application, atoms. `f(a, b)` is sugar for `f a b`.

use std::sync::Arc;

use crate::error::SyntaxError;
use crate::intrinsic::Prim;
use crate::lang::lexer::{tokenize, Tok};
use crate::lang::syntax::{Constant, Name, Pattern, Span, Term, TermKind};

pub fn parse(src: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let t = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(t)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

enum Atom {
    One(Term),
    /// A parenthesised, comma-separated argument list.
    Many(Vec<Term>, Span),
}

fn app(f: Term, a: Term, span: Span) -> Term {
    Term::new(TermKind::App(Box::new(f), Box::new(a)), span)
}

fn prim(p: Prim, span: Span) -> Term {
    Term::new(TermKind::Const(Constant::Prim(p)), span)
}

fn binop(p: Prim, a: Term, b: Term, span: Span) -> Term {
    app(app(prim(p, span), a, span), b, span)
}

fn lams(params: Vec<(Name, Span)>, body: Term) -> Term {
    params
        .into_iter()
        .rev()
        .fold(body, |b, (x, s)| Term::new(TermKind::Lam(x, Box::new(b)), s))
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<Span, SyntaxError> {
        if self.peek() == &t {
            Ok(self.next().1)
        } else {
            Err(self.error(what))
        }
    }

    fn error(&self, expected: &str) -> SyntaxError {
        SyntaxError::Expected {
            span: self.span(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    /// A variable binder: an identifier or `_`.
    fn binder(&mut self) -> Result<(Name, Span), SyntaxError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.next();
                if Prim::from_name(&x).is_some() {
                    return Err(SyntaxError::Reserved { span, name: x });
                }
                Ok((Arc::from(x.as_str()), span))
            }
            Tok::Underscore => {
                self.next();
                Ok((Arc::from("_"), span))
            }
            _ => Err(self.error("a variable name")),
        }
    }

    fn params(&mut self) -> Result<Vec<(Name, Span)>, SyntaxError> {
        let mut ps = Vec::new();
        while matches!(self.peek(), Tok::Ident(_) | Tok::Underscore) {
            ps.push(self.binder()?);
        }
        Ok(ps)
    }

    fn expr(&mut self) -> Result<Term, SyntaxError> {
        let span = self.span();
        match self.peek() {
            Tok::Let => {
                self.next();
                let rec = self.eat(&Tok::Rec);
                let (name, _) = self.binder()?;
                let params = self.params()?;
                self.expect(Tok::Assign, "`=`")?;
                let rhs = lams(params, self.expr()?);
                self.expect(Tok::In, "`in`")?;
                let body = self.expr()?;
                let kind = if rec {
                    TermKind::LetRec(name, Box::new(rhs), Box::new(body))
                } else {
                    TermKind::Let(name, Box::new(rhs), Box::new(body))
                };
                Ok(Term::new(kind, span))
            }
            Tok::Lam => {
                self.next();
                let params = self.params()?;
                if params.is_empty() {
                    return Err(self.error("a parameter"));
                }
                self.expect(Tok::Dot, "`.`")?;
                Ok(lams(params, self.expr()?))
            }
            Tok::If => {
                self.next();
                let c = self.expr()?;
                self.expect(Tok::Then, "`then`")?;
                let a = self.expr()?;
                self.expect(Tok::Else, "`else`")?;
                let b = self.expr()?;
                Ok(Term::new(TermKind::If(Box::new(c), Box::new(a), Box::new(b)), span))
            }
            Tok::Match => {
                self.next();
                let s = self.expr()?;
                self.expect(Tok::With, "`with`")?;
                let p = self.pattern()?;
                self.expect(Tok::Then, "`then`")?;
                let a = self.expr()?;
                self.expect(Tok::Else, "`else`")?;
                let b = self.expr()?;
                Ok(Term::new(TermKind::Match(Box::new(s), p, Box::new(a), Box::new(b)), span))
            }
            _ => {
                let first = self.or_expr()?;
                if self.peek() == &Tok::Semi {
                    let semi = self.next().1;
                    let rest = self.expr()?;
                    Ok(Term::new(TermKind::Let(Arc::from("_"), Box::new(first), Box::new(rest)), semi))
                } else {
                    Ok(first)
                }
            }
        }
    }

    fn or_expr(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == &Tok::OrOr {
            let s = self.next().1;
            let rhs = self.and_expr()?;
            lhs = binop(Prim::Or, lhs, rhs, s);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.cmp_expr()?;
        while self.peek() == &Tok::AndAnd {
            let s = self.next().1;
            let rhs = self.cmp_expr()?;
            lhs = binop(Prim::And, lhs, rhs, s);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Term, SyntaxError> {
        let lhs = self.cons_expr()?;
        let op = match self.peek() {
            Tok::EqEq => Prim::Eq,
            Tok::NotEq => Prim::Neq,
            Tok::Lt => Prim::Lt,
            Tok::Le => Prim::Le,
            Tok::Gt => Prim::Gt,
            Tok::Ge => Prim::Ge,
            _ => return Ok(lhs),
        };
        let s = self.next().1;
        let rhs = self.cons_expr()?;
        Ok(binop(op, lhs, rhs, s))
    }

    fn cons_expr(&mut self) -> Result<Term, SyntaxError> {
        let lhs = self.add_expr()?;
        if self.peek() == &Tok::ColonColon {
            let s = self.next().1;
            let rhs = self.cons_expr()?;
            return Ok(binop(Prim::Cons, lhs, rhs, s));
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => Prim::Add,
                Tok::Minus => Prim::Sub,
                _ => return Ok(lhs),
            };
            let s = self.next().1;
            let rhs = self.mul_expr()?;
            lhs = binop(op, lhs, rhs, s);
        }
    }

    fn mul_expr(&mut self) -> Result<Term, SyntaxError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => Prim::Mul,
                Tok::Slash => Prim::Div,
                _ => return Ok(lhs),
            };
            let s = self.next().1;
            let rhs = self.unary()?;
            lhs = binop(op, lhs, rhs, s);
        }
    }

    fn unary(&mut self) -> Result<Term, SyntaxError> {
        let span = self.span();
        match self.peek() {
            Tok::Minus => {
                self.next();
                match self.peek().clone() {
                    Tok::Int(i) if !starts_atom(self.peek_at(1)) => {
                        self.next();
                        Ok(Term::new(TermKind::Const(Constant::Int(-i)), span))
                    }
                    Tok::Real(x) if !starts_atom(self.peek_at(1)) => {
                        self.next();
                        Ok(Term::new(TermKind::Const(Constant::Real(-x)), span))
                    }
                    _ => {
                        let e = self.unary()?;
                        Ok(app(prim(Prim::Neg, span), e, span))
                    }
                }
            }
            Tok::Bang => {
                self.next();
                let e = self.unary()?;
                Ok(app(prim(Prim::Not, span), e, span))
            }
            _ => self.application(),
        }
    }

    fn application(&mut self) -> Result<Term, SyntaxError> {
        let span = self.span();
        match self.peek() {
            Tok::Assume => {
                self.next();
                let e = self.application()?;
                return Ok(Term::new(TermKind::Assume(Box::new(e)), span));
            }
            Tok::Weight => {
                self.next();
                let e = self.application()?;
                return Ok(Term::new(TermKind::Weight(Box::new(e)), span));
            }
            _ => {}
        }
        let mut head = match self.peek().clone() {
            Tok::Upper(tag) if Prim::from_name(&tag).is_none() => {
                self.next();
                let payload = if starts_atom(self.peek()) {
                    self.single_atom()?
                } else {
                    Term::new(TermKind::Const(Constant::Unit), span)
                };
                Term::new(TermKind::Variant(Arc::from(tag.as_str()), Box::new(payload)), span)
            }
            _ => match self.atom()? {
                Atom::One(t) => t,
                Atom::Many(_, s) => {
                    return Err(SyntaxError::Other { span: s, msg: "tuples are not supported".into() })
                }
            },
        };
        while starts_atom(self.peek()) {
            match self.atom()? {
                Atom::One(a) => head = app(head, a, span),
                Atom::Many(args, _) => {
                    for a in args {
                        head = app(head, a, span);
                    }
                }
            }
        }
        Ok(head)
    }

    fn single_atom(&mut self) -> Result<Term, SyntaxError> {
        match self.atom()? {
            Atom::One(t) => Ok(t),
            Atom::Many(_, s) => Err(SyntaxError::Other { span: s, msg: "tuples are not supported".into() }),
        }
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let span = self.span();
        let konst = |c| Ok(Atom::One(Term::new(TermKind::Const(c), span)));
        let start = self.pos;
        match self.next().0 {
            Tok::Ident(x) => match Prim::from_name(&x) {
                Some(p) => Ok(Atom::One(prim(p, span))),
                None => Ok(Atom::One(Term::new(TermKind::Var(Arc::from(x.as_str())), span))),
            },
            Tok::Upper(tag) => match Prim::from_name(&tag) {
                Some(p) => Ok(Atom::One(prim(p, span))),
                None => Ok(Atom::One(Term::new(
                    TermKind::Variant(Arc::from(tag.as_str()), Box::new(Term::new(TermKind::Const(Constant::Unit), span))),
                    span,
                ))),
            },
            Tok::Int(i) => konst(Constant::Int(i)),
            Tok::Real(x) => konst(Constant::Real(x)),
            Tok::True => konst(Constant::Bool(true)),
            Tok::False => konst(Constant::Bool(false)),
            Tok::LParen => {
                if self.eat(&Tok::RParen) {
                    return konst(Constant::Unit);
                }
                if let Some(p) = operator_section(self.peek()) {
                    if self.peek_at(1) == &Tok::RParen {
                        self.next();
                        self.next();
                        return Ok(Atom::One(prim(p, span)));
                    }
                }
                let mut items = vec![self.expr()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.expr()?);
                }
                self.expect(Tok::RParen, "`)`")?;
                if items.len() == 1 {
                    Ok(Atom::One(items.pop().unwrap()))
                } else {
                    Ok(Atom::Many(items, span))
                }
            }
            Tok::LBracket => {
                let mut items = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    items.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        items.push(self.expr()?);
                    }
                    self.expect(Tok::RBracket, "`]`")?;
                }
                Ok(Atom::One(Term::new(TermKind::Seq(items), span)))
            }
            Tok::LBrace => {
                let mut fields = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        let key = self.label()?;
                        self.expect(Tok::Assign, "`=`")?;
                        fields.push((key, self.expr()?));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                }
                check_duplicate_keys(fields.iter().map(|(k, _)| k), span)?;
                Ok(Atom::One(Term::new(TermKind::Record(fields), span)))
            }
            _ => {
                self.pos = start;
                Err(self.error("an expression"))
            }
        }
    }

    fn label(&mut self) -> Result<Name, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(k) | Tok::Upper(k) => {
                self.next();
                Ok(Arc::from(k.as_str()))
            }
            _ => Err(self.error("a record key")),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, SyntaxError> {
        let head = self.pattern_atom()?;
        if self.eat(&Tok::ColonColon) {
            let tail = self.pattern()?;
            return Ok(Pattern::Cons(Box::new(head), Box::new(tail)));
        }
        Ok(head)
    }

    fn pattern_atom(&mut self) -> Result<Pattern, SyntaxError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Underscore => {
                self.next();
                Ok(Pattern::Wildcard)
            }
            Tok::Ident(_) => Ok(Pattern::Var(self.binder()?.0)),
            Tok::True => {
                self.next();
                Ok(Pattern::Bool(true))
            }
            Tok::False => {
                self.next();
                Ok(Pattern::Bool(false))
            }
            Tok::LBracket => {
                self.next();
                self.expect(Tok::RBracket, "`]` (only the empty sequence pattern is supported)")?;
                Ok(Pattern::Empty)
            }
            Tok::LParen => {
                self.next();
                let p = self.pattern()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Upper(tag) => {
                self.next();
                let sub = if starts_pattern(self.peek()) { self.pattern_atom()? } else { Pattern::Wildcard };
                Ok(Pattern::Variant(Arc::from(tag.as_str()), Box::new(sub)))
            }
            Tok::LBrace => {
                self.next();
                let mut fields = Vec::new();
                if !self.eat(&Tok::RBrace) {
                    loop {
                        let key = self.label()?;
                        let sub = if self.eat(&Tok::Assign) {
                            self.pattern()?
                        } else {
                            if Prim::from_name(&key).is_some() {
                                return Err(SyntaxError::Reserved { span, name: key.to_string() });
                            }
                            Pattern::Var(key.clone())
                        };
                        fields.push((key, sub));
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace, "`}`")?;
                }
                check_duplicate_keys(fields.iter().map(|(k, _)| k), span)?;
                Ok(Pattern::Record(fields))
            }
            _ => Err(self.error("a pattern")),
        }
    }
}

fn check_duplicate_keys<'a>(keys: impl Iterator<Item = &'a Name>, span: Span) -> Result<(), SyntaxError> {
    let mut seen = std::collections::HashSet::new();
    for k in keys {
        if !seen.insert(k.clone()) {
            return Err(SyntaxError::Other { span, msg: format!("duplicate record key `{k}`") });
        }
    }
    Ok(())
}

fn starts_atom(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Ident(_)
            | Tok::Upper(_)
            | Tok::Int(_)
            | Tok::Real(_)
            | Tok::True
            | Tok::False
            | Tok::LParen
            | Tok::LBracket
            | Tok::LBrace
    )
}

fn starts_pattern(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Underscore | Tok::Ident(_) | Tok::True | Tok::False | Tok::LBracket | Tok::LParen | Tok::LBrace | Tok::Upper(_)
    )
}

fn operator_section(t: &Tok) -> Option<Prim> {
    Some(match t {
        Tok::Plus => Prim::Add,
        Tok::Minus => Prim::Sub,
        Tok::Star => Prim::Mul,
        Tok::Slash => Prim::Div,
        Tok::EqEq => Prim::Eq,
        Tok::NotEq => Prim::Neq,
        Tok::Lt => Prim::Lt,
        Tok::Le => Prim::Le,
        Tok::Gt => Prim::Gt,
        Tok::Ge => Prim::Ge,
        Tok::AndAnd => Prim::And,
        Tok::OrOr => Prim::Or,
        Tok::ColonColon => Prim::Cons,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(src: &str) -> String {
        crate::lang::pretty::pretty(&parse(src).unwrap())
    }

    #[test]
    fn precedence() {
        assert_eq!(shape("1 + 2 * 3 == 7 && true"), "((1 + (2 * 3)) == 7) && true");
        assert_eq!(shape("f x y + g z"), "(f x y) + (g z)");
        assert_eq!(shape("a :: b :: []"), "a :: (b :: [])");
    }

    #[test]
    fn call_sugar() {
        assert_eq!(shape("Gamma(2, 2)"), "Gamma 2 2");
        assert_eq!(shape("f (x)"), "f x");
    }

    #[test]
    fn sequencing_is_a_unit_let() {
        let t = parse("weight 1.0; 3").unwrap();
        assert!(matches!(&t.kind, TermKind::Let(x, _, _) if &**x == "_"));
    }

    #[test]
    fn negative_literals() {
        assert!(matches!(parse("-2").unwrap().kind, TermKind::Const(Constant::Int(-2))));
        assert_eq!(shape("1 - -2.5"), "1 - -2.5");
        assert_eq!(shape("-x"), "neg x");
    }

    #[test]
    fn patterns() {
        let t = parse("match xs with {a = h :: _, b} then h else 0").unwrap();
        match t.kind {
            TermKind::Match(_, p, _, _) => assert_eq!(
                p,
                Pattern::Record(vec![
                    ("a".into(), Pattern::Cons(Box::new(Pattern::Var("h".into())), Box::new(Pattern::Wildcard))),
                    ("b".into(), Pattern::Var("b".into())),
                ])
            ),
            _ => panic!(),
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse("let x = in x") {
            Err(SyntaxError::Expected { span, .. }) => assert_eq!(span, Span::new(1, 9)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("let exp = 1 in exp"), Err(SyntaxError::Reserved { .. })));
        assert!(parse("(1, 2)").is_err());
    }
}
