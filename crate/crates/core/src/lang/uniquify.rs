//! Renaming so that every binder in a program is distinct. The analysis
//! relies on this: abstract values are indexed by binder name.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::SyntaxError;
use crate::lang::syntax::{Name, Pattern, Term, TermKind};

/// Generates names that do not clash with any name already in a program.
#[derive(Debug, Clone, Default)]
pub struct NameSupply {
    used: HashSet<Name>,
    counter: usize,
}

impl NameSupply {
    pub fn for_term(t: &Term) -> Self {
        let mut used = HashSet::new();
        t.all_names(&mut used);
        NameSupply { used, counter: 0 }
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let base = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '_');
        let base = if base.is_empty() { "_" } else { base };
        let sep = if base.ends_with('_') { "" } else { "_" };
        loop {
            self.counter += 1;
            let candidate: Name = Arc::from(format!("{base}{sep}{}", self.counter));
            if self.used.insert(candidate.clone()) {
                return candidate;
            }
        }
    }

    fn claim(&mut self, x: &Name) -> bool {
        self.used.insert(x.clone())
    }
}

struct Renamer {
    supply: NameSupply,
    bound: HashSet<Name>,
    named: HashSet<Name>,
    scope: Vec<(Name, Name)>,
}

pub struct Uniquified {
    pub term: Term,
    pub supply: NameSupply,
    /// Binders that carried a real name in the source (not `_`), after renaming.
    pub named: HashSet<Name>,
}

/// Returns a copy of `t` where every binder is unique and `_` binders get
/// fresh names. Fails on unbound variables and duplicate pattern variables.
pub fn uniquify(t: &Term) -> Result<Uniquified, SyntaxError> {
    let mut r = Renamer {
        supply: NameSupply::for_term(t),
        bound: HashSet::new(),
        named: HashSet::new(),
        scope: Vec::new(),
    };
    let term = r.term(t)?;
    Ok(Uniquified { term, supply: r.supply, named: r.named })
}

impl Renamer {
    fn bind(&mut self, x: &Name) -> Name {
        let new = if &**x == "_" || self.bound.contains(x) {
            self.supply.fresh(x)
        } else {
            self.supply.claim(x);
            x.clone()
        };
        self.bound.insert(new.clone());
        if &**x != "_" {
            self.named.insert(new.clone());
        }
        self.scope.push((x.clone(), new.clone()));
        new
    }

    fn lookup(&self, x: &Name) -> Option<Name> {
        self.scope.iter().rev().find(|(k, _)| k == x).map(|(_, v)| v.clone())
    }

    fn pattern(&mut self, p: &Pattern, seen: &mut HashSet<Name>, span: crate::lang::syntax::Span) -> Result<Pattern, SyntaxError> {
        Ok(match p {
            Pattern::Var(x) => {
                if !seen.insert(x.clone()) {
                    return Err(SyntaxError::Other { span, msg: format!("variable `{x}` bound twice in pattern") });
                }
                Pattern::Var(self.bind(x))
            }
            Pattern::Wildcard | Pattern::Bool(_) | Pattern::Empty => p.clone(),
            Pattern::Record(fs) => Pattern::Record(
                fs.iter()
                    .map(|(k, q)| Ok((k.clone(), self.pattern(q, seen, span)?)))
                    .collect::<Result<_, SyntaxError>>()?,
            ),
            Pattern::Variant(tag, q) => Pattern::Variant(tag.clone(), Box::new(self.pattern(q, seen, span)?)),
            Pattern::Cons(h, t) => {
                let h = self.pattern(h, seen, span)?;
                Pattern::Cons(Box::new(h), Box::new(self.pattern(t, seen, span)?))
            }
        })
    }

    fn term(&mut self, t: &Term) -> Result<Term, SyntaxError> {
        use TermKind::*;
        let b = |t: Term| Box::new(t);
        let kind = match &t.kind {
            Var(x) => match self.lookup(x) {
                Some(y) => Var(y),
                None => return Err(SyntaxError::Unbound { span: t.span, name: x.to_string() }),
            },
            Const(c) => Const(c.clone()),
            Lam(x, body) => {
                let mark = self.scope.len();
                let x2 = self.bind(x);
                let body = self.term(body)?;
                self.scope.truncate(mark);
                Lam(x2, b(body))
            }
            App(f, a) => App(b(self.term(f)?), b(self.term(a)?)),
            Let(x, rhs, body) => {
                let rhs = self.term(rhs)?;
                let mark = self.scope.len();
                let x2 = self.bind(x);
                let body = self.term(body)?;
                self.scope.truncate(mark);
                Let(x2, b(rhs), b(body))
            }
            LetRec(f, rhs, body) => {
                let mark = self.scope.len();
                let f2 = self.bind(f);
                let rhs = self.term(rhs)?;
                let body = self.term(body)?;
                self.scope.truncate(mark);
                LetRec(f2, b(rhs), b(body))
            }
            If(c, x, y) => If(b(self.term(c)?), b(self.term(x)?), b(self.term(y)?)),
            Match(s, p, x, y) => {
                let s = self.term(s)?;
                let mark = self.scope.len();
                let p = self.pattern(p, &mut HashSet::new(), t.span)?;
                let x = self.term(x)?;
                self.scope.truncate(mark);
                let y = self.term(y)?;
                Match(b(s), p, b(x), b(y))
            }
            Assume(e) => Assume(b(self.term(e)?)),
            Weight(e) => Weight(b(self.term(e)?)),
            Record(fs) => Record(fs.iter().map(|(k, e)| Ok((k.clone(), self.term(e)?))).collect::<Result<_, SyntaxError>>()?),
            Variant(tag, e) => Variant(tag.clone(), b(self.term(e)?)),
            Seq(es) => Seq(es.iter().map(|e| self.term(e)).collect::<Result<_, _>>()?),
        };
        Ok(Term::new(kind, t.span))
    }
}

/// Checks that every `let rec` binds a lambda.
pub fn validate_letrec(t: &Term) -> Result<(), SyntaxError> {
    use TermKind::*;
    match &t.kind {
        LetRec(_, rhs, body) => {
            if !matches!(rhs.kind, Lam(..)) {
                return Err(SyntaxError::LetRecNotLambda { span: t.span });
            }
            validate_letrec(rhs)?;
            validate_letrec(body)
        }
        Var(_) | Const(_) => Ok(()),
        Lam(_, e) | Assume(e) | Weight(e) | Variant(_, e) => validate_letrec(e),
        App(a, c) | Let(_, a, c) => {
            validate_letrec(a)?;
            validate_letrec(c)
        }
        If(a, c, d) | Match(a, _, c, d) => {
            validate_letrec(a)?;
            validate_letrec(c)?;
            validate_letrec(d)
        }
        Record(fs) => fs.iter().try_for_each(|(_, e)| validate_letrec(e)),
        Seq(es) => es.iter().try_for_each(validate_letrec),
    }
}

/// Binders of `t` in the order they appear.
pub fn binders(t: &Term) -> Vec<Name> {
    fn go(t: &Term, out: &mut Vec<Name>) {
        use TermKind::*;
        match &t.kind {
            Var(_) | Const(_) => {}
            Lam(x, e) => {
                out.push(x.clone());
                go(e, out);
            }
            Let(x, a, c) | LetRec(x, a, c) => {
                out.push(x.clone());
                go(a, out);
                go(c, out);
            }
            Assume(e) | Weight(e) | Variant(_, e) => go(e, out),
            App(a, c) => {
                go(a, out);
                go(c, out);
            }
            If(a, c, d) => {
                go(a, out);
                go(c, out);
                go(d, out);
            }
            Match(a, p, c, d) => {
                out.extend(p.vars());
                go(a, out);
                go(c, out);
                go(d, out);
            }
            Record(fs) => fs.iter().for_each(|(_, e)| go(e, out)),
            Seq(es) => es.iter().for_each(|e| go(e, out)),
        }
    }
    let mut out = Vec::new();
    go(t, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;

    #[test]
    fn shadowed_binders_are_renamed() {
        let t = parse("let x = 1 in let x = x + 1 in lam x. x").unwrap();
        let u = uniquify(&t).unwrap().term;
        let bs = binders(&u);
        let set: HashSet<_> = bs.iter().cloned().collect();
        assert_eq!(bs.len(), set.len());
        assert_eq!(&*bs[0], "x");
    }

    #[test]
    fn underscore_binders_get_fresh_names() {
        let t = parse("weight 1; weight 2; lam _. 3").unwrap();
        let u = uniquify(&t).unwrap().term;
        assert!(binders(&u).iter().all(|b| &**b != "_"));
    }

    #[test]
    fn unbound_variables_fail() {
        let t = parse("let y = 1 in x").unwrap();
        assert!(matches!(uniquify(&t), Err(SyntaxError::Unbound { name, .. }) if name == "x"));
    }

    #[test]
    fn fresh_names_avoid_existing_ones() {
        let t = parse("let x_1 = 1 in let x = 2 in let x = 3 in x_1").unwrap();
        let u = uniquify(&t).unwrap().term;
        let bs = binders(&u);
        assert_eq!(bs.iter().collect::<HashSet<_>>().len(), 3);
    }

    #[test]
    fn letrec_must_bind_lambda() {
        let t = parse("let rec f = 1 in f").unwrap();
        assert!(matches!(validate_letrec(&t), Err(SyntaxError::LetRecNotLambda { .. })));
    }
}
