//! A-normal form: every intermediate result is bound by a `let`, and every
//! operand is a variable. A term is a sequence of bindings followed by the
//! variable holding its result.

use crate::lang::syntax::{Constant, Label, Name, Pattern, Span, Term, TermKind};
use crate::lang::uniquify::NameSupply;

#[derive(Clone, Debug)]
pub struct AnfTerm {
    pub lets: Vec<AnfLet>,
    pub ret: Name,
}

#[derive(Clone, Debug)]
pub struct AnfLet {
    pub name: Name,
    pub bound: AnfBound,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum AnfBound {
    /// `let x = y`: an alias of another variable.
    Var(Name),
    Const(Constant),
    Lam { param: Name, body: AnfTerm, recursive: bool },
    App(Name, Name),
    If(Name, AnfTerm, AnfTerm),
    Match(Name, Pattern, AnfTerm, AnfTerm),
    Assume(Name),
    Weight(Name),
    Record(Vec<(Label, Name)>),
    Variant(Label, Name),
    Seq(Vec<Name>),
}

impl AnfTerm {
    /// The variable holding the result.
    pub fn name(&self) -> &Name {
        &self.ret
    }

    /// Binders at the top level of the let-sequence (not inside branches or lambdas).
    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.lets.iter().map(|l| &l.name)
    }

    /// Visits every binding, including those nested in branches and lambda bodies.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a AnfLet)) {
        for l in &self.lets {
            f(l);
            match &l.bound {
                AnfBound::Lam { body, .. } => body.walk(f),
                AnfBound::If(_, a, b) | AnfBound::Match(_, _, a, b) => {
                    a.walk(f);
                    b.walk(f);
                }
                _ => {}
            }
        }
    }

    pub fn all_lets(&self) -> Vec<&AnfLet> {
        let mut out = Vec::new();
        self.walk(&mut |l| out.push(l));
        out
    }
}

/// Converts a uniquified term to ANF. Source binders keep their names; new
/// temporaries come from `supply`.
pub fn to_anf(t: &Term, supply: &mut NameSupply) -> AnfTerm {
    let mut lets = Vec::new();
    let ret = name_of(t, &mut lets, supply);
    AnfTerm { lets, ret }
}

fn push(lets: &mut Vec<AnfLet>, name: Name, bound: AnfBound, span: Span) {
    lets.push(AnfLet { name, bound, span });
}

/// Emits bindings for `t` and returns the variable holding its value.
fn name_of(t: &Term, lets: &mut Vec<AnfLet>, supply: &mut NameSupply) -> Name {
    match &t.kind {
        TermKind::Var(x) => x.clone(),
        TermKind::Let(x, rhs, body) => {
            let b = bound_of(rhs, lets, supply);
            push(lets, x.clone(), b, rhs.span);
            name_of(body, lets, supply)
        }
        TermKind::LetRec(f, rhs, body) => {
            push_letrec(f, rhs, lets, supply);
            name_of(body, lets, supply)
        }
        _ => {
            let b = bound_of(t, lets, supply);
            let x = supply.fresh("_");
            push(lets, x.clone(), b, t.span);
            x
        }
    }
}

fn push_letrec(f: &Name, rhs: &Term, lets: &mut Vec<AnfLet>, supply: &mut NameSupply) {
    match &rhs.kind {
        TermKind::Lam(x, body) => {
            let body = to_anf(body, supply);
            push(lets, f.clone(), AnfBound::Lam { param: x.clone(), body, recursive: true }, rhs.span);
        }
        _ => unreachable!("let rec of a non-lambda survived validation"),
    }
}

/// Emits bindings for the operands of `t` and returns the final computation.
fn bound_of(t: &Term, lets: &mut Vec<AnfLet>, supply: &mut NameSupply) -> AnfBound {
    match &t.kind {
        TermKind::Var(x) => AnfBound::Var(x.clone()),
        TermKind::Const(c) => AnfBound::Const(c.clone()),
        TermKind::Lam(x, body) => AnfBound::Lam { param: x.clone(), body: to_anf(body, supply), recursive: false },
        TermKind::App(f, a) => {
            let f = name_of(f, lets, supply);
            let a = name_of(a, lets, supply);
            AnfBound::App(f, a)
        }
        TermKind::Let(x, rhs, body) => {
            let b = bound_of(rhs, lets, supply);
            push(lets, x.clone(), b, rhs.span);
            bound_of(body, lets, supply)
        }
        TermKind::LetRec(f, rhs, body) => {
            push_letrec(f, rhs, lets, supply);
            bound_of(body, lets, supply)
        }
        TermKind::If(c, a, b) => {
            let c = name_of(c, lets, supply);
            AnfBound::If(c, to_anf(a, supply), to_anf(b, supply))
        }
        TermKind::Match(s, p, a, b) => {
            let s = name_of(s, lets, supply);
            AnfBound::Match(s, p.clone(), to_anf(a, supply), to_anf(b, supply))
        }
        TermKind::Assume(e) => AnfBound::Assume(name_of(e, lets, supply)),
        TermKind::Weight(e) => AnfBound::Weight(name_of(e, lets, supply)),
        TermKind::Record(fs) => {
            AnfBound::Record(fs.iter().map(|(k, e)| (k.clone(), name_of(e, lets, supply))).collect())
        }
        TermKind::Variant(tag, e) => AnfBound::Variant(tag.clone(), name_of(e, lets, supply)),
        TermKind::Seq(es) => AnfBound::Seq(es.iter().map(|e| name_of(e, lets, supply)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parser::parse;
    use crate::lang::uniquify::uniquify;

    fn anf(src: &str) -> AnfTerm {
        let mut u = uniquify(&parse(src).unwrap()).unwrap();
        to_anf(&u.term, &mut u.supply)
    }

    #[test]
    fn weight_operand_is_let_bound() {
        let t = anf("weight 0.5; 1");
        assert!(matches!(t.lets[0].bound, AnfBound::Const(Constant::Real(x)) if x == 0.5));
        assert!(matches!(&t.lets[1].bound, AnfBound::Weight(x) if *x == t.lets[0].name));
    }

    #[test]
    fn already_anf_programs_keep_their_binders() {
        let t = anf("let one = 1 in let f = lam x. let t = weight one in x in let v = f one in v");
        let names: Vec<&str> = t.names().map(|n| &**n).collect();
        assert_eq!(names, ["one", "f", "v"]);
        assert_eq!(&*t.ret, "v");
        match &t.lets[1].bound {
            AnfBound::Lam { param, body, recursive: false } => {
                assert_eq!(&**param, "x");
                assert_eq!(body.names().map(|n| &**n).collect::<Vec<_>>(), ["t"]);
                assert_eq!(&*body.ret, "x");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nested_expressions_are_flattened() {
        let t = anf("let f = lam x. x in f (f 1) + 2");
        // f, 1, f 1, f (f 1), (+), (+) _, 2, result
        assert_eq!(t.lets.len(), 8);
        assert!(t.all_lets().iter().all(|l| !matches!(l.bound, AnfBound::Var(_))));
    }
}
