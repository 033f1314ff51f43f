use std::fmt;
use std::sync::Arc;

use crate::intrinsic::Prim;

/// Identifiers for variables, let binders and lambda parameters.
pub type Name = Arc<str>;

/// Record keys and variant tags.
pub type Label = Arc<str>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Literal constants and intrinsic functions.
#[derive(Clone, Debug, PartialEq)]
pub enum Constant {
    Unit,
    Bool(bool),
    Int(i64),
    Real(f64),
    Prim(Prim),
}

impl Constant {
    /// Number of arguments still expected; zero for literals.
    pub fn arity(&self) -> usize {
        match self {
            Constant::Prim(p) => p.arity(),
            _ => 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum TermKind {
    Var(Name),
    Const(Constant),
    Lam(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
    Let(Name, Box<Term>, Box<Term>),
    /// `let rec f = rhs in body`; `rhs` must be a lambda (checked by `uniquify::validate_letrec`).
    LetRec(Name, Box<Term>, Box<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    Match(Box<Term>, Pattern, Box<Term>, Box<Term>),
    Assume(Box<Term>),
    Weight(Box<Term>),
    Record(Vec<(Label, Term)>),
    Variant(Label, Box<Term>),
    Seq(Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(Name),
    Wildcard,
    Bool(bool),
    Record(Vec<(Label, Pattern)>),
    Variant(Label, Box<Pattern>),
    Cons(Box<Pattern>, Box<Pattern>),
    Empty,
}

impl Pattern {
    /// Variables bound by the pattern, left to right.
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Pattern::Var(x) => out.push(x.clone()),
            Pattern::Wildcard | Pattern::Bool(_) | Pattern::Empty => {}
            Pattern::Record(fields) => fields.iter().for_each(|(_, p)| p.collect_vars(out)),
            Pattern::Variant(_, p) => p.collect_vars(out),
            Pattern::Cons(h, t) => {
                h.collect_vars(out);
                t.collect_vars(out);
            }
        }
    }

    /// A pattern is irrefutable when it matches every value.
    pub fn is_irrefutable(&self) -> bool {
        matches!(self, Pattern::Var(_) | Pattern::Wildcard)
    }
}

impl Term {
    pub fn new(kind: TermKind, span: Span) -> Self {
        Term { kind, span }
    }

    /// Structural equality ignoring spans.
    pub fn same_shape(&self, other: &Term) -> bool {
        use TermKind::*;
        match (&self.kind, &other.kind) {
            (Var(a), Var(b)) => a == b,
            (Const(a), Const(b)) => const_eq(a, b),
            (Lam(x, a), Lam(y, b)) => x == y && a.same_shape(b),
            (App(f, a), App(g, b)) => f.same_shape(g) && a.same_shape(b),
            (Let(x, a, b), Let(y, c, d)) | (LetRec(x, a, b), LetRec(y, c, d)) => {
                x == y && a.same_shape(c) && b.same_shape(d)
            }
            (If(a, b, c), If(d, e, f)) => a.same_shape(d) && b.same_shape(e) && c.same_shape(f),
            (Match(a, p, b, c), Match(d, q, e, f)) => {
                p == q && a.same_shape(d) && b.same_shape(e) && c.same_shape(f)
            }
            (Assume(a), Assume(b)) | (Weight(a), Weight(b)) => a.same_shape(b),
            (Record(a), Record(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|((k, s), (l, t))| k == l && s.same_shape(t))
            }
            (Variant(k, a), Variant(l, b)) => k == l && a.same_shape(b),
            (Seq(a), Seq(b)) => a.len() == b.len() && a.iter().zip(b).all(|(s, t)| s.same_shape(t)),
            _ => false,
        }
    }

    /// Every binder and variable name occurring in the term.
    pub fn all_names(&self, out: &mut std::collections::HashSet<Name>) {
        use TermKind::*;
        match &self.kind {
            Var(x) => {
                out.insert(x.clone());
            }
            Const(_) => {}
            Lam(x, b) => {
                out.insert(x.clone());
                b.all_names(out);
            }
            App(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Let(x, a, b) | LetRec(x, a, b) => {
                out.insert(x.clone());
                a.all_names(out);
                b.all_names(out);
            }
            If(a, b, c) => {
                a.all_names(out);
                b.all_names(out);
                c.all_names(out);
            }
            Match(a, p, b, c) => {
                out.extend(p.vars());
                a.all_names(out);
                b.all_names(out);
                c.all_names(out);
            }
            Assume(a) | Weight(a) | Variant(_, a) => a.all_names(out),
            Record(fs) => fs.iter().for_each(|(_, t)| t.all_names(out)),
            Seq(ts) => ts.iter().for_each(|t| t.all_names(out)),
        }
    }
}

fn const_eq(a: &Constant, b: &Constant) -> bool {
    match (a, b) {
        // compare bit patterns so NaN literals and -0.0 round-trip exactly
        (Constant::Real(x), Constant::Real(y)) => x.to_bits() == y.to_bits(),
        _ => a == b,
    }
}
