//! Printing terms back to parseable source. Operands that are not atoms are
//! parenthesised, so `parse(pretty(t))` has the same shape as `t`.

use std::fmt::Write;

use crate::intrinsic::Prim;
use crate::lang::anf::{AnfBound, AnfTerm};
use crate::lang::syntax::{Constant, Pattern, Term, TermKind};

pub fn pretty(t: &Term) -> String {
    let mut s = String::new();
    expr(t, &mut s);
    s
}

fn constant(c: &Constant, out: &mut String) {
    match c {
        Constant::Unit => out.push_str("()"),
        Constant::Bool(b) => write!(out, "{b}").unwrap(),
        Constant::Int(i) => write!(out, "{i}").unwrap(),
        Constant::Real(x) => write!(out, "{x:?}").unwrap(),
        Constant::Prim(p) if p.infix() => write!(out, "({})", p.name()).unwrap(),
        Constant::Prim(p) => out.push_str(p.name()),
    }
}

fn negative(c: &Constant) -> bool {
    match c {
        Constant::Int(i) => *i < 0,
        Constant::Real(x) => x.is_sign_negative(),
        _ => false,
    }
}

fn infix(t: &Term) -> Option<(Prim, &Term, &Term)> {
    if let TermKind::App(f, b) = &t.kind {
        if let TermKind::App(op, a) = &f.kind {
            if let TermKind::Const(Constant::Prim(p)) = &op.kind {
                if p.infix() {
                    return Some((*p, a, b));
                }
            }
        }
    }
    None
}

fn is_atom(t: &Term) -> bool {
    match &t.kind {
        TermKind::Var(_) | TermKind::Seq(_) | TermKind::Record(_) => true,
        TermKind::Const(c) => !negative(c),
        TermKind::Variant(_, p) => matches!(p.kind, TermKind::Const(Constant::Unit)),
        _ => false,
    }
}

/// Operand of an infix operator: atoms, including negative literals.
fn operand(t: &Term, out: &mut String) {
    if is_atom(t) || matches!(t.kind, TermKind::Const(_)) {
        expr(t, out);
    } else {
        paren(t, out);
    }
}

fn atom(t: &Term, out: &mut String) {
    if is_atom(t) {
        expr(t, out);
    } else {
        paren(t, out);
    }
}

fn paren(t: &Term, out: &mut String) {
    out.push('(');
    expr(t, out);
    out.push(')');
}

/// Head or argument chain of an application.
fn application(t: &Term, out: &mut String) {
    match &t.kind {
        TermKind::App(f, a) if infix(t).is_none() => {
            match &f.kind {
                TermKind::App(..) if infix(f).is_none() => application(f, out),
                // `Tag x` would read as a variant payload
                TermKind::Variant(..) => paren(f, out),
                _ => atom(f, out),
            }
            out.push(' ');
            atom(a, out);
        }
        _ => atom(t, out),
    }
}

/// Open-ended forms extend to the right as far as possible.
fn open_ended(t: &Term) -> bool {
    matches!(
        t.kind,
        TermKind::Let(..) | TermKind::LetRec(..) | TermKind::Lam(..) | TermKind::If(..) | TermKind::Match(..)
    )
}

fn expr(t: &Term, out: &mut String) {
    match &t.kind {
        TermKind::Var(x) => out.push_str(x),
        TermKind::Const(c) => constant(c, out),
        TermKind::Lam(x, b) => {
            write!(out, "lam {x}. ").unwrap();
            expr(b, out);
        }
        TermKind::App(..) => match infix(t) {
            Some((p, a, b)) => {
                operand(a, out);
                write!(out, " {} ", p.name()).unwrap();
                operand(b, out);
            }
            None => application(t, out),
        },
        TermKind::Let(x, a, b) if &**x == "_" => {
            if open_ended(a) {
                paren(a, out);
            } else {
                expr(a, out);
            }
            out.push_str("; ");
            expr(b, out);
        }
        TermKind::Let(x, a, b) | TermKind::LetRec(x, a, b) => {
            let kw = if matches!(t.kind, TermKind::LetRec(..)) { "let rec" } else { "let" };
            write!(out, "{kw} {x} = ").unwrap();
            expr(a, out);
            out.push_str(" in ");
            expr(b, out);
        }
        TermKind::If(c, a, b) => {
            out.push_str("if ");
            expr(c, out);
            out.push_str(" then ");
            expr(a, out);
            out.push_str(" else ");
            expr(b, out);
        }
        TermKind::Match(s, p, a, b) => {
            out.push_str("match ");
            expr(s, out);
            out.push_str(" with ");
            pattern(p, out);
            out.push_str(" then ");
            expr(a, out);
            out.push_str(" else ");
            expr(b, out);
        }
        TermKind::Assume(e) | TermKind::Weight(e) => {
            out.push_str(if matches!(t.kind, TermKind::Assume(_)) { "assume " } else { "weight " });
            match &e.kind {
                TermKind::Assume(_) | TermKind::Weight(_) => expr(e, out),
                _ => application(e, out),
            }
        }
        TermKind::Record(fs) => {
            out.push('{');
            for (i, (k, v)) in fs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{k} = ").unwrap();
                expr(v, out);
            }
            out.push('}');
        }
        TermKind::Variant(tag, p) => {
            out.push_str(tag);
            if !matches!(p.kind, TermKind::Const(Constant::Unit)) {
                out.push(' ');
                atom(p, out);
            }
        }
        TermKind::Seq(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(v, out);
            }
            out.push(']');
        }
    }
}

pub fn pattern(p: &Pattern, out: &mut String) {
    match p {
        Pattern::Cons(h, t) => {
            pattern_atom(h, out);
            out.push_str(" :: ");
            pattern(t, out);
        }
        _ => pattern_atom(p, out),
    }
}

fn pattern_atom(p: &Pattern, out: &mut String) {
    match p {
        Pattern::Var(x) => out.push_str(x),
        Pattern::Wildcard => out.push('_'),
        Pattern::Bool(b) => write!(out, "{b}").unwrap(),
        Pattern::Empty => out.push_str("[]"),
        Pattern::Cons(..) => {
            out.push('(');
            pattern(p, out);
            out.push(')');
        }
        Pattern::Variant(tag, sub) => {
            // a bare tag in argument position would swallow what follows
            let wrap = !matches!(**sub, Pattern::Wildcard);
            if wrap {
                out.push('(');
            }
            out.push_str(tag);
            if wrap {
                out.push(' ');
                pattern_atom(sub, out);
                out.push(')');
            }
        }
        Pattern::Record(fs) => {
            out.push('{');
            for (i, (k, v)) in fs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write!(out, "{k} = ").unwrap();
                pattern(v, out);
            }
            out.push('}');
        }
    }
}

/// Multi-line rendering of an ANF term, one binding per line.
pub fn pretty_anf(t: &AnfTerm) -> String {
    let mut s = String::new();
    anf(t, 0, &mut s);
    s
}

fn anf(t: &AnfTerm, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    for l in &t.lets {
        write!(out, "{pad}let {} = ", l.name).unwrap();
        match &l.bound {
            AnfBound::Var(x) => writeln!(out, "{x} in").unwrap(),
            AnfBound::Const(c) => {
                constant(c, out);
                out.push_str(" in\n");
            }
            AnfBound::Lam { param, body, recursive } => {
                writeln!(out, "{}lam {param}.", if *recursive { "rec " } else { "" }).unwrap();
                anf(body, depth + 1, out);
                writeln!(out, "{pad}in").unwrap();
            }
            AnfBound::App(f, a) => writeln!(out, "{f} {a} in").unwrap(),
            AnfBound::If(c, a, b) => {
                writeln!(out, "if {c} then").unwrap();
                anf(a, depth + 1, out);
                writeln!(out, "{pad}else").unwrap();
                anf(b, depth + 1, out);
                writeln!(out, "{pad}in").unwrap();
            }
            AnfBound::Match(s, p, a, b) => {
                write!(out, "match {s} with ").unwrap();
                pattern(p, out);
                out.push_str(" then\n");
                anf(a, depth + 1, out);
                writeln!(out, "{pad}else").unwrap();
                anf(b, depth + 1, out);
                writeln!(out, "{pad}in").unwrap();
            }
            AnfBound::Assume(x) => writeln!(out, "assume {x} in").unwrap(),
            AnfBound::Weight(x) => writeln!(out, "weight {x} in").unwrap(),
            AnfBound::Record(fs) => {
                let body: Vec<String> = fs.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                writeln!(out, "{{{}}} in", body.join(", ")).unwrap();
            }
            AnfBound::Variant(tag, x) => writeln!(out, "{tag} {x} in").unwrap(),
            AnfBound::Seq(xs) => {
                let body: Vec<&str> = xs.iter().map(|x| &**x).collect();
                writeln!(out, "[{}] in", body.join(", ")).unwrap();
            }
        }
    }
    writeln!(out, "{pad}{}", t.ret).unwrap();
}
