use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::lang::anf::{AnfBound, AnfTerm};
use crate::lang::pretty;
use crate::lang::syntax::{Label, Name, Pattern};

/// Abstract values: what a variable may evaluate to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AbsValue {
    /// The value may differ between executions.
    Stoch,
    /// An intrinsic still expecting this many arguments.
    Const(usize),
    /// A closure of `λparam. body`, where `body` names the result of the body.
    Lam { param: Name, body: Name },
    /// A record built at one site; each key maps to the variable stored there.
    Record(Vec<(Label, Name)>),
    Variant(Label, Name),
    /// A sequence literal; all elements are merged into one set.
    Seq(BTreeSet<Name>),
}

impl fmt::Display for AbsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbsValue::Stoch => f.write_str("stoch"),
            AbsValue::Const(n) => write!(f, "const {n}"),
            AbsValue::Lam { param, body } => write!(f, "λ{param}.{body}"),
            AbsValue::Record(fs) => {
                let parts: Vec<String> = fs.iter().map(|(k, v)| format!("{k} = {v}")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
            AbsValue::Variant(tag, x) => write!(f, "{tag} {x}"),
            AbsValue::Seq(xs) => {
                let parts: Vec<&str> = xs.iter().map(|x| &**x).collect();
                write!(f, "[{}]", parts.join(", "))
            }
        }
    }
}

impl Serialize for AbsValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// One step into a structured value, used to locate pattern variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PathStep {
    Field(Label),
    Payload(Label),
    Head,
    Tail,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// `v ∈ S_x`
    Member { value: AbsValue, x: Name },
    /// `S_from ⊆ S_to`
    Subset { from: Name, to: Name },
    /// `∀ λz.y ∈ S_f: S_arg ⊆ S_z ∧ S_y ⊆ S_x`
    AppLam { f: Name, arg: Name, x: Name },
    /// `∀ const n ∈ S_f, n > 1: const (n-1) ∈ S_x`
    AppConst { f: Name, x: Name },
    /// `stoch ∈ S_f ⇒ stoch ∈ S_x`
    AppStochFun { f: Name, x: Name },
    /// `const _ ∈ S_f ⇒ (stoch ∈ S_arg ⇒ stoch ∈ S_x)`
    AppStochArg { f: Name, arg: Name, x: Name },
    /// `const _ ∈ S_f ⇒ (stoch reachable inside S_arg ⇒ stoch ∈ S_x)`:
    /// intrinsics see through data structures.
    AppStochData { f: Name, arg: Name, x: Name },
    /// `unaligned_x ⇒ ∀ λy._ ∈ S_f: unaligned_y`
    AppUnalignedCall { f: Name, x: Name },
    /// `stoch ∈ S_f ⇒ ∀ λy._ ∈ S_f: unaligned_y`
    AppStochCallee { f: Name },
    /// `stoch ∈ S_c ⇒ stoch ∈ S_x ∧ ∀ n ∈ names: unaligned_n`
    IfStoch { cond: Name, x: Name, names: Vec<Name> },
    /// `unaligned_x ⇒ ∀ n ∈ names: unaligned_n`, for both branches of `x`
    UnalignedBranches { x: Name, names: Vec<Name> },
    /// `unaligned_y ⇒ ∀ n ∈ names(body): unaligned_n`, for `λy.body`
    UnalignedBody { param: Name, names: Vec<Name> },
    /// `matchStochastic(S_s, p) ⇒ stoch ∈ S_x ∧ ∀ n ∈ names: unaligned_n`
    MatchStoch { scrut: Name, pat: Pattern, x: Name, names: Vec<Name> },
    /// Values found at `path` inside `S_scrut` flow into `S_var`.
    PatternBind { scrut: Name, path: Vec<PathStep>, var: Name },
}

fn list(names: &[Name]) -> String {
    let parts: Vec<&str> = names.iter().map(|n| &**n).collect();
    format!("{{{}}}", parts.join(", "))
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Constraint::*;
        match self {
            Member { value, x } => write!(f, "{value} ∈ S_{x}"),
            Subset { from, to } => write!(f, "S_{from} ⊆ S_{to}"),
            AppLam { f: g, arg, x } => write!(f, "∀λz.y ∈ S_{g}: S_{arg} ⊆ S_z ∧ S_y ⊆ S_{x}"),
            AppConst { f: g, x } => write!(f, "∀const n ∈ S_{g}, n > 1: const n-1 ∈ S_{x}"),
            AppStochFun { f: g, x } => write!(f, "stoch ∈ S_{g} ⇒ stoch ∈ S_{x}"),
            AppStochArg { f: g, arg, x } => write!(f, "const _ ∈ S_{g} ⇒ (stoch ∈ S_{arg} ⇒ stoch ∈ S_{x})"),
            AppStochData { f: g, arg, x } => {
                write!(f, "const _ ∈ S_{g} ⇒ (stoch inside S_{arg} ⇒ stoch ∈ S_{x})")
            }
            AppUnalignedCall { f: g, x } => write!(f, "unaligned_{x} ⇒ ∀λy._ ∈ S_{g}: unaligned_y"),
            AppStochCallee { f: g } => write!(f, "stoch ∈ S_{g} ⇒ ∀λy._ ∈ S_{g}: unaligned_y"),
            IfStoch { cond, x, names } => {
                write!(f, "stoch ∈ S_{cond} ⇒ stoch ∈ S_{x} ∧ unaligned {}", list(names))
            }
            UnalignedBranches { x, names } => write!(f, "unaligned_{x} ⇒ unaligned {}", list(names)),
            UnalignedBody { param, names } => write!(f, "unaligned_{param} ⇒ unaligned {}", list(names)),
            MatchStoch { scrut, pat, x, names } => {
                let mut p = String::new();
                pretty::pattern(pat, &mut p);
                write!(f, "matchStochastic(S_{scrut}, {p}) ⇒ stoch ∈ S_{x} ∧ unaligned {}", list(names))
            }
            PatternBind { scrut, path, var } => write!(f, "S_{scrut}{path:?} ⊆ S_{var}"),
        }
    }
}

/// Constraints for every binding in `t`, in program order.
pub fn generate(t: &AnfTerm) -> Vec<Constraint> {
    let mut out = Vec::new();
    gen_term(t, &mut out);
    out
}

fn names_of(t: &AnfTerm) -> Vec<Name> {
    t.names().cloned().collect()
}

fn gen_term(t: &AnfTerm, out: &mut Vec<Constraint>) {
    use Constraint::*;
    for l in &t.lets {
        let x = l.name.clone();
        match &l.bound {
            AnfBound::Var(y) => out.push(Subset { from: y.clone(), to: x }),
            AnfBound::Const(c) => {
                if c.arity() > 0 {
                    out.push(Member { value: AbsValue::Const(c.arity()), x });
                }
            }
            AnfBound::Lam { param, body, .. } => {
                out.push(Member { value: AbsValue::Lam { param: param.clone(), body: body.ret.clone() }, x });
                out.push(UnalignedBody { param: param.clone(), names: names_of(body) });
                gen_term(body, out);
            }
            AnfBound::App(f, a) => {
                out.push(AppLam { f: f.clone(), arg: a.clone(), x: x.clone() });
                out.push(AppConst { f: f.clone(), x: x.clone() });
                out.push(AppStochFun { f: f.clone(), x: x.clone() });
                out.push(AppStochArg { f: f.clone(), arg: a.clone(), x: x.clone() });
                out.push(AppStochData { f: f.clone(), arg: a.clone(), x: x.clone() });
                out.push(AppUnalignedCall { f: f.clone(), x });
                out.push(AppStochCallee { f: f.clone() });
            }
            AnfBound::If(c, a, b) => {
                let names: Vec<Name> = names_of(a).into_iter().chain(names_of(b)).collect();
                out.push(Subset { from: a.ret.clone(), to: x.clone() });
                out.push(Subset { from: b.ret.clone(), to: x.clone() });
                out.push(IfStoch { cond: c.clone(), x: x.clone(), names: names.clone() });
                out.push(UnalignedBranches { x, names });
                gen_term(a, out);
                gen_term(b, out);
            }
            AnfBound::Match(s, p, a, b) => {
                let names: Vec<Name> = names_of(a).into_iter().chain(names_of(b)).collect();
                out.push(Subset { from: a.ret.clone(), to: x.clone() });
                out.push(Subset { from: b.ret.clone(), to: x.clone() });
                out.push(MatchStoch { scrut: s.clone(), pat: p.clone(), x: x.clone(), names: names.clone() });
                out.push(UnalignedBranches { x, names });
                pattern_binds(s, p, &mut Vec::new(), out);
                gen_term(a, out);
                gen_term(b, out);
            }
            AnfBound::Assume(_) => out.push(Member { value: AbsValue::Stoch, x }),
            AnfBound::Weight(_) => {}
            AnfBound::Record(fs) => {
                let mut fs = fs.clone();
                fs.sort_by(|a, b| a.0.cmp(&b.0));
                out.push(Member { value: AbsValue::Record(fs), x });
            }
            AnfBound::Variant(tag, y) => {
                out.push(Member { value: AbsValue::Variant(tag.clone(), y.clone()), x })
            }
            AnfBound::Seq(ys) => out.push(Member { value: AbsValue::Seq(ys.iter().cloned().collect()), x }),
        }
    }
}

fn pattern_binds(scrut: &Name, p: &Pattern, path: &mut Vec<PathStep>, out: &mut Vec<Constraint>) {
    match p {
        Pattern::Var(v) => out.push(Constraint::PatternBind { scrut: scrut.clone(), path: path.clone(), var: v.clone() }),
        Pattern::Wildcard | Pattern::Bool(_) | Pattern::Empty => {}
        Pattern::Record(fs) => {
            for (k, q) in fs {
                path.push(PathStep::Field(k.clone()));
                pattern_binds(scrut, q, path, out);
                path.pop();
            }
        }
        Pattern::Variant(tag, q) => {
            path.push(PathStep::Payload(tag.clone()));
            pattern_binds(scrut, q, path, out);
            path.pop();
        }
        Pattern::Cons(h, t) => {
            path.push(PathStep::Head);
            pattern_binds(scrut, h, path, out);
            path.pop();
            path.push(PathStep::Tail);
            pattern_binds(scrut, t, path, out);
            path.pop();
        }
    }
}
