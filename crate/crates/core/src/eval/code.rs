//! Lowering of ANF into a flat instruction graph with numbered frame slots.
//! Lambdas become flat closures that copy the values of their free variables.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::lang::anf::{AnfBound, AnfTerm};
use crate::lang::syntax::{Constant, Label, Name, Pattern, Span};
use crate::lang::Program;
use crate::value::Value;

/// Index of a binder (let, parameter or pattern variable) in `Code::names`.
pub type Sym = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinderKind {
    Let,
    Param,
    PatternVar,
}

#[derive(Debug)]
pub struct Code {
    names: Vec<Name>,
    spans: Vec<Span>,
    kinds: Vec<BinderKind>,
    ops: Vec<&'static str>,
    by_name: HashMap<Name, Sym>,
    pub(crate) nodes: Vec<Node>,
    pub(crate) lams: Vec<LamInfo>,
    pub(crate) entry: u32,
    pub(crate) top_frame: u32,
}

#[derive(Debug)]
pub(crate) enum Node {
    Let { sym: Sym, slot: u32, op: Op, next: u32 },
    Ret(u32),
}

#[derive(Debug)]
pub(crate) enum Op {
    Var(u32),
    Const(Value),
    Lam(u32),
    App { f: u32, a: u32 },
    If { c: u32, then_: u32, else_: u32 },
    Match { s: u32, pat: CPat, then_: u32, else_: u32 },
    Assume(u32),
    Weight(u32),
    Record(Vec<(Label, u32)>),
    Variant(Label, u32),
    Seq(Vec<u32>),
}

#[derive(Debug)]
pub(crate) enum CPat {
    Bind(u32),
    Wild,
    Bool(bool),
    Record(Vec<(Label, CPat)>),
    Variant(Label, Box<CPat>),
    Cons(Box<CPat>, Box<CPat>),
    Empty,
}

#[derive(Debug)]
pub(crate) struct LamInfo {
    /// Slots of the captured values in the defining frame, in environment order.
    pub captures: Vec<u32>,
    pub param_slot: u32,
    pub self_slot: Option<u32>,
    pub frame_size: u32,
    pub body: u32,
}

impl Code {
    pub fn compile(p: &Program) -> Arc<Code> {
        Code::from_anf(&p.anf)
    }

    pub fn from_anf(t: &AnfTerm) -> Arc<Code> {
        let mut c = Compiler {
            code: Code {
                names: Vec::new(),
                spans: Vec::new(),
                kinds: Vec::new(),
                ops: Vec::new(),
                by_name: HashMap::new(),
                nodes: Vec::new(),
                lams: Vec::new(),
                entry: 0,
                top_frame: 0,
            },
        };
        let mut frame = Frame::default();
        let entry = c.term(t, &mut frame);
        c.code.entry = entry;
        c.code.top_frame = frame.size;
        Arc::new(c.code)
    }

    pub fn name(&self, s: Sym) -> &Name {
        &self.names[s as usize]
    }

    pub fn span(&self, s: Sym) -> Span {
        self.spans[s as usize]
    }

    pub fn kind(&self, s: Sym) -> BinderKind {
        self.kinds[s as usize]
    }

    /// Short label of what a let binds: "assume", "weight", "app", ...
    pub fn op_label(&self, s: Sym) -> &'static str {
        self.ops[s as usize]
    }

    pub fn sym(&self, name: &str) -> Option<Sym> {
        self.by_name.get(name).copied()
    }

    pub fn num_syms(&self) -> usize {
        self.names.len()
    }

    pub fn names_of(&self, syms: &[Sym]) -> Vec<Name> {
        syms.iter().map(|&s| self.name(s).clone()).collect()
    }

    /// Boolean mask over syms for a set of binder names; unknown names are ignored.
    pub fn mask<'a>(&self, names: impl IntoIterator<Item = &'a Name>) -> Vec<bool> {
        let mut m = vec![false; self.num_syms()];
        for n in names {
            if let Some(s) = self.sym(n) {
                m[s as usize] = true;
            }
        }
        m
    }
}

#[derive(Default)]
struct Frame {
    slots: HashMap<Name, u32>,
    size: u32,
}

impl Frame {
    fn alloc(&mut self, x: &Name) -> u32 {
        let s = self.size;
        self.slots.insert(x.clone(), s);
        self.size += 1;
        s
    }

    fn slot(&self, x: &Name) -> u32 {
        *self.slots.get(x).unwrap_or_else(|| panic!("unresolved variable `{x}` in ANF"))
    }
}

struct Compiler {
    code: Code,
}

fn op_label(b: &AnfBound) -> &'static str {
    match b {
        AnfBound::Var(_) => "var",
        AnfBound::Const(_) => "const",
        AnfBound::Lam { .. } => "lam",
        AnfBound::App(..) => "app",
        AnfBound::If(..) => "if",
        AnfBound::Match(..) => "match",
        AnfBound::Assume(_) => "assume",
        AnfBound::Weight(_) => "weight",
        AnfBound::Record(_) => "record",
        AnfBound::Variant(..) => "variant",
        AnfBound::Seq(_) => "seq",
    }
}

impl Compiler {
    fn intern(&mut self, x: &Name, span: Span, kind: BinderKind, op: &'static str) -> Sym {
        let s = self.code.names.len() as Sym;
        self.code.names.push(x.clone());
        self.code.spans.push(span);
        self.code.kinds.push(kind);
        self.code.ops.push(op);
        self.code.by_name.insert(x.clone(), s);
        s
    }

    fn push(&mut self, n: Node) -> u32 {
        self.code.nodes.push(n);
        (self.code.nodes.len() - 1) as u32
    }

    fn term(&mut self, t: &AnfTerm, frame: &mut Frame) -> u32 {
        let mut pending = Vec::with_capacity(t.lets.len());
        for l in &t.lets {
            let sym = self.intern(&l.name, l.span, BinderKind::Let, op_label(&l.bound));
            // a recursive lambda refers to itself through its own frame, but
            // later code in this frame needs the slot too
            let slot = frame.alloc(&l.name);
            let op = self.bound(&l.name, &l.bound, frame);
            pending.push((sym, slot, op));
        }
        let mut next = self.push(Node::Ret(frame.slot(&t.ret)));
        for (sym, slot, op) in pending.into_iter().rev() {
            next = self.push(Node::Let { sym, slot, op, next });
        }
        next
    }

    fn pattern(&mut self, p: &Pattern, frame: &mut Frame) -> CPat {
        match p {
            Pattern::Var(x) => {
                self.intern(x, Span::default(), BinderKind::PatternVar, "pattern");
                CPat::Bind(frame.alloc(x))
            }
            Pattern::Wildcard => CPat::Wild,
            Pattern::Bool(b) => CPat::Bool(*b),
            Pattern::Empty => CPat::Empty,
            Pattern::Record(fs) => {
                CPat::Record(fs.iter().map(|(k, q)| (k.clone(), self.pattern(q, frame))).collect())
            }
            Pattern::Variant(tag, q) => CPat::Variant(tag.clone(), Box::new(self.pattern(q, frame))),
            Pattern::Cons(h, t) => {
                let h = self.pattern(h, frame);
                CPat::Cons(Box::new(h), Box::new(self.pattern(t, frame)))
            }
        }
    }

    fn bound(&mut self, x: &Name, b: &AnfBound, frame: &mut Frame) -> Op {
        match b {
            AnfBound::Var(y) => Op::Var(frame.slot(y)),
            AnfBound::Const(c) => Op::Const(match c {
                Constant::Unit => Value::Unit,
                Constant::Bool(b) => Value::Bool(*b),
                Constant::Int(i) => Value::Int(*i),
                Constant::Real(r) => Value::Real(*r),
                Constant::Prim(p) => Value::prim(*p),
            }),
            AnfBound::Lam { param, body, recursive } => {
                let mut free = BTreeSet::new();
                free_vars(body, &mut free);
                free.remove(param);
                if *recursive {
                    free.remove(x);
                }
                let mut inner = Frame::default();
                let mut captures = Vec::with_capacity(free.len());
                for v in &free {
                    captures.push(frame.slot(v));
                    inner.alloc(v);
                }
                self.intern(param, Span::default(), BinderKind::Param, "param");
                let param_slot = inner.alloc(param);
                let self_slot = recursive.then(|| inner.alloc(x));
                let body = self.term(body, &mut inner);
                self.code.lams.push(LamInfo { captures, param_slot, self_slot, frame_size: inner.size, body });
                Op::Lam((self.code.lams.len() - 1) as u32)
            }
            AnfBound::App(f, a) => Op::App { f: frame.slot(f), a: frame.slot(a) },
            AnfBound::If(c, t, e) => {
                let c = frame.slot(c);
                let then_ = self.term(t, frame);
                let else_ = self.term(e, frame);
                Op::If { c, then_, else_ }
            }
            AnfBound::Match(s, p, t, e) => {
                let s = frame.slot(s);
                let pat = self.pattern(p, frame);
                let then_ = self.term(t, frame);
                let else_ = self.term(e, frame);
                Op::Match { s, pat, then_, else_ }
            }
            AnfBound::Assume(y) => Op::Assume(frame.slot(y)),
            AnfBound::Weight(y) => Op::Weight(frame.slot(y)),
            AnfBound::Record(fs) => {
                let mut fs: Vec<(Label, u32)> = fs.iter().map(|(k, y)| (k.clone(), frame.slot(y))).collect();
                fs.sort_by(|a, b| a.0.cmp(&b.0));
                Op::Record(fs)
            }
            AnfBound::Variant(tag, y) => Op::Variant(tag.clone(), frame.slot(y)),
            AnfBound::Seq(ys) => Op::Seq(ys.iter().map(|y| frame.slot(y)).collect()),
        }
    }
}

/// Variables used in `t` but not bound inside it. Names are unique, so a
/// name bound anywhere inside `t` is never free in it.
pub fn free_vars(t: &AnfTerm, out: &mut BTreeSet<Name>) {
    let mut used = BTreeSet::new();
    let mut bound = BTreeSet::new();
    collect(t, &mut used, &mut bound);
    out.extend(used.difference(&bound).cloned());
}

fn collect(t: &AnfTerm, used: &mut BTreeSet<Name>, bound: &mut BTreeSet<Name>) {
    used.insert(t.ret.clone());
    for l in &t.lets {
        bound.insert(l.name.clone());
        match &l.bound {
            AnfBound::Var(y) | AnfBound::Assume(y) | AnfBound::Weight(y) | AnfBound::Variant(_, y) => {
                used.insert(y.clone());
            }
            AnfBound::Const(_) => {}
            AnfBound::Lam { param, body, .. } => {
                bound.insert(param.clone());
                collect(body, used, bound);
            }
            AnfBound::App(f, a) => {
                used.insert(f.clone());
                used.insert(a.clone());
            }
            AnfBound::If(c, a, b) => {
                used.insert(c.clone());
                collect(a, used, bound);
                collect(b, used, bound);
            }
            AnfBound::Match(s, p, a, b) => {
                used.insert(s.clone());
                bound.extend(p.vars());
                collect(a, used, bound);
                collect(b, used, bound);
            }
            AnfBound::Record(fs) => used.extend(fs.iter().map(|(_, y)| y.clone())),
            AnfBound::Seq(ys) => used.extend(ys.iter().cloned()),
        }
    }
}
