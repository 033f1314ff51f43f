//! The abstract machine. Control is a node index, the environment is the
//! current frame, and the continuation is an explicit stack, so a running
//! program is plain data that can be cloned at any suspension point.

use std::sync::Arc;

use crate::dists::Distribution;
use crate::error::RuntimeError;
use crate::eval::code::{CPat, Code, Node, Op, Sym};
use crate::intrinsic;
use crate::value::{Closure, Value};

/// Effects of a running program: how draws are produced and what happens at
/// weights. Implemented by replay, sampling, SMC and MCMC drivers.
pub trait Handler {
    /// Whether the machine should maintain the stack of closure-application
    /// sites passed to `assume`.
    const TRACK_PATH: bool = false;

    fn assume(&mut self, site: Sym, dist: &Arc<Distribution>, path: &[Sym]) -> Result<Value, RuntimeError>;

    /// Called with the log of a non-negative weight. Returning `true` suspends
    /// execution right after the weight's binding.
    fn weight(&mut self, site: Sym, log_w: f64) -> bool;

    /// Called whenever a `let` binder receives its value.
    #[inline]
    fn bind(&mut self, _sym: Sym) {}
}

#[derive(Clone, Debug)]
enum Kont {
    /// Resume the caller: restore its frame, then bind the call's result.
    Return { frame: Vec<Value>, node: u32, path_len: u32 },
    /// A branch finished: bind its result in the current frame.
    Join { node: u32 },
}

#[derive(Debug)]
pub struct Machine {
    frame: Vec<Value>,
    stack: Vec<Kont>,
    ctrl: u32,
    path: Vec<Sym>,
    finished: bool,
    /// Frames of returned calls, kept for reuse.
    spare: Vec<Vec<Value>>,
}

impl Clone for Machine {
    fn clone(&self) -> Self {
        Machine {
            frame: self.frame.clone(),
            stack: self.stack.clone(),
            ctrl: self.ctrl,
            path: self.path.clone(),
            finished: self.finished,
            spare: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Step {
    /// Suspended right after the weight bound to `site`.
    Suspended { site: Sym },
    Done(Value),
}

impl Machine {
    pub fn new(code: &Code) -> Machine {
        Machine {
            frame: vec![Value::Unit; code.top_frame as usize],
            stack: Vec::new(),
            ctrl: code.entry,
            path: Vec::new(),
            finished: false,
            spare: Vec::new(),
        }
    }

    /// Back to the start of the program, keeping allocations.
    pub fn reset(&mut self, code: &Code) {
        self.frame.clear();
        self.frame.resize(code.top_frame as usize, Value::Unit);
        while let Some(k) = self.stack.pop() {
            if let Kont::Return { frame, .. } = k {
                self.spare.push(frame);
            }
        }
        self.ctrl = code.entry;
        self.path.clear();
        self.finished = false;
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Runs until the program finishes or the handler asks to suspend.
    pub fn run<H: Handler>(&mut self, code: &Code, h: &mut H) -> Result<Step, RuntimeError> {
        if self.finished {
            return Err(RuntimeError::AlreadyTerminated);
        }
        loop {
            let node = self.ctrl;
            match &code.nodes[node as usize] {
                Node::Ret(slot) => {
                    let v = self.frame[*slot as usize].clone();
                    match self.stack.pop() {
                        None => {
                            self.finished = true;
                            return Ok(Step::Done(v));
                        }
                        Some(Kont::Join { node }) => self.bind_result(code, node, v, h),
                        Some(Kont::Return { frame, node, path_len }) => {
                            let callee = std::mem::replace(&mut self.frame, frame);
                            self.spare.push(callee);
                            if H::TRACK_PATH {
                                self.path.truncate(path_len as usize);
                            }
                            self.bind_result(code, node, v, h);
                        }
                    }
                }
                Node::Let { sym, slot, op, next } => {
                    let v = match op {
                        Op::Var(y) => self.frame[*y as usize].clone(),
                        Op::Const(c) => c.clone(),
                        Op::Lam(id) => {
                            let lam = &code.lams[*id as usize];
                            let env = lam.captures.iter().map(|&s| self.frame[s as usize].clone()).collect();
                            Value::Closure(Arc::new(Closure { lam: *id, env }))
                        }
                        Op::App { f, a } => {
                            let arg = self.frame[*a as usize].clone();
                            match &self.frame[*f as usize] {
                                Value::Prim(p) => p.with_args(|prim, s| intrinsic::apply(prim, s, arg))?,
                                Value::Closure(c) => {
                                    let c = c.clone();
                                    self.enter(code, &c, arg, node, *sym, H::TRACK_PATH);
                                    continue;
                                }
                                other => {
                                    return Err(RuntimeError::Type(format!("cannot apply {}", other.describe())))
                                }
                            }
                        }
                        Op::If { c, then_, else_ } => {
                            let branch = match &self.frame[*c as usize] {
                                Value::Bool(true) => *then_,
                                Value::Bool(false) => *else_,
                                other => {
                                    return Err(RuntimeError::Type(format!(
                                        "`if` expects a boolean, got {}",
                                        other.describe()
                                    )))
                                }
                            };
                            self.stack.push(Kont::Join { node });
                            self.ctrl = branch;
                            continue;
                        }
                        Op::Match { s, pat, then_, else_ } => {
                            let scrut = self.frame[*s as usize].clone();
                            let branch = if matches(pat, &scrut, &mut self.frame) { *then_ } else { *else_ };
                            self.stack.push(Kont::Join { node });
                            self.ctrl = branch;
                            continue;
                        }
                        Op::Assume(y) => match &self.frame[*y as usize] {
                            Value::Dist(d) => {
                                let d = d.clone();
                                h.assume(*sym, &d, &self.path)?
                            }
                            other => {
                                return Err(RuntimeError::Type(format!(
                                    "`assume` expects a distribution, got {}",
                                    other.describe()
                                )))
                            }
                        },
                        Op::Weight(y) => {
                            let w = match self.frame[*y as usize].as_f64() {
                                Some(w) => w,
                                None => {
                                    return Err(RuntimeError::Type(format!(
                                        "`weight` expects a number, got {}",
                                        self.frame[*y as usize].describe()
                                    )))
                                }
                            };
                            if w.is_nan() || w < 0.0 {
                                return Err(RuntimeError::NegativeWeight(w));
                            }
                            self.frame[*slot as usize] = Value::Unit;
                            h.bind(*sym);
                            self.ctrl = *next;
                            if h.weight(*sym, w.ln()) {
                                return Ok(Step::Suspended { site: *sym });
                            }
                            continue;
                        }
                        Op::Record(fs) => Value::Record(Arc::new(
                            fs.iter().map(|(k, s)| (k.clone(), self.frame[*s as usize].clone())).collect(),
                        )),
                        Op::Variant(tag, y) => {
                            Value::Variant(Arc::new((tag.clone(), self.frame[*y as usize].clone())))
                        }
                        Op::Seq(ys) => Value::seq(ys.iter().map(|s| self.frame[*s as usize].clone()).collect()),
                    };
                    self.frame[*slot as usize] = v;
                    h.bind(*sym);
                    self.ctrl = *next;
                }
            }
        }
    }

    #[inline]
    fn bind_result<H: Handler>(&mut self, code: &Code, node: u32, v: Value, h: &mut H) {
        match &code.nodes[node as usize] {
            Node::Let { sym, slot, next, .. } => {
                self.frame[*slot as usize] = v;
                h.bind(*sym);
                self.ctrl = *next;
            }
            Node::Ret(_) => unreachable!("continuation points at a return node"),
        }
    }

    fn enter(&mut self, code: &Code, c: &Arc<Closure>, arg: Value, node: u32, site: Sym, track: bool) {
        let lam = &code.lams[c.lam as usize];
        let mut frame = self.spare.pop().unwrap_or_default();
        frame.clear();
        frame.extend_from_slice(&c.env);
        frame.resize(lam.frame_size as usize, Value::Unit);
        frame[lam.param_slot as usize] = arg;
        if let Some(s) = lam.self_slot {
            frame[s as usize] = Value::Closure(c.clone());
        }
        let caller = std::mem::replace(&mut self.frame, frame);
        self.stack.push(Kont::Return { frame: caller, node, path_len: self.path.len() as u32 });
        if track {
            self.path.push(site);
        }
        self.ctrl = lam.body;
    }
}

/// Tests `v` against `p`, writing bound variables into `frame`.
fn matches(p: &CPat, v: &Value, frame: &mut [Value]) -> bool {
    match p {
        CPat::Bind(slot) => {
            frame[*slot as usize] = v.clone();
            true
        }
        CPat::Wild => true,
        CPat::Bool(b) => matches!(v, Value::Bool(x) if x == b),
        CPat::Empty => matches!(v, Value::Seq(s) if s.is_empty()),
        CPat::Cons(hp, tp) => match v {
            Value::Seq(s) => match s.split_first() {
                Some((h, t)) => matches(hp, h, frame) && matches(tp, &Value::Seq(t), frame),
                None => false,
            },
            _ => false,
        },
        CPat::Variant(tag, sub) => match v {
            Value::Variant(x) if x.0 == *tag => matches(sub, &x.1, frame),
            _ => false,
        },
        CPat::Record(fs) => match v {
            Value::Record(_) => fs.iter().all(|(k, q)| match v.field(k) {
                Some(x) => matches(q, x, frame),
                None => false,
            }),
            _ => false,
        },
    }
}
