use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::dists::Distribution;
use crate::intrinsic::Prim;
use crate::lang::syntax::Label;

/// Runtime values. Everything behind an `Arc` is immutable, so values are
/// cheap to clone and safe to share between particles.
#[derive(Clone, Debug)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Real(f64),
    Prim(Partial),
    Dist(Arc<Distribution>),
    Closure(Arc<Closure>),
    Record(Arc<Vec<(Label, Value)>>),
    Variant(Arc<(Label, Value)>),
    Seq(SeqView),
}

/// An intrinsic and the arguments supplied so far. No intrinsic takes more
/// than two, so there is at most one; numbers and booleans are stored
/// unboxed because arithmetic produces these constantly.
#[derive(Clone, Debug)]
pub enum Partial {
    Bare(Prim),
    Bool(Prim, bool),
    Int(Prim, i64),
    Real(Prim, f64),
    Boxed(Arc<(Prim, Value)>),
}

impl Partial {
    /// `prim` applied to `arg`.
    pub fn new(prim: Prim, arg: Value) -> Partial {
        match arg {
            Value::Bool(b) => Partial::Bool(prim, b),
            Value::Int(i) => Partial::Int(prim, i),
            Value::Real(x) => Partial::Real(prim, x),
            v => Partial::Boxed(Arc::new((prim, v))),
        }
    }

    pub fn prim(&self) -> Prim {
        match self {
            Partial::Bare(p) | Partial::Bool(p, _) | Partial::Int(p, _) | Partial::Real(p, _) => *p,
            Partial::Boxed(b) => b.0,
        }
    }

    /// Calls `f` with the intrinsic and its supplied arguments.
    #[inline]
    pub fn with_args<R>(&self, f: impl FnOnce(Prim, &[Value]) -> R) -> R {
        match self {
            Partial::Bare(p) => f(*p, &[]),
            Partial::Bool(p, b) => f(*p, &[Value::Bool(*b)]),
            Partial::Int(p, i) => f(*p, &[Value::Int(*i)]),
            Partial::Real(p, x) => f(*p, &[Value::Real(*x)]),
            Partial::Boxed(b) => f(b.0, std::slice::from_ref(&b.1)),
        }
    }

    pub fn supplied(&self) -> usize {
        usize::from(!matches!(self, Partial::Bare(_)))
    }
}

/// A lambda paired with the values of its free variables.
#[derive(Clone, Debug)]
pub struct Closure {
    pub lam: u32,
    pub env: Box<[Value]>,
}

/// A suffix of a shared vector; taking the tail is O(1).
#[derive(Clone, Debug)]
pub struct SeqView {
    items: Arc<Vec<Value>>,
    start: usize,
}

impl SeqView {
    pub fn new(items: Vec<Value>) -> Self {
        SeqView { items: Arc::new(items), start: 0 }
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.items[self.start..]
    }

    pub fn len(&self) -> usize {
        self.items.len() - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.as_slice().get(i)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.as_slice().iter()
    }

    pub fn split_first(&self) -> Option<(&Value, SeqView)> {
        let head = self.items.get(self.start)?;
        Some((head, SeqView { items: self.items.clone(), start: self.start + 1 }))
    }

    pub fn cons(&self, head: Value) -> SeqView {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(head);
        v.extend_from_slice(self.as_slice());
        SeqView::new(v)
    }
}

impl Value {
    pub fn seq(items: Vec<Value>) -> Value {
        Value::Seq(SeqView::new(items))
    }

    pub fn record(mut fields: Vec<(Label, Value)>) -> Value {
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        Value::Record(Arc::new(fields))
    }

    pub fn prim(prim: Prim) -> Value {
        Value::Prim(Partial::Bare(prim))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(x) => Some(*x),
            _ => None,
        }
    }

    /// Remaining arguments an intrinsic value expects; zero for everything else.
    pub fn arity(&self) -> usize {
        match self {
            Value::Prim(p) => p.prim().arity() - p.supplied(),
            _ => 0,
        }
    }

    pub fn field(&self, key: &str) -> Option<&Value> {
        match self {
            Value::Record(fs) => fs.iter().find(|(k, _)| &**k == key).map(|(_, v)| v),
            _ => None,
        }
    }

    /// Values built only from scalars, distributions and sequences thereof.
    pub fn is_plain_data(&self) -> bool {
        match self {
            Value::Unit | Value::Bool(_) | Value::Int(_) | Value::Real(_) | Value::Dist(_) => true,
            Value::Seq(s) => s.iter().all(Value::is_plain_data),
            Value::Prim(_) | Value::Closure(_) | Value::Record(_) | Value::Variant(_) => false,
        }
    }

    /// Short description for error messages.
    pub fn describe(&self) -> String {
        match self {
            Value::Unit => "unit".into(),
            Value::Bool(b) => format!("boolean {b}"),
            Value::Int(i) => format!("integer {i}"),
            Value::Real(x) => format!("real {x}"),
            Value::Prim(p) => format!("intrinsic `{}`", p.prim().name()),
            Value::Dist(d) => format!("distribution {d}"),
            Value::Closure(_) => "a closure".into(),
            Value::Record(_) => "a record".into(),
            Value::Variant(v) => format!("variant {}", v.0),
            Value::Seq(s) => format!("a sequence of length {}", s.len()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Unit => serde_json::Value::Null,
            Value::Bool(b) => json!(b),
            Value::Int(i) => json!(i),
            Value::Real(x) if x.is_finite() => json!(x),
            Value::Real(x) => json!(x.to_string()),
            Value::Seq(s) => serde_json::Value::Array(s.iter().map(Value::to_json).collect()),
            Value::Record(fs) => serde_json::Value::Object(
                fs.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect(),
            ),
            Value::Variant(v) => json!({ "tag": &*v.0, "value": v.1.to_json() }),
            other => json!(other.to_string()),
        }
    }
}

/// Canonical textual form; used as the key when comparing distributions
/// over values.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(x) => write!(f, "{x:?}"),
            Value::Prim(p) => p.with_args(|prim, args| {
                write!(f, "<{}", prim.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(">")
            }),
            Value::Dist(d) => write!(f, "{d}"),
            Value::Closure(_) => f.write_str("<closure>"),
            Value::Record(fs) => {
                f.write_str("{")?;
                for (i, (k, v)) in fs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k} = {v}")?;
                }
                f.write_str("}")
            }
            Value::Variant(v) => write!(f, "{} {}", v.0, v.1),
            Value::Seq(s) => {
                f.write_str("[")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}
