//! Built-in functions. Every intrinsic has a fixed arity and is applied one
//! argument at a time; a partial application is itself a value of arity
//! `arity - supplied`.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dists::Distribution;
use crate::error::RuntimeError;
use crate::value::{Partial, Value};

macro_rules! prims {
    ($($variant:ident => $name:literal / $arity:literal,)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        pub enum Prim { $($variant,)* }

        impl Prim {
            pub const ALL: &'static [Prim] = &[$(Prim::$variant,)*];

            pub fn name(self) -> &'static str {
                match self { $(Prim::$variant => $name,)* }
            }

            pub fn arity(self) -> usize {
                match self { $(Prim::$variant => $arity,)* }
            }

            pub fn from_name(name: &str) -> Option<Prim> {
                match name { $($name => Some(Prim::$variant),)* _ => None }
            }
        }
    };
}

// Operator intrinsics use their symbol as the name; the parser maps infix
// syntax onto them and the pretty-printer maps them back.
prims! {
    Add => "+" / 2,
    Sub => "-" / 2,
    Mul => "*" / 2,
    Div => "/" / 2,
    Eq => "==" / 2,
    Neq => "!=" / 2,
    Lt => "<" / 2,
    Le => "<=" / 2,
    Gt => ">" / 2,
    Ge => ">=" / 2,
    And => "&&" / 2,
    Or => "||" / 2,
    Cons => "::" / 2,
    Neg => "neg" / 1,
    Not => "not" / 1,
    Min => "min" / 2,
    Max => "max" / 2,
    Abs => "abs" / 1,
    Exp => "exp" / 1,
    Log => "log" / 1,
    Sqrt => "sqrt" / 1,
    Pow => "pow" / 2,
    Floor => "floor" / 1,
    Real => "real" / 1,
    Length => "length" / 1,
    Get => "get" / 2,
    Pdf => "pdf" / 2,
    LogPdf => "logpdf" / 2,
    Bernoulli => "Bernoulli" / 1,
    Beta => "Beta" / 2,
    Gamma => "Gamma" / 2,
    Exponential => "Exponential" / 1,
    Poisson => "Poisson" / 1,
    Normal => "Normal" / 2,
    Uniform => "Uniform" / 2,
    Dirichlet => "Dirichlet" / 1,
    Categorical => "Categorical" / 1,
}

impl Prim {
    /// Binary operators written infix in source.
    pub fn infix(self) -> bool {
        matches!(
            self,
            Prim::Add
                | Prim::Sub
                | Prim::Mul
                | Prim::Div
                | Prim::Eq
                | Prim::Neq
                | Prim::Lt
                | Prim::Le
                | Prim::Gt
                | Prim::Ge
                | Prim::And
                | Prim::Or
                | Prim::Cons
        )
    }

    pub fn is_distribution(self) -> bool {
        matches!(
            self,
            Prim::Bernoulli
                | Prim::Beta
                | Prim::Gamma
                | Prim::Exponential
                | Prim::Poisson
                | Prim::Normal
                | Prim::Uniform
                | Prim::Dirichlet
                | Prim::Categorical
        )
    }
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Apply an intrinsic (possibly already partially applied) to one more argument.
pub fn apply(prim: Prim, supplied: &[Value], arg: Value) -> Result<Value, RuntimeError> {
    if supplied.len() + 1 < prim.arity() {
        debug_assert!(supplied.is_empty());
        return Ok(Value::Prim(Partial::new(prim, arg)));
    }
    match supplied {
        [] => apply1(prim, arg),
        [a] => apply2(prim, a, arg),
        _ => unreachable!("no intrinsic takes more than two arguments"),
    }
}

fn num(prim: Prim, v: &Value) -> Result<f64, RuntimeError> {
    v.as_f64().ok_or_else(|| type_error(prim, "a number", v))
}

fn int(prim: Prim, v: &Value) -> Result<i64, RuntimeError> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => Err(type_error(prim, "an integer", v)),
    }
}

fn boolean(prim: Prim, v: &Value) -> Result<bool, RuntimeError> {
    match v {
        Value::Bool(b) => Ok(*b),
        _ => Err(type_error(prim, "a boolean", v)),
    }
}

fn reals(prim: Prim, v: &Value) -> Result<Vec<f64>, RuntimeError> {
    match v {
        Value::Seq(s) => s.iter().map(|x| num(prim, x)).collect(),
        _ => Err(type_error(prim, "a sequence of numbers", v)),
    }
}

fn type_error(prim: Prim, expected: &str, got: &Value) -> RuntimeError {
    RuntimeError::Type(format!(
        "`{}` expects {}, got {}",
        prim.name(),
        expected,
        got.describe()
    ))
}

/// Sequence intrinsics only handle plain data; closures, records and variants
/// inside sequences must be taken apart with `match` so the alignment
/// analysis can follow them.
fn plain(prim: Prim, v: Value) -> Result<Value, RuntimeError> {
    if v.is_plain_data() {
        Ok(v)
    } else {
        Err(RuntimeError::Type(format!(
            "`{}` cannot operate on {}; use a sequence literal or `match` instead",
            prim.name(),
            v.describe()
        )))
    }
}

fn arith(prim: Prim, a: &Value, b: &Value, fi: fn(i64, i64) -> Option<i64>, fr: fn(f64, f64) -> f64) -> Result<Value, RuntimeError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => fi(*x, *y)
            .map(Value::Int)
            .ok_or_else(|| RuntimeError::Type(format!("integer overflow in `{}`", prim.name()))),
        _ => Ok(Value::Real(fr(num(prim, a)?, num(prim, b)?))),
    }
}

fn compare(prim: Prim, a: &Value, b: &Value) -> Result<std::cmp::Ordering, RuntimeError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(x.cmp(y)),
        _ => {
            let (x, y) = (num(prim, a)?, num(prim, b)?);
            x.partial_cmp(&y)
                .ok_or_else(|| RuntimeError::Type(format!("`{}` on NaN", prim.name())))
        }
    }
}

fn equal(prim: Prim, a: &Value, b: &Value) -> Result<bool, RuntimeError> {
    match (a, b) {
        (Value::Unit, Value::Unit) => Ok(true),
        (Value::Bool(x), Value::Bool(y)) => Ok(x == y),
        (Value::Int(x), Value::Int(y)) => Ok(x == y),
        _ if a.as_f64().is_some() && b.as_f64().is_some() => Ok(num(prim, a)? == num(prim, b)?),
        _ => Err(RuntimeError::Type(format!(
            "`{}` compares numbers, booleans or unit, got {} and {}",
            prim.name(),
            a.describe(),
            b.describe()
        ))),
    }
}

fn dist(d: Result<Distribution, RuntimeError>) -> Result<Value, RuntimeError> {
    d.map(|d| Value::Dist(Arc::new(d)))
}

fn apply1(prim: Prim, a: Value) -> Result<Value, RuntimeError> {
    use Prim::*;
    Ok(match prim {
        Neg => match a {
            Value::Int(i) => Value::Int(-i),
            _ => Value::Real(-num(prim, &a)?),
        },
        Not => Value::Bool(!boolean(prim, &a)?),
        Abs => match a {
            Value::Int(i) => Value::Int(i.abs()),
            _ => Value::Real(num(prim, &a)?.abs()),
        },
        Exp => Value::Real(num(prim, &a)?.exp()),
        Log => Value::Real(num(prim, &a)?.ln()),
        Sqrt => Value::Real(num(prim, &a)?.sqrt()),
        Floor => Value::Int(num(prim, &a)?.floor() as i64),
        Real => Value::Real(num(prim, &a)?),
        Length => match &a {
            Value::Seq(s) => Value::Int(s.len() as i64),
            _ => return Err(type_error(prim, "a sequence", &a)),
        },
        Bernoulli => return dist(Distribution::bernoulli(num(prim, &a)?)),
        Exponential => return dist(Distribution::exponential(num(prim, &a)?)),
        Poisson => return dist(Distribution::poisson(num(prim, &a)?)),
        Dirichlet => return dist(Distribution::dirichlet(reals(prim, &a)?)),
        Categorical => return dist(Distribution::categorical(reals(prim, &a)?)),
        _ => unreachable!("{} is not unary", prim.name()),
    })
}

fn apply2(prim: Prim, a: &Value, b: Value) -> Result<Value, RuntimeError> {
    use std::cmp::Ordering::*;
    use Prim::*;
    Ok(match prim {
        Add => arith(prim, a, &b, i64::checked_add, |x, y| x + y)?,
        Sub => arith(prim, a, &b, i64::checked_sub, |x, y| x - y)?,
        Mul => arith(prim, a, &b, i64::checked_mul, |x, y| x * y)?,
        Div => Value::Real(num(prim, a)? / num(prim, &b)?),
        Min => match compare(prim, a, &b)? {
            Greater => b,
            _ => a.clone(),
        },
        Max => match compare(prim, a, &b)? {
            Less => b,
            _ => a.clone(),
        },
        Pow => Value::Real(num(prim, a)?.powf(num(prim, &b)?)),
        Eq => Value::Bool(equal(prim, a, &b)?),
        Neq => Value::Bool(!equal(prim, a, &b)?),
        Lt => Value::Bool(compare(prim, a, &b)? == Less),
        Le => Value::Bool(compare(prim, a, &b)? != Greater),
        Gt => Value::Bool(compare(prim, a, &b)? == Greater),
        Ge => Value::Bool(compare(prim, a, &b)? != Less),
        And => Value::Bool(boolean(prim, a)? && boolean(prim, &b)?),
        Or => Value::Bool(boolean(prim, a)? || boolean(prim, &b)?),
        Cons => match &b {
            Value::Seq(s) => Value::Seq(s.cons(plain(prim, a.clone())?)),
            _ => return Err(type_error(prim, "a sequence on the right", &b)),
        },
        Get => match a {
            Value::Seq(s) => {
                let i = int(prim, &b)?;
                let item = usize::try_from(i)
                    .ok()
                    .and_then(|i| s.get(i))
                    .ok_or_else(|| {
                        RuntimeError::Type(format!("`get`: index {i} out of bounds for length {}", s.len()))
                    })?;
                plain(prim, item.clone())?
            }
            _ => return Err(type_error(prim, "a sequence", a)),
        },
        Pdf | LogPdf => match a {
            Value::Dist(d) => {
                let lp = d.log_density(&b)?;
                Value::Real(if prim == Pdf { lp.exp() } else { lp })
            }
            _ => return Err(type_error(prim, "a distribution", a)),
        },
        Beta => return dist(Distribution::beta(num(prim, a)?, num(prim, &b)?)),
        Gamma => return dist(Distribution::gamma(num(prim, a)?, num(prim, &b)?)),
        Normal => return dist(Distribution::normal(num(prim, a)?, num(prim, &b)?)),
        Uniform => return dist(Distribution::uniform(num(prim, a)?, num(prim, &b)?)),
        _ => unreachable!("{} is not binary", prim.name()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn app(p: Prim, args: &[Value]) -> Result<Value, RuntimeError> {
        let mut v = Value::prim(p);
        for a in args {
            v = match v {
                Value::Prim(part) => part.with_args(|p, s| apply(p, s, a.clone()))?,
                other => panic!("not a prim: {other:?}"),
            };
        }
        Ok(v)
    }

    #[test]
    fn names_round_trip() {
        for &p in Prim::ALL {
            assert_eq!(Prim::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn partial_application_reduces_arity() {
        let v = app(Prim::Add, &[Value::Int(1)]).unwrap();
        assert_eq!(v.arity(), 1);
        assert_eq!(app(Prim::Add, &[Value::Int(1), Value::Int(2)]).unwrap().as_f64(), Some(3.0));
    }

    #[test]
    fn int_and_real_arithmetic() {
        assert!(matches!(app(Prim::Sub, &[Value::Int(3), Value::Int(1)]), Ok(Value::Int(2))));
        assert!(matches!(app(Prim::Mul, &[Value::Int(3), Value::Real(0.5)]), Ok(Value::Real(x)) if x == 1.5));
        assert!(matches!(app(Prim::Div, &[Value::Int(1), Value::Int(2)]), Ok(Value::Real(x)) if x == 0.5));
        assert!(matches!(app(Prim::Eq, &[Value::Int(0), Value::Real(0.0)]), Ok(Value::Bool(true))));
        assert!(matches!(app(Prim::Max, &[Value::Real(100.0), Value::Real(250.0)]), Ok(Value::Real(x)) if x == 250.0));
    }

    #[test]
    fn type_errors_are_reported() {
        assert!(app(Prim::Not, &[Value::Int(1)]).is_err());
        assert!(app(Prim::Add, &[Value::Bool(true), Value::Int(1)]).is_err());
        assert!(app(Prim::Bernoulli, &[Value::Real(1.5)]).is_err());
    }

    #[test]
    fn pdf_of_normal() {
        let d = app(Prim::Normal, &[Value::Real(0.0), Value::Real(1.0)]).unwrap();
        let p = app(Prim::Pdf, &[d, Value::Real(0.0)]).unwrap().as_f64().unwrap();
        assert!((p - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }
}
