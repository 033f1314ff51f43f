//! Distributions with exact log-densities and samplers.
//!
//! Normal takes a standard deviation; Gamma takes shape and scale.

use std::f64::consts::PI;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::{Bernoulli, Uniform};
use rand::Rng;
use rand_distr::{Beta, Distribution as _, Exp, Gamma, Normal, Poisson};

use crate::error::RuntimeError;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum Distribution {
    Bernoulli { p: f64 },
    Beta { a: f64, b: f64 },
    Gamma { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Poisson { rate: f64 },
    Normal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    Dirichlet { alpha: Vec<f64> },
    Categorical { probs: Vec<f64> },
}

fn invalid(msg: String) -> RuntimeError {
    RuntimeError::InvalidParameter(msg)
}

fn positive(what: &str, x: f64) -> Result<(), RuntimeError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {x}")))
    }
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

impl Distribution {
    pub fn bernoulli(p: f64) -> Result<Self, RuntimeError> {
        if (0.0..=1.0).contains(&p) {
            Ok(Distribution::Bernoulli { p })
        } else {
            Err(invalid(format!("Bernoulli probability {p} not in [0, 1]")))
        }
    }

    pub fn beta(a: f64, b: f64) -> Result<Self, RuntimeError> {
        positive("Beta shape", a)?;
        positive("Beta shape", b)?;
        Ok(Distribution::Beta { a, b })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self, RuntimeError> {
        positive("Gamma shape", shape)?;
        positive("Gamma scale", scale)?;
        Ok(Distribution::Gamma { shape, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self, RuntimeError> {
        positive("Exponential rate", rate)?;
        Ok(Distribution::Exponential { rate })
    }

    pub fn poisson(rate: f64) -> Result<Self, RuntimeError> {
        positive("Poisson rate", rate)?;
        Ok(Distribution::Poisson { rate })
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, RuntimeError> {
        if !mu.is_finite() {
            return Err(invalid(format!("Normal mean must be finite, got {mu}")));
        }
        positive("Normal standard deviation", sigma)?;
        Ok(Distribution::Normal { mu, sigma })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self, RuntimeError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Distribution::Uniform { lo, hi })
        } else {
            Err(invalid(format!("Uniform bounds must satisfy lo < hi, got [{lo}, {hi}]")))
        }
    }

    pub fn dirichlet(alpha: Vec<f64>) -> Result<Self, RuntimeError> {
        if alpha.len() < 2 {
            return Err(invalid("Dirichlet needs at least two components".into()));
        }
        for &a in &alpha {
            positive("Dirichlet concentration", a)?;
        }
        Ok(Distribution::Dirichlet { alpha })
    }

    /// Probabilities are normalised; they must be non-negative with a positive sum.
    pub fn categorical(probs: Vec<f64>) -> Result<Self, RuntimeError> {
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || total <= 0.0 {
            return Err(invalid(format!("Categorical probabilities {probs:?} are not a distribution")));
        }
        Ok(Distribution::Categorical { probs: probs.iter().map(|p| p / total).collect() })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Distribution::Bernoulli { .. } => "Bernoulli",
            Distribution::Beta { .. } => "Beta",
            Distribution::Gamma { .. } => "Gamma",
            Distribution::Exponential { .. } => "Exponential",
            Distribution::Poisson { .. } => "Poisson",
            Distribution::Normal { .. } => "Normal",
            Distribution::Uniform { .. } => "Uniform",
            Distribution::Dirichlet { .. } => "Dirichlet",
            Distribution::Categorical { .. } => "Categorical",
        }
    }

    /// Finite support, if any, in a fixed order.
    pub fn support(&self) -> Option<Vec<Value>> {
        match self {
            Distribution::Bernoulli { .. } => Some(vec![Value::Bool(true), Value::Bool(false)]),
            Distribution::Categorical { probs } => {
                Some((0..probs.len() as i64).map(Value::Int).collect())
            }
            _ => None,
        }
    }

    fn real(&self, x: &Value) -> Result<f64, RuntimeError> {
        x.as_f64().ok_or_else(|| {
            RuntimeError::Shape(format!("{} expects a number, got {}", self.name(), x.describe()))
        })
    }

    fn count(&self, x: &Value) -> Result<Option<i64>, RuntimeError> {
        match x {
            Value::Int(k) => Ok(Some(*k)),
            Value::Real(r) if r.fract() == 0.0 => Ok(Some(*r as i64)),
            Value::Real(_) => Ok(None),
            _ => Err(RuntimeError::Shape(format!(
                "{} expects an integer, got {}",
                self.name(),
                x.describe()
            ))),
        }
    }

    /// Log density (or log mass) of `x`; `-inf` outside the support.
    pub fn log_density(&self, x: &Value) -> Result<f64, RuntimeError> {
        Ok(match self {
            Distribution::Bernoulli { p } => match x {
                Value::Bool(true) => p.ln(),
                Value::Bool(false) => (1.0 - p).ln(),
                _ => {
                    return Err(RuntimeError::Shape(format!(
                        "Bernoulli expects a boolean, got {}",
                        x.describe()
                    )))
                }
            },
            Distribution::Beta { a, b } => {
                let x = self.real(x)?;
                if !(0.0..=1.0).contains(&x) {
                    f64::NEG_INFINITY
                } else {
                    let ln_beta = ln_gamma(*a) + ln_gamma(*b) - ln_gamma(a + b);
                    xlogy(a - 1.0, x) + xlogy(b - 1.0, 1.0 - x) - ln_beta
                }
            }
            Distribution::Gamma { shape, scale } => {
                let x = self.real(x)?;
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    xlogy(shape - 1.0, x) - x / scale - ln_gamma(*shape) - shape * scale.ln()
                }
            }
            Distribution::Exponential { rate } => {
                let x = self.real(x)?;
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Distribution::Poisson { rate } => match self.count(x)? {
                Some(k) if k >= 0 => k as f64 * rate.ln() - rate - ln_gamma(k as f64 + 1.0),
                _ => f64::NEG_INFINITY,
            },
            Distribution::Normal { mu, sigma } => {
                let z = (self.real(x)? - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
            Distribution::Uniform { lo, hi } => {
                let x = self.real(x)?;
                if (*lo..=*hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Distribution::Dirichlet { alpha } => {
                let xs = match x {
                    Value::Seq(s) if s.len() == alpha.len() => {
                        s.iter().map(|v| self.real(v)).collect::<Result<Vec<_>, _>>()?
                    }
                    _ => {
                        return Err(RuntimeError::Shape(format!(
                            "Dirichlet of dimension {} expects a sequence of that length, got {}",
                            alpha.len(),
                            x.describe()
                        )))
                    }
                };
                let total: f64 = xs.iter().sum();
                if xs.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > 1e-9 {
                    f64::NEG_INFINITY
                } else {
                    let norm = ln_gamma(alpha.iter().sum()) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>();
                    norm + alpha.iter().zip(&xs).map(|(&a, &v)| xlogy(a - 1.0, v)).sum::<f64>()
                }
            }
            Distribution::Categorical { probs } => match self.count(x)? {
                Some(k) if k >= 0 && (k as usize) < probs.len() => probs[k as usize].ln(),
                _ => f64::NEG_INFINITY,
            },
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        // Parameters were validated on construction, so the samplers cannot fail.
        match self {
            Distribution::Bernoulli { p } => Value::Bool(Bernoulli::new(*p).unwrap().sample(rng)),
            Distribution::Beta { a, b } => Value::Real(Beta::new(*a, *b).unwrap().sample(rng)),
            Distribution::Gamma { shape, scale } => {
                Value::Real(Gamma::new(*shape, *scale).unwrap().sample(rng))
            }
            Distribution::Exponential { rate } => Value::Real(Exp::new(*rate).unwrap().sample(rng)),
            Distribution::Poisson { rate } => {
                Value::Int(Poisson::new(*rate).unwrap().sample(rng) as i64)
            }
            Distribution::Normal { mu, sigma } => {
                Value::Real(Normal::new(*mu, *sigma).unwrap().sample(rng))
            }
            Distribution::Uniform { lo, hi } => {
                Value::Real(Uniform::new(*lo, *hi).unwrap().sample(rng))
            }
            Distribution::Dirichlet { alpha } => {
                // normalised independent Gamma(alpha_i, 1) draws
                let g: Vec<f64> = alpha
                    .iter()
                    .map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng))
                    .collect();
                let total: f64 = g.iter().sum();
                Value::seq(g.into_iter().map(|x| Value::Real(x / total)).collect())
            }
            Distribution::Categorical { probs } => {
                Value::Int(WeightedIndex::new(probs).unwrap().sample(rng) as i64)
            }
        }
    }
}

/// `a * ln(x)` with the convention `0 * ln(0) = 0`.
fn xlogy(a: f64, x: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * x.ln()
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Bernoulli { p } => write!(f, "Bernoulli({p})"),
            Distribution::Beta { a, b } => write!(f, "Beta({a}, {b})"),
            Distribution::Gamma { shape, scale } => write!(f, "Gamma({shape}, {scale})"),
            Distribution::Exponential { rate } => write!(f, "Exponential({rate})"),
            Distribution::Poisson { rate } => write!(f, "Poisson({rate})"),
            Distribution::Normal { mu, sigma } => write!(f, "Normal({mu}, {sigma})"),
            Distribution::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            Distribution::Dirichlet { alpha } => write!(f, "Dirichlet({alpha:?})"),
            Distribution::Categorical { probs } => write!(f, "Categorical({probs:?})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_mass() {
        let d = Distribution::bernoulli(0.3).unwrap();
        assert!((d.log_density(&Value::Bool(true)).unwrap() - 0.3f64.ln()).abs() < 1e-15);
        assert!((d.log_density(&Value::Bool(false)).unwrap() - 0.7f64.ln()).abs() < 1e-15);
        assert!(matches!(d.log_density(&Value::Real(1.0)), Err(RuntimeError::Shape(_))));
    }

    #[test]
    fn closed_forms() {
        // Gamma(2, 2) at x = 1: x e^{-x/2} / (Γ(2) 2²)
        let g = Distribution::gamma(2.0, 2.0).unwrap();
        let want = (1.0f64 * (-0.5f64).exp() / 4.0).ln();
        assert!((g.log_density(&Value::Real(1.0)).unwrap() - want).abs() < 1e-12);
        // Poisson(3) at 2: 9 e^-3 / 2
        let p = Distribution::poisson(3.0).unwrap();
        assert!((p.log_density(&Value::Int(2)).unwrap() - (4.5 * (-3.0f64).exp()).ln()).abs() < 1e-12);
        assert_eq!(p.log_density(&Value::Int(-1)).unwrap(), f64::NEG_INFINITY);
        // Beta(2, 3) at 0.5: 12 * 0.5 * 0.25
        let b = Distribution::beta(2.0, 3.0).unwrap();
        assert!((b.log_density(&Value::Real(0.5)).unwrap() - 1.5f64.ln()).abs() < 1e-12);
        // Dirichlet(1, 1) is uniform on the simplex with density 1
        let d = Distribution::dirichlet(vec![1.0, 1.0]).unwrap();
        let x = Value::seq(vec![Value::Real(0.3), Value::Real(0.7)]);
        assert!(d.log_density(&x).unwrap().abs() < 1e-12);
        let u = Distribution::uniform(0.0, 1000.0).unwrap();
        assert_eq!(u.log_density(&Value::Real(1000.5)).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Distribution::normal(0.0, 0.0).is_err());
        assert!(Distribution::normal(0.0, -1.0).is_err());
        assert!(Distribution::bernoulli(-0.1).is_err());
        assert!(Distribution::categorical(vec![0.0, 0.0]).is_err());
        assert!(Distribution::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn categorical_normalises() {
        let d = Distribution::categorical(vec![1.0, 3.0]).unwrap();
        assert!((d.log_density(&Value::Int(1)).unwrap() - 0.75f64.ln()).abs() < 1e-15);
        assert_eq!(d.log_density(&Value::Int(2)).unwrap(), f64::NEG_INFINITY);
    }
}
