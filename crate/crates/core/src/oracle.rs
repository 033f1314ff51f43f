//! Independent checks: empirical alignment of let-sequences, exact
//! posteriors of finite discrete programs by exhaustive enumeration, and
//! distances between discrete distributions.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::json;

use crate::dists::Distribution;
use crate::error::{OracleError, RuntimeError};
use crate::eval::{eval_sample, Code, Handler, Machine, Step, Sym};
use crate::inference::{json_f64, InferenceOutput};
use crate::par::Pool;
use crate::rng::{self, Purpose};
use crate::value::Value;

/// `l` with every element not in `keep` removed.
pub fn restrict<T: Clone>(l: &[T], keep: impl Fn(&T) -> bool) -> Vec<T> {
    l.iter().filter(|x| keep(x)).cloned().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Consistent,
    /// Two runs, identified by their seeds, whose restricted let-sequences differ.
    Violation { seeds: (u64, u64), restricted: (Vec<String>, Vec<String>) },
}

#[derive(Clone, Debug)]
pub struct AlignmentReport {
    pub checked: Vec<String>,
    pub runs: usize,
    pub verdict: Verdict,
}

impl AlignmentReport {
    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }

    pub fn to_json(&self, program: &str) -> serde_json::Value {
        let mut o = json!({ "program": program, "checked": self.checked, "runs": self.runs });
        let m = o.as_object_mut().expect("object");
        match &self.verdict {
            Verdict::Consistent => {
                m.insert("verdict".into(), json!("consistent"));
            }
            Verdict::Violation { seeds, restricted } => {
                m.insert("verdict".into(), json!("violation"));
                m.insert(
                    "witness".into(),
                    json!([
                        { "seed": seeds.0, "letSeq": restricted.0 },
                        { "seed": seeds.1, "letSeq": restricted.1 },
                    ]),
                );
            }
        }
        o
    }
}

/// Seed of run `i` in [`check_alignment_empirically`]; each run samples
/// with `rng::stream(seed, Purpose::Check, 0, 0)`.
pub fn run_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Samples `runs` executions and checks that their let-sequences agree
/// once restricted to the binders marked in `names`.
pub fn check_alignment_empirically(
    code: &Arc<Code>,
    names: &[bool],
    runs: usize,
    seed: u64,
    threads: usize,
) -> Result<AlignmentReport, (u64, RuntimeError)> {
    let checked = (0..code.num_syms() as Sym).filter(|&s| names[s as usize]).map(|s| code.name(s).to_string()).collect();
    let seqs = Pool::new(threads).map_range(runs, |i| {
        let s = run_seed(seed, i);
        eval_sample(code, rng::stream(s, Purpose::Check, 0, 0))
            .map(|o| restrict(&o.let_seq, |&x| names[x as usize]))
            .map_err(|e| (s, e))
    });
    let seqs = seqs.into_iter().collect::<Result<Vec<_>, _>>()?;
    let verdict = match seqs.iter().position(|l| *l != seqs[0]) {
        None => Verdict::Consistent,
        Some(i) => Verdict::Violation {
            seeds: (run_seed(seed, 0), run_seed(seed, i)),
            restricted: (
                code.names_of(&seqs[0]).iter().map(|n| n.to_string()).collect(),
                code.names_of(&seqs[i]).iter().map(|n| n.to_string()).collect(),
            ),
        },
    };
    Ok(AlignmentReport { checked, runs, verdict })
}

#[derive(Clone, Copy, Debug)]
pub struct EnumConfig {
    /// Longest trace explored.
    pub max_trace_len: usize,
    /// Past the limit, drop the remaining executions and account for their
    /// prior mass in the tail, instead of failing.
    pub truncate: bool,
}

/// Exact posterior over canonical value strings (see `Display` for [`Value`]).
#[derive(Clone, Debug)]
pub struct ExactPosterior {
    pub probs: BTreeMap<String, f64>,
    pub log_z: f64,
    /// Prior probability of the executions cut off by truncation.
    pub tail_prior_mass: f64,
    /// Number of complete traces.
    pub traces: usize,
}

impl ExactPosterior {
    pub fn to_json(&self) -> serde_json::Value {
        let probs: serde_json::Map<String, serde_json::Value> =
            self.probs.iter().map(|(k, p)| (k.clone(), json!(p))).collect();
        json!({
            "posterior": probs,
            "logZ": json_f64(self.log_z),
            "tailPriorMass": self.tail_prior_mass,
            "traces": self.traces,
        })
    }
}

/// Replays a trace prefix; at the first draw past its end, stops and
/// reports the distribution.
struct Prefix<'a> {
    prefix: &'a [Value],
    pos: usize,
    log_prior: f64,
    log_lik: f64,
    next: Option<Arc<Distribution>>,
}

const NEED_DRAW: &str = "prefix exhausted";

impl Handler for Prefix<'_> {
    fn assume(&mut self, _site: Sym, d: &Arc<Distribution>, _path: &[Sym]) -> Result<Value, RuntimeError> {
        match self.prefix.get(self.pos) {
            Some(v) => {
                self.pos += 1;
                self.log_prior += d.log_density(v)?;
                Ok(v.clone())
            }
            None => {
                self.next = Some(d.clone());
                Err(RuntimeError::Type(NEED_DRAW.into()))
            }
        }
    }

    fn weight(&mut self, _site: Sym, log_w: f64) -> bool {
        self.log_lik += log_w;
        false
    }
}

enum Node {
    Leaf { value: Value, log_mass: f64 },
    Branch { dist: Arc<Distribution>, log_prior: f64 },
}

fn explore(code: &Code, prefix: &[Value]) -> Result<Node, RuntimeError> {
    let mut h = Prefix { prefix, pos: 0, log_prior: 0.0, log_lik: 0.0, next: None };
    match Machine::new(code).run(code, &mut h) {
        Ok(Step::Done(value)) => Ok(Node::Leaf { value, log_mass: h.log_prior + h.log_lik }),
        Ok(Step::Suspended { .. }) => unreachable!("never suspends"),
        Err(e) => match h.next {
            Some(dist) => Ok(Node::Branch { dist, log_prior: h.log_prior }),
            None => Err(e),
        },
    }
}

struct Enumerator<'a> {
    code: &'a Code,
    cfg: EnumConfig,
    leaves: Vec<(String, f64)>,
    tail: f64,
}

impl Enumerator<'_> {
    /// Total mass below `prefix`, summed along the tree.
    fn visit(&mut self, prefix: &mut Vec<Value>) -> Result<f64, OracleError> {
        match explore(self.code, prefix)? {
            Node::Leaf { value, log_mass } => {
                let m = log_mass.exp();
                self.leaves.push((value.to_string(), log_mass));
                Ok(m)
            }
            Node::Branch { dist, log_prior } => {
                if prefix.len() >= self.cfg.max_trace_len {
                    if !self.cfg.truncate {
                        return Err(OracleError::TooLong(self.cfg.max_trace_len));
                    }
                    self.tail += log_prior.exp();
                    return Ok(0.0);
                }
                let support = dist.support().ok_or_else(|| OracleError::Continuous(dist.name().to_string()))?;
                let mut total = 0.0;
                for v in support {
                    prefix.push(v);
                    total += self.visit(prefix)?;
                    prefix.pop();
                }
                Ok(total)
            }
        }
    }
}

/// Sums the mass of every trace of a program whose draws all have finite
/// support. Returns the posterior, its log normalizer and, with truncation,
/// the prior mass left out.
pub fn enumerate_posterior(code: &Code, cfg: EnumConfig) -> Result<ExactPosterior, OracleError> {
    let (post, _) = enumerate_checked(code, cfg)?;
    Ok(post)
}

/// As [`enumerate_posterior`], also returning the normalizer summed along
/// the tree rather than over the flat list of traces.
pub fn enumerate_checked(code: &Code, cfg: EnumConfig) -> Result<(ExactPosterior, f64), OracleError> {
    let mut e = Enumerator { code, cfg, leaves: Vec::new(), tail: 0.0 };
    let tree_z = e.visit(&mut Vec::new())?;
    let max = e.leaves.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(OracleError::ZeroMass);
    }
    let flat: f64 = e.leaves.iter().map(|l| (l.1 - max).exp()).sum();
    let log_z = max + flat.ln();
    let mut probs = BTreeMap::new();
    for (k, lm) in &e.leaves {
        *probs.entry(k.clone()).or_insert(0.0) += (lm - log_z).exp();
    }
    let post = ExactPosterior { probs, log_z, tail_prior_mass: e.tail, traces: e.leaves.len() };
    Ok((post, tree_z.ln()))
}

/// Weighted empirical distribution of the sample values, keyed like
/// [`ExactPosterior::probs`].
pub fn empirical(out: &InferenceOutput) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    for (s, w) in out.samples.iter().zip(out.normalized_weights()) {
        *m.entry(s.value.to_string()).or_insert(0.0) += w;
    }
    m
}

/// Total variation distance `½ Σ |p − q|` over the union of supports.
pub fn tv_distance(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let mut d = 0.0;
    for (k, a) in p {
        d += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            d += b.abs();
        }
    }
    0.5 * d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restriction_keeps_order() {
        let l = ["x", "y", "z", "y", "x"];
        assert_eq!(restrict(&l, |s| *s == "x" || *s == "z"), vec!["x", "z", "x"]);
        assert!(restrict(&l, |_| false).is_empty());
        assert_eq!(restrict(&l, |_| true), l.to_vec());
    }

    #[test]
    fn tv_extremes() {
        let a: BTreeMap<String, f64> = [("a".to_string(), 1.0)].into();
        let b: BTreeMap<String, f64> = [("b".to_string(), 1.0)].into();
        assert_eq!(tv_distance(&a, &a), 0.0);
        assert_eq!(tv_distance(&a, &b), 1.0);
    }
}
