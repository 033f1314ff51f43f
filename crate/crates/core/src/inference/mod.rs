//! Inference: sequential Monte Carlo with resampling at aligned or at all
//! weights, and lightweight Metropolis–Hastings with aligned or
//! stack-trace-addressed reuse of draws.

pub mod mcmc;
pub mod smc;

use std::sync::Arc;

use rand::Rng as _;
use serde_json::json;

use crate::analysis::{analyze_align, AnalysisResult};
use crate::error::InferenceError;
use crate::eval::{BinderKind, Code, Sym};
use crate::lang::Program;
use crate::rng::Rng;
use crate::value::Value;

pub use mcmc::{run_aligned_mcmc, run_lightweight_mcmc, McmcConfig, McmcKind};
pub use smc::{run_smc, Alignment, SmcConfig};

/// A program ready for inference: compiled, analyzed, with masks over the
/// `assume` and `weight` binders the analysis found aligned.
pub struct Compiled {
    pub code: Arc<Code>,
    pub analysis: AnalysisResult,
    pub aligned_weights: Vec<bool>,
    pub aligned_assumes: Vec<bool>,
}

impl Compiled {
    pub fn new(p: &Program) -> Compiled {
        let code = Code::compile(p);
        let analysis = analyze_align(&p.anf);
        let aligned_weights = aligned_mask(&code, &analysis, "weight");
        let aligned_assumes = aligned_mask(&code, &analysis, "assume");
        Compiled { code, analysis, aligned_weights, aligned_assumes }
    }

    pub fn smc(&self, cfg: &SmcConfig) -> Result<InferenceOutput, InferenceError> {
        run_smc(&self.code, Some(&self.aligned_weights), cfg)
    }

    pub fn mcmc(&self, kind: McmcKind, cfg: &McmcConfig) -> Result<InferenceOutput, InferenceError> {
        match kind {
            McmcKind::Aligned => run_aligned_mcmc(&self.code, &self.aligned_assumes, cfg),
            McmcKind::Lightweight => run_lightweight_mcmc(&self.code, cfg),
        }
    }
}

/// Mask over syms marking let binders of kind `op` (an [`Code::op_label`])
/// that the analysis did not flag.
pub fn aligned_mask(code: &Code, analysis: &AnalysisResult, op: &str) -> Vec<bool> {
    (0..code.num_syms() as Sym)
        .map(|s| code.kind(s) == BinderKind::Let && code.op_label(s) == op && !analysis.is_unaligned(code.name(s)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub value: Value,
    /// Unnormalized log weight; 0 for MCMC samples.
    pub log_weight: f64,
}

#[derive(Clone, Debug)]
pub struct InferenceOutput {
    pub method: String,
    pub seed: u64,
    pub particles: Option<usize>,
    pub steps: Option<usize>,
    pub log_z: Option<f64>,
    pub samples: Vec<Sample>,
    /// SMC: number of resampling rounds.
    pub resamplings: Option<usize>,
    pub accepted: Option<usize>,
    pub acceptance_rate: Option<f64>,
    /// MCMC: accept/reject decision of every step after the first run.
    pub decisions: Vec<bool>,
    pub wall_ms: f64,
}

impl InferenceOutput {
    pub fn to_json(&self, include_samples: bool) -> serde_json::Value {
        let mut o = json!({ "method": self.method, "seed": self.seed });
        let m = o.as_object_mut().expect("object");
        if let Some(n) = self.particles {
            m.insert("particles".into(), json!(n));
        }
        if let Some(n) = self.steps {
            m.insert("steps".into(), json!(n));
        }
        if let Some(z) = self.log_z {
            m.insert("logZ".into(), json_f64(z));
        }
        if let Some(r) = self.resamplings {
            m.insert("resamplings".into(), json!(r));
        }
        if let Some(r) = self.acceptance_rate {
            m.insert("acceptanceRate".into(), json_f64(r));
        }
        if include_samples {
            let samples: Vec<serde_json::Value> = self
                .samples
                .iter()
                .map(|s| json!({ "value": s.value.to_json(), "logWeight": json_f64(s.log_weight) }))
                .collect();
            m.insert("samples".into(), json!(samples));
        }
        m.insert("wallMs".into(), json_f64(self.wall_ms));
        o
    }

    /// Normalized weights of the samples.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let lw: Vec<f64> = self.samples.iter().map(|s| s.log_weight).collect();
        normalize(&lw)
    }

    /// Weighted mean of `f` over the samples, skipping those where it is `None`.
    pub fn mean_of(&self, f: impl Fn(&Value) -> Option<f64>) -> Option<f64> {
        let ws = self.normalized_weights();
        let (mut num, mut den) = (0.0, 0.0);
        for (s, w) in self.samples.iter().zip(ws) {
            if let Some(x) = f(&s.value) {
                num += w * x;
                den += w;
            }
        }
        (den > 0.0).then(|| num / den)
    }
}

/// JSON has no infinities; they are written as strings.
pub fn json_f64(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("NaN")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// `log(mean(exp(ws)))`, computed stably. Empty input or all `-inf` gives `-inf`.
pub fn log_mean_exp(ws: &[f64]) -> f64 {
    let m = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || ws.is_empty() {
        return f64::NEG_INFINITY;
    }
    let s: f64 = ws.iter().map(|w| (w - m).exp()).sum();
    m + (s / ws.len() as f64).ln()
}

/// Normalizing-constant estimate from the weights of each generation.
pub fn log_z_from_generations(gens: &[Vec<f64>]) -> f64 {
    gens.iter().map(|g| log_mean_exp(g)).sum()
}

/// Softmax of log weights. All `-inf` gives all zeros.
pub fn normalize(log_w: &[f64]) -> Vec<f64> {
    let m = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return vec![0.0; log_w.len()];
    }
    let w: Vec<f64> = log_w.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Systematic resampling with offset `u ∈ [0, 1)`: indices into `log_w`,
/// as many as there are weights, in nondecreasing order.
pub fn systematic(log_w: &[f64], u: f64) -> Option<Vec<usize>> {
    let n = log_w.len();
    let w = normalize(log_w);
    if n == 0 || w.iter().all(|&x| x == 0.0) {
        return None;
    }
    let last = w.iter().rposition(|&x| x > 0.0).expect("some positive weight");
    let mut out = Vec::with_capacity(n);
    let mut cum = w[0];
    let mut i = 0;
    for k in 0..n {
        let pos = (k as f64 + u) / n as f64;
        while pos >= cum && i < last {
            i += 1;
            cum += w[i];
        }
        out.push(i);
    }
    Some(out)
}

/// Systematic resampling drawing its offset from `rng`.
pub fn resample(log_w: &[f64], rng: &mut Rng, generation: usize) -> Result<Vec<usize>, InferenceError> {
    let u: f64 = rng.random();
    systematic(log_w, u).ok_or(InferenceError::DegeneratePopulation { generation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioKind {
    /// Reuse by alignment: the number of reusable draws never changes.
    Aligned,
    /// Reuse by stack-trace address, with database sizes before and after.
    StackTrace { dom_prev: usize, dom_cur: usize },
}

/// Metropolis–Hastings acceptance probability from log likelihoods
/// (`w`, `w_prev`) and log densities of reused draws under the new and old
/// executions (`wp`, `wp_prev`).
pub fn acceptance_ratio(kind: RatioKind, w: f64, w_prev: f64, wp: f64, wp_prev: f64) -> f64 {
    log_acceptance(kind, w, w_prev, wp, wp_prev).exp()
}

/// Log of [`acceptance_ratio`].
pub fn log_acceptance(kind: RatioKind, w: f64, w_prev: f64, wp: f64, wp_prev: f64) -> f64 {
    if w == f64::NEG_INFINITY || wp == f64::NEG_INFINITY {
        // an impossible proposal is only taken when the chain is stuck in an impossible state too
        return if w_prev == f64::NEG_INFINITY { 0.0 } else { f64::NEG_INFINITY };
    }
    if w_prev == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut r = (w - w_prev) + (wp - wp_prev);
    if let RatioKind::StackTrace { dom_prev, dom_cur } = kind {
        r += (dom_prev as f64).ln() - (dom_cur as f64).ln();
    }
    r.min(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mean_exp_basics() {
        let l2 = 2f64.ln();
        assert!((log_mean_exp(&[l2, l2]) - l2).abs() < 1e-15);
        assert_eq!(log_z_from_generations(&[vec![0.0, 0.0], vec![0.0, 0.0]]), 0.0);
        assert_eq!(log_mean_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        assert!((log_mean_exp(&[1000.0, 1000.0]) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn systematic_edge_cases() {
        assert_eq!(systematic(&[f64::NEG_INFINITY, 0.0], 0.0), Some(vec![1, 1]));
        assert_eq!(systematic(&[f64::NEG_INFINITY, 0.0], 0.999), Some(vec![1, 1]));
        assert_eq!(systematic(&[0.0; 4], 0.5), Some(vec![0, 1, 2, 3]));
        assert_eq!(systematic(&[f64::NEG_INFINITY; 2], 0.5), None);
    }

    #[test]
    fn acceptance_forms() {
        let l2 = 2f64.ln();
        assert_eq!(acceptance_ratio(RatioKind::Aligned, l2, 0.0, 0.0, 0.0), 1.0);
        assert!((acceptance_ratio(RatioKind::Aligned, -l2, 0.0, 0.0, 0.0) - 0.5).abs() < 1e-15);
        assert_eq!(acceptance_ratio(RatioKind::Aligned, 0.3, 0.3, -1.0, -1.0), 1.0);
        let st = RatioKind::StackTrace { dom_prev: 4, dom_cur: 5 };
        assert!((acceptance_ratio(st, -l2, 0.0, 0.0, 0.0) - 0.5 * 0.8).abs() < 1e-15);
        assert_eq!(acceptance_ratio(RatioKind::Aligned, f64::NEG_INFINITY, 0.0, 0.0, 0.0), 0.0);
        assert_eq!(acceptance_ratio(RatioKind::Aligned, 0.0, f64::NEG_INFINITY, 0.0, 0.0), 1.0);
    }
}
