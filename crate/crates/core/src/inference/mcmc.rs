//! Lightweight Metropolis–Hastings. Both variants redraw one random draw per
//! step (or all of them on a global step) and reuse the rest; they differ
//! only in how a draw of the new execution finds its counterpart in the old.
//!
//! Per step the chain's single random stream is consumed in a fixed order:
//! the index of the draw to change, the global-step coin, the fresh draws of
//! the run in execution order, then the acceptance uniform.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng as _;

use crate::dists::Distribution;
use crate::error::{InferenceError, RuntimeError};
use crate::eval::{Code, Handler, Machine, Step, Sym};
use crate::inference::{log_acceptance, InferenceOutput, RatioKind, Sample};
use crate::rng::{self, Purpose, Rng};
use crate::value::Value;

#[derive(Clone, Copy, Debug)]
pub struct McmcConfig {
    /// Total number of executions, the initial one included.
    pub steps: usize,
    /// Probability of a global step.
    pub g: f64,
    pub seed: u64,
    /// Fraction of the chain discarded from the front.
    pub burn: f64,
}

impl McmcConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        McmcConfig { steps, g: 0.1, seed, burn: 0.1 }
    }

    fn validate(&self) -> Result<(), InferenceError> {
        if self.steps == 0 {
            return Err(InferenceError::Config("MCMC needs at least one step".into()));
        }
        if !(self.g > 0.0 && self.g <= 1.0) {
            return Err(InferenceError::Config(format!("global step probability {} not in (0, 1]", self.g)));
        }
        if !(0.0..1.0).contains(&self.burn) {
            return Err(InferenceError::Config(format!("burn fraction {} not in [0, 1)", self.burn)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McmcKind {
    /// Reuse by alignment.
    Aligned,
    /// Reuse by stack-trace address.
    Lightweight,
}

#[derive(Clone, Debug)]
pub struct Draw {
    pub value: Value,
    pub log_p: f64,
}

fn fresh(d: &Distribution, rng: &mut Rng) -> Result<Draw, RuntimeError> {
    let value = d.sample(rng);
    let log_p = d.log_density(&value)?;
    Ok(Draw { value, log_p })
}

/// The reused value under the new distribution, or `None` if it no longer
/// has the right shape.
fn reuse(d: &Distribution, old: &Draw) -> Option<Draw> {
    let log_p = d.log_density(&old.value).ok()?;
    Some(Draw { value: old.value.clone(), log_p })
}

/// Bookkeeping of one run shared by both variants.
struct RunAcc<'r> {
    rng: &'r mut Rng,
    global: bool,
    log_lik: f64,
    /// New and old log densities of reused draws.
    wp: f64,
    wp_prev: f64,
}

impl RunAcc<'_> {
    fn reused(&mut self, old: &Draw, new: &Draw) {
        self.wp += new.log_p;
        self.wp_prev += old.log_p;
    }
}

/// A Markov chain over executions with a proposal that can be staged and
/// then committed or dropped.
pub trait Chain {
    /// Number of draws a step may pick from in the current state.
    fn choices(&self) -> usize;
    /// Runs a proposal that redraws draw `pick` (every draw when `global`),
    /// returning the log acceptance probability.
    fn propose(&mut self, code: &Code, pick: usize, global: bool, rng: &mut Rng) -> Result<f64, InferenceError>;
    /// Makes the staged proposal current, or drops it.
    fn commit(&mut self, accept: bool);
    fn value(&self) -> &Value;
    fn log_likelihood(&self) -> f64;
}

fn run_machine<H: Handler>(m: &mut Machine, code: &Code, h: &mut H) -> Result<Value, RuntimeError> {
    m.reset(code);
    match m.run(code, h)? {
        Step::Done(v) => Ok(v),
        Step::Suspended { .. } => unreachable!("MCMC runs never suspend"),
    }
}

// ---------------------------------------------------------------- aligned

/// Draws of one execution: the aligned ones, and between consecutive aligned
/// draws a segment of unaligned ones tagged with their assume site.
#[derive(Clone, Debug, Default)]
pub struct AlignedStore {
    pub aligned: Vec<Draw>,
    pub unaligned: Vec<(Draw, Sym)>,
    /// `seg_start[k]` is where segment `k` (after `k` aligned draws) starts.
    pub seg_start: Vec<usize>,
    pub value: Option<Value>,
    pub log_lik: f64,
}

impl AlignedStore {
    fn clear(&mut self) {
        self.aligned.clear();
        self.unaligned.clear();
        self.seg_start.clear();
        self.seg_start.push(0);
        self.value = None;
        self.log_lik = 0.0;
    }

    fn unaligned_at(&self, k: usize, l: usize) -> Option<&(Draw, Sym)> {
        let start = *self.seg_start.get(k)?;
        let end = self.seg_start.get(k + 1).copied().unwrap_or(self.unaligned.len());
        (start + l < end).then(|| &self.unaligned[start + l])
    }
}

struct AlignedRun<'a, 'r> {
    mask: &'a [bool],
    old: &'a AlignedStore,
    new: &'a mut AlignedStore,
    pick: usize,
    reuse: bool,
    acc: RunAcc<'r>,
}

impl Handler for AlignedRun<'_, '_> {
    fn assume(&mut self, site: Sym, d: &Arc<Distribution>, _path: &[Sym]) -> Result<Value, RuntimeError> {
        let k = self.new.aligned.len();
        if self.mask[site as usize] {
            let old = (!self.acc.global && k != self.pick).then(|| self.old.aligned.get(k)).flatten();
            let draw = match old.and_then(|o| reuse(d, o).map(|n| (o, n))) {
                Some((o, n)) => {
                    self.acc.reused(o, &n);
                    n
                }
                None => fresh(d, self.acc.rng)?,
            };
            let v = draw.value.clone();
            self.new.aligned.push(draw);
            self.new.seg_start.push(self.new.unaligned.len());
            self.reuse = true;
            Ok(v)
        } else {
            let l = self.new.unaligned.len() - self.new.seg_start[k];
            let old = (self.reuse && !self.acc.global)
                .then(|| self.old.unaligned_at(k, l))
                .flatten()
                .filter(|(_, origin)| *origin == site)
                .and_then(|(o, _)| reuse(d, o).map(|n| (o, n)));
            let draw = match old {
                Some((o, n)) => {
                    self.acc.reused(o, &n);
                    n
                }
                None => {
                    self.reuse = false;
                    fresh(d, self.acc.rng)?
                }
            };
            let v = draw.value.clone();
            self.new.unaligned.push((draw, site));
            Ok(v)
        }
    }

    #[inline]
    fn weight(&mut self, _site: Sym, log_w: f64) -> bool {
        self.acc.log_lik += log_w;
        false
    }
}

/// Chain state of aligned lightweight MCMC: the accepted store and a staging
/// buffer that is swapped in on acceptance.
pub struct AlignedChain {
    machine: Machine,
    mask: Vec<bool>,
    cur: AlignedStore,
    next: AlignedStore,
}

impl AlignedChain {
    /// `mask` marks the assume binders found aligned.
    pub fn start(code: &Code, mask: Vec<bool>, rng: &mut Rng) -> Result<Self, InferenceError> {
        let mut c = AlignedChain { machine: Machine::new(code), mask, cur: AlignedStore::default(), next: AlignedStore::default() };
        c.cur.clear();
        c.propose(code, usize::MAX, true, rng)?;
        c.commit(true);
        Ok(c)
    }

    pub fn store(&self) -> &AlignedStore {
        &self.cur
    }
}

impl Chain for AlignedChain {
    fn choices(&self) -> usize {
        self.cur.aligned.len()
    }

    fn propose(&mut self, code: &Code, pick: usize, global: bool, rng: &mut Rng) -> Result<f64, InferenceError> {
        self.next.clear();
        let mut h = AlignedRun {
            mask: &self.mask,
            old: &self.cur,
            new: &mut self.next,
            pick,
            reuse: true,
            acc: RunAcc { rng, global, log_lik: 0.0, wp: 0.0, wp_prev: 0.0 },
        };
        let v = run_machine(&mut self.machine, code, &mut h)?;
        let RunAcc { log_lik, wp, wp_prev, .. } = h.acc;
        self.next.value = Some(v);
        self.next.log_lik = log_lik;
        if !global && self.next.aligned.len() != self.cur.aligned.len() {
            return Err(InferenceError::Invariant(format!(
                "aligned draw count changed from {} to {} on a local step",
                self.cur.aligned.len(),
                self.next.aligned.len()
            )));
        }
        Ok(log_acceptance(RatioKind::Aligned, log_lik, self.cur.log_lik, wp, wp_prev))
    }

    fn commit(&mut self, accept: bool) {
        if accept {
            std::mem::swap(&mut self.cur, &mut self.next);
        }
    }

    fn value(&self) -> &Value {
        self.cur.value.as_ref().expect("chain has run")
    }

    fn log_likelihood(&self) -> f64 {
        self.cur.log_lik
    }
}

// ------------------------------------------------------------ stack trace

/// Stack-trace address: the application sites on the call stack, the
/// assume site, and how many earlier draws in the run had the same two.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Address {
    pub path: Box<[Sym]>,
    pub site: Sym,
    pub occurrence: u32,
}

/// Draws of one execution keyed by address, in execution order.
#[derive(Clone, Debug, Default)]
pub struct Database {
    pub draws: Vec<Draw>,
    pub index: HashMap<Address, usize>,
    pub value: Option<Value>,
    pub log_lik: f64,
}

impl Database {
    fn clear(&mut self) {
        self.draws.clear();
        self.index.clear();
        self.value = None;
        self.log_lik = 0.0;
    }

    pub fn addresses_in_order(&self) -> Vec<Address> {
        let mut a: Vec<(&Address, &usize)> = self.index.iter().collect();
        a.sort_by_key(|(_, &i)| i);
        a.into_iter().map(|(a, _)| a.clone()).collect()
    }
}

struct TraceRun<'a, 'r> {
    old: &'a Database,
    new: &'a mut Database,
    pick: usize,
    acc: RunAcc<'r>,
}

impl Handler for TraceRun<'_, '_> {
    const TRACK_PATH: bool = true;

    fn assume(&mut self, site: Sym, d: &Arc<Distribution>, path: &[Sym]) -> Result<Value, RuntimeError> {
        let mut addr = Address { path: path.into(), site, occurrence: 0 };
        while self.new.index.contains_key(&addr) {
            addr.occurrence += 1;
        }
        let old = match self.old.index.get(&addr) {
            Some(&i) if !self.acc.global && i != self.pick => Some(&self.old.draws[i]),
            _ => None,
        };
        let draw = match old.and_then(|o| reuse(d, o).map(|n| (o, n))) {
            Some((o, n)) => {
                self.acc.reused(o, &n);
                n
            }
            None => fresh(d, self.acc.rng)?,
        };
        let v = draw.value.clone();
        self.new.index.insert(addr, self.new.draws.len());
        self.new.draws.push(draw);
        Ok(v)
    }

    #[inline]
    fn weight(&mut self, _site: Sym, log_w: f64) -> bool {
        self.acc.log_lik += log_w;
        false
    }
}

/// Chain state of standard lightweight MCMC.
pub struct TraceChain {
    machine: Machine,
    cur: Database,
    next: Database,
}

impl TraceChain {
    pub fn start(code: &Code, rng: &mut Rng) -> Result<Self, InferenceError> {
        let mut c = TraceChain { machine: Machine::new(code), cur: Database::default(), next: Database::default() };
        c.propose(code, usize::MAX, true, rng)?;
        c.commit(true);
        Ok(c)
    }

    pub fn database(&self) -> &Database {
        &self.cur
    }
}

impl Chain for TraceChain {
    fn choices(&self) -> usize {
        self.cur.draws.len()
    }

    fn propose(&mut self, code: &Code, pick: usize, global: bool, rng: &mut Rng) -> Result<f64, InferenceError> {
        self.next.clear();
        let mut h = TraceRun {
            old: &self.cur,
            new: &mut self.next,
            pick,
            acc: RunAcc { rng, global, log_lik: 0.0, wp: 0.0, wp_prev: 0.0 },
        };
        let v = run_machine(&mut self.machine, code, &mut h)?;
        let RunAcc { log_lik, wp, wp_prev, .. } = h.acc;
        self.next.value = Some(v);
        self.next.log_lik = log_lik;
        // a global step proposes from the prior, so only the likelihoods matter
        let kind = if global {
            RatioKind::Aligned
        } else {
            RatioKind::StackTrace { dom_prev: self.cur.draws.len(), dom_cur: self.next.draws.len().max(1) }
        };
        Ok(log_acceptance(kind, log_lik, self.cur.log_lik, wp, wp_prev))
    }

    fn commit(&mut self, accept: bool) {
        if accept {
            std::mem::swap(&mut self.cur, &mut self.next);
        }
    }

    fn value(&self) -> &Value {
        self.cur.value.as_ref().expect("chain has run")
    }

    fn log_likelihood(&self) -> f64 {
        self.cur.log_lik
    }
}

// ---------------------------------------------------------------- driver

/// Result of one step of [`step`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub pick: Option<usize>,
    pub global: bool,
    pub log_accept: f64,
    pub accepted: bool,
}

/// One Metropolis–Hastings step. With nothing to pick from, the step is
/// global when `forced_global` and an error otherwise.
pub fn step<C: Chain>(
    chain: &mut C,
    code: &Code,
    g: f64,
    rng: &mut Rng,
    forced_global: bool,
    step_no: usize,
) -> Result<StepInfo, InferenceError> {
    let n = chain.choices();
    let pick = if n > 0 {
        Some(rng.random_range(0..n))
    } else if forced_global {
        None
    } else {
        return Err(InferenceError::EmptyDatabase { step: step_no });
    };
    let coin: f64 = rng.random();
    let global = pick.is_none() || coin < g;
    let log_accept = chain.propose(code, pick.unwrap_or(usize::MAX), global, rng)?;
    let u: f64 = rng.random();
    let accepted = u.ln() < log_accept;
    chain.commit(accepted);
    Ok(StepInfo { pick, global, log_accept, accepted })
}

fn drive<C: Chain>(
    mut chain: C,
    code: &Code,
    cfg: &McmcConfig,
    rng: &mut Rng,
    forced_global: bool,
    method: &str,
    start: Instant,
) -> Result<InferenceOutput, InferenceError> {
    let burn = (cfg.steps as f64 * cfg.burn).floor() as usize;
    let mut samples = Vec::with_capacity(cfg.steps - burn);
    let mut decisions = Vec::with_capacity(cfg.steps.saturating_sub(1));
    if burn == 0 {
        samples.push(Sample { value: chain.value().clone(), log_weight: 0.0 });
    }
    for i in 1..cfg.steps {
        let info = step(&mut chain, code, cfg.g, rng, forced_global, i)?;
        decisions.push(info.accepted);
        if i >= burn {
            samples.push(Sample { value: chain.value().clone(), log_weight: 0.0 });
        }
    }
    let accepted = decisions.iter().filter(|&&d| d).count();
    Ok(InferenceOutput {
        method: method.to_string(),
        seed: cfg.seed,
        particles: None,
        steps: Some(cfg.steps),
        log_z: None,
        samples,
        resamplings: None,
        accepted: Some(accepted),
        acceptance_rate: Some(if decisions.is_empty() { 0.0 } else { accepted as f64 / decisions.len() as f64 }),
        decisions,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Aligned lightweight MCMC. `aligned_assumes` marks the assume binders
/// the analysis found aligned. A program without aligned draws only takes
/// global steps.
pub fn run_aligned_mcmc(
    code: &Arc<Code>,
    aligned_assumes: &[bool],
    cfg: &McmcConfig,
) -> Result<InferenceOutput, InferenceError> {
    let start = Instant::now();
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, Purpose::Mcmc, 0, 0);
    let chain = AlignedChain::start(code, aligned_assumes.to_vec(), &mut rng)?;
    drive(chain, code, cfg, &mut rng, true, "aligned-mcmc", start)
}

/// Standard lightweight MCMC with stack-trace addressing.
pub fn run_lightweight_mcmc(code: &Arc<Code>, cfg: &McmcConfig) -> Result<InferenceOutput, InferenceError> {
    let start = Instant::now();
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, Purpose::Mcmc, 0, 0);
    let chain = TraceChain::start(code, &mut rng)?;
    drive(chain, code, cfg, &mut rng, false, "lightweight-mcmc", start)
}
