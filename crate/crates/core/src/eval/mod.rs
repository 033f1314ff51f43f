//! Running programs: replaying a fixed trace, sampling, and resumable
//! executions that pause at weights.

pub mod code;
pub mod machine;

use std::sync::Arc;

pub use code::{BinderKind, Code, Sym};
pub use machine::{Handler, Machine, Step};

use crate::dists::Distribution;
use crate::error::RuntimeError;
use crate::rng::Rng;
use crate::value::Value;

/// Result of one complete execution.
#[derive(Clone, Debug)]
pub struct EvalOutcome {
    pub value: Value,
    /// Sum of log weights.
    pub log_likelihood: f64,
    /// Sum of log densities of all draws.
    pub log_prior: f64,
    /// Let binders in the order they received values.
    pub let_seq: Vec<Sym>,
    /// Draws in execution order.
    pub trace: Vec<Value>,
}

impl EvalOutcome {
    /// Density of the whole execution: prior times likelihood, in log space.
    pub fn log_weight(&self) -> f64 {
        self.log_prior + self.log_likelihood
    }
}

struct Replay<'a> {
    trace: &'a [Value],
    pos: usize,
    log_prior: f64,
    log_lik: f64,
    let_seq: Vec<Sym>,
}

impl Handler for Replay<'_> {
    fn assume(&mut self, _site: Sym, d: &Arc<Distribution>, _path: &[Sym]) -> Result<Value, RuntimeError> {
        let v = self.trace.get(self.pos).ok_or(RuntimeError::TraceExhausted(self.pos))?.clone();
        self.pos += 1;
        self.log_prior += d.log_density(&v)?;
        Ok(v)
    }

    fn weight(&mut self, _site: Sym, log_w: f64) -> bool {
        self.log_lik += log_w;
        false
    }

    fn bind(&mut self, sym: Sym) {
        self.let_seq.push(sym);
    }
}

/// Runs `code` taking draws from `trace` in order. The trace must be used up exactly.
pub fn eval_replay(code: &Code, trace: &[Value]) -> Result<EvalOutcome, RuntimeError> {
    let mut h = Replay { trace, pos: 0, log_prior: 0.0, log_lik: 0.0, let_seq: Vec::new() };
    let mut m = Machine::new(code);
    let value = match m.run(code, &mut h)? {
        Step::Done(v) => v,
        Step::Suspended { .. } => unreachable!("replay never suspends"),
    };
    if h.pos != trace.len() {
        return Err(RuntimeError::TraceNotConsumed(trace.len() - h.pos));
    }
    Ok(EvalOutcome {
        value,
        log_likelihood: h.log_lik,
        log_prior: h.log_prior,
        let_seq: h.let_seq,
        trace: trace.to_vec(),
    })
}

/// Runs `code` drawing fresh values from `rng`.
pub fn eval_sample(code: &Code, rng: Rng) -> Result<EvalOutcome, RuntimeError> {
    let mut cp = Checkpoint::start(code, rng, true);
    match cp.advance(code, Suspend::Never)? {
        Advance::Terminated(value) => Ok(EvalOutcome {
            value,
            log_likelihood: cp.log_weight,
            log_prior: cp.log_prior,
            let_seq: cp.let_seq.take().unwrap_or_default(),
            trace: cp.trace.take().unwrap_or_default(),
        }),
        Advance::Suspended { .. } => unreachable!("never suspends"),
    }
}

/// Where a resumable execution pauses.
#[derive(Clone, Copy, Debug)]
pub enum Suspend<'a> {
    Never,
    /// After every weight.
    Always,
    /// After weights whose binder is marked.
    At(&'a [bool]),
}

#[derive(Clone, Debug)]
pub enum Advance {
    Suspended { site: Sym },
    Terminated(Value),
}

/// A paused (or not yet started) execution together with its random
/// stream. Cloning it duplicates the execution.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    machine: Machine,
    pub rng: Rng,
    /// Log weight accumulated since it was last reset by the caller.
    pub log_weight: f64,
    pub log_prior: f64,
    pub trace: Option<Vec<Value>>,
    pub let_seq: Option<Vec<Sym>>,
}

struct Live<'a> {
    rng: &'a mut Rng,
    log_weight: &'a mut f64,
    log_prior: &'a mut f64,
    trace: Option<&'a mut Vec<Value>>,
    let_seq: Option<&'a mut Vec<Sym>>,
    suspend: Suspend<'a>,
}

impl Handler for Live<'_> {
    #[inline]
    fn assume(&mut self, _site: Sym, d: &Arc<Distribution>, _path: &[Sym]) -> Result<Value, RuntimeError> {
        let v = d.sample(self.rng);
        *self.log_prior += d.log_density(&v)?;
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(v.clone());
        }
        Ok(v)
    }

    #[inline]
    fn weight(&mut self, site: Sym, log_w: f64) -> bool {
        *self.log_weight += log_w;
        match self.suspend {
            Suspend::Never => false,
            Suspend::Always => true,
            Suspend::At(mask) => mask[site as usize],
        }
    }

    #[inline]
    fn bind(&mut self, sym: Sym) {
        if let Some(l) = self.let_seq.as_deref_mut() {
            l.push(sym);
        }
    }
}

impl Checkpoint {
    /// An execution at the start of the program. With `record`, the trace
    /// and let-sequence are kept.
    pub fn start(code: &Code, rng: Rng, record: bool) -> Checkpoint {
        Checkpoint {
            machine: Machine::new(code),
            rng,
            log_weight: 0.0,
            log_prior: 0.0,
            trace: record.then(Vec::new),
            let_seq: record.then(Vec::new),
        }
    }

    pub fn is_terminated(&self) -> bool {
        self.machine.is_finished()
    }

    /// Runs to the next suspension point or to the end.
    pub fn advance(&mut self, code: &Code, suspend: Suspend<'_>) -> Result<Advance, RuntimeError> {
        let mut h = Live {
            rng: &mut self.rng,
            log_weight: &mut self.log_weight,
            log_prior: &mut self.log_prior,
            trace: self.trace.as_mut(),
            let_seq: self.let_seq.as_mut(),
            suspend,
        };
        Ok(match self.machine.run(code, &mut h)? {
            Step::Done(v) => Advance::Terminated(v),
            Step::Suspended { site } => Advance::Suspended { site },
        })
    }
}
