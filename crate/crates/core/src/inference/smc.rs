use std::sync::Arc;
use std::time::Instant;

use crate::error::InferenceError;
use crate::eval::{Advance, Checkpoint, Code, Suspend, Sym};
use crate::inference::{log_mean_exp, resample, InferenceOutput, Sample};
use crate::par::Pool;
use crate::rng::{self, Purpose};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alignment {
    /// Resample only at weights the analysis proved aligned.
    Aligned,
    /// Resample at every weight.
    Unaligned,
}

#[derive(Clone, Copy, Debug)]
pub struct SmcConfig {
    pub particles: usize,
    pub seed: u64,
    pub alignment: Alignment,
    pub threads: usize,
}

impl SmcConfig {
    pub fn new(particles: usize, seed: u64, alignment: Alignment) -> Self {
        SmcConfig { particles, seed, alignment, threads: 1 }
    }
}

struct Particle {
    cp: Checkpoint,
    value: Option<Value>,
}

enum Status {
    Suspended(Sym),
    Terminated,
}

/// Runs SMC. `aligned` marks the weight binders found aligned; it is
/// required for aligned SMC and ignored otherwise.
pub fn run_smc(code: &Arc<Code>, aligned: Option<&[bool]>, cfg: &SmcConfig) -> Result<InferenceOutput, InferenceError> {
    let start = Instant::now();
    if cfg.particles < 2 {
        return Err(InferenceError::Config("SMC needs at least two particles".into()));
    }
    let suspend = match cfg.alignment {
        Alignment::Unaligned => Suspend::Always,
        Alignment::Aligned => Suspend::At(
            aligned.ok_or_else(|| InferenceError::Config("aligned SMC needs the aligned weight set".into()))?,
        ),
    };
    let pool = Pool::new(cfg.threads);
    let n = cfg.particles;
    let mut particles: Vec<Particle> = (0..n)
        .map(|i| Particle {
            cp: Checkpoint::start(code, rng::stream(cfg.seed, Purpose::Particle, i as u64, 0), false),
            value: None,
        })
        .collect();
    let mut resample_rng = rng::stream(cfg.seed, Purpose::Resample, 0, 0);
    let mut log_z = 0.0;
    let mut generation = 0usize;
    loop {
        let statuses = pool.map_mut(&mut particles, |_, p| -> Result<Status, InferenceError> {
            if p.value.is_some() {
                return Ok(Status::Terminated);
            }
            Ok(match p.cp.advance(code, suspend)? {
                Advance::Suspended { site } => Status::Suspended(site),
                Advance::Terminated(v) => {
                    p.value = Some(v);
                    Status::Terminated
                }
            })
        });
        let statuses = statuses.into_iter().collect::<Result<Vec<_>, _>>()?;
        let log_w: Vec<f64> = particles.iter().map(|p| p.cp.log_weight).collect();
        let done = statuses.iter().all(|s| matches!(s, Status::Terminated));
        if cfg.alignment == Alignment::Aligned && !done {
            check_same_site(code, &statuses, generation)?;
        }
        let gen_z = log_mean_exp(&log_w);
        if gen_z == f64::NEG_INFINITY {
            return Err(InferenceError::DegeneratePopulation { generation });
        }
        log_z += gen_z;
        if done {
            let samples = particles
                .into_iter()
                .zip(log_w)
                .map(|(p, w)| Sample { value: p.value.expect("terminated"), log_weight: w })
                .collect();
            return Ok(InferenceOutput {
                method: format!("{}-smc", if cfg.alignment == Alignment::Aligned { "aligned" } else { "unaligned" }),
                seed: cfg.seed,
                particles: Some(n),
                steps: None,
                log_z: Some(log_z),
                samples,
                resamplings: Some(generation),
                accepted: None,
                acceptance_rate: None,
                decisions: Vec::new(),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        let idx = resample(&log_w, &mut resample_rng, generation)?;
        generation += 1;
        // Copies of one particle must not share a random stream.
        particles = idx
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                let mut cp = particles[j].cp.clone();
                cp.log_weight = 0.0;
                cp.rng = rng::stream(cfg.seed, Purpose::Particle, i as u64, generation as u64);
                Particle { cp, value: particles[j].value.clone() }
            })
            .collect();
    }
}

fn check_same_site(code: &Code, statuses: &[Status], generation: usize) -> Result<(), InferenceError> {
    let mut site = None;
    for (i, s) in statuses.iter().enumerate() {
        match s {
            Status::Terminated => {
                return Err(InferenceError::Invariant(format!(
                    "generation {generation}: particle {i} terminated while others wait at a weight"
                )))
            }
            Status::Suspended(x) => match site {
                None => site = Some(*x),
                Some(y) if y != *x => {
                    return Err(InferenceError::Invariant(format!(
                        "generation {generation}: particles wait at different weights `{}` and `{}`",
                        code.name(y),
                        code.name(*x)
                    )))
                }
                Some(_) => {}
            },
        }
    }
    Ok(())
}
