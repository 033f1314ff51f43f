mod common;

use std::sync::Arc;

use alignppl::error::InferenceError;
use alignppl::eval::Code;
use alignppl::inference::mcmc::{step, AlignedChain, TraceChain};
use alignppl::inference::{
    resample, run_lightweight_mcmc, run_smc, systematic, Alignment, Compiled, McmcConfig, McmcKind, SmcConfig,
};
use alignppl::lang::Program;
use alignppl::models;
use alignppl::rng::{self, Purpose};
use alignppl::value::Value;

use common::fingerprint;

fn compile(src: &str) -> Compiled {
    Compiled::new(&Program::parse(src).unwrap())
}

fn corpus(id: &str) -> Compiled {
    Compiled::new(&models::find(id).unwrap().program())
}

#[test]
fn systematic_resampling_with_equal_weights_keeps_everyone() {
    for u in [0.0, 0.3, 0.999] {
        assert_eq!(systematic(&[0.5; 7], u).unwrap(), (0..7).collect::<Vec<_>>());
    }
}

#[test]
fn systematic_resampling_follows_weights() {
    // half the particles carry three times the weight of the other half
    let n = 1000;
    let lw: Vec<f64> = (0..n).map(|i| if i < n / 2 { 3f64.ln() } else { 0.0 }).collect();
    let mut r = rng::stream(9, Purpose::Resample, 0, 0);
    for g in 0..20 {
        let idx = resample(&lw, &mut r, g).unwrap();
        assert_eq!(idx.len(), n);
        assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        let heavy = idx.iter().filter(|&&i| i < n / 2).count() as f64 / n as f64;
        assert!((heavy - 0.75).abs() <= 1.0 / n as f64, "{heavy}");
    }
    assert!(matches!(
        resample(&[f64::NEG_INFINITY; 3], &mut r, 4),
        Err(InferenceError::DegeneratePopulation { generation: 4 })
    ));
}

fn line(code: &Code, s: alignppl::eval::Sym) -> u32 {
    code.span(s).line
}

#[test]
fn motivating_poisson_draws_get_stack_trace_addresses() {
    let c = corpus("motivating");
    let mut r = rng::stream(3, Purpose::Mcmc, 0, 0);
    let chain = TraceChain::start(&c.code, &mut r).unwrap();
    let traces: Vec<Vec<u32>> = chain
        .database()
        .addresses_in_order()
        .iter()
        .filter(|a| line(&c.code, a.site) == 13)
        .map(|a| a.path.iter().map(|&s| line(&c.code, s)).chain([13]).collect())
        .collect();
    assert_eq!(traces, vec![vec![17, 13], vec![17, 15, 13], vec![17, 15, 15, 13]]);
}

#[test]
fn repeated_draws_at_one_address_are_told_apart() {
    let c = compile("let a = assume (Bernoulli 0.5) in let b = assume (Bernoulli 0.5) in let f = lam u. assume (Bernoulli 0.5) in f (); f (); a");
    let mut r = rng::stream(1, Purpose::Mcmc, 0, 0);
    let chain = TraceChain::start(&c.code, &mut r).unwrap();
    let addrs = chain.database().addresses_in_order();
    assert_eq!(addrs.len(), 4);
    let (x, y) = (&addrs[2], &addrs[3]);
    assert_eq!(x.site, y.site);
    assert_ne!(x.path, y.path, "different application sites");
    assert!(addrs.iter().all(|a| a.occurrence == 0));
}

/// Posterior of `assume (Bernoulli 0.3)` after weighting `true` by 2.
const TWO_VALUED: &str = "let c = assume (Bernoulli 0.3) in if c then (weight 2; c) else c";

#[test]
fn mcmc_has_the_right_stationary_distribution() {
    let c = compile(TWO_VALUED);
    let exact = 0.6 / (0.6 + 0.7);
    for k in [McmcKind::Aligned, McmcKind::Lightweight] {
        let o = c.mcmc(k, &McmcConfig::new(1_000_000, 11)).unwrap();
        let p = o.samples.iter().filter(|s| matches!(s.value, Value::Bool(true))).count() as f64 / o.samples.len() as f64;
        assert!((p - exact).abs() < 0.01, "{k:?}: {p} vs {exact}");
    }
}

#[test]
fn aligned_steps_reuse_every_other_aligned_draw() {
    let c = corpus("crbd6");
    let mut r = rng::stream(4, Purpose::Mcmc, 0, 0);
    let mut chain = AlignedChain::start(&c.code, c.aligned_assumes.clone(), &mut r).unwrap();
    let bits = |ch: &AlignedChain| -> Vec<String> { ch.store().aligned.iter().map(|d| d.value.to_string()).collect() };
    let (mut local, mut moved) = (0, 0);
    for i in 1..2000 {
        let before = bits(&chain);
        let info = step(&mut chain, &c.code, 0.1, &mut r, true, i).unwrap();
        let after = bits(&chain);
        if info.global {
            continue;
        }
        local += 1;
        let j = info.pick.unwrap();
        assert_eq!(before.len(), after.len());
        for k in 0..before.len() {
            if k != j || !info.accepted {
                assert_eq!(before[k], after[k], "step {i}, draw {k}, pick {j}");
            }
        }
        moved += usize::from(info.accepted && before[j] != after[j]);
    }
    assert!(local > 1000 && moved > 100, "{local} local steps, {moved} moves");
}

#[test]
fn mcmc_without_draws() {
    let c = compile("weight 2; 5");
    let err = run_lightweight_mcmc(&c.code, &McmcConfig::new(10, 1)).unwrap_err();
    assert_eq!(err, InferenceError::EmptyDatabase { step: 1 });
    // only global steps remain, and those are always accepted here
    let o = c.mcmc(McmcKind::Aligned, &McmcConfig::new(10, 1)).unwrap();
    assert_eq!(o.accepted, Some(9));
    assert_eq!(o.samples.len(), 9);
}

#[test]
fn mcmc_config_is_checked() {
    let c = compile(TWO_VALUED);
    for cfg in [
        McmcConfig { g: 0.0, ..McmcConfig::new(10, 1) },
        McmcConfig { burn: 1.0, ..McmcConfig::new(10, 1) },
        McmcConfig::new(0, 1),
    ] {
        assert!(matches!(c.mcmc(McmcKind::Lightweight, &cfg), Err(InferenceError::Config(_))));
    }
}

#[test]
fn aligned_smc_resamples_the_same_number_of_times_for_every_seed() {
    let c = corpus("motivating");
    for seed in 0..5 {
        let o = c.smc(&SmcConfig::new(200, seed, Alignment::Aligned)).unwrap();
        assert_eq!(o.resamplings, Some(3), "one resampling per aligned weight");
    }
}

#[test]
fn aligned_smc_rejects_misaligned_checkpoints() {
    let c = corpus("fig6a");
    // treat the branch weights as aligned although they are not
    let every_weight: Vec<bool> = (0..c.code.num_syms() as u32).map(|s| c.code.op_label(s) == "weight").collect();
    let err = run_smc(&c.code, Some(&every_weight), &SmcConfig::new(100, 1, Alignment::Aligned)).unwrap_err();
    assert!(matches!(err, InferenceError::Invariant(_)), "{err}");
}

#[test]
fn zero_weight_everywhere_is_an_error() {
    let c = compile("let x = assume (Bernoulli 0.5) in weight 0; x");
    for al in [Alignment::Aligned, Alignment::Unaligned] {
        let err = c.smc(&SmcConfig::new(50, 1, al)).unwrap_err();
        assert!(matches!(err, InferenceError::DegeneratePopulation { .. }), "{err}");
    }
}

#[test]
fn smc_log_z_of_a_single_weight() {
    let c = compile("let x = assume (Bernoulli 0.25) in (if x then weight 4 else weight 0); x");
    // Z = 0.25 * 4 exactly, with only `true` surviving
    for al in [Alignment::Aligned, Alignment::Unaligned] {
        let o = c.smc(&SmcConfig::new(20_000, 2, al)).unwrap();
        assert!(o.log_z.unwrap().abs() < 0.05, "{al:?} {:?}", o.log_z);
        assert!(o.samples.iter().zip(o.normalized_weights()).all(|(s, w)| w == 0.0 || matches!(s.value, Value::Bool(true))));
    }
}

#[test]
fn runs_are_reproducible() {
    let c = corpus("motivating");
    for al in [Alignment::Aligned, Alignment::Unaligned] {
        let base = fingerprint(&c.smc(&SmcConfig::new(500, 8, al)).unwrap());
        assert_eq!(base, fingerprint(&c.smc(&SmcConfig::new(500, 8, al)).unwrap()));
        let par = SmcConfig { threads: 3, ..SmcConfig::new(500, 8, al) };
        assert_eq!(base, fingerprint(&c.smc(&par).unwrap()), "{al:?} with threads");
        assert_ne!(base, fingerprint(&c.smc(&SmcConfig::new(500, 9, al)).unwrap()));
    }
    for k in [McmcKind::Aligned, McmcKind::Lightweight] {
        let a = c.mcmc(k, &McmcConfig::new(2000, 8)).unwrap();
        assert_eq!(fingerprint(&a), fingerprint(&c.mcmc(k, &McmcConfig::new(2000, 8)).unwrap()));
    }
}

#[test]
fn mcmc_bookkeeping() {
    let c = compile(TWO_VALUED);
    let o = c.mcmc(McmcKind::Lightweight, &McmcConfig { burn: 0.25, ..McmcConfig::new(101, 3) }).unwrap();
    assert_eq!(o.decisions.len(), 100);
    assert_eq!(o.samples.len(), 101 - 25);
    assert!(o.samples.iter().all(|s| s.log_weight == 0.0));
    assert_eq!(o.accepted.unwrap(), o.decisions.iter().filter(|&&d| d).count());
    let j = o.to_json(false);
    assert_eq!(j["method"], "lightweight-mcmc");
    assert!(j.get("samples").is_none());
}

#[test]
fn chains_share_one_stream_protocol() {
    // a program whose only draw is aligned: both chains see the same numbers
    let c = compile(TWO_VALUED);
    let code: &Arc<Code> = &c.code;
    let a = c.mcmc(McmcKind::Aligned, &McmcConfig::new(5000, 21)).unwrap();
    let l = run_lightweight_mcmc(code, &McmcConfig::new(5000, 21)).unwrap();
    assert_eq!(a.decisions, l.decisions);
    assert_eq!(fingerprint(&a).replace("aligned-mcmc", "x"), fingerprint(&l).replace("lightweight-mcmc", "x"));
}
