//! Property tests: the compiled machine against a direct interpreter of a
//! small term language, pretty-printing round trips, resumable executions
//! and replay.

use alignppl::eval::{eval_replay, eval_sample, Checkpoint, Code, Suspend};
use alignppl::eval::Advance;
use alignppl::lang::pretty::pretty;
use alignppl::lang::Program;
use alignppl::models;
use alignppl::rng::{self, Purpose};
use alignppl::value::Value;
use proptest::prelude::*;

/// Integer expressions with coin flips and weights, in de Bruijn-ish form:
/// `Var(k)` is the `k`-th enclosing binder counted outwards.
#[derive(Clone, Debug)]
enum E {
    Lit(i64),
    Var(usize),
    Add(Box<E>, Box<E>),
    Sub(Box<E>, Box<E>),
    Let(Box<E>, Box<E>),
    /// `(lam v. body) arg`
    App(Box<E>, Box<E>),
    If(Box<C>, Box<E>, Box<E>),
    Weight(u8, Box<E>),
}

#[derive(Clone, Debug)]
enum C {
    Lt(E, E),
    Flip,
}

fn expr() -> impl Strategy<Value = E> {
    let leaf = prop_oneof![(0i64..10).prop_map(E::Lit), (0usize..4).prop_map(E::Var)];
    leaf.prop_recursive(5, 40, 3, |inner| {
        let cond = prop_oneof![(inner.clone(), inner.clone()).prop_map(|(a, b)| C::Lt(a, b)), Just(C::Flip)];
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Add(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Sub(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::Let(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| E::App(a.into(), b.into())),
            (cond, inner.clone(), inner.clone()).prop_map(|(c, a, b)| E::If(c.into(), a.into(), b.into())),
            (1u8..4, inner).prop_map(|(w, e)| E::Weight(w, e.into())),
        ]
    })
}

/// Source text; free variables become literal zeros.
fn render(e: &E, depth: usize) -> String {
    let var = |k: usize| if k < depth { format!("v{}", depth - 1 - k) } else { "0".into() };
    match e {
        E::Lit(i) => i.to_string(),
        E::Var(k) => var(*k),
        E::Add(a, b) => format!("({} + {})", render(a, depth), render(b, depth)),
        E::Sub(a, b) => format!("({} - {})", render(a, depth), render(b, depth)),
        E::Let(a, b) => format!("(let v{depth} = {} in {})", render(a, depth), render(b, depth + 1)),
        E::App(body, arg) => format!("((lam v{depth}. {}) {})", render(body, depth + 1), render(arg, depth)),
        E::If(c, a, b) => {
            let c = match &**c {
                C::Lt(x, y) => format!("{} < {}", render(x, depth), render(y, depth)),
                C::Flip => "assume (Bernoulli 0.5)".into(),
            };
            format!("(if {c} then {} else {})", render(a, depth), render(b, depth))
        }
        E::Weight(w, e) => format!("(weight {w}; {})", render(e, depth)),
    }
}

/// Direct big-step evaluation. Flips come from `coins` in order and are
/// recorded in `used`.
struct Direct<'a> {
    coins: &'a [bool],
    used: Vec<bool>,
    log_w: f64,
}

impl Direct<'_> {
    fn eval(&mut self, e: &E, env: &mut Vec<i64>) -> i64 {
        match e {
            E::Lit(i) => *i,
            E::Var(k) => env.len().checked_sub(k + 1).map_or(0, |i| env[i]),
            E::Add(a, b) => {
                let x = self.eval(a, env);
                x + self.eval(b, env)
            }
            E::Sub(a, b) => {
                let x = self.eval(a, env);
                x - self.eval(b, env)
            }
            E::Let(a, b) | E::App(b, a) => {
                let x = self.eval(a, env);
                env.push(x);
                let r = self.eval(b, env);
                env.pop();
                r
            }
            E::If(c, a, b) => {
                let t = match &**c {
                    C::Lt(x, y) => {
                        let x = self.eval(x, env);
                        x < self.eval(y, env)
                    }
                    C::Flip => {
                        let t = self.coins[self.used.len() % self.coins.len()];
                        self.used.push(t);
                        t
                    }
                };
                self.eval(if t { a } else { b }, env)
            }
            E::Weight(w, e) => {
                self.log_w += (*w as f64).ln();
                self.eval(e, env)
            }
        }
    }
}

fn compile(src: &str) -> std::sync::Arc<Code> {
    Code::compile(&Program::parse(src).unwrap_or_else(|e| panic!("{e}\n{src}")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn machine_agrees_with_direct_evaluation(e in expr(), coins in prop::collection::vec(any::<bool>(), 1..8)) {
        let src = render(&e, 0);
        let mut d = Direct { coins: &coins, used: Vec::new(), log_w: 0.0 };
        let want = d.eval(&e, &mut Vec::new());
        let trace: Vec<Value> = d.used.iter().map(|&b| Value::Bool(b)).collect();
        let got = eval_replay(&compile(&src), &trace).unwrap();
        prop_assert_eq!(got.value.to_string(), want.to_string(), "{}", src);
        prop_assert!((got.log_likelihood - d.log_w).abs() < 1e-9);
        prop_assert!((got.log_prior - trace.len() as f64 * 0.5f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn pretty_output_parses_back(e in expr()) {
        let t = alignppl::lang::parser::parse(&render(&e, 0)).unwrap();
        let again = alignppl::lang::parser::parse(&pretty(&t)).unwrap();
        prop_assert!(t.same_shape(&again), "{}", pretty(&t));
    }

    #[test]
    fn sampling_then_replaying_agrees(seed in any::<u64>(), which in 0usize..8) {
        let m = &models::corpus()[which % models::corpus().len()];
        let code = Code::compile(&m.program());
        let s = eval_sample(&code, rng::stream(seed, Purpose::Check, 0, 0)).unwrap();
        let r = eval_replay(&code, &s.trace).unwrap();
        prop_assert_eq!(r.value.to_string(), s.value.to_string());
        prop_assert_eq!(r.log_likelihood.to_bits(), s.log_likelihood.to_bits());
        prop_assert_eq!(r.log_prior.to_bits(), s.log_prior.to_bits());
        prop_assert_eq!(r.let_seq, s.let_seq);
    }

    #[test]
    fn pausing_at_every_weight_changes_nothing(seed in any::<u64>(), which in 0usize..8) {
        let m = &models::corpus()[which % models::corpus().len()];
        let code = Code::compile(&m.program());
        let whole = eval_sample(&code, rng::stream(seed, Purpose::Check, 0, 0)).unwrap();
        let mut cp = Checkpoint::start(&code, rng::stream(seed, Purpose::Check, 0, 0), true);
        let mut segments = Vec::new();
        let value = loop {
            let a = cp.advance(&code, Suspend::Always).unwrap();
            segments.push(std::mem::take(&mut cp.log_weight));
            if let Advance::Terminated(v) = a {
                break v;
            }
        };
        prop_assert_eq!(value.to_string(), whole.value.to_string());
        prop_assert_eq!(cp.trace.as_ref().unwrap().len(), whole.trace.len());
        let total: f64 = segments.iter().sum();
        let same = total == whole.log_likelihood || (total - whole.log_likelihood).abs() < 1e-9;
        prop_assert!(same, "{} vs {}", total, whole.log_likelihood);
    }

    #[test]
    fn cloned_checkpoints_continue_identically(seed in any::<u64>(), skip in 0usize..4) {
        let code = Code::compile(&models::find("motivating").unwrap().program());
        let mut cp = Checkpoint::start(&code, rng::stream(seed, Purpose::Check, 0, 0), true);
        for _ in 0..skip {
            if let Advance::Terminated(_) = cp.advance(&code, Suspend::Always).unwrap() {
                break;
            }
        }
        let mut twin = cp.clone();
        let finish = |c: &mut Checkpoint| match c.advance(&code, Suspend::Never).unwrap() {
            Advance::Terminated(v) => v.to_string(),
            Advance::Suspended { .. } => unreachable!(),
        };
        if !cp.is_terminated() {
            prop_assert_eq!(finish(&mut cp), finish(&mut twin));
            prop_assert_eq!(cp.log_weight.to_bits(), twin.log_weight.to_bits());
            let text = |c: &Checkpoint| format!("{:?}", c.trace.as_ref().map(|t| t.iter().map(Value::to_string).collect::<Vec<_>>()));
            prop_assert_eq!(text(&cp), text(&twin));
        }
    }
}

#[test]
fn corpus_pretty_round_trip() {
    for m in models::corpus() {
        let t = alignppl::lang::parser::parse(m.source).unwrap();
        let again = alignppl::lang::parser::parse(&pretty(&t)).unwrap();
        assert!(t.same_shape(&again), "{}", m.id);
    }
}
