//! The built-in model corpus. Sources live in `models/*.appl`; each entry
//! records which of its checkpoints the analysis must find aligned.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution as _, Exp};

use crate::analysis::AnalysisResult;
use crate::error::Error;
use crate::lang::anf::{AnfBound, AnfTerm};
use crate::lang::Program;
use crate::rng::{self, Purpose};

/// Identifies a let binder of a corpus program.
#[derive(Clone, Copy, Debug)]
pub enum Site {
    /// A source binder by name.
    Name(&'static str),
    /// Every `assume` bound on this source line.
    Assume(u32),
    /// Every `weight` bound on this source line.
    Weight(u32),
}

#[derive(Clone, Copy, Debug)]
pub struct Fact {
    pub site: Site,
    pub aligned: bool,
}

const fn aligned(site: Site) -> Fact {
    Fact { site, aligned: true }
}

const fn unaligned(site: Site) -> Fact {
    Fact { site, aligned: false }
}

#[derive(Clone, Copy, Debug)]
pub struct Model {
    pub id: &'static str,
    pub title: &'static str,
    pub source: &'static str,
    /// Only finite-support distributions, so the posterior can be enumerated.
    pub discrete: bool,
    pub facts: &'static [Fact],
}

use Site::{Assume as A, Name as N, Weight as W};

pub static CORPUS: &[Model] = &[
    Model {
        id: "motivating",
        title: "birth-death style example with nested recursion",
        source: include_str!("../models/motivating.appl"),
        discrete: false,
        facts: &[
            aligned(A(1)),
            unaligned(A(4)),
            unaligned(W(5)),
            unaligned(W(8)),
            aligned(W(12)),
            aligned(A(13)),
        ],
    },
    Model {
        id: "geometric",
        title: "weighted geometric distribution",
        source: include_str!("../models/geometric.appl"),
        discrete: true,
        facts: &[aligned(N("geometric")), unaligned(N("x")), unaligned(W(4))],
    },
    Model {
        id: "fig4",
        title: "analysis walk-through program",
        source: include_str!("../models/fig4.appl"),
        discrete: true,
        facts: &[
            aligned(N("t1")),
            unaligned(N("t2")),
            unaligned(N("t3")),
            unaligned(N("t4")),
            unaligned(N("t5")),
            aligned(N("t6")),
            aligned(N("a1")),
            aligned(N("f5")),
            aligned(N("v4")),
        ],
    },
    Model {
        id: "fig6a",
        title: "branches with mirrored weights",
        source: include_str!("../models/fig6a.appl"),
        discrete: true,
        facts: &[aligned(A(1)), unaligned(W(2)), unaligned(W(4))],
    },
    Model {
        id: "fig6b",
        title: "rare branch with a nested draw",
        source: include_str!("../models/fig6b.appl"),
        discrete: true,
        facts: &[aligned(A(1)), unaligned(W(2)), unaligned(A(3)), unaligned(W(4)), unaligned(W(6))],
    },
    Model {
        id: "aircraft",
        title: "aircraft localization state-space model",
        source: include_str!("../models/aircraft.appl"),
        discrete: false,
        facts: &[
            aligned(N("position")),
            aligned(N("altitude")),
            aligned(W(28)),
            unaligned(W(30)),
            aligned(A(32)),
            aligned(A(33)),
        ],
    },
    Model {
        id: "lda",
        title: "two-topic latent Dirichlet allocation",
        source: include_str!("../models/lda.appl"),
        discrete: false,
        facts: &[aligned(A(7)), aligned(A(8)), aligned(A(17)), aligned(W(12))],
    },
    Model {
        id: "crbd6",
        title: "constant-rate birth-death on a six-leaf tree",
        source: include_str!("../models/crbd6.appl"),
        discrete: false,
        facts: &[
            aligned(N("lambda")),
            aligned(N("mu")),
            unaligned(A(7)),
            unaligned(A(9)),
            unaligned(A(15)),
            unaligned(W(17)),
            aligned(W(21)),
            aligned(W(27)),
        ],
    },
];

pub fn corpus() -> &'static [Model] {
    CORPUS
}

pub fn find(id: &str) -> Result<&'static Model, Error> {
    CORPUS.iter().find(|m| m.id == id).ok_or_else(|| Error::UnknownModel(id.to_string()))
}

impl Model {
    pub fn program(&self) -> Program {
        Program::parse(self.source).unwrap_or_else(|e| panic!("corpus model {} does not parse: {e}", self.id))
    }
}

/// Let binders matching `site`.
pub fn binders(anf: &AnfTerm, site: Site) -> Vec<String> {
    let mut out = Vec::new();
    anf.walk(&mut |l| {
        let hit = match site {
            Site::Name(n) => &*l.name == n,
            Site::Assume(line) => matches!(l.bound, AnfBound::Assume(_)) && l.span.line == line,
            Site::Weight(line) => matches!(l.bound, AnfBound::Weight(_)) && l.span.line == line,
        };
        if hit {
            out.push(l.name.to_string());
        }
    });
    out
}

/// Facts of `m` that `r` contradicts, or that match no binder, as messages.
pub fn check_facts(m: &Model, anf: &AnfTerm, r: &AnalysisResult) -> Vec<String> {
    let mut bad = Vec::new();
    for f in m.facts {
        let names = binders(anf, f.site);
        if names.is_empty() {
            bad.push(format!("{:?} matches no binder", f.site));
        }
        for n in names {
            if r.is_unaligned(&n) == f.aligned {
                let want = if f.aligned { "aligned" } else { "unaligned" };
                bad.push(format!("{n} ({:?}) should be {want}", f.site));
            }
        }
    }
    bad
}

pub const LDA_THETA: [f64; 3] = [0.95, 0.05, 0.5];
pub const LDA_PHI: [f64; 2] = [0.99, 0.01];
pub const LDA_SEED: u64 = 2023;

/// Words of the three LDA documents (0 or 1), drawn from the true
/// parameters: topic 0 with probability `theta_d`, then word 0 with
/// probability `phi_topic`.
pub fn lda_documents(seed: u64) -> Vec<Vec<u8>> {
    let mut rng = rng::stream(seed, Purpose::Data, 0, 0);
    LDA_THETA
        .iter()
        .map(|&theta| {
            (0..10)
                .map(|_| {
                    let topic = if rng.random_bool(theta) { 0 } else { 1 };
                    u8::from(!rng.random_bool(LDA_PHI[topic]))
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tree {
    Leaf,
    Node { age: f64, left: Box<Tree>, right: Box<Tree> },
}

impl Tree {
    pub fn leaves(&self) -> usize {
        match self {
            Tree::Leaf => 1,
            Tree::Node { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    /// Source text; leaves sit at age 0.
    pub fn to_source(&self) -> String {
        match self {
            Tree::Leaf => "Leaf {age = 0.0}".to_string(),
            Tree::Node { age, left, right } => {
                format!("Node {{age = {age:?}, left = {}, right = {}}}", left.to_source(), right.to_source())
            }
        }
    }
}

pub const CRBD_SEED: u64 = 6;
pub const CRBD_AGE: f64 = 5.0;
pub const CRBD_LEAVES: usize = 6;

/// A pure-birth tree with a root split at age 5, conditioned on six
/// extant leaves. Ages are rounded to two decimals.
pub fn crbd_tree(seed: u64) -> Tree {
    fn grow(age: f64, rate: f64, rng: &mut rng::Rng) -> Tree {
        let split = age - Exp::new(rate).expect("positive rate").sample(rng);
        let split = (split * 100.0).round() / 100.0;
        if split <= 0.0 {
            Tree::Leaf
        } else {
            let left = grow(split, rate, rng);
            let right = grow(split, rate, rng);
            Tree::Node { age: split, left: Box::new(left), right: Box::new(right) }
        }
    }
    for attempt in 0.. {
        let mut rng = rng::stream(seed, Purpose::Data, 1, attempt);
        let left = grow(CRBD_AGE, 0.25, &mut rng);
        let right = grow(CRBD_AGE, 0.25, &mut rng);
        let t = Tree::Node { age: CRBD_AGE, left: Box::new(left), right: Box::new(right) };
        if t.leaves() == CRBD_LEAVES {
            return t;
        }
    }
    unreachable!()
}

/// The data lines as they appear in `models/lda.appl`.
pub fn lda_data_source(docs: &[Vec<u8>]) -> String {
    let mut s = String::new();
    for (i, d) in docs.iter().enumerate() {
        let ws: Vec<String> = d.iter().map(|w| w.to_string()).collect();
        writeln!(s, "let doc{} = [{}] in", i + 1, ws.join(", ")).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committed_data_matches_generators() {
        let lda = find("lda").unwrap().source;
        assert!(lda.contains(&lda_data_source(&lda_documents(LDA_SEED))), "{}", lda_data_source(&lda_documents(LDA_SEED)));
        let crbd = find("crbd6").unwrap().source;
        let tree = crbd_tree(CRBD_SEED);
        assert!(crbd.contains(&format!("let tree = {} in", tree.to_source())), "{}", tree.to_source());
    }

    #[test]
    fn every_model_parses() {
        for m in corpus() {
            m.program();
        }
        assert!(find("nope").is_err());
    }
}
