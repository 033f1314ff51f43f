//! Alignment analysis: a 0-CFA extended with stochastic values and
//! unalignment flags. Names whose flag stays false are aligned: they occur
//! in the same order in every execution.

pub mod constraint;
pub mod solve;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde_json::json;

pub use constraint::{generate, AbsValue, Constraint, PathStep};
pub use solve::{match_stochastic, Order, Set};

use crate::lang::anf::{AnfBound, AnfTerm};
use crate::lang::syntax::Name;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NameKind {
    Let,
    Param,
    PatternVar,
}

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    /// Every variable of the program, in binding order.
    pub names: Vec<Name>,
    pub kinds: Vec<NameKind>,
    pub sets: Vec<Set>,
    pub flags: Vec<bool>,
    pub constraints: Vec<Constraint>,
    index: HashMap<Name, usize>,
}

/// Variables bound anywhere in `t`, with their kind, in binding order.
pub fn variables(t: &AnfTerm) -> Vec<(Name, NameKind)> {
    let mut out = Vec::new();
    t.walk(&mut |l| {
        out.push((l.name.clone(), NameKind::Let));
        match &l.bound {
            AnfBound::Lam { param, .. } => out.push((param.clone(), NameKind::Param)),
            AnfBound::Match(_, p, _, _) => out.extend(p.vars().into_iter().map(|v| (v, NameKind::PatternVar))),
            _ => {}
        }
    });
    out
}

pub fn analyze_align(t: &AnfTerm) -> AnalysisResult {
    analyze_with(t, Order::Lifo)
}

pub fn analyze_with(t: &AnfTerm, order: Order) -> AnalysisResult {
    let vars = variables(t);
    let (names, kinds): (Vec<Name>, Vec<NameKind>) = vars.into_iter().unzip();
    let sol = solve::solve(names, generate(t), order);
    let index = sol.names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
    AnalysisResult {
        names: sol.names,
        kinds,
        sets: sol.sets,
        flags: sol.unaligned,
        constraints: sol.constraints,
        index,
    }
}

static EMPTY: Set = BTreeSet::new();

impl AnalysisResult {
    pub fn abstract_of(&self, x: &str) -> &Set {
        self.index.get(x).map(|&i| &self.sets[i]).unwrap_or(&EMPTY)
    }

    pub fn is_unaligned(&self, x: &str) -> bool {
        self.index.get(x).is_some_and(|&i| self.flags[i])
    }

    pub fn kind(&self, x: &str) -> Option<NameKind> {
        self.index.get(x).map(|&i| self.kinds[i])
    }

    fn select(&self, kind: NameKind, unaligned: bool) -> BTreeSet<Name> {
        (0..self.names.len())
            .filter(|&i| self.kinds[i] == kind && self.flags[i] == unaligned)
            .map(|i| self.names[i].clone())
            .collect()
    }

    /// Unaligned let binders.
    pub fn unaligned(&self) -> BTreeSet<Name> {
        self.select(NameKind::Let, true)
    }

    /// Lambda parameters whose flag is set. They mark functions that may be
    /// called from unaligned code; they never occur in a let-sequence.
    pub fn unaligned_params(&self) -> BTreeSet<Name> {
        self.select(NameKind::Param, true)
    }

    /// The aligned let binders.
    pub fn aligned(&self) -> BTreeSet<Name> {
        self.select(NameKind::Let, false)
    }

    /// Checks every constraint against the solution; returns the violated ones.
    pub fn violations(&self) -> Vec<&Constraint> {
        self.constraints.iter().filter(|c| !holds(c, &|n| self.abstract_of(n), &|n| self.is_unaligned(n))).collect()
    }

    /// `{name: {abstract: [...], unaligned: bool}}` over let binders.
    pub fn to_json(&self) -> serde_json::Value {
        let mut m = BTreeMap::new();
        for (i, n) in self.names.iter().enumerate() {
            if self.kinds[i] != NameKind::Let {
                continue;
            }
            let abs: Vec<String> = self.sets[i].iter().map(|v| v.to_string()).collect();
            m.insert(n.to_string(), json!({ "abstract": abs, "unaligned": self.flags[i] }));
        }
        serde_json::to_value(m).expect("string keys")
    }

    /// One row per let binder: name, flag, abstract values.
    pub fn table(&self) -> String {
        let w = self.names.iter().map(|n| n.chars().count()).max().unwrap_or(4).max(4);
        let mut out = format!("{:<w$}  {:<9}  abstract\n", "name", "alignment");
        for (i, n) in self.names.iter().enumerate() {
            if self.kinds[i] != NameKind::Let {
                continue;
            }
            let abs: Vec<String> = self.sets[i].iter().map(|v| v.to_string()).collect();
            let tag = if self.flags[i] { "unaligned" } else { "aligned" };
            out.push_str(&format!("{n:<w$}  {tag:<9}  {{{}}}\n", abs.join(", ")));
        }
        out
    }
}

/// Whether `c` is satisfied by the sets `get` and flags `flag`.
pub fn holds<'a>(c: &Constraint, get: &dyn Fn(&Name) -> &'a Set, flag: &dyn Fn(&Name) -> bool) -> bool {
    use Constraint::*;
    let lams = |f: &Name| -> Vec<(Name, Name)> {
        get(f)
            .iter()
            .filter_map(|v| match v {
                AbsValue::Lam { param, body } => Some((param.clone(), body.clone())),
                _ => None,
            })
            .collect()
    };
    let stoch = |x: &Name| get(x).contains(&AbsValue::Stoch);
    let has_const = |f: &Name| get(f).iter().any(|v| matches!(v, AbsValue::Const(_)));
    let subset = |a: &Name, b: &Name| get(a).is_subset(get(b));
    let get_fn = |n: &Name| get(n);
    match c {
        Member { value, x } => get(x).contains(value),
        Subset { from, to } => subset(from, to),
        AppLam { f, arg, x } => lams(f).iter().all(|(z, y)| subset(arg, z) && subset(y, x)),
        AppConst { f, x } => get(f).iter().all(|v| match v {
            AbsValue::Const(n) if *n > 1 => get(x).contains(&AbsValue::Const(n - 1)),
            _ => true,
        }),
        AppStochFun { f, x } => !stoch(f) || stoch(x),
        AppStochArg { f, arg, x } => !(has_const(f) && stoch(arg)) || stoch(x),
        AppStochData { f, arg, x } => {
            !has_const(f) || !solve::reaches_stoch(arg, &get_fn, &mut Vec::new()) || stoch(x)
        }
        AppUnalignedCall { f, x } => !flag(x) || lams(f).iter().all(|(y, _)| flag(y)),
        AppStochCallee { f } => !stoch(f) || lams(f).iter().all(|(y, _)| flag(y)),
        IfStoch { cond, x, names } => !stoch(cond) || (stoch(x) && names.iter().all(flag)),
        UnalignedBranches { x, names } | UnalignedBody { param: x, names } => !flag(x) || names.iter().all(flag),
        MatchStoch { scrut, pat, x, names } => {
            !match_stochastic(get(scrut), pat, &get_fn, &mut Vec::new()) || (stoch(x) && names.iter().all(flag))
        }
        PatternBind { scrut, path, var } => {
            solve::values_at(scrut, path, &get_fn, &mut Vec::new()).is_subset(get(var))
        }
    }
}
