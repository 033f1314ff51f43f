//! Worklist solver. Constraints are re-run whenever a set or flag they read
//! grows; constraints that look inside data structures register interest in
//! the nested variables they visit.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::analysis::constraint::{AbsValue, Constraint, PathStep};
use crate::lang::syntax::{Name, Pattern};

pub type Set = BTreeSet<AbsValue>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Order {
    /// Most recently added constraint first.
    #[default]
    Lifo,
    Fifo,
}

pub struct Solution {
    pub names: Vec<Name>,
    pub sets: Vec<Set>,
    pub unaligned: Vec<bool>,
    /// Every constraint, including those created during solving.
    pub constraints: Vec<Constraint>,
    pub propagations: usize,
}

struct Solver {
    index: HashMap<Name, usize>,
    names: Vec<Name>,
    sets: Vec<Set>,
    flags: Vec<bool>,
    constraints: Vec<Constraint>,
    known: HashSet<Constraint>,
    set_edges: Vec<Vec<usize>>,
    flag_edges: Vec<Vec<usize>>,
    watching: HashSet<(usize, usize)>,
    work: VecDeque<usize>,
    order: Order,
    propagations: usize,
}

static EMPTY: Set = BTreeSet::new();

/// Whether refutable parts of `p` may see different values in different
/// executions when matched against a value described by `s`.
pub fn match_stochastic<'a, F>(s: &Set, p: &Pattern, get: &F, touched: &mut Vec<Name>) -> bool
where
    F: Fn(&Name) -> &'a Set,
{
    if p.is_irrefutable() {
        return false;
    }
    if s.contains(&AbsValue::Stoch) {
        return true;
    }
    let sub = |n: &Name, q: &Pattern, touched: &mut Vec<Name>| {
        touched.push(n.clone());
        match_stochastic(get(n), q, get, touched)
    };
    match p {
        Pattern::Var(_) | Pattern::Wildcard | Pattern::Bool(_) | Pattern::Empty => false,
        Pattern::Record(fs) => s.iter().any(|v| match v {
            AbsValue::Record(have) => fs.iter().any(|(k, q)| {
                have.iter().find(|(hk, _)| hk == k).is_some_and(|(_, n)| sub(n, q, touched))
            }),
            _ => false,
        }),
        Pattern::Variant(tag, q) => s.iter().any(|v| match v {
            AbsValue::Variant(t, n) if t == tag => sub(n, q, touched),
            _ => false,
        }),
        Pattern::Cons(h, t) => {
            let seqs: Set = s.iter().filter(|v| matches!(v, AbsValue::Seq(_))).cloned().collect();
            let head = seqs.iter().any(|v| match v {
                AbsValue::Seq(xs) => xs.iter().any(|n| sub(n, h, touched)),
                _ => false,
            });
            head || match_stochastic(&seqs, t, get, touched)
        }
    }
}

/// Whether `stoch` occurs in `S_n` or in any set reachable from it through
/// records, variants and sequences.
pub fn reaches_stoch<'a, F>(n: &Name, get: &F, touched: &mut Vec<Name>) -> bool
where
    F: Fn(&Name) -> &'a Set,
{
    let mut seen = HashSet::new();
    let mut stack = vec![n.clone()];
    let mut found = false;
    while let Some(m) = stack.pop() {
        if !seen.insert(m.clone()) {
            continue;
        }
        touched.push(m.clone());
        for v in get(&m) {
            match v {
                AbsValue::Stoch => found = true,
                AbsValue::Record(fs) => stack.extend(fs.iter().map(|(_, x)| x.clone())),
                AbsValue::Variant(_, x) => stack.push(x.clone()),
                AbsValue::Seq(xs) => stack.extend(xs.iter().cloned()),
                AbsValue::Const(_) | AbsValue::Lam { .. } => {}
            }
        }
    }
    found
}

/// Abstract values at `path` inside `S_scrut`. If a stochastic value is
/// passed on the way down, the parts below it are stochastic too.
pub fn values_at<'a, F>(scrut: &Name, path: &[PathStep], get: &F, touched: &mut Vec<Name>) -> Set
where
    F: Fn(&Name) -> &'a Set,
{
    let mut current: Set = get(scrut).clone();
    let mut stoch = false;
    for step in path {
        stoch |= current.contains(&AbsValue::Stoch);
        let mut next = Set::new();
        let mut take = |n: &Name, next: &mut Set| {
            touched.push(n.clone());
            next.extend(get(n).iter().cloned());
        };
        for v in &current {
            match (step, v) {
                (PathStep::Field(k), AbsValue::Record(fs)) => {
                    if let Some((_, n)) = fs.iter().find(|(fk, _)| fk == k) {
                        take(n, &mut next);
                    }
                }
                (PathStep::Payload(tag), AbsValue::Variant(t, n)) if t == tag => take(n, &mut next),
                (PathStep::Head, AbsValue::Seq(xs)) => xs.iter().for_each(|n| take(n, &mut next)),
                (PathStep::Tail, AbsValue::Seq(_)) => {
                    next.insert(v.clone());
                }
                _ => {}
            }
        }
        current = next;
    }
    if stoch {
        current.insert(AbsValue::Stoch);
    }
    current
}

pub fn solve(names: Vec<Name>, initial: Vec<Constraint>, order: Order) -> Solution {
    let n = names.len();
    let index: HashMap<Name, usize> = names.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
    let mut s = Solver {
        index,
        names,
        sets: vec![Set::new(); n],
        flags: vec![false; n],
        constraints: Vec::new(),
        known: HashSet::new(),
        set_edges: vec![Vec::new(); n],
        flag_edges: vec![Vec::new(); n],
        watching: HashSet::new(),
        work: VecDeque::new(),
        order,
        propagations: 0,
    };
    for c in initial {
        s.add(c);
    }
    while let Some(c) = match s.order {
        Order::Lifo => s.work.pop_back(),
        Order::Fifo => s.work.pop_front(),
    } {
        s.propagations += 1;
        s.propagate(c);
    }
    Solution {
        names: s.names,
        sets: s.sets,
        unaligned: s.flags,
        constraints: s.constraints,
        propagations: s.propagations,
    }
}

impl Solver {
    fn idx(&self, x: &Name) -> usize {
        *self.index.get(x).unwrap_or_else(|| panic!("constraint mentions unknown name `{x}`"))
    }

    fn add(&mut self, c: Constraint) {
        if !self.known.insert(c.clone()) {
            return;
        }
        let id = self.constraints.len();
        use Constraint::*;
        let (sets, flags): (Vec<&Name>, Vec<&Name>) = match &c {
            Member { .. } => (vec![], vec![]),
            Subset { from, .. } => (vec![from], vec![]),
            AppLam { f, .. } | AppConst { f, .. } | AppStochFun { f, .. } | AppStochCallee { f } => (vec![f], vec![]),
            AppStochArg { f, arg, .. } | AppStochData { f, arg, .. } => (vec![f, arg], vec![]),
            AppUnalignedCall { f, x } => (vec![f], vec![x]),
            IfStoch { cond, .. } => (vec![cond], vec![]),
            UnalignedBranches { x, .. } => (vec![], vec![x]),
            UnalignedBody { param, .. } => (vec![], vec![param]),
            MatchStoch { scrut, .. } | PatternBind { scrut, .. } => (vec![scrut], vec![]),
        };
        let sets: Vec<usize> = sets.into_iter().map(|x| self.idx(x)).collect();
        let flags: Vec<usize> = flags.into_iter().map(|x| self.idx(x)).collect();
        for i in sets {
            self.watch(i, id);
        }
        for i in flags {
            self.flag_edges[i].push(id);
        }
        self.constraints.push(c);
        self.work.push_back(id);
    }

    fn watch(&mut self, name: usize, id: usize) {
        if self.watching.insert((name, id)) {
            self.set_edges[name].push(id);
        }
    }

    fn insert(&mut self, x: &Name, v: AbsValue) {
        let i = self.idx(x);
        if self.sets[i].insert(v) {
            self.work.extend(self.set_edges[i].iter().copied());
        }
    }

    fn flag(&mut self, x: &Name) {
        let i = self.idx(x);
        if !self.flags[i] {
            self.flags[i] = true;
            self.work.extend(self.flag_edges[i].iter().copied());
        }
    }

    fn set(&self, x: &Name) -> &Set {
        self.index.get(x).map(|&i| &self.sets[i]).unwrap_or(&EMPTY)
    }

    fn lams(&self, f: &Name) -> Vec<(Name, Name)> {
        self.set(f)
            .iter()
            .filter_map(|v| match v {
                AbsValue::Lam { param, body } => Some((param.clone(), body.clone())),
                _ => None,
            })
            .collect()
    }

    fn has_const(&self, f: &Name) -> bool {
        self.set(f).iter().any(|v| matches!(v, AbsValue::Const(_)))
    }

    fn has_stoch(&self, x: &Name) -> bool {
        self.set(x).contains(&AbsValue::Stoch)
    }

    fn propagate(&mut self, id: usize) {
        use Constraint::*;
        let c = self.constraints[id].clone();
        match &c {
            Member { value, x } => self.insert(x, value.clone()),
            Subset { from, to } => {
                let vs: Vec<AbsValue> = self.set(from).iter().cloned().collect();
                for v in vs {
                    self.insert(to, v);
                }
            }
            AppLam { f, arg, x } => {
                for (z, y) in self.lams(f) {
                    self.add(Subset { from: arg.clone(), to: z });
                    self.add(Subset { from: y, to: x.clone() });
                }
            }
            AppConst { f, x } => {
                let ns: Vec<usize> = self
                    .set(f)
                    .iter()
                    .filter_map(|v| match v {
                        AbsValue::Const(n) if *n > 1 => Some(n - 1),
                        _ => None,
                    })
                    .collect();
                for n in ns {
                    self.insert(x, AbsValue::Const(n));
                }
            }
            AppStochFun { f, x } => {
                if self.has_stoch(f) {
                    self.insert(x, AbsValue::Stoch);
                }
            }
            AppStochArg { f, arg, x } => {
                if self.has_const(f) && self.has_stoch(arg) {
                    self.insert(x, AbsValue::Stoch);
                }
            }
            AppStochData { f, arg, x } => {
                if self.has_const(f) {
                    let mut touched = Vec::new();
                    let found = reaches_stoch(arg, &|n| self.set(n), &mut touched);
                    self.watch_all(&touched, id);
                    if found {
                        self.insert(x, AbsValue::Stoch);
                    }
                }
            }
            AppUnalignedCall { f, x } => {
                if self.flags[self.idx(x)] {
                    for (y, _) in self.lams(f) {
                        self.flag(&y);
                    }
                }
            }
            AppStochCallee { f } => {
                if self.has_stoch(f) {
                    for (y, _) in self.lams(f) {
                        self.flag(&y);
                    }
                }
            }
            IfStoch { cond, x, names } => {
                if self.has_stoch(cond) {
                    self.insert(x, AbsValue::Stoch);
                    names.iter().for_each(|n| self.flag(n));
                }
            }
            UnalignedBranches { x, names } | UnalignedBody { param: x, names } => {
                if self.flags[self.idx(x)] {
                    names.iter().for_each(|n| self.flag(n));
                }
            }
            MatchStoch { scrut, pat, x, names } => {
                let mut touched = Vec::new();
                let stoch = match_stochastic(self.set(scrut), pat, &|n| self.set(n), &mut touched);
                self.watch_all(&touched, id);
                if stoch {
                    self.insert(x, AbsValue::Stoch);
                    names.iter().for_each(|n| self.flag(n));
                }
            }
            PatternBind { scrut, path, var } => {
                let mut touched = Vec::new();
                let vs = values_at(scrut, path, &|n| self.set(n), &mut touched);
                self.watch_all(&touched, id);
                for v in vs {
                    self.insert(var, v);
                }
            }
        }
    }

    fn watch_all(&mut self, names: &[Name], id: usize) {
        for n in names {
            if let Some(&i) = self.index.get(n) {
                self.watch(i, id);
            }
        }
    }
}
