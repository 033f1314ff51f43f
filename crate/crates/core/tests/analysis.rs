use std::collections::BTreeSet;

use alignppl::analysis::{analyze_align, analyze_with, generate, holds, AbsValue, Constraint, Order, Set};
use alignppl::lang::syntax::Name;
use alignppl::lang::Program;
use alignppl::models;

fn lam(p: &str, b: &str) -> AbsValue {
    AbsValue::Lam { param: p.into(), body: b.into() }
}

fn set(vs: &[AbsValue]) -> Set {
    vs.iter().cloned().collect()
}

#[test]
fn fig4_solution_is_exact() {
    let p = models::find("fig4").unwrap().program();
    let r = analyze_align(&p.anf);
    let stoch = set(&[AbsValue::Stoch]);
    let c1 = set(&[AbsValue::Const(1)]);
    let expected: Vec<(&str, Set)> = vec![
        ("n1", c1.clone()),
        ("n2", c1.clone()),
        ("bern", c1.clone()),
        ("f1", set(&[lam("x1", "x1")])),
        ("f2", set(&[lam("x2", "t2")])),
        ("f3", set(&[lam("x3", "t3")])),
        ("f4", set(&[lam("x4", "t4")])),
        ("a1", stoch.clone()),
        ("v2", stoch.clone()),
        ("f5", set(&[lam("x2", "t2"), lam("x3", "t3"), AbsValue::Stoch])),
        ("v4", stoch),
    ];
    for (n, s) in &expected {
        assert_eq!(r.abstract_of(n), s, "S_{n}");
    }
    for n in &r.names {
        if !expected.iter().any(|(e, _)| **e == **n) {
            assert!(r.abstract_of(n).is_empty(), "S_{n} = {:?}", r.abstract_of(n));
        }
    }
    let unaligned: BTreeSet<Name> = ["t2", "t3", "t4", "t5"].iter().map(|&s| s.into()).collect();
    assert_eq!(r.unaligned(), unaligned);
}

#[test]
fn corpus_alignment_facts_hold() {
    for m in models::corpus() {
        let p = m.program();
        let r = analyze_align(&p.anf);
        let bad = models::check_facts(m, &p.anf, &r);
        assert!(bad.is_empty(), "{}: {bad:?}", m.id);
    }
}

#[test]
fn solutions_satisfy_every_constraint() {
    for m in models::corpus() {
        let r = analyze_align(&m.program().anf);
        assert!(r.violations().is_empty(), "{}: {:?}", m.id, r.violations());
    }
}

#[test]
fn solver_order_does_not_matter() {
    for m in models::corpus() {
        let anf = m.program().anf;
        let a = analyze_with(&anf, Order::Lifo);
        let b = analyze_with(&anf, Order::Fifo);
        assert_eq!(a.names, b.names);
        assert_eq!(a.sets, b.sets, "{}", m.id);
        assert_eq!(a.flags, b.flags, "{}", m.id);
    }
}

// In a least solution every fact has a derivation whose premises do not
// include it, so dropping any single fact breaks some constraint.
#[test]
fn solutions_are_minimal() {
    for id in ["fig4", "motivating", "geometric", "fig6b"] {
        let r = analyze_align(&models::find(id).unwrap().program().anf);
        for (i, n) in r.names.iter().enumerate() {
            for v in &r.sets[i] {
                let mut sets = r.sets.clone();
                sets[i].remove(v);
                let get = |x: &Name| &sets[r.names.iter().position(|m| m == x).unwrap()];
                let ok = r.constraints.iter().all(|c| holds(c, &get, &|x| r.is_unaligned(x)));
                assert!(!ok, "{id}: {v} can be dropped from S_{n}");
            }
            if r.flags[i] {
                let flag = |x: &Name| x != n && r.is_unaligned(x);
                let ok = r.constraints.iter().all(|c| holds(c, &|x| r.abstract_of(x), &flag));
                assert!(!ok, "{id}: unaligned_{n} can be dropped");
            }
        }
    }
}

#[test]
fn seeding_more_values_only_grows_the_solution() {
    for m in models::corpus() {
        let anf = m.program().anf;
        let base = analyze_align(&anf);
        let mut names: Vec<Name> = base.names.clone();
        names.sort();
        // stoch at the first binder that does not already have it
        let Some(x) = base.names.iter().find(|n| !base.abstract_of(n).contains(&AbsValue::Stoch)) else {
            continue;
        };
        let mut cs = generate(&anf);
        cs.push(Constraint::Member { value: AbsValue::Stoch, x: x.clone() });
        let sol = alignppl::analysis::solve::solve(base.names.clone(), cs, Order::Lifo);
        for (i, _) in base.names.iter().enumerate() {
            assert!(base.sets[i].is_subset(&sol.sets[i]), "{}", m.id);
            assert!(!base.flags[i] || sol.unaligned[i], "{}", m.id);
        }
    }
}

#[test]
fn match_on_records_is_precise() {
    // the stochastic field meets a refutable pattern
    let src = "let x = assume (Bernoulli 0.5) in let y = true in let s = {a = y, b = x} in \
               let r = match s with {a = x1, b = false} then (let u = weight 1 in u) else () in r";
    let r = analyze_align(&Program::parse(src).unwrap().anf);
    assert!(r.is_unaligned("u"));
    // the stochastic field meets a variable
    let src = "let x = assume (Bernoulli 0.5) in let y = true in let s = {a = x, b = y} in \
               let r = match s with {a = x1, b = false} then (let u = weight 1 in u) else () in r";
    let r = analyze_align(&Program::parse(src).unwrap().anf);
    assert!(!r.is_unaligned("u"));
}

#[test]
fn wildcard_match_is_never_stochastic() {
    let src = "let x = assume (Bernoulli 0.5) in let r = match x with _ then (let u = weight 1 in u) else () in r";
    let r = analyze_align(&Program::parse(src).unwrap().anf);
    assert!(!r.is_unaligned("u"));
}

#[test]
fn stochastic_sequence_elements_reach_intrinsics() {
    let src = "let x = assume (Bernoulli 0.5) in let s = [x] in let h = get s 0 in \
               let r = if h then (let u = weight 1 in u) else () in r";
    let r = analyze_align(&Program::parse(src).unwrap().anf);
    assert!(r.abstract_of("h").contains(&AbsValue::Stoch));
    assert!(r.is_unaligned("u"));
}

#[test]
fn straight_line_program_has_nothing_unaligned() {
    let r = analyze_align(&Program::parse("let a = 1 + 2 in let w = weight 2 in a").unwrap().anf);
    assert!(r.unaligned().is_empty());
}

#[test]
fn constraint_dump_is_readable() {
    let p = models::find("fig4").unwrap().program();
    let text: Vec<String> = generate(&p.anf).iter().map(|c| c.to_string()).collect();
    assert!(text.contains(&"stoch ∈ S_a1".to_string()));
    assert!(text.contains(&"λx1.x1 ∈ S_f1".to_string()));
}
