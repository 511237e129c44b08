use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::bounds::{asymptotic_class, AsymptoticClass};
use crate::parse::{parse, Format};
use crate::smt::SmtConfig;

fn problem(text: &str, format: Format) -> Problem {
    Problem::from_system(Arc::new(parse(text, format).expect("parse")))
}

fn its(rules: &str, start: &str, vars: &str) -> Problem {
    problem(&format!("(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS {start}))\n(VAR {vars})\n(RULES\n{rules}\n)\n"), Format::Its)
}

fn mergesort() -> Problem {
    problem(include_str!("../../corpus/mergesort.koat"), Format::Its)
}

fn id_of(j: &Judgement, label: &str) -> usize {
    j.problem.dts.iter().find(|d| d.label == label).map(|d| d.id).expect("label")
}

#[test]
fn initial_needs_no_predecessors() {
    let smt = Smt::new(SmtConfig::default());
    let mut j = Judgement::new(its("  l0(x) -> f(x)\n  f(x) -> f(x - 1) :|: x > 0", "l0", "x"), &smt);
    proc_initial(&mut j);
    assert_eq!(j.t(id_of(&j, "1")), Bound::one());
    assert!(j.t(id_of(&j, "2")).is_omega());
    let mut k = Judgement::new(its("  f(x) -> f(x - 1) :|: x > 0", "f", "x"), &smt);
    proc_initial(&mut k);
    assert!(k.problem.dts.iter().filter(|d| k.dg.has_edge(d.id, d.id)).all(|d| k.t(d.id).is_omega()));
}

#[test]
fn mergesort_basic_bounds() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx::new(&smt);
    let mut j = Judgement::new(mergesort(), &smt);
    proc_simp(&smt, &mut j);
    proc_initial(&mut j);
    proc_sizebounds(&smt, &mut j);
    assert_eq!(j.s(id_of(&j, "3"), "y"), Bound::var("x"));
    assert!(proc_timebounds_all(&ctx, &mut j));
    assert_eq!(asymptotic_class(&j.t(id_of(&j, "9"))), AsymptoticClass::Poly(1));
    proc_predecessors(&mut j);
    proc_timebounds_all(&ctx, &mut j);
    // without chaining the merge loop is charged once per call of m
    assert_eq!(asymptotic_class(&j.t(id_of(&j, "4"))), AsymptoticClass::Poly(2));
}

#[test]
fn counter_scc_size_bound() {
    let smt = Smt::new(SmtConfig::default());
    let mut j = Judgement::new(its("  start(n) -> f(1, n)\n  f(x, n) -> f(x + 1, n) :|: x <= n", "start", "x n"), &smt);
    proc_initial(&mut j);
    let l = id_of(&j, "2");
    j.t.insert(l, Bound::var("n"));
    proc_sizebounds(&smt, &mut j);
    assert_eq!(j.s(l, "x"), Bound::sum([Bound::var("n"), Bound::one()]));
    assert_eq!(j.s(l, "n"), Bound::var("n"));
}

#[test]
fn simp_removes_dead_tuples_and_arguments() {
    let smt = Smt::new(SmtConfig::default());
    let mut j = Judgement::new(problem(include_str!("../../corpus/dead_code.koat"), Format::Its), &smt);
    assert!(proc_simp(&smt, &mut j));
    let labels: BTreeSet<String> = j.problem.dts.iter().map(|d| d.label.clone()).collect();
    assert_eq!(labels, BTreeSet::from(["3".to_string(), "4".to_string()]));
    assert!(j.problem.dts.iter().all(|d| d.lhs.args().len() == 1));
    assert!(!proc_simp(&smt, &mut j));
}

#[test]
fn chaining_mergesort_cycles() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx::new(&smt);
    let mut j = Judgement::new(mergesort(), &smt);
    proc_simp(&smt, &mut j);
    let c = proc_chain(&ctx, &j).expect("chained");
    let labels: Vec<&str> = c.proof.iter().map(|n| n.summary.split(':').next().unwrap_or("")).collect();
    assert_eq!(labels, vec!["(9) with (3) at m1#(u)", "(9.3) with (7) at m2#(v)"]);
    let d = c.problem.dts.iter().find(|d| d.label == "9.3.7").expect("chained tuple");
    assert_eq!(c.parts[&d.id], vec![9, 3, 7]);
    let rebuilt = crate::graphs::build_dg(&c.problem, &smt);
    assert!(rebuilt.has_edge(d.id, d.id));
    assert_eq!(rebuilt.multiplicity(d.id, d.id), 2);
}

#[test]
fn trivial_split_is_identity() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx::new(&smt);
    let mut j = Judgement::new(mergesort(), &smt);
    proc_initial(&mut j);
    proc_sizebounds(&smt, &mut j);
    let before = j.clone();
    let sp = Split {
        delta: id_of(&j, "9"),
        d1: BTreeSet::new(),
    };
    assert!(!proc_split(&ctx, &mut j, &sp, 0));
    assert_eq!(j.t, before.t);
    assert_eq!(j.s, before.s);
}

#[test]
fn recurrence_on_halving_loop() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx::new(&smt);
    let j = solve(&ctx, problem(include_str!("../../corpus/div_by_two.koat"), Format::Its), 0);
    assert_eq!(asymptotic_class(&total_bound(&j)), AsymptoticClass::Log);
    let mut all = Vec::new();
    for n in &j.proof {
        n.walk(&mut all);
    }
    assert!(all.iter().any(|n| n.processor == "Recurrence" && n.summary.contains("f(x) = f(x/2) + 1")));
}

#[test]
fn finite_entries_are_justified() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx::new(&smt);
    let j = solve(&ctx, mergesort(), 0);
    let text = render_proof(&j.proof, true);
    for d in &j.problem.dts {
        let t = j.t(d.id);
        assert!(!t.is_omega());
        assert!(text.contains(&format!("T({}) = {t}", d.label)), "T({}) = {t} not in proof", d.label);
    }
}

#[test]
fn expired_deadline_keeps_partial_judgement_sound() {
    let smt = Smt::new(SmtConfig::default());
    let ctx = Ctx {
        deadline: Some(std::time::Instant::now()),
        ..Ctx::new(&smt)
    };
    let j = solve(&ctx, mergesort(), 0);
    let text = render_proof(&j.proof, true);
    for d in &j.problem.dts {
        let t = j.t(d.id);
        if !t.is_omega() {
            assert!(text.contains(&format!("T({}) = {t}", d.label)));
        }
    }
}

fn step(ctx: &Ctx, j: &mut Judgement, k: u8) {
    match k % 6 {
        0 => {
            proc_sizebounds_triv(ctx.smt, j);
        }
        1 => {
            proc_sizebounds_scc(ctx.smt, j);
        }
        2 => {
            proc_predecessors(j);
        }
        3 => {
            proc_timebounds_all(ctx, j);
        }
        4 => {
            proc_interpretation(ctx, j);
        }
        _ => {
            proc_initial(j);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn processors_refine_monotonically(steps in proptest::collection::vec(any::<u8>(), 1..8)) {
        let smt = Smt::new(SmtConfig::default());
        let ctx = Ctx::new(&smt);
        let mut j = Judgement::new(problem(include_str!("../../corpus/nested.koat"), Format::Its), &smt);
        proc_simp(&smt, &mut j);
        for k in steps {
            let before = j.clone();
            step(&ctx, &mut j, k);
            for (id, old) in &before.t {
                prop_assert!(crate::bounds::leq_bound(&j.t(*id), old), "T({id}): {} after {old}", j.t(*id));
            }
            for ((id, y), old) in &before.s {
                prop_assert!(crate::bounds::leq_bound(&j.s(*id, y), old));
            }
        }
    }

    #[test]
    fn improvement_is_asymmetric(a in 0i64..5, b in 0i64..5, c in 0i64..3, d in 0i64..3) {
        let x = Bound::var("x");
        let p = Bound::sum([Bound::times(Bound::int(a), x.clone()), Bound::int(c)]);
        let q = Bound::sum([Bound::times(Bound::int(b), Bound::times(x.clone(), x)), Bound::int(d)]);
        prop_assert!(!(improves(&p, &q) && improves(&q, &p)));
        prop_assert!(!improves(&p, &Bound::Omega));
    }
}

#[test]
fn parallel_subproblems_give_the_same_proof() {
    let smt = Smt::new(SmtConfig::default());
    let one = solve(&Ctx::new(&smt), mergesort(), 0);
    let four = solve(&Ctx { jobs: 4, ..Ctx::new(&smt) }, mergesort(), 0);
    assert_eq!(one.t, four.t);
    assert_eq!(render_proof(&one.proof, true), render_proof(&four.proof, true));
}
