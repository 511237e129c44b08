//! Property tests for invariants of terms, constraints, the rewrite oracle,
//! parsing, graphs and synthesis.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use lctrs_complexity::bounds::{leq_bound, Bound};
use lctrs_complexity::constraints::{check_sat, entails, respects, Answer, SolverResult};
use lctrs_complexity::graphs::{build_dg, build_evg, classify_edge, EdgeClass, Problem};
use lctrs_complexity::parse::{parse, parse_its, read_problem, Format};
use lctrs_complexity::smt::{Smt, SmtConfig};
use lctrs_complexity::synthesis::{interpret_term, measure_of, synthesize, Obligation};
use lctrs_complexity::system::{calc_normalize, innermost_successors, instantiate_init, Lctrs};
use lctrs_complexity::term::{FunSym, Op, Signature, Sort, Substitution, Term, Value, Var};

fn sym(name: &str, arity: usize) -> Arc<FunSym> {
    Arc::new(FunSym::new(name, vec![Sort::Int; arity], Sort::Int))
}

fn arb_int_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(-5i64..5).prop_map(Term::int), prop_oneof![Just("x"), Just("y")].prop_map(Term::int_var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::bin(Op::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::bin(Op::Mul, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::bin(Op::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::app(&sym("f", 2), vec![a, b])),
            inner.prop_map(|a| Term::app(&sym("g", 1), vec![a])),
        ]
    })
}

fn ground(t: &Term) -> Term {
    let sigma: Substitution = [(Var::int("x"), Term::int(3)), (Var::int("y"), Term::int(-2))].into_iter().collect();
    t.subst(&sigma)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn substitution_distributes_over_subterms(t in arb_int_term(), a in arb_int_term(), b in arb_int_term()) {
        let sigma: Substitution = [(Var::int("x"), a), (Var::int("y"), b)].into_iter().collect();
        let applied = t.apply(&sigma).unwrap();
        for p in t.positions_where(|_| true) {
            prop_assert_eq!(applied.subterm_at(&p).unwrap(), &t.subterm_at(&p).unwrap().apply(&sigma).unwrap());
        }
        let names: BTreeSet<Arc<str>> = [Arc::from("f"), Arc::from("g")].into_iter().collect();
        prop_assert_eq!(t.positions_rooted_in(&names), t.positions_rooted_in(&names));
    }

    #[test]
    fn calc_normalization_is_order_independent(t in arb_int_term(), k in 0usize..16) {
        let g = ground(&t);
        let positions = g.positions_where(|_| true);
        let direct = calc_normalize(&g).ok();
        if let Some(p) = positions.get(k % positions.len().max(1)) {
            let inner = calc_normalize(g.subterm_at(p).unwrap());
            if let Ok(inner) = inner {
                let staged = calc_normalize(&g.replace_at(p, inner).unwrap()).ok();
                prop_assert_eq!(direct, staged);
            }
        }
    }

    #[test]
    fn classify_edge_classes_are_nested(c in 0i64..6, k in 1i64..4, two in any::<bool>()) {
        let x = Bound::var("x");
        let mut items = vec![Bound::int(c), Bound::times(Bound::int(k), x.clone())];
        if two {
            items.push(Bound::var("y"));
        }
        let label = Bound::sum(items);
        match classify_edge(&label) {
            EdgeClass::Eq => {
                prop_assert!(leq_bound(&label, &x));
                prop_assert!(leq_bound(&label, &Bound::sum([x.clone(), Bound::zero()])));
            }
            EdgeClass::Plus(a) => prop_assert!(leq_bound(&label, &Bound::sum([x.clone(), Bound::int(a)]))),
            EdgeClass::Times(_) | EdgeClass::Other => prop_assert!(k > 1 || two),
        }
    }
}

#[test]
fn sharping_is_idempotent() {
    let sig = Signature::new();
    let f = sig.intern(FunSym::new("f", vec![Sort::Int], Sort::Int));
    let a = sig.sharp_symbol(&f);
    let b = sig.sharp_symbol(&f);
    assert!(Arc::ptr_eq(&a, &b));
    assert_ne!(a.name, f.name);
}

fn atom(a: i64, b: i64, c: i64) -> Term {
    let lhs = Term::bin(Op::Add, Term::bin(Op::Mul, Term::int(a), Term::int_var("x")), Term::bin(Op::Mul, Term::int(b), Term::int_var("y")));
    Term::bin(Op::Gt, lhs, Term::int(c))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn entailment_is_reflexive_and_transitive(a in -2i64..3, b in -2i64..3, c1 in -4i64..4, c2 in -4i64..4, c3 in -4i64..4) {
        let smt = Smt::new(SmtConfig::default());
        let p = |c| atom(a, b, c);
        prop_assert_eq!(entails(&smt, &p(c1), &p(c1)).unwrap(), Answer::Yes);
        let yes = |x: &Term, y: &Term| entails(&smt, x, y).unwrap() == Answer::Yes;
        if yes(&p(c1), &p(c2)) && yes(&p(c2), &p(c3)) {
            prop_assert!(yes(&p(c1), &p(c3)));
        }
        // identical queries are answered identically
        prop_assert_eq!(entails(&smt, &p(c1), &p(c2)).unwrap(), entails(&smt, &p(c1), &p(c2)).unwrap());
    }

    #[test]
    fn models_respect_their_constraint(a in -2i64..3, b in -2i64..3, c in -4i64..4, d in -4i64..4) {
        let smt = Smt::new(SmtConfig::default());
        let phi = Term::and(atom(a, b, c), atom(b, -a, d));
        if let SolverResult::Sat(m) = check_sat(&smt, &phi).unwrap() {
            prop_assert!(respects(&m, &phi));
        }
    }
}

fn corpus_files() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

#[test]
fn corpus_parses_and_rules_are_left_linear() {
    for path in corpus_files() {
        let file = read_problem(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        for r in &file.lctrs.rules {
            let mut seen = BTreeSet::new();
            let mut linear = true;
            r.lhs.visit(&mut |t| {
                if let Term::Var(v) = t {
                    linear &= seen.insert(v.clone());
                }
            });
            assert!(linear, "{}: rule {} is not left-linear", path.display(), r.id);
        }
    }
}

/// Small ITSs with decreasing loops and arbitrary other transitions.
fn arb_its() -> impl Strategy<Value = String> {
    let lin = (-2i64..3, -2i64..3, -2i64..3).prop_map(|(a, b, c)| format!("{a}*x + {b}*y + {c}"));
    let rule = (0usize..3, 0usize..3, lin.clone(), lin.clone(), lin, any::<bool>()).prop_map(|(f, t, u, v, g, dec)| {
        let upd = if dec { "x - 1".to_string() } else { u };
        format!("  l{f}(x, y) -> l{t}({upd}, {v}) :|: {g} > 0 && x > 0")
    });
    proptest::collection::vec(rule, 1..=4).prop_map(|mut rules| {
        rules[0] = rules[0].replacen(&rules[0][2..4], "l0", 1);
        format!("(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS l0))\n(VAR x y)\n(RULES\n{}\n)\n", rules.join("\n"))
    })
}

fn int_args(t: &Term) -> Vec<i64> {
    t.args().iter().filter_map(|a| a.as_value().and_then(Value::as_int)).collect()
}

/// Follow derivations from the instantiated start term, checking that every
/// pair of consecutive steps is a DG edge and that EVG labels bound the
/// sizes passed along it.
fn check_graphs(sys: &Lctrs, smt: &Smt, vals: &[i64]) -> Result<(), TestCaseError> {
    let p = Problem::from_system(Arc::new(sys.clone()));
    let dg = build_dg(&p, smt);
    let evg = build_evg(&p, &dg, smt);
    let dt_of = |rule: usize| p.dts.iter().find(|d| d.origins == [rule]).map(|d| d.id);
    let Some(t0) = instantiate_init(sys, &vals.iter().map(|v| Value::Int(*v)).collect::<Vec<_>>()) else { return Ok(()) };
    let mut frontier = vec![(t0, None::<(usize, Vec<i64>)>)];
    for _ in 0..12 {
        let mut next = Vec::new();
        for (t, prev) in frontier {
            let Ok(succ) = innermost_successors(&t, sys, smt) else { continue };
            for (rule, s) in succ {
                let Some(d) = dt_of(rule) else { continue };
                let entry = int_args(&t);
                if let Some((g, before)) = &prev {
                    prop_assert!(dg.has_edge(*g, d), "missing edge {g} -> {d}");
                    let delta = p.dt(*g).unwrap();
                    let env: BTreeMap<Arc<str>, f64> =
                        delta.entry_vars().iter().filter_map(|(i, v)| before.get(*i).map(|x| (v.name.clone(), x.abs() as f64))).collect();
                    for (i, y) in p.dt(d).unwrap().entry_vars() {
                        let Some(label) = evg.labels.get(&(*g, d, y.name.clone())) else { continue };
                        if let (Some(limit), Some(actual)) = (label.evaluate(&env).finite(), entry.get(i)) {
                            prop_assert!(actual.abs() as f64 <= limit, "|{}| = {} > {label}", y.name, actual.abs());
                        }
                    }
                }
                if next.len() < 32 {
                    next.push((s, Some((d, entry.clone()))));
                }
            }
        }
        frontier = next;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn graphs_cover_observed_steps(text in arb_its(), x in -6i64..7, y in -6i64..7) {
        let sys = parse_its(&text).unwrap();
        let smt = Smt::new(SmtConfig::default());
        check_graphs(&sys, &smt, &[x, y])?;
    }
}

/// Instances of an obligation under sampled values of its variables that
/// satisfy its guard.
fn samples(o: &Obligation, n: usize) -> Vec<Substitution> {
    let mut vars = o.lhs.vars();
    o.guard.collect_vars(&mut vars);
    for c in &o.comps {
        c.collect_vars(&mut vars);
    }
    let mut out = Vec::new();
    let mut seed = 7u64;
    let mut rnd = || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 33) % 25) as i64 - 12
    };
    for _ in 0..n * 50 {
        let sigma: Substitution = vars.iter().map(|v| (v.clone(), Term::int(rnd()))).collect();
        if calc_normalize(&o.guard.subst(&sigma)).ok().and_then(|g| g.as_value().and_then(Value::as_bool)) == Some(true) {
            out.push(sigma);
            if out.len() == n {
                break;
            }
        }
    }
    out
}

#[test]
fn synthesized_interpretations_hold_on_samples() {
    let smt = Smt::new(SmtConfig::default());
    for name in ["nested.koat", "mergesort.koat", "div_by_two.koat"] {
        let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)).unwrap();
        let p = Problem::from_system(Arc::new(parse(&text, Format::Its).unwrap()));
        let obligations: Vec<Obligation> = p.dts.iter().map(Obligation::from_dt).collect();
        let cands: BTreeSet<usize> = p.ids();
        let Some(syn) = synthesize(&smt, &obligations, &obligations, &cands, 2) else { continue };
        for o in &obligations {
            for sigma in samples(o, 200) {
                let lhs = measure_of(&syn.interp, &calc_normalize(&o.lhs.subst(&sigma)).unwrap()).unwrap();
                let rhs: i64 = o.comps.iter().map(|c| measure_of(&syn.interp, &calc_normalize(&c.subst(&sigma)).unwrap()).unwrap()).sum();
                let strict = syn.strict.contains(&o.id);
                assert!(lhs >= rhs + i64::from(strict), "{name}: {} on {} at {sigma:?}", syn.interp, o.id);
            }
        }
    }
}

#[test]
fn tuple_interpretation_is_additive() {
    let smt = Smt::new(SmtConfig::default());
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/mergesort.koat")).unwrap();
    let p = Problem::from_system(Arc::new(parse(&text, Format::Its).unwrap()));
    let obligations: Vec<Obligation> = p.dts.iter().map(Obligation::from_dt).collect();
    let syn = synthesize(&smt, &obligations, &obligations, &p.ids(), 2).expect("interpretation");
    for d in &p.dts {
        let comps = d.components();
        if comps.len() < 2 {
            continue;
        }
        let whole = interpret_term(&syn.interp, &Term::tuple(comps.clone())).unwrap();
        let parts = Bound::sum(comps.iter().map(|c| interpret_term(&syn.interp, c).unwrap()));
        assert_eq!(whole, parts);
    }
}
