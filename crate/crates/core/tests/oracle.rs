use std::collections::BTreeMap;
use std::sync::Arc;

use lctrs_complexity::driver::{run_strategy, AnalysisConfig};

use lctrs_complexity::parse::{parse_its, parse_lctrs};
use lctrs_complexity::smt::{Smt, SmtConfig};
use lctrs_complexity::system::{derivation_height_sample, innermost_successors, instantiate_init};
use lctrs_complexity::term::{Term, Value};

fn list(v: &[i64]) -> Value {
    Value::List(Arc::new(v.to_vec()))
}

#[test]
fn mergesort_steps() {
    let sys = parse_its(include_str!("../corpus/mergesort.koat")).unwrap();
    let smt = Smt::new(SmtConfig::default());
    let merge = sys.signature.get("merge").unwrap();
    let z = Term::int_var("z");
    let t = Term::app(&merge, vec![Term::int(1), Term::int(1), z.clone()]);
    let mut got: Vec<(usize, String)> = innermost_successors(&t, &sys, &smt).unwrap().into_iter().map(|(r, t)| (r, t.to_string())).collect();
    got.sort();
    assert_eq!(got, vec![(4, "merge(0, 1, z)".to_string()), (8, "merge(1, 0, z)".to_string())]);
    let split = sys.signature.get("split").unwrap();
    let s4 = Term::app(&split, vec![Term::int(4), Term::int_var("y"), z]);
    assert_eq!(derivation_height_sample(&s4, &sys, &smt, 100).unwrap(), 2);
}

#[test]
fn mergesort_heights_respect_the_bound() {
    let sys = parse_its(include_str!("../corpus/mergesort.koat")).unwrap();
    let smt = Smt::new(SmtConfig::default());
    let res = run_strategy(sys.clone(), &AnalysisConfig::default(), &smt).unwrap();
    let bound = res.bound.expect("finite bound");
    for x in 0..8 {
        let t = instantiate_init(&sys, &[Value::Int(x), Value::Int(0), Value::Int(0)]).unwrap();
        let h = derivation_height_sample(&t, &sys, &smt, 100_000).unwrap();
        let env = BTreeMap::from([(Arc::from("x"), x as f64)]);
        let limit = bound.evaluate(&env).finite().unwrap();
        assert!(h >= 1 && h as f64 <= limit, "x = {x}: {h} > {limit}");
    }
}

#[test]
fn max_length_height() {
    let sys = parse_lctrs(include_str!("../corpus/max_length.lctrs")).unwrap();
    let smt = Smt::new(SmtConfig::default());
    // max_length([3,1], 3, 2): 1 top step, 2 + 1 steps for max, 2 + 1 steps for len
    let t = instantiate_init(&sys, &[list(&[3, 1]), Value::Int(3), Value::Int(2)]).unwrap();
    assert_eq!(derivation_height_sample(&t, &sys, &smt, 1000).unwrap(), 7);
    // mismatching length and maximum leave both nil steps blocked
    let u = instantiate_init(&sys, &[list(&[3, 1]), Value::Int(0), Value::Int(5)]).unwrap();
    assert_eq!(derivation_height_sample(&u, &sys, &smt, 1000).unwrap(), 5);
    let len = sys.signature.get("len").unwrap();
    let l = Term::app(&len, vec![Term::Val(list(&[1, 2])), Term::int(2)]);
    let succ = innermost_successors(&l, &sys, &smt).unwrap();
    assert_eq!(succ.len(), 1);
    assert_eq!(succ[0].1.to_string(), "len([2], 1)");
}
