//! Acceptance criteria 1 to 8, one PASS/FAIL line each.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use lctrs_complexity::bounds::{asymptotic_class, AsymptoticClass, Bound};
use lctrs_complexity::constraints::Answer;
use lctrs_complexity::driver::{run_strategy, AnalysisConfig, AnalysisResult};
use lctrs_complexity::graphs::Problem;
use lctrs_complexity::parse::{parse, parse_its, Format};
use lctrs_complexity::processors::{certificates, proc_initial, proc_sizebounds, Judgement, ProofNode};
use lctrs_complexity::recsolve::{solve_recurrence, unroll, BranchShape, Recurrence};
use lctrs_complexity::smt::{Smt, SmtConfig};
use lctrs_complexity::synthesis::check_compatibility;
use lctrs_complexity::system::{derivation_height_sample, innermost_successors, instantiate_init};
use lctrs_complexity::term::{Term, Value};

type Outcome = Result<String, String>;

fn corpus(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn analyze(name: &str, smt: &Smt) -> Result<AnalysisResult, String> {
    let text = corpus(name);
    let sys = parse(&text, Format::from_path(Path::new(name))).map_err(|e| e.to_string())?;
    run_strategy(sys, &AnalysisConfig::default(), smt).map_err(|e| e.to_string())
}

fn nodes(proof: &[ProofNode]) -> Vec<&ProofNode> {
    let mut out = Vec::new();
    for n in proof {
        n.walk(&mut out);
    }
    out
}

fn expect_class(res: &AnalysisResult, class: AsymptoticClass, limit: Duration) -> Outcome {
    if res.class != Some(class) {
        return Err(format!("got {:?}", res.class.map(|c| c.render())));
    }
    if res.wall_time > limit {
        return Err(format!("took {:?}", res.wall_time));
    }
    Ok(format!("{} in {:.1?}", class.render(), res.wall_time))
}

fn mergesort(res: &AnalysisResult) -> Outcome {
    expect_class(res, AsymptoticClass::PolyLog(1, 1), Duration::from_secs(60))?;
    let all = nodes(&res.judgement.proof);
    let has = |proc: &str, pred: &dyn Fn(&ProofNode) -> bool| all.iter().any(|n| n.processor == proc && pred(n));
    if !has("Chain", &|n| n.summary.starts_with("(9) with (3)")) || !has("Chain", &|n| n.summary.starts_with("(9.3) with (7)")) {
        return Err("missing chaining of (9) with (3) and (7)".into());
    }
    if !has("TimeBounds", &|n| n.certificate.as_ref().is_some_and(|c| c.interp.to_string().contains("merge#"))) {
        return Err("missing TimeBounds certificate for the merge loop".into());
    }
    let rec = all.iter().find(|n| n.processor == "Recurrence" && n.summary.contains("= 2*f(x/2) + "));
    let Some(rec) = rec else { return Err("missing recurrence 2*f(x/2) + H".into()) };
    if !rec.summary.ends_with("f(1) = 0") {
        return Err(format!("unexpected base case: {}", rec.summary));
    }
    let eq = rec.summary.split(": ").last().unwrap_or_default();
    Ok(format!("O(n*log(n)) in {:.1?}; recurrence {eq}", res.wall_time))
}

fn master_theorem() -> Outcome {
    let x = || Bound::var("x");
    let d2 = BranchShape::Divide { b: 2, c: 0 };
    let cases = [
        ("p=2,b=2,H=n", Recurrence::new(2, d2, "x", x(), 0), AsymptoticClass::PolyLog(1, 1)),
        ("p=1,b=2,H=1", Recurrence::new(1, d2, "x", Bound::zero(), 0), AsymptoticClass::Log),
        ("p=4,b=2,H=n", Recurrence::new(4, d2, "x", x(), 0), AsymptoticClass::Poly(2)),
        ("p=1,n-1,H=1", Recurrence::new(1, BranchShape::Subtract { d: 1 }, "x", Bound::zero(), 0), AsymptoticClass::Poly(1)),
    ];
    let started = Instant::now();
    for (name, rec, class) in cases {
        let bound = solve_recurrence(&rec).map_err(|e| format!("{name}: {e}"))?;
        if asymptotic_class(&bound) != class {
            return Err(format!("{name}: {bound} is not {}", class.render()));
        }
        let mut memo = HashMap::new();
        for k in 8..=16 {
            for n in [(1i64 << k) - 1, 1 << k, (1 << k) + 1] {
                let exact = unroll(&rec, n, &mut memo);
                let env = BTreeMap::from([(Arc::from("x"), n as f64)]);
                let v = bound.evaluate(&env).finite().ok_or("infinite bound")?;
                if exact > v {
                    return Err(format!("{name}: f({n}) = {exact} > {v}"));
                }
            }
        }
    }
    let t = started.elapsed();
    if t > Duration::from_secs(5) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("4 cases, pivots 2^8..2^16, {t:.1?}"))
}

/// A random ITS with at most four transitions over three locations.
fn random_its(rng: &mut StdRng) -> String {
    let vars = ["x", "y"];
    let coeff = |rng: &mut StdRng| rng.gen_range(-2i64..=2);
    let lin = |rng: &mut StdRng| {
        let c = coeff(rng);
        let mut parts: Vec<String> = Vec::new();
        for v in vars {
            let a = coeff(rng);
            if a != 0 {
                parts.push(format!("{a}*{v}"));
            }
        }
        parts.push(c.to_string());
        parts.join(" + ")
    };
    let n = rng.gen_range(1..=4);
    let mut rules = Vec::new();
    for k in 0..n {
        let from = if k == 0 { 0 } else { rng.gen_range(0..3) };
        let to = rng.gen_range(0..3);
        let update: Vec<String> = vars
            .iter()
            .map(|v| if rng.gen_bool(0.5) { format!("{v} - {}", rng.gen_range(0..=2)) } else { lin(rng) })
            .collect();
        let mut guard = vec![format!("{} > 0", lin(rng))];
        if rng.gen_bool(0.5) {
            guard.push(format!("{} > 0", vars[rng.gen_range(0..2)]));
        }
        rules.push(format!("  l{from}(x, y) -> l{to}({}) :|: {}", update.join(", "), guard.join(" && ")));
    }
    format!("(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS l0))\n(VAR x y)\n(RULES\n{}\n)\n", rules.join("\n"))
}

fn soundness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let cfg = AnalysisConfig {
        timeout: Duration::from_secs(10),
        ..AnalysisConfig::default()
    };
    let (mut systems, mut bounded, mut checked) = (0, 0, 0);
    while bounded < 50 && systems < 400 {
        let text = random_its(&mut rng);
        systems += 1;
        let sys = parse_its(&text).map_err(|e| format!("{e}\n{text}"))?;
        let smt = Smt::new(SmtConfig::default());
        let res = run_strategy(sys.clone(), &cfg, &smt).map_err(|e| e.to_string())?;
        let Some(bound) = res.bound else { continue };
        bounded += 1;
        for _ in 0..20 {
            let vals: Vec<i64> = (0..2).map(|_| rng.gen_range(-8..=8)).collect();
            let Some(t) = instantiate_init(&sys, &vals.iter().map(|v| Value::Int(*v)).collect::<Vec<_>>()) else { continue };
            let Ok(h) = derivation_height_sample(&t, &sys, &smt, 10_000) else { continue };
            let env: BTreeMap<Arc<str>, f64> = sys.input_vars().iter().zip(&vals).map(|(v, x)| (v.name.clone(), x.abs() as f64)).collect();
            let limit = bound.evaluate(&env).finite().unwrap_or(f64::INFINITY);
            checked += 1;
            if h as f64 > limit {
                return Err(format!("height {h} > {limit} = {bound} at {vals:?} for\n{text}"));
            }
        }
    }
    if bounded < 50 {
        return Err(format!("only {bounded} of {systems} systems got a finite bound"));
    }
    Ok(format!("{bounded} bounded systems of {systems} generated, {checked} derivations checked"))
}

fn counter_sizes() -> Outcome {
    let text = "(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS start))\n(VAR x n)\n(RULES\n  start(n) -> f(1, n)\n  f(x, n) -> f(x + 1, n) :|: x <= n\n)\n";
    let sys = parse_its(text).map_err(|e| e.to_string())?;
    let smt = Smt::new(SmtConfig::default());
    let mut j = Judgement::new(Problem::from_system(Arc::new(sys.clone())), &smt);
    proc_initial(&mut j);
    let loop_id = j.problem.ids().into_iter().find(|i| j.dg.has_edge(*i, *i)).ok_or("no loop")?;
    // the exact number of loop iterations
    j.t.insert(loop_id, Bound::var("n"));
    proc_sizebounds(&smt, &mut j);
    let s = j.s(loop_id, "x");
    for n in 1..=50i64 {
        let mut t = instantiate_init(&sys, &[Value::Int(n)]).ok_or("init")?;
        let mut max = 0;
        loop {
            if let Term::Fun(_, args) = &t {
                if let Some(Term::Val(Value::Int(x))) = args.first() {
                    max = max.max(x.abs());
                }
            }
            let succ = innermost_successors(&t, &sys, &smt).map_err(|e| e.to_string())?;
            let Some((_, next)) = succ.into_iter().next() else { break };
            t = next;
        }
        let v = s.evaluate(&BTreeMap::from([(Arc::from("n"), n as f64)])).finite().ok_or("S is omega")?;
        if v != max as f64 {
            return Err(format!("n = {n}: S = {v}, simulated maximum {max}"));
        }
    }
    Ok(format!("S = {s} exact for n in 1..50"))
}

fn recheck(runs: &[(&str, &AnalysisResult)], smt: &Smt) -> Outcome {
    let mut count = 0;
    for (name, res) in runs {
        for c in certificates(&res.judgement.proof) {
            for (o, strict) in &c.orientations {
                count += 1;
                if check_compatibility(smt, &c.interp, o, *strict) != Answer::Yes {
                    return Err(format!("{name}: {} fails on {} (strict {strict})", c.interp, o.id));
                }
            }
        }
    }
    Ok(format!("{count} orientations re-checked"))
}

const SUITE: [(&str, &str); 12] = [
    ("mergesort.koat", "O(n*log(n))"),
    ("max_length.lctrs", "O(n^1)"),
    ("div_by_two.koat", "O(log(n))"),
    ("counter.koat", "O(n^1)"),
    ("straight_line.koat", "O(1)"),
    ("nested.koat", "O(n^2)"),
    ("triple.koat", "O(n^3)"),
    ("nonterminating.koat", "MAYBE"),
    ("dead_code.koat", "O(n^1)"),
    ("interleaved.koat", "O(n^1)"),
    ("list_pairs.lctrs", "O(n^2)"),
    ("triangular.koat", "O(n^2)"),
];

fn regression(smt: &Smt) -> Outcome {
    let started = Instant::now();
    let mut seen = std::collections::BTreeSet::new();
    for (name, expected) in SUITE {
        let res = analyze(name, smt)?;
        let got = res.class.map_or("MAYBE".to_string(), |c| c.render());
        if got != expected {
            return Err(format!("{name}: expected {expected}, got {got}"));
        }
        seen.extend(nodes(&res.judgement.proof).into_iter().map(|n| n.processor.clone()));
    }
    for p in ["Simp", "Initial", "Leaves", "SizeBounds-trivial", "SizeBounds-SCC", "TimeBounds", "Interpretation", "Chain", "Split", "Recurrence"] {
        if !seen.contains(p) {
            return Err(format!("no problem exercises {p}"));
        }
    }
    let t = started.elapsed();
    if t > Duration::from_secs(180) {
        return Err(format!("took {t:?}"));
    }
    Ok(format!("12 problems in {t:.1?}"))
}

fn main() {
    let smt = Smt::new(SmtConfig::default());
    let runs: Vec<(&str, Result<AnalysisResult, String>)> =
        ["mergesort.koat", "max_length.lctrs", "div_by_two.koat"].into_iter().map(|n| (n, analyze(n, &smt))).collect();
    let run = |i: usize| runs[i].1.as_ref().map_err(|e| e.clone());
    let results: Vec<(&str, Outcome)> = vec![
        ("mergesort end-to-end", run(0).and_then(mergesort)),
        ("max-length linear", run(1).and_then(|r| expect_class(r, AsymptoticClass::Poly(1), Duration::from_secs(60)))),
        ("sublinear bound", run(2).and_then(|r| expect_class(r, AsymptoticClass::Log, Duration::from_secs(60)))),
        ("recurrence solver", master_theorem()),
        ("soundness on random ITSs", soundness()),
        ("counter size bound", counter_sizes()),
        (
            "certificate re-check",
            runs.iter()
                .map(|(n, r)| r.as_ref().map(|r| (*n, r)).map_err(|e| e.clone()))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|rs| recheck(&rs, &smt)),
        ),
        ("regression suite", regression(&smt)),
    ];
    let mut failed = false;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed = true;
                println!("criterion {}: FAIL {name}: {msg}", i + 1);
            }
        }
    }
    if failed {
        std::process::exit(1);
    }
}
