//! Measure interpretations: synthesis by Farkas' lemma with a
//! counterexample-guided fallback, exact compatibility checks and the
//! bound `[t^M]` of a term.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::Bound;
use crate::constraints::{
    check_sat, eval_ground, linear_abstraction, linearize, model_substitution, smt_int, smt_name, Answer, Encoder, LinAtom,
    LinExpr, SolverResult,
};
use crate::graphs::DepTuple;
use crate::smt::{Query, Smt, SmtResult};
use crate::system::Rule;
use crate::term::{Op, Sort, Substitution, Term, Value, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("symbol `{0}` has no interpretation")]
    Uninterpreted(String),
}

/// `p_f(v₁, …, vₙ) = c₀ + Σ cᵢ·vᵢ + Σ cᵢⱼ·vᵢ·vⱼ` over argument values
/// (integers, list lengths). The measure of `f(v⃗)` is `max(0, p_f(v⃗))`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Template {
    pub c0: i64,
    pub lin: BTreeMap<usize, i64>,
    pub quad: BTreeMap<(usize, usize), i64>,
}

impl Template {
    fn eval(&self, vals: &[Option<i64>]) -> Option<i64> {
        let mut s = self.c0 as i128;
        for (i, c) in &self.lin {
            s += *c as i128 * vals.get(*i).copied().flatten()? as i128;
        }
        for ((i, j), c) in &self.quad {
            s += *c as i128 * vals.get(*i).copied().flatten()? as i128 * vals.get(*j).copied().flatten()? as i128;
        }
        i64::try_from(s).ok()
    }

    fn render(&self, arity: usize) -> String {
        let x = |i: usize| format!("x{}", i + 1);
        let mut parts: Vec<(i64, String)> = Vec::new();
        for ((i, j), c) in &self.quad {
            parts.push((*c, if i == j { format!("{}^2", x(*i)) } else { format!("{}*{}", x(*i), x(*j)) }));
        }
        for (i, c) in &self.lin {
            parts.push((*c, x(*i)));
        }
        let _ = arity;
        let mut s = String::new();
        for (c, m) in parts.into_iter().filter(|(c, _)| *c != 0) {
            let (neg, a) = (c < 0, c.abs());
            let term = if a == 1 { m } else { format!("{a}*{m}") };
            if s.is_empty() {
                s = if neg { format!("-{term}") } else { term };
            } else {
                s.push_str(if neg { " - " } else { " + " });
                s.push_str(&term);
            }
        }
        if s.is_empty() {
            return self.c0.to_string();
        }
        if self.c0 != 0 {
            s.push_str(if self.c0 < 0 { " - " } else { " + " });
            s.push_str(&self.c0.abs().to_string());
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct MeasureInterpretation {
    pub map: BTreeMap<Arc<str>, Template>,
    pub arity: BTreeMap<Arc<str>, usize>,
}

impl MeasureInterpretation {
    pub fn get(&self, f: &str) -> Option<&Template> {
        self.map.get(f)
    }

    pub fn insert(&mut self, f: &str, arity: usize, t: Template) {
        self.map.insert(Arc::from(f), t);
        self.arity.insert(Arc::from(f), arity);
    }

    pub fn degree(&self) -> u32 {
        if self.map.values().any(|t| t.quad.values().any(|c| *c != 0)) {
            2
        } else {
            1
        }
    }
}

impl fmt::Display for MeasureInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, t) in &self.map {
            let n = self.arity.get(name).copied().unwrap_or(0);
            let args: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{name}({}) = {}", args.join(","), t.render(n))?;
        }
        Ok(())
    }
}

/// An orientation obligation `ℓ → ⟨r₁, …, rₖ⟩ [φ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub id: usize,
    pub lhs: Term,
    pub comps: Vec<Term>,
    pub guard: Term,
}

impl Obligation {
    pub fn from_dt(d: &DepTuple) -> Obligation {
        Obligation {
            id: d.id,
            lhs: d.lhs.clone(),
            comps: d.components(),
            guard: d.guard.clone(),
        }
    }

    pub fn from_rule(r: &Rule) -> Obligation {
        Obligation {
            id: r.id,
            lhs: r.lhs.clone(),
            comps: r.rhs.tuple_components(),
            guard: r.guard.clone(),
        }
    }

    fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.lhs).chain(self.comps.iter())
    }

    fn vars(&self) -> BTreeSet<Var> {
        let mut s = self.lhs.vars();
        for c in &self.comps {
            c.collect_vars(&mut s);
        }
        self.guard.collect_vars(&mut s);
        s
    }
}

/// A synthesized interpretation and the obligations it orients strictly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Synthesis {
    pub interp: MeasureInterpretation,
    pub strict: BTreeSet<usize>,
    pub method: &'static str,
}

// ---------------------------------------------------------------------------
// Value view of arguments

fn is_measured(t: &Term) -> bool {
    matches!(t.sort(), Sort::Int | Sort::List) && t.is_theory()
}

/// Symbols of `obligations` with the argument positions that may carry a
/// nonzero coefficient: integer or list arguments that are linear theory
/// terms at every occurrence in `obligations` and `context`.
fn allowed_positions(obligations: &[Obligation], context: &[Obligation]) -> BTreeMap<Arc<str>, (usize, BTreeSet<usize>)> {
    let mut out: BTreeMap<Arc<str>, (usize, BTreeSet<usize>)> = BTreeMap::new();
    let mut banned: BTreeSet<(Arc<str>, usize)> = BTreeSet::new();
    let own: BTreeSet<Arc<str>> = obligations.iter().flat_map(|o| o.terms().filter_map(|t| t.root_fun().map(|f| f.name.clone()))).collect();
    for o in obligations.iter().chain(context) {
        for t in o.terms() {
            if let Term::Fun(f, args) = t {
                if f.is_tuple() {
                    continue;
                }
                if !own.contains(&f.name) {
                    continue;
                }
                let e = out.entry(f.name.clone()).or_insert_with(|| (args.len(), BTreeSet::new()));
                for (i, a) in args.iter().enumerate() {
                    if is_measured(a) && linearize(a).is_some() {
                        e.1.insert(i);
                    } else {
                        banned.insert((f.name.clone(), i));
                    }
                }
            }
        }
    }
    for (f, i) in banned {
        if let Some(e) = out.get_mut(&f) {
            e.1.remove(&i);
        }
    }
    out
}

fn coef_name(f: &str, i: Option<usize>) -> String {
    match i {
        Some(i) => smt_name(&format!("c!{f}!{}", i + 1)),
        None => smt_name(&format!("c!{f}!0")),
    }
}

fn quad_name(f: &str, i: usize, j: usize) -> String {
    smt_name(&format!("q!{f}!{}!{}", i + 1, j + 1))
}

fn strict_name(id: usize) -> String {
    smt_name(&format!("s!{id}"))
}

/// Unknown template `p_f` applied to linear arguments, as a linear form
/// whose coefficients are SMT expressions over the unknowns.
struct SymLin {
    konst: Vec<String>,
    coeffs: BTreeMap<String, Vec<String>>,
}

impl SymLin {
    fn new() -> SymLin {
        SymLin {
            konst: Vec::new(),
            coeffs: BTreeMap::new(),
        }
    }

    fn add_scaled(&mut self, unknown: &str, e: &LinExpr, sign: i64) {
        if e.konst != 0 {
            self.konst.push(format!("(* {} {unknown})", smt_int((sign * e.konst) as i128)));
        }
        for (w, k) in &e.coeffs {
            self.coeffs.entry(w.clone()).or_default().push(format!("(* {} {unknown})", smt_int((sign * k) as i128)));
        }
    }

    fn add_const(&mut self, s: String) {
        self.konst.push(s);
    }
}

fn sum_expr(items: &[String]) -> String {
    match items.len() {
        0 => "0".into(),
        1 => items[0].clone(),
        _ => format!("(+ {})", items.join(" ")),
    }
}

struct Unknowns {
    pos: BTreeMap<Arc<str>, (usize, BTreeSet<usize>)>,
    quad: bool,
    /// Bounds on `|cᵢ|` and `|c₀|`.
    range: (i64, i64),
}

impl Unknowns {
    fn add_term(&self, acc: &mut SymLin, t: &Term, sign: i64) -> bool {
        let Term::Fun(f, args) = t else { return false };
        let Some((_, allowed)) = self.pos.get(&f.name) else { return false };
        let c0 = coef_name(&f.name, None);
        acc.add_const(if sign < 0 { format!("(- {c0})") } else { c0 });
        for i in allowed {
            let Some(e) = linearize(&args[*i]) else { return false };
            acc.add_scaled(&coef_name(&f.name, Some(*i)), &e, sign);
        }
        true
    }

    fn declarations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (f, (_, allowed)) in &self.pos {
            let (cmax, kmax) = self.range;
            out.push((coef_name(f, None), format!("(and (>= {0} (- {kmax})) (<= {0} {kmax}))", coef_name(f, None))));
            for i in allowed {
                let n = coef_name(f, Some(*i));
                out.push((n.clone(), format!("(and (>= {n} (- {cmax})) (<= {n} {cmax}))")));
            }
            if self.quad {
                for i in allowed {
                    for j in allowed.iter().filter(|j| *j >= i) {
                        let n = quad_name(f, *i, *j);
                        out.push((n.clone(), format!("(and (>= {n} (- 4)) (<= {n} 4))")));
                    }
                }
            }
        }
        out
    }

    fn read(&self, model: &crate::smt::Model) -> MeasureInterpretation {
        let get = |n: &str| model.get(n.trim_matches('|')).and_then(|v| v.as_int()).unwrap_or(0) as i64;
        let mut m = MeasureInterpretation::default();
        for (f, (arity, allowed)) in &self.pos {
            let mut t = Template {
                c0: get(&coef_name(f, None)),
                ..Template::default()
            };
            for i in allowed {
                let c = get(&coef_name(f, Some(*i)));
                if c != 0 {
                    t.lin.insert(*i, c);
                }
                if self.quad {
                    for j in allowed.iter().filter(|j| *j >= i) {
                        let c = get(&quad_name(f, *i, *j));
                        if c != 0 {
                            t.quad.insert((*i, *j), c);
                        }
                    }
                }
            }
            m.insert(f, *arity, t);
        }
        m
    }

    fn abs_sum(&self) -> String {
        let mut items = Vec::new();
        for (f, (_, allowed)) in &self.pos {
            items.push(format!("(abs {})", coef_name(f, None)));
            for i in allowed {
                items.push(format!("(abs {})", coef_name(f, Some(*i))));
            }
            if self.quad {
                for i in allowed {
                    for j in allowed.iter().filter(|j| *j >= i) {
                        items.push(format!("(abs {})", quad_name(f, *i, *j)));
                    }
                }
            }
        }
        sum_expr(&items)
    }
}

/// Subsets of component indices whose sum must be dominated.
fn component_subsets(k: usize) -> Option<Vec<Vec<usize>>> {
    if k > 4 {
        return None;
    }
    Some((0..(1usize << k)).map(|mask| (0..k).filter(|i| mask & (1 << i) != 0).collect()).collect())
}

/// Farkas encoding of `φ ⊨ e ≥ 0` for the linear form `e` with symbolic
/// coefficients.
fn farkas(e: &SymLin, atoms: &[LinAtom], tag: &str, decls: &mut Vec<String>, asserts: &mut Vec<String>) {
    let mut lambdas = Vec::new();
    for (a, atom) in atoms.iter().enumerate() {
        let l = smt_name(&format!("l!{tag}!{a}"));
        decls.push(format!("(declare-const {l} Real)"));
        if matches!(atom, LinAtom::Ge(_)) {
            asserts.push(format!("(>= {l} 0.0)"));
        }
        lambdas.push(l);
    }
    let mut vars: BTreeSet<&String> = e.coeffs.keys().collect();
    for atom in atoms {
        vars.extend(atom.expr().coeffs.keys());
    }
    for w in vars {
        let lhs = sum_expr(&e.coeffs.get(w).cloned().unwrap_or_default());
        let rhs: Vec<String> = atoms
            .iter()
            .zip(&lambdas)
            .filter_map(|(a, l)| a.expr().coeffs.get(w).map(|k| format!("(* {} {l})", smt_real(*k))))
            .collect();
        asserts.push(format!("(= (to_real {lhs}) {})", real_sum(&rhs)));
    }
    let rhs: Vec<String> = atoms.iter().zip(&lambdas).filter(|(a, _)| a.expr().konst != 0).map(|(a, l)| format!("(* {} {l})", smt_real(a.expr().konst))).collect();
    asserts.push(format!("(>= (to_real {}) {})", sum_expr(&e.konst), real_sum(&rhs)));
}

fn smt_real(k: i64) -> String {
    if k < 0 {
        format!("(- {}.0)", -k)
    } else {
        format!("{k}.0")
    }
}

fn real_sum(items: &[String]) -> String {
    match items.len() {
        0 => "0.0".into(),
        1 => items[0].clone(),
        _ => format!("(+ {})", items.join(" ")),
    }
}

struct Encoding {
    unknowns: Unknowns,
    decls: Vec<String>,
    asserts: Vec<String>,
    strict_vars: Vec<String>,
}

fn farkas_encoding(obligations: &[Obligation], context: &[Obligation], strict_cands: &BTreeSet<usize>) -> Option<Encoding> {
    let unknowns = Unknowns {
        pos: allowed_positions(obligations, context),
        quad: false,
        range: (8, 16),
    };
    let mut decls = Vec::new();
    let mut asserts = Vec::new();
    for (n, range) in unknowns.declarations() {
        decls.push(format!("(declare-const {n} Int)"));
        asserts.push(range);
    }
    let mut strict_vars = Vec::new();
    for o in obligations {
        let s = strict_name(o.id);
        decls.push(format!("(declare-const {s} Int)"));
        if strict_cands.contains(&o.id) {
            asserts.push(format!("(and (>= {s} 0) (<= {s} 1))"));
            strict_vars.push(s.clone());
        } else {
            asserts.push(format!("(= {s} 0)"));
        }
        let atoms = linear_abstraction(&o.guard);
        let subsets: Vec<Vec<usize>> = match component_subsets(o.comps.len()) {
            Some(s) => s,
            None => vec![(0..o.comps.len()).collect()],
        };
        for (si, subset) in subsets.iter().enumerate() {
            let mut e = SymLin::new();
            if !unknowns.add_term(&mut e, &o.lhs, 1) {
                return None;
            }
            for j in subset {
                if !unknowns.add_term(&mut e, &o.comps[*j], -1) && o.comps[*j].root_fun().is_some_and(|f| !f.is_tuple()) {
                    return None;
                }
            }
            e.add_const(format!("(- {s})"));
            farkas(&e, &atoms, &format!("{}!{si}", o.id), &mut decls, &mut asserts);
        }
        if o.comps.len() > 4 {
            for (j, c) in o.comps.iter().enumerate() {
                let mut e = SymLin::new();
                if unknowns.add_term(&mut e, c, 1) {
                    farkas(&e, &atoms, &format!("{}!n{j}", o.id), &mut decls, &mut asserts);
                }
            }
        }
    }
    Some(Encoding {
        unknowns,
        decls,
        asserts,
        strict_vars,
    })
}

fn run_encoding(smt: &Smt, enc: &Encoding, extra: &[String]) -> Option<crate::smt::Model> {
    let mut q = Query::new("QF_LIRA");
    q.preamble.extend(enc.decls.iter().cloned());
    for a in enc.asserts.iter().chain(extra) {
        q.assert(a.clone());
    }
    q.want_model = true;
    match smt.check(&q) {
        Ok(SmtResult::Sat(m)) => Some(m),
        _ => None,
    }
}

fn count_strict(model: &crate::smt::Model, vars: &[String]) -> usize {
    vars.iter().filter(|v| model.get(v.trim_matches('|')).and_then(|x| x.as_int()) == Some(1)).count()
}

fn strict_ids(model: &crate::smt::Model, obligations: &[Obligation]) -> BTreeSet<usize> {
    obligations
        .iter()
        .filter(|o| model.get(strict_name(o.id).trim_matches('|')).and_then(|x| x.as_int()) == Some(1))
        .map(|o| o.id)
        .collect()
}

/// Maximize the number of strict obligations, then shrink coefficients.
fn optimize(smt: &Smt, enc: &Encoding, obligations: &[Obligation]) -> Option<(MeasureInterpretation, BTreeSet<usize>)> {
    if enc.strict_vars.is_empty() {
        return None;
    }
    let total = sum_expr(&enc.strict_vars);
    let mut best = run_encoding(smt, enc, &[format!("(>= {total} 1)")])?;
    let mut k = count_strict(&best, &enc.strict_vars);
    while k < enc.strict_vars.len() {
        match run_encoding(smt, enc, &[format!("(>= {total} {})", k + 1)]) {
            Some(m) => {
                k = count_strict(&m, &enc.strict_vars);
                best = m;
            }
            None => break,
        }
    }
    let fix = format!("(>= {total} {k})");
    let size = enc.unknowns.abs_sum();
    let cur = |m: &crate::smt::Model| {
        let interp = enc.unknowns.read(m);
        interp
            .map
            .values()
            .map(|t| t.c0.abs() + t.lin.values().map(|c| c.abs()).sum::<i64>() + t.quad.values().map(|c| c.abs()).sum::<i64>())
            .sum::<i64>()
    };
    let (mut lo, mut hi) = (0i64, cur(&best));
    for _ in 0..8 {
        if lo >= hi {
            break;
        }
        let mid = (lo + hi) / 2;
        match run_encoding(smt, enc, &[fix.clone(), format!("(<= {size} {mid})")]) {
            Some(m) => {
                hi = cur(&m).min(mid);
                best = m;
            }
            None => lo = mid + 1,
        }
    }
    Some((enc.unknowns.read(&best), strict_ids(&best, obligations)))
}

// ---------------------------------------------------------------------------
// Counterexample-guided synthesis

/// Concrete argument values of a ground instance.
fn arg_values(t: &Term, sigma: &Substitution) -> Option<Vec<Option<i64>>> {
    let Term::Fun(_, args) = t else { return None };
    Some(
        args.iter()
            .map(|a| {
                if !is_measured(a) {
                    return None;
                }
                match eval_ground(&a.subst(sigma)).ok()?? {
                    Value::Int(i) => Some(i),
                    Value::List(l) => Some(l.len() as i64),
                    Value::Bool(_) => None,
                }
            })
            .collect(),
    )
}

/// `p_f(v⃗)` with unknown coefficients at concrete values.
fn concrete_template(u: &Unknowns, t: &Term, sigma: &Substitution) -> Option<String> {
    let Term::Fun(f, _) = t else { return None };
    let (_, allowed) = u.pos.get(&f.name)?;
    let vals = arg_values(t, sigma)?;
    let mut items = vec![coef_name(&f.name, None)];
    for i in allowed {
        let v = vals.get(*i).copied().flatten()?;
        items.push(format!("(* {} {})", smt_int(v as i128), coef_name(&f.name, Some(*i))));
        if u.quad {
            for j in allowed.iter().filter(|j| *j >= i) {
                let w = vals.get(*j).copied().flatten()?;
                items.push(format!("(* {} {})", smt_int(v as i128 * w as i128), quad_name(&f.name, *i, *j)));
            }
        }
    }
    Some(sum_expr(&items))
}

fn sample_constraint(u: &Unknowns, o: &Obligation, sigma: &Substitution) -> Option<String> {
    let l = concrete_template(u, &o.lhs, sigma)?;
    let mut rhs = vec![strict_name(o.id)];
    for c in &o.comps {
        if let Some(p) = concrete_template(u, c, sigma) {
            rhs.push(format!("(ite (>= {p} 0) {p} 0)"));
        }
    }
    Some(format!("(>= (ite (>= {l} 0) {l} 0) {})", sum_expr(&rhs)))
}

fn cegis(
    smt: &Smt,
    obligations: &[Obligation],
    context: &[Obligation],
    strict_cands: &BTreeSet<usize>,
    quad: bool,
    range: (i64, i64),
) -> Option<(MeasureInterpretation, BTreeSet<usize>)> {
    let u = Unknowns {
        pos: allowed_positions(obligations, context),
        quad,
        range,
    };
    let mut base = Query::new("QF_LIA");
    for (n, range) in u.declarations() {
        base.declare(&n, "Int");
        base.assert(range);
    }
    let mut svars = Vec::new();
    for o in obligations {
        let s = strict_name(o.id);
        base.declare(&s, "Int");
        if strict_cands.contains(&o.id) {
            base.assert(format!("(and (>= {s} 0) (<= {s} 1))"));
            svars.push(s);
        } else {
            base.assert(format!("(= {s} 0)"));
        }
    }
    if svars.is_empty() {
        return None;
    }
    let mut samples: Vec<String> = Vec::new();
    for o in obligations {
        if let Ok(SolverResult::Sat(sigma)) = check_sat(smt, &o.guard) {
            samples.extend(sample_constraint(&u, o, &sigma));
        }
    }
    let mut best: Option<(MeasureInterpretation, BTreeSet<usize>)> = None;
    let mut need = 1;
    for _round in 0..40 {
        let mut q = base.clone();
        for s in &samples {
            q.assert(s.clone());
        }
        q.assert(format!("(>= {} {need})", sum_expr(&svars)));
        q.want_model = true;
        let Ok(SmtResult::Sat(model)) = smt.check(&q) else { break };
        let interp = u.read(&model);
        let strict = strict_ids(&model, obligations);
        let mut fresh = Vec::new();
        let mut unknown = false;
        for o in obligations {
            match violation(smt, &interp, o, strict.contains(&o.id)) {
                Ok(None) => {}
                Ok(Some(sigma)) => fresh.extend(sample_constraint(&u, o, &sigma)),
                Err(()) => unknown = true,
            }
        }
        if fresh.is_empty() {
            if unknown {
                break;
            }
            need = strict.len() + 1;
            let done = strict.len() == svars.len();
            best = Some((interp, strict));
            if done {
                break;
            }
            continue;
        }
        let before = samples.len();
        for f in fresh {
            if !samples.contains(&f) {
                samples.push(f);
            }
        }
        if samples.len() == before {
            break;
        }
    }
    best
}

/// Find an interpretation orienting all `obligations` weakly and a maximal
/// nonempty subset of `strict_cands` strictly. Coefficient positions are
/// restricted by the argument shapes occurring in `context`.
pub fn synthesize(
    smt: &Smt,
    obligations: &[Obligation],
    context: &[Obligation],
    strict_cands: &BTreeSet<usize>,
    max_degree: u32,
) -> Option<Synthesis> {
    if let Some(enc) = farkas_encoding(obligations, context, strict_cands) {
        if let Some((interp, strict)) = optimize(smt, &enc, obligations) {
            if !strict.is_empty() {
                return Some(Synthesis {
                    interp,
                    strict,
                    method: "farkas",
                });
            }
        }
    }
    for range in [(2, 4), (8, 16)] {
        if let Some((interp, strict)) = cegis(smt, obligations, context, strict_cands, false, range) {
            return Some(Synthesis {
                interp,
                strict,
                method: "cegis",
            });
        }
    }
    if max_degree >= 2 {
        if let Some((interp, strict)) = cegis(smt, obligations, context, strict_cands, true, (2, 4)) {
            return Some(Synthesis {
                interp,
                strict,
                method: "cegis-quadratic",
            });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Exact checks

/// SMT expression for `max(0, p_f(args))`, or `None` if `t` has no
/// interpretation. Arguments at uninterpreted positions are ignored.
fn measure_expr(enc: &mut Encoder, m: &MeasureInterpretation, t: &Term) -> Result<Option<String>, ()> {
    let Term::Fun(f, args) = t else { return Ok(None) };
    if f.is_tuple() {
        let mut items = Vec::new();
        for a in args {
            if let Some(e) = measure_expr(enc, m, a)? {
                items.push(e);
            }
        }
        return Ok(Some(sum_expr(&items)));
    }
    let Some(tpl) = m.get(&f.name) else { return Ok(None) };
    let val = |i: usize, enc: &mut Encoder| -> Result<String, ()> {
        let a = args.get(i).ok_or(())?;
        if !is_measured(a) {
            return Err(());
        }
        match a.sort() {
            Sort::List => enc.size(a).map_err(|_| ()),
            _ => enc.term(a).map_err(|_| ()),
        }
    };
    let mut items = vec![smt_int(tpl.c0 as i128)];
    for (i, c) in &tpl.lin {
        items.push(format!("(* {} {})", smt_int(*c as i128), val(*i, enc)?));
    }
    for ((i, j), c) in &tpl.quad {
        let (a, b) = (val(*i, enc)?, val(*j, enc)?);
        enc.mark_nonlinear();
        items.push(format!("(* {} {a} {b})", smt_int(*c as i128)));
    }
    let p = sum_expr(&items);
    Ok(Some(format!("(ite (>= {p} 0) {p} 0)")))
}

/// `Ok(None)` if compatible, `Ok(Some(σ))` with a counterexample, `Err`
/// when undecided.
fn violation(smt: &Smt, m: &MeasureInterpretation, o: &Obligation, strict: bool) -> Result<Option<Substitution>, ()> {
    let mut enc = Encoder::new();
    let guard = enc.term(&o.guard).map_err(|_| ())?;
    let l = measure_expr(&mut enc, m, &o.lhs)?.unwrap_or_else(|| "0".into());
    let mut rhs = vec![if strict { "1".to_string() } else { "0".to_string() }];
    for c in &o.comps {
        if let Some(e) = measure_expr(&mut enc, m, c)? {
            rhs.push(e);
        }
    }
    let vars = o.vars();
    for v in &vars {
        if sort_is_encodable(&v.sort) {
            enc.var(v).map_err(|_| ())?;
        }
    }
    let q = enc.query(vec![guard, format!("(not (>= {l} {}))", sum_expr(&rhs))], true);
    match smt.check(&q) {
        Ok(SmtResult::Unsat) => Ok(None),
        Ok(SmtResult::Sat(model)) => Ok(Some(model_substitution(&model, &vars))),
        _ => Err(()),
    }
}

fn sort_is_encodable(s: &Sort) -> bool {
    matches!(s, Sort::Int | Sort::Bool | Sort::List)
}

/// `ℓ ≿_M r` (or `ℓ ≻_M r` with `strict`) under the obligation's guard.
pub fn check_compatibility(smt: &Smt, m: &MeasureInterpretation, o: &Obligation, strict: bool) -> Answer {
    match violation(smt, m, o, strict) {
        Ok(None) => Answer::Yes,
        Ok(Some(_)) => Answer::No,
        Err(()) => Answer::Unknown,
    }
}

/// Size bound of a theory term in terms of its variables.
pub fn term_size_bound(t: &Term) -> Bound {
    match t {
        Term::Var(v) if matches!(v.sort, Sort::Int | Sort::List) => Bound::var(&v.name),
        Term::Var(v) if v.sort == Sort::Bool => Bound::one(),
        Term::Val(v) => Bound::int(v.size() as i64),
        Term::Op(op, args) => {
            if let Some(lin) = linearize(t) {
                let mut items = vec![Bound::int(lin.konst.abs())];
                for (w, k) in &lin.coeffs {
                    let name = w.strip_prefix("len(").and_then(|s| s.strip_suffix(')')).unwrap_or(w);
                    items.push(Bound::times(Bound::int(k.abs()), Bound::var(name)));
                }
                return Bound::sum(items);
            }
            match (op, args.as_slice()) {
                (Op::Mul, [a, b]) => Bound::times(term_size_bound(a), term_size_bound(b)),
                (Op::Add | Op::Sub, [a, b]) => Bound::plus(term_size_bound(a), term_size_bound(b)),
                (Op::Neg, [a]) => term_size_bound(a),
                (Op::Div, [a, _]) => term_size_bound(a),
                (Op::Mod, [_, b]) => term_size_bound(b),
                (Op::Cons, [_, b]) => Bound::plus(term_size_bound(b), Bound::one()),
                _ if t.sort() == Sort::Bool => Bound::one(),
                _ => Bound::Omega,
            }
        }
        _ => Bound::Omega,
    }
}

/// `[t^M]`: a bound on the measure of every instance of `t` in terms of
/// the sizes of its variables.
pub fn interpret_term(m: &MeasureInterpretation, t: &Term) -> Result<Bound, SynthError> {
    match t {
        Term::Fun(f, args) if f.is_tuple() => args.iter().map(|a| interpret_term(m, a)).sum(),
        Term::Fun(_, args) => {
            let sizes: Vec<Bound> = args.iter().map(|a| if is_measured(a) { term_size_bound(a) } else { Bound::Omega }).collect();
            interpret_with_sizes(m, t, &sizes)
        }
        t => Ok(term_size_bound(t)),
    }
}

/// `[f(t₁,…,tₖ)^M]` for a non-tuple term given bounds on the sizes of its
/// arguments.
pub fn interpret_with_sizes(m: &MeasureInterpretation, t: &Term, sizes: &[Bound]) -> Result<Bound, SynthError> {
    let Term::Fun(f, _) = t else { return Ok(term_size_bound(t)) };
    let tpl = m.get(&f.name).ok_or_else(|| SynthError::Uninterpreted(f.name.to_string()))?;
    let size = |i: usize| sizes.get(i).cloned().unwrap_or(Bound::Omega);
    let mut items = vec![Bound::int(tpl.c0.abs())];
    for (i, c) in &tpl.lin {
        items.push(Bound::times(Bound::int(c.abs()), size(*i)));
    }
    for ((i, j), c) in &tpl.quad {
        items.push(Bound::product([Bound::int(c.abs()), size(*i), size(*j)]));
    }
    Ok(Bound::sum(items))
}

/// Measure of a ground term, for testing.
pub fn measure_of(m: &MeasureInterpretation, t: &Term) -> Option<i64> {
    match t {
        Term::Fun(f, args) if f.is_tuple() => args.iter().map(|a| measure_of(m, a)).sum(),
        Term::Fun(f, _) => {
            let Some(tpl) = m.get(&f.name) else { return Some(0) };
            let vals = arg_values(t, &Substitution::new())?;
            Some(tpl.eval(&vals)?.max(0))
        }
        _ => Some(0),
    }
}
