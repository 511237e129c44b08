//! Removal of unsatisfiable and unreachable tuples and of unused argument
//! positions.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Judgement, ProofNode};
use crate::constraints::{is_satisfiable, Answer};
use crate::graphs::{DepGraph, DepTuple, Problem};
use crate::smt::Smt;
use crate::term::{FunSym, Term};

type Needed = BTreeMap<Arc<str>, BTreeSet<usize>>;

/// Argument positions of sharped symbols that influence some guard or
/// non-variable pattern, closed under data flow through the tuples.
fn needed_positions(p: &Problem) -> Needed {
    let mut needed: Needed = BTreeMap::new();
    let add = |n: &mut Needed, f: &Arc<str>, i: usize| n.entry(f.clone()).or_default().insert(i);
    for d in &p.dts {
        let f = d.root();
        let guard_vars = d.guard.vars();
        for (i, a) in d.lhs.args().iter().enumerate() {
            match a {
                Term::Var(v) if !guard_vars.contains(v) => {}
                _ => {
                    add(&mut needed, &f, i);
                }
            }
        }
        // repeated lhs variables compare their arguments
        let mut seen = BTreeSet::new();
        for (i, a) in d.lhs.args().iter().enumerate() {
            if let Term::Var(v) = a {
                if !seen.insert(v.clone()) {
                    add(&mut needed, &f, i);
                    if let Some(k) = d.lhs.args().iter().position(|b| b == a) {
                        add(&mut needed, &f, k);
                    }
                }
            }
        }
        for c in d.components() {
            if let Some(g) = c.root_fun() {
                for (i, a) in c.args().iter().enumerate() {
                    if !a.is_theory() {
                        add(&mut needed, &g.name, i);
                    }
                }
            }
        }
    }
    loop {
        let mut changed = false;
        for d in &p.dts {
            let f = d.root();
            // variables read by needed component arguments or the guard
            let mut used = d.guard.vars();
            for c in d.components() {
                let Some(g) = c.root_fun() else { continue };
                for (i, a) in c.args().iter().enumerate() {
                    if needed.get(&g.name).is_some_and(|s| s.contains(&i)) {
                        a.collect_vars(&mut used);
                    }
                }
            }
            for (i, a) in d.lhs.args().iter().enumerate() {
                if let Term::Var(v) = a {
                    if used.contains(v) && !needed.get(&f).is_some_and(|s| s.contains(&i)) {
                        add(&mut needed, &f, i);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return needed;
        }
    }
}

fn filter_term(t: &Term, needed: &Needed, arities: &BTreeMap<Arc<str>, usize>) -> Term {
    match t {
        Term::Fun(f, args) if f.is_tuple() => Term::tuple(args.iter().map(|a| filter_term(a, needed, arities)).collect()),
        Term::Fun(f, args) if arities.contains_key(&f.name) => {
            let keep = needed.get(&f.name).cloned().unwrap_or_default();
            let kept: Vec<Term> = args.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, a)| a.clone()).collect();
            let sym = FunSym {
                name: f.name.clone(),
                arg_sorts: f.arg_sorts.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, s)| s.clone()).collect(),
                res_sort: f.res_sort.clone(),
                kind: f.kind,
            };
            Term::Fun(Arc::new(sym), kept)
        }
        t => t.clone(),
    }
}

/// Drop unused argument positions of sharped symbols. Returns the number
/// of dropped positions.
fn filter_arguments(p: &mut Problem) -> usize {
    let needed = needed_positions(p);
    let mut arities: BTreeMap<Arc<str>, usize> = BTreeMap::new();
    for t in std::iter::once(&p.start).chain(p.dts.iter().flat_map(|d| [&d.lhs, &d.rhs])) {
        let mut visit = |s: &Term| {
            if let Term::Fun(f, a) = s {
                if f.is_sharp() {
                    arities.insert(f.name.clone(), a.len());
                }
            }
        };
        t.visit(&mut visit);
    }
    let dropped: usize = arities.iter().map(|(f, n)| n - needed.get(f).map_or(0, |s| s.len())).sum();
    if dropped == 0 {
        return 0;
    }
    p.start = filter_term(&p.start, &needed, &arities);
    for d in &mut p.dts {
        d.lhs = filter_term(&d.lhs, &needed, &arities);
        d.rhs = filter_term(&d.rhs, &needed, &arities);
    }
    dropped
}

fn restrict_dg(dg: &DepGraph, keep: &BTreeSet<usize>) -> DepGraph {
    DepGraph {
        nodes: dg.nodes.intersection(keep).copied().collect(),
        edges: dg.edges.iter().filter(|((a, b), _)| keep.contains(a) && keep.contains(b)).map(|(k, v)| (*k, v.clone())).collect(),
    }
}

/// Remove unsatisfiable and unreachable tuples and unused arguments.
pub fn proc_simp(smt: &Smt, j: &mut Judgement) -> bool {
    proc_simp_with(smt, j, true)
}

/// [`proc_simp`], optionally keeping all argument positions.
pub fn proc_simp_with(smt: &Smt, j: &mut Judgement, filter: bool) -> bool {
    let mut node = ProofNode::new("Simp", "");
    let mut notes = Vec::new();
    let unsat: BTreeSet<usize> = j.problem.dts.iter().filter(|d| is_satisfiable(smt, &d.guard) == Answer::No).map(|d| d.id).collect();
    if !unsat.is_empty() {
        notes.push(format!("unsatisfiable {}", j.labels(&unsat)));
    }
    let alive: BTreeSet<usize> = j.problem.ids().difference(&unsat).copied().collect();
    let dg = restrict_dg(&j.dg, &alive);
    let initial: BTreeSet<usize> = j.problem.dts.iter().filter(|d| alive.contains(&d.id) && j.problem.is_initial(d)).map(|d| d.id).collect();
    let reach = dg.reachable_from(&initial);
    let unreachable: BTreeSet<usize> = alive.difference(&reach).copied().collect();
    if !unreachable.is_empty() {
        notes.push(format!("unreachable {}", j.labels(&unreachable)));
    }
    let removed: BTreeSet<usize> = unsat.union(&unreachable).copied().collect();
    for id in &removed {
        node.produced.push(format!("T{} = 0", j.label(*id)));
    }
    let mut p = j.problem.clone();
    p.dts.retain(|d: &DepTuple| reach.contains(&d.id));
    let dropped = if filter { filter_arguments(&mut p) } else { 0 };
    if dropped > 0 {
        notes.push(format!("dropped {dropped} unused argument positions"));
    }
    if notes.is_empty() {
        return false;
    }
    let dg = restrict_dg(&dg, &reach);
    if dropped > 0 {
        let ids = p.ids();
        j.s.retain(|(id, y), _| ids.contains(id) && p.dt(*id).is_some_and(|d| d.entry_vars().iter().any(|(_, v)| &v.name == y)));
    }
    j.set_problem(p, dg);
    node.summary = notes.join("; ");
    j.proof.push(node);
    true
}
