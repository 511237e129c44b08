//! Chaining a tuple with the unique tuple rewriting one of its components.

use std::collections::{BTreeMap, BTreeSet};

use super::{Ctx, Judgement, ProofNode};
use crate::constraints::{entails, Answer};
use crate::graphs::{DepGraph, DepTuple, Problem};
use crate::term::{Term, Var};

/// A chained problem with the tuples of the original problem each new
/// tuple accounts for.
#[derive(Clone, Debug)]
pub struct Chained {
    pub problem: Problem,
    /// Original tuple ids per current tuple, with multiplicity.
    pub parts: BTreeMap<usize, Vec<usize>>,
    pub proof: Vec<ProofNode>,
}

/// `chain(ρ, δ)` at component `i`: `δ`'s rhs replaces the component and
/// `δ`'s guard, instantiated, joins `ρ`'s guard. `None` unless the
/// component is an instance of `lhs(δ)` whose instantiated guard is
/// entailed.
fn chain_one(ctx: &Ctx, rho: &DepTuple, i: usize, delta: &DepTuple, id: usize) -> Option<DepTuple> {
    let comps = rho.components();
    let c = comps.get(i)?;
    let rho_vars = {
        let mut s = rho.lhs.vars();
        rho.rhs.collect_vars(&mut s);
        rho.guard.collect_vars(&mut s);
        s
    };
    let lhs_vars = delta.lhs.vars();
    let fresh = |v: &Var| {
        if lhs_vars.contains(v) {
            return v.clone();
        }
        let mut name = format!("{}~", v.name);
        while rho_vars.iter().any(|w| *w.name == *name) {
            name.push('~');
        }
        Var::new(&name, v.sort.clone())
    };
    let lhs = delta.lhs.rename(&fresh);
    let sigma = lhs.match_term(c)?;
    let guard = delta.guard.rename(&fresh).subst(&sigma);
    if !guard.is_theory() || entails(ctx.smt, &rho.guard, &guard).ok()? != Answer::Yes {
        return None;
    }
    let mut new_comps: Vec<Term> = comps[..i].to_vec();
    new_comps.extend(delta.components().iter().map(|t| t.rename(&fresh).subst(&sigma)));
    new_comps.extend(comps[i + 1..].iter().cloned());
    let mut origins = rho.origins.clone();
    origins.extend(delta.origins.iter().copied());
    Some(DepTuple {
        id,
        label: format!("{}.{}", rho.label, delta.label),
        origins,
        lhs: rho.lhs.clone(),
        rhs: Term::tuple(new_comps),
        guard: Term::and(rho.guard.clone(), guard),
    })
}

/// A chaining candidate `(ρ, i, δ)`: `ρ` in a nontrivial SCC whose
/// component `i` can only be rewritten by `δ ≠ ρ` of the same SCC, and `δ`
/// has no self-loop.
fn candidate(p: &Problem, dg: &DepGraph) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for scc in dg.sccs() {
        if scc.len() < 2 {
            continue;
        }
        let members: BTreeSet<usize> = scc.iter().copied().collect();
        for rho in &scc {
            let Some(r) = p.dt(*rho) else { continue };
            for (i, c) in r.components().iter().enumerate() {
                let Some(f) = c.root_fun() else { continue };
                let rewriting: Vec<&DepTuple> = p.dts.iter().filter(|d| d.root() == f.name).collect();
                if let [d] = rewriting.as_slice() {
                    if d.id != *rho && members.contains(&d.id) && !dg.has_edge(d.id, d.id) {
                        out.push((*rho, i, d.id));
                    }
                }
            }
        }
    }
    out
}

/// Chain cycles through intermediate tuples, at most `ctx.chain_cap`
/// rounds. `None` if nothing was chained.
pub fn proc_chain(ctx: &Ctx, j: &Judgement) -> Option<Chained> {
    let mut p = j.problem.clone();
    let mut dg = j.dg.clone();
    let mut parts: BTreeMap<usize, Vec<usize>> = p.ids().into_iter().map(|i| (i, vec![i])).collect();
    let mut proof = Vec::new();
    for _ in 0..ctx.chain_cap {
        if ctx.expired() {
            break;
        }
        let mut done = false;
        for (rho, i, delta) in candidate(&p, &dg) {
            let (Some(r), Some(d)) = (p.dt(rho), p.dt(delta)) else { continue };
            let id = p.next_id();
            let Some(new) = chain_one(ctx, r, i, d, id) else { continue };
            let comp = r.components()[i].clone();
            let mut node = ProofNode::new("Chain", format!("({}) with ({}) at {comp}: ({}) {} -> {}", r.label, d.label, new.label, new.lhs, new.rhs));
            if !new.guard.is_true() {
                node.summary.push_str(&format!(" [{}]", new.guard));
            }
            let mut ps = parts.remove(&rho).unwrap_or_default();
            ps.extend(parts.get(&delta).cloned().unwrap_or_default());
            node.produced.push(format!("({}) replaces ({}) and accounts for one step of ({})", new.label, r.label, d.label));
            parts.insert(id, ps);
            p.dts.retain(|x| x.id != rho);
            p.dts.push(new);
            dg = crate::graphs::build_dg(&p, ctx.smt);
            proof.push(node);
            done = true;
            break;
        }
        if !done {
            break;
        }
    }
    if proof.is_empty() {
        return None;
    }
    Some(Chained { problem: p, parts, proof })
}
