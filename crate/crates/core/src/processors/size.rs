//! Size bounds from the entry-variable graph.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Judgement, ProofNode};
use crate::bounds::Bound;
use crate::graphs::{classify_edge, EdgeClass, EvgNode};
use crate::smt::Smt;
use crate::synthesis::term_size_bound;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Trivial,
    Scc,
    Both,
}

/// Size of the start argument flowing into `(ρ, y)` when `ρ` is initial.
fn start_contribution(j: &Judgement, id: usize, y: &str) -> Option<Bound> {
    let d = j.problem.dt(id)?;
    if !j.problem.is_initial(d) {
        return None;
    }
    let pos = d.entry_vars().into_iter().find(|(_, v)| &*v.name == y)?.0;
    Some(j.problem.start.args().get(pos).map_or(Bound::Omega, term_size_bound))
}

/// `α(S⃗_δ)` for the label of `δ → ρ` at `y`.
fn incoming(j: &Judgement, labels: &BTreeMap<(usize, usize, Arc<str>), Bound>, delta: usize, rho: usize, y: &Arc<str>) -> Bound {
    let Some(label) = labels.get(&(delta, rho, y.clone())) else { return Bound::Omega };
    let mut theta = BTreeMap::new();
    for v in label.vars() {
        let s = j.s(delta, &v);
        if s.is_omega() {
            return Bound::Omega;
        }
        theta.insert(v, s);
    }
    label.substitute(&theta)
}

fn sweep(smt: &Smt, j: &mut Judgement, mode: Mode) -> bool {
    let evg = j.evg(smt).clone();
    let mut triv = ProofNode::new("SizeBounds-trivial", "");
    let mut scc_node = ProofNode::new("SizeBounds-SCC", "");
    for scc in evg.sccs() {
        let members: BTreeSet<EvgNode> = scc.iter().cloned().collect();
        if !evg.is_nontrivial(&scc) {
            if mode == Mode::Scc {
                continue;
            }
            let (rho, y) = scc[0].clone();
            let mut items: Vec<Bound> = start_contribution(j, rho, &y).into_iter().collect();
            for delta in j.dg.predecessors(rho) {
                items.push(incoming(j, &evg.labels, delta, rho, &y));
            }
            if let Some(e) = j.refine_s(rho, &y, Bound::maximum(items)) {
                triv.produced.push(e);
            }
            continue;
        }
        if mode == Mode::Trivial {
            continue;
        }
        if let Some(b) = scc_bound(j, &evg.labels, &members) {
            for (rho, y) in &scc {
                if let Some(e) = j.refine_s(*rho, y, b.clone()) {
                    scc_node.produced.push(e);
                }
            }
        }
    }
    let mut changed = false;
    for mut node in [triv, scc_node] {
        if node.produced.is_empty() {
            continue;
        }
        node.summary = format!("{} entries", node.produced.len());
        j.proof.push(node);
        changed = true;
    }
    changed
}

/// Bound for all entry variables of a nontrivial EVG SCC `C`: the maximum
/// of the incoming values if every internal edge keeps the size, plus
/// `Σ T(δ)·a` when internal edges add at most `a`.
fn scc_bound(j: &Judgement, labels: &BTreeMap<(usize, usize, Arc<str>), Bound>, members: &BTreeSet<EvgNode>) -> Option<Bound> {
    let mut external = Vec::new();
    let mut plus_sources: BTreeSet<usize> = BTreeSet::new();
    let mut max_add = 0i64;
    for (rho, y) in members {
        if let Some(b) = start_contribution(j, *rho, y) {
            external.push(b);
        }
        for delta in j.dg.predecessors(*rho) {
            let label = labels.get(&(delta, *rho, y.clone()))?;
            let internal = label.vars().iter().any(|z| members.contains(&(delta, z.clone())));
            if !internal {
                external.push(incoming(j, labels, delta, *rho, y));
                continue;
            }
            match classify_edge(label) {
                EdgeClass::Eq => {}
                EdgeClass::Plus(a) => {
                    plus_sources.insert(delta);
                    max_add = max_add.max(a);
                }
                _ => return None,
            }
        }
    }
    let mut base = Bound::maximum(external);
    if !plus_sources.is_empty() {
        base = Bound::maximum([base, Bound::int(max_add)]);
    }
    let growth: Vec<Bound> = plus_sources.iter().map(|d| Bound::times(j.t(*d), Bound::int(max_add))).collect();
    let b = Bound::sum(std::iter::once(base).chain(growth));
    (!b.is_omega()).then_some(b)
}

/// Size bounds for entry variables outside nontrivial EVG SCCs.
pub fn proc_sizebounds_triv(smt: &Smt, j: &mut Judgement) -> bool {
    sweep(smt, j, Mode::Trivial)
}

/// Size bounds for nontrivial EVG SCCs whose internal edges are in `E_=`
/// or `E_+`.
pub fn proc_sizebounds_scc(smt: &Smt, j: &mut Judgement) -> bool {
    sweep(smt, j, Mode::Scc)
}

/// Both size-bound rules in one sweep over the EVG, sources first.
pub fn proc_sizebounds(smt: &Smt, j: &mut Judgement) -> bool {
    sweep(smt, j, Mode::Both)
}
