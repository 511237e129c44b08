//! Runtime bounds: Initial, predecessor sums, TimeBounds and Interpretation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{improves, Certificate, Ctx, Judgement, ProofNode};
use crate::bounds::Bound;
use crate::graphs::size_bound_of_term;
use crate::synthesis::{interpret_term, interpret_with_sizes, synthesize, MeasureInterpretation, Obligation, Synthesis};
use crate::term::Var;

/// `T(ρ) = 1` for initial DTs without predecessors, `ω` elsewhere.
pub fn proc_initial(j: &mut Judgement) {
    let mut node = ProofNode::new("Initial", "");
    let initial: Vec<usize> = j.problem.dts.iter().filter(|d| j.problem.is_initial(d)).map(|d| d.id).collect();
    for id in &initial {
        if j.dg.predecessors(*id).is_empty() {
            if let Some(e) = j.refine_t(*id, Bound::one()) {
                node.produced.push(e);
            }
        }
    }
    node.summary = if initial.is_empty() {
        "no initial dependency tuple".to_string()
    } else {
        let ids: BTreeSet<usize> = initial.into_iter().collect();
        format!("initial {}", j.labels(&ids))
    };
    j.proof.push(node);
}

/// DTs outside nontrivial SCCs are applied at most once per component
/// leading to them: `T(ρ) = [ρ initial] + Σ_{γ→ρ} T(γ)·mult(γ, ρ)`.
pub fn proc_predecessors(j: &mut Judgement) -> bool {
    let mut node = ProofNode::new("Leaves", "");
    for scc in j.dg.sccs() {
        if j.dg.is_nontrivial(&scc) {
            continue;
        }
        let id = scc[0];
        let Some(d) = j.problem.dt(id) else { continue };
        let mut items = Vec::new();
        if j.problem.is_initial(d) {
            items.push(Bound::one());
        }
        for g in j.dg.predecessors(id) {
            items.push(Bound::times(j.t(g), Bound::int(j.dg.multiplicity(g, id) as i64)));
        }
        if let Some(e) = j.refine_t(id, Bound::sum(items)) {
            node.produced.push(e);
        }
    }
    record(j, node)
}

fn record(j: &mut Judgement, mut node: ProofNode) -> bool {
    if node.produced.is_empty() {
        return false;
    }
    if node.summary.is_empty() {
        let ids: Vec<String> = node.produced.iter().filter_map(|e| e.split(" = ").next().map(str::to_string)).collect();
        node.summary = ids.join(", ");
    }
    j.proof.push(node);
    true
}

fn certificate(s: &Synthesis, obligations: &[Obligation]) -> Certificate {
    Certificate {
        interp: s.interp.clone(),
        method: s.method.to_string(),
        orientations: obligations.iter().map(|o| (o.clone(), s.strict.contains(&o.id))).collect(),
    }
}

/// `[t^M]` with the size bounds `theta` substituted; `ω` if a variable has
/// no finite size bound.
fn measure_bound(m: &MeasureInterpretation, t: &crate::term::Term, theta: &BTreeMap<Arc<str>, Bound>) -> Bound {
    let Ok(b) = interpret_term(m, t) else { return Bound::Omega };
    if b.vars().iter().any(|v| theta.get(v).is_none_or(|s| s.is_omega())) {
        return Bound::Omega;
    }
    b.substitute(theta)
}

/// TimeBounds for `D′`: with `M` weakly orienting `D′` and strictly `D′_>`,
/// `T(ρ) = Σ_{(γ,δ)∈pre(D′)} T(γ)·mult(γ,δ)·[lhs(δ)^M](S⃗_δ)` for
/// `ρ ∈ D′_>`, measuring each entry at the entering components instead of
/// `lhs(δ)` when that is smaller.
pub fn proc_timebounds(ctx: &Ctx, j: &mut Judgement, dprime: &BTreeSet<usize>) -> bool {
    if dprime.is_empty() || ctx.expired() {
        return false;
    }
    let pre = j.dg.pre_set(dprime);
    if pre.iter().any(|(g, _)| j.t(*g).is_omega()) {
        return false;
    }
    let obligations: Vec<Obligation> = j.problem.dts.iter().filter(|d| dprime.contains(&d.id)).map(Obligation::from_dt).collect();
    let context: Vec<Obligation> = j.problem.dts.iter().map(Obligation::from_dt).collect();
    let Some(syn) = synthesize(ctx.smt, &obligations, &context, dprime, ctx.degree) else { return false };
    let mut items = Vec::new();
    let mut consumed = Vec::new();
    for (g, d) in &pre {
        let Some(delta) = j.problem.dt(*d) else { continue };
        let sizes = j.sizes_of(delta);
        let at_lhs = Bound::times(Bound::int(j.dg.multiplicity(*g, *d) as i64), measure_bound(&syn.interp, &delta.lhs, &sizes));
        let at_comps = entering_measure(ctx, j, &syn.interp, *g, *d);
        let m = if improves(&at_lhs, &at_comps) { at_comps } else { at_lhs };
        if m.is_omega() {
            return false;
        }
        consumed.push(format!("T{} = {}", j.label(*g), j.t(*g)));
        items.push(Bound::times(j.t(*g), m));
    }
    if j.problem.dts.iter().any(|d| dprime.contains(&d.id) && j.problem.is_initial(d)) {
        let theta = start_sizes(j);
        items.push(measure_bound(&syn.interp, &j.problem.start, &theta));
    }
    let bound = Bound::sum(items);
    if bound.is_omega() {
        return false;
    }
    let mut node = ProofNode::new("TimeBounds", format!("D' = {}, oriented strictly {}", j.labels(dprime), j.labels(&syn.strict)));
    node.consumed = consumed;
    node.certificate = Some(certificate(&syn, &obligations));
    for id in &syn.strict {
        if let Some(e) = j.refine_t(*id, bound.clone()) {
            node.produced.push(e);
        }
    }
    if node.produced.is_empty() {
        return false;
    }
    let produced = node.produced.join("; ");
    node.summary = format!("{}: {produced}", node.summary);
    j.proof.push(node);
    true
}

/// `Σ [c^M]` over the components `c` of `γ` leading to `δ`, with argument
/// sizes bounded through `γ`'s guard and size bounds.
fn entering_measure(ctx: &Ctx, j: &Judgement, m: &MeasureInterpretation, g: usize, d: usize) -> Bound {
    let Some(gamma) = j.problem.dt(g) else { return Bound::Omega };
    let entry: Vec<Var> = gamma.entry_vars().into_iter().map(|(_, v)| v).collect();
    let theta = j.sizes_of(gamma);
    let comps = gamma.components();
    let mut items = Vec::new();
    for i in j.dg.edges.get(&(g, d)).into_iter().flatten() {
        let Some(c) = comps.get(*i) else { return Bound::Omega };
        let sizes: Vec<Bound> = c
            .args()
            .iter()
            .map(|a| {
                let b = size_bound_of_term(ctx.smt, &gamma.guard, a, &entry, true);
                if b.vars().iter().any(|v| theta.get(v).is_none_or(|s| s.is_omega())) {
                    Bound::Omega
                } else {
                    b.substitute(&theta)
                }
            })
            .collect();
        match interpret_with_sizes(m, c, &sizes) {
            Ok(b) => items.push(b),
            Err(_) => return Bound::Omega,
        }
    }
    Bound::sum(items)
}

/// Sizes of the start variables: `|x| ↦ |x|`.
fn start_sizes(j: &Judgement) -> BTreeMap<Arc<str>, Bound> {
    j.problem.start.vars().into_iter().map(|v| (v.name.clone(), Bound::var(&v.name))).collect()
}

/// TimeBounds for the unbounded part of every nontrivial SCC, sources
/// first.
pub fn proc_timebounds_all(ctx: &Ctx, j: &mut Judgement) -> bool {
    let mut changed = false;
    for scc in j.dg.sccs() {
        if !j.dg.is_nontrivial(&scc) {
            continue;
        }
        let open: BTreeSet<usize> = scc.iter().copied().filter(|i| j.t(*i).is_omega()).collect();
        changed |= proc_timebounds(ctx, j, &open);
    }
    changed
}

/// Interpretation: with `M` weakly orienting `D` and strictly `D_>`,
/// `T(ρ) = [(t₀♯)^M]` for `ρ ∈ D_>`.
pub fn proc_interpretation(ctx: &Ctx, j: &mut Judgement) -> bool {
    let open = j.unbounded();
    if open.is_empty() || ctx.expired() {
        return false;
    }
    let obligations: Vec<Obligation> = j.problem.dts.iter().map(Obligation::from_dt).collect();
    let Some(syn) = synthesize(ctx.smt, &obligations, &obligations, &open, ctx.degree) else { return false };
    let theta = start_sizes(j);
    let bound = measure_bound(&syn.interp, &j.problem.start, &theta);
    if bound.is_omega() {
        return false;
    }
    let mut node = ProofNode::new("Interpretation", format!("oriented strictly {}, [t0^M] = {bound}", j.labels(&syn.strict)));
    node.certificate = Some(certificate(&syn, &obligations));
    for id in &syn.strict {
        if let Some(e) = j.refine_t(*id, bound.clone()) {
            node.produced.push(e);
        }
    }
    if node.produced.is_empty() {
        return false;
    }
    j.proof.push(node);
    true
}
