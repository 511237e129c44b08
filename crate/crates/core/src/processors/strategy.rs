//! Split, Recurrence and the overall strategy combining all processors.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{
    proc_chain, proc_initial, proc_interpretation, proc_predecessors, proc_simp, proc_sizebounds, proc_timebounds_all, Ctx,
    Judgement, ProofNode,
};
use crate::bounds::Bound;
use crate::graphs::{size_bound_of_term, Problem};
use crate::recsolve::{extract_recurrence, match_loop_shape, solve_parts, CyclicLoop, Recurrence};
use crate::synthesis::term_size_bound;
use crate::term::{Term, Var};

const BASIC_ROUNDS: usize = 8;

/// `T(ρ)` of a subproblem judgement, `0` for tuples the subproblem removed.
fn t_or_zero(j: &Judgement, id: usize) -> Bound {
    if j.problem.dt(id).is_some() {
        j.t(id)
    } else {
        Bound::zero()
    }
}

/// `b` with `theta` substituted, `ω` if a variable of `b` has no finite
/// image.
fn instantiate(b: &Bound, theta: &BTreeMap<Arc<str>, Bound>) -> Bound {
    if b.vars().iter().any(|v| theta.get(v).is_none_or(|s| s.is_omega())) {
        return Bound::Omega;
    }
    b.substitute(theta)
}

/// Size bounds, predecessor sums and TimeBounds to a fixpoint, with the
/// interpretation processor as fallback.
fn basic(ctx: &Ctx, j: &mut Judgement) {
    for _ in 0..BASIC_ROUNDS {
        let mut changed = proc_sizebounds(ctx.smt, j);
        changed |= proc_predecessors(j);
        if !j.is_complete() {
            changed |= proc_timebounds_all(ctx, j);
            changed |= proc_predecessors(j);
        }
        if j.is_complete() || ctx.expired() {
            break;
        }
        if !changed && !proc_interpretation(ctx, j) {
            break;
        }
    }
    proc_sizebounds(ctx.smt, j);
}

/// Solve a complexity problem: simplification, the size/time loop, then
/// chaining, splitting and recurrences on the cyclic parts.
pub fn solve(ctx: &Ctx, p: Problem, depth: usize) -> Judgement {
    let mut j = Judgement::new(p, ctx.smt);
    proc_simp(ctx.smt, &mut j);
    proc_initial(&mut j);
    basic(ctx, &mut j);
    let cyclic = j.dg.sccs().iter().any(|c| j.dg.is_nontrivial(c));
    if cyclic && depth < ctx.max_depth && !ctx.expired() {
        cyclic_parts(ctx, &mut j, depth);
        if !j.is_complete() && !ctx.expired() {
            basic(ctx, &mut j);
        }
    }
    j
}

/// A splitting `D = D₀ ⊎ D₁` at the self-looping tuple `delta`.
#[derive(Clone, Debug)]
pub struct Split {
    pub delta: usize,
    pub d1: BTreeSet<usize>,
}

/// Self-looping tuples outside larger cycles, with the forward closure
/// below them, smallest closure first.
fn split_candidates(j: &Judgement) -> Vec<Split> {
    let mut out: Vec<Split> = j
        .dg
        .sccs()
        .into_iter()
        .filter(|c| c.len() == 1 && j.dg.has_edge(c[0], c[0]))
        .map(|c| Split {
            delta: c[0],
            d1: j.dg.reachable_from(&[c[0]].into_iter().collect()),
        })
        .collect();
    out.sort_by_key(|s| (s.d1.len(), s.delta));
    out
}

/// Chain, then split at self-loops and solve the loops by recurrences;
/// the resulting bounds are translated back and min-combined into `j`.
fn cyclic_parts(ctx: &Ctx, j: &mut Judgement, depth: usize) {
    let (mut jq, parts, chain_proof) = match proc_chain(ctx, j) {
        Some(c) => {
            let mut jq = Judgement::new(c.problem, ctx.smt);
            for (id, ps) in &c.parts {
                let Some(first) = ps.first() else { continue };
                jq.t.insert(*id, j.t(*first));
                if let Some(d) = jq.problem.dt(*id) {
                    for (_, v) in d.entry_vars() {
                        jq.s.insert((*id, v.name.clone()), j.s(*first, &v.name));
                    }
                }
            }
            proc_simp(ctx.smt, &mut jq);
            basic(ctx, &mut jq);
            (jq, c.parts, c.proof)
        }
        None => {
            let parts = j.problem.ids().into_iter().map(|i| (i, vec![i])).collect();
            let mut jq = j.clone();
            jq.proof.clear();
            (jq, parts, Vec::new())
        }
    };
    jq.proof = chain_proof.into_iter().chain(std::mem::take(&mut jq.proof)).collect();
    let mut applied = false;
    for sp in split_candidates(&jq) {
        if ctx.expired() {
            break;
        }
        let all = jq.problem.ids();
        let initial_inside = jq.problem.dts.iter().any(|d| sp.d1.contains(&d.id) && jq.problem.is_initial(d));
        if !initial_inside {
            applied |= proc_split(ctx, &mut jq, &sp, depth);
        } else if sp.d1 == all {
            if let Some(lp) = match_loop_shape(ctx.smt, &jq.problem, &jq.dg) {
                applied |= proc_recurrence(ctx, &mut jq, &lp, depth);
            }
        }
    }
    if !applied && parts.values().all(|p| p.len() == 1) {
        return;
    }
    let mut node = ProofNode::new("Cyclic", "chaining, splitting and recurrences");
    for o in j.problem.ids() {
        let mut items = Vec::new();
        for d in jq.problem.ids() {
            let k = parts.get(&d).map_or(0, |ps| ps.iter().filter(|x| **x == o).count());
            if k > 0 {
                items.push(Bound::times(Bound::int(k as i64), jq.t(d)));
            }
        }
        if let Some(e) = j.refine_t(o, Bound::sum(items)) {
            node.produced.push(e);
        }
    }
    node.children = jq.proof;
    j.proof.push(node);
}

/// Targets of one entry term and, per source, the components leading to them.
type EntryGroup = (BTreeSet<usize>, BTreeMap<usize, BTreeSet<usize>>);

/// Splitting: solve `D₁` from the entry terms of `pre(D₁)` and compose
/// `T(ρ) = Σ T(γ)·mult·Tᵢ(ρ)(S⃗)` for `ρ ∈ D₁`.
pub fn proc_split(ctx: &Ctx, j: &mut Judgement, sp: &Split, depth: usize) -> bool {
    let pre = j.dg.pre_set(&sp.d1);
    if pre.is_empty() {
        return false;
    }
    // entry terms, each with its targets and per source the components
    // leading into them
    let mut groups: BTreeMap<Term, EntryGroup> = BTreeMap::new();
    for (g, t) in &pre {
        let Some(d) = j.problem.dt(*t) else { continue };
        let e = groups.entry(d.lhs.clone()).or_default();
        e.0.insert(*t);
        let comps = j.dg.edges.get(&(*g, *t)).cloned().unwrap_or_default();
        e.1.entry(*g).or_default().extend(comps);
    }
    let mut node = ProofNode::new("Split", format!("at {}, D1 = {}", j.label(sp.delta), j.labels(&sp.d1)));
    let mut totals: BTreeMap<usize, Vec<Bound>> = BTreeMap::new();
    let subs = groups.keys().map(|lhs| (j.problem.restrict(lhs.clone(), Term::tt(), &sp.d1), true)).collect();
    let solved = solve_many(ctx, subs, depth + 1);
    for ((lhs, (targets, sources)), js) in groups.iter().zip(solved) {
        let mut theta: BTreeMap<Arc<str>, Bound> = BTreeMap::new();
        for v in lhs.vars() {
            let b = Bound::maximum(targets.iter().map(|t| j.s(*t, &v.name)));
            theta.insert(v.name.clone(), b);
        }
        let mut child = ProofNode::new("Entry", format!("{lhs}"));
        child.children = js.proof.clone();
        for (g, comps) in sources {
            child.consumed.push(format!("T{} = {}", j.label(*g), j.t(*g)));
            let factor = Bound::times(j.t(*g), Bound::int(comps.len() as i64));
            for rho in &sp.d1 {
                let inner = instantiate(&t_or_zero(&js, *rho), &theta);
                totals.entry(*rho).or_default().push(Bound::times(factor.clone(), inner));
            }
        }
        node.children.push(child);
    }
    for (rho, items) in totals {
        if let Some(e) = j.refine_t(rho, Bound::sum(items)) {
            node.produced.push(e);
        }
    }
    let changed = !node.produced.is_empty();
    j.proof.push(node);
    changed
}

/// Solve independent subproblems, on up to `ctx.jobs` threads that share
/// the solver cache. Entry subproblems go through [`solve_entry`].
fn solve_many(ctx: &Ctx, subs: Vec<(Problem, bool)>, depth: usize) -> Vec<Judgement> {
    let run = |c: &Ctx, p: Problem, entry: bool| if entry { solve_entry(c, p, depth) } else { solve(c, p, depth) };
    if ctx.jobs <= 1 || subs.len() <= 1 {
        return subs.into_iter().map(|(p, e)| run(ctx, p, e)).collect();
    }
    let (degree, chain_cap, deadline, max_depth) = (ctx.degree, ctx.chain_cap, ctx.deadline, ctx.max_depth);
    let mut out = Vec::with_capacity(subs.len());
    let mut rest = subs.into_iter().peekable();
    while rest.peek().is_some() {
        let batch: Vec<(Problem, bool)> = rest.by_ref().take(ctx.jobs).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = batch
                .into_iter()
                .map(|(p, e)| {
                    let smt = ctx.smt.fork();
                    scope.spawn(move || {
                        let c = Ctx {
                            smt: &smt,
                            degree,
                            chain_cap,
                            deadline,
                            max_depth,
                            jobs: 1,
                        };
                        run(&c, p, e)
                    })
                })
                .collect();
            out.extend(handles.into_iter().map(|h| h.join().expect("subproblem worker panicked")));
        });
    }
    out
}

/// Solve a subproblem started at an entry term: by a recurrence if it is
/// cyclic, by the full strategy otherwise or for what remains open.
fn solve_entry(ctx: &Ctx, p: Problem, depth: usize) -> Judgement {
    let mut js = Judgement::new(p, ctx.smt);
    proc_simp(ctx.smt, &mut js);
    if let Some(lp) = match_loop_shape(ctx.smt, &js.problem, &js.dg) {
        if proc_recurrence(ctx, &mut js, &lp, depth) {
            if !js.is_complete() && !ctx.expired() {
                proc_initial(&mut js);
                basic(ctx, &mut js);
            }
            return js;
        }
    }
    solve(ctx, js.problem, depth)
}

fn fresh_start(c: &Term) -> Option<Term> {
    let Term::Fun(f, args) = c else { return None };
    let vars = args.iter().enumerate().map(|(i, a)| Term::Var(Var::new(&format!("z{}", i + 1), a.sort()))).collect();
    Some(Term::Fun(f.clone(), vars))
}

/// Bound a cyclic problem by the solution of its recurrence. The
/// loop tuple gets the number of unfoldings; every other tuple the
/// accumulated bounds of the exits and sibling tuples.
pub fn proc_recurrence(ctx: &Ctx, j: &mut Judgement, lp: &CyclicLoop, depth: usize) -> bool {
    let delta = &lp.delta;
    let others: BTreeSet<usize> = j.problem.ids().into_iter().filter(|i| *i != delta.id).collect();
    let entry: Vec<Var> = delta.entry_vars().into_iter().map(|(_, v)| v).collect();
    let comps = delta.components();
    let mut h: BTreeMap<usize, Vec<Bound>> = BTreeMap::new();
    let mut g: BTreeMap<usize, Vec<Bound>> = BTreeMap::new();
    let mut node = ProofNode::new("Recurrence", "");
    let mut exits = Vec::new();
    let mut subs = Vec::new();
    for i in &lp.exits {
        let c = &comps[*i];
        let Some(start) = fresh_start(c) else { continue };
        let root = c.root_fun().map(|f| f.name.clone());
        if j.problem.dts.iter().any(|d| others.contains(&d.id) && Some(d.root()) == root) {
            exits.push(c);
            subs.push((j.problem.restrict(start, Term::tt(), &others), false));
        }
    }
    let siblings = j.problem.dts.iter().any(|d| others.contains(&d.id) && d.root() == delta.root());
    if siblings {
        subs.push((j.problem.restrict(delta.lhs.clone(), Term::tt(), &others), false));
    }
    let mut solved = solve_many(ctx, subs, depth + 1).into_iter();
    for (c, js) in exits.into_iter().zip(solved.by_ref()) {
        let mut theta = BTreeMap::new();
        for (k, a) in c.args().iter().enumerate() {
            theta.insert(Arc::from(format!("z{}", k + 1)), size_bound_of_term(ctx.smt, &delta.guard, a, &entry, true));
        }
        let mut child = ProofNode::new("Exit", format!("{c} with {}", render_theta(&theta)));
        child.children = js.proof.clone();
        node.children.push(child);
        for rho in &others {
            h.entry(*rho).or_default().push(instantiate(&t_or_zero(&js, *rho), &theta));
        }
    }
    if let Some(js) = solved.next().filter(|_| siblings) {
        let mut child = ProofNode::new("Sibling", format!("{}", delta.lhs));
        child.children = js.proof.clone();
        node.children.push(child);
        for rho in &others {
            g.entry(*rho).or_default().push(t_or_zero(&js, *rho));
        }
    }
    let theta: BTreeMap<Arc<str>, Bound> = delta
        .lhs
        .args()
        .iter()
        .zip(j.problem.start.args())
        .filter_map(|(a, s)| match a {
            Term::Var(v) => Some((v.name.clone(), term_size_bound(s))),
            _ => None,
        })
        .collect();
    let Ok(unfold_rec) = extract_recurrence(lp, &Bound::zero(), &Bound::zero()) else { return false };
    let Ok((unfold, _)) = solve_parts(&unfold_rec) else { return false };
    let mut results: BTreeMap<usize, Bound> = BTreeMap::new();
    results.insert(delta.id, unfold);
    let (mut h_all, mut g_all) = (vec![Bound::one()], Vec::new());
    for rho in &others {
        let hr = Bound::sum(h.remove(rho).unwrap_or_default());
        let gr = Bound::sum(g.remove(rho).unwrap_or_default());
        h_all.push(hr.clone());
        g_all.push(gr.clone());
        if hr.is_zero() && gr.is_zero() {
            results.insert(*rho, Bound::zero());
            continue;
        }
        if let Ok(rec) = extract_recurrence(lp, &hr, &gr) {
            if let Ok((_, cost)) = solve_parts(&rec) {
                results.insert(*rho, cost);
            }
        }
    }
    let total = Recurrence {
        h: Bound::sum(h_all),
        g: Bound::sum(g_all),
        ..unfold_rec
    };
    let shapes: Vec<String> = lp.branches.iter().map(|(_, s)| s.to_string()).collect();
    node.summary = format!("{} with branches [{}]: {total}", j.label(delta.id), shapes.join(", "));
    for (rho, b) in results {
        if let Some(e) = j.refine_t(rho, instantiate(&b, &theta)) {
            node.produced.push(e);
        }
    }
    let changed = !node.produced.is_empty();
    j.proof.push(node);
    changed
}

fn render_theta(theta: &BTreeMap<Arc<str>, Bound>) -> String {
    let parts: Vec<String> = theta.iter().map(|(k, v)| format!("|{k}| <= {v}")).collect();
    parts.join(", ")
}
