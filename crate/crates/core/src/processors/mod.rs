//! Complexity judgements `⊢ P : (T, S)` and the processors transforming
//! them.

mod chain;
mod simp;
mod size;
mod strategy;
mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::bounds::{asymptotic_class, leq_bound, Bound};
use crate::graphs::{build_dg, build_evg, DepGraph, DepTuple, Evg, Problem};
use crate::smt::Smt;
use crate::synthesis::{MeasureInterpretation, Obligation};

pub use chain::{proc_chain, Chained};
pub use simp::{proc_simp, proc_simp_with};
pub use size::{proc_sizebounds, proc_sizebounds_scc, proc_sizebounds_triv};
pub use strategy::{proc_recurrence, proc_split, solve, Split};
pub use time::{proc_initial, proc_interpretation, proc_predecessors, proc_timebounds, proc_timebounds_all};

/// Settings shared by all processors of one analysis.
pub struct Ctx<'a> {
    pub smt: &'a Smt,
    /// Maximal degree of synthesized interpretations.
    pub degree: u32,
    pub chain_cap: usize,
    pub deadline: Option<Instant>,
    /// Nesting limit for split and recurrence subproblems.
    pub max_depth: usize,
    /// Worker threads for independent subproblems.
    pub jobs: usize,
}

impl<'a> Ctx<'a> {
    pub fn new(smt: &'a Smt) -> Ctx<'a> {
        Ctx {
            smt,
            degree: 2,
            chain_cap: 4,
            deadline: None,
            max_depth: 3,
            jobs: 1,
        }
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// A synthesized interpretation with the orientations it was used for.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub interp: MeasureInterpretation,
    pub method: String,
    /// `(obligation, strict)` pairs the interpretation was claimed to orient.
    #[serde(skip)]
    pub orientations: Vec<(Obligation, bool)>,
}

/// One processor application.
#[derive(Clone, Debug, Serialize)]
pub struct ProofNode {
    pub processor: String,
    pub summary: String,
    pub consumed: Vec<String>,
    pub produced: Vec<String>,
    pub certificate: Option<Certificate>,
    pub children: Vec<ProofNode>,
}

impl ProofNode {
    pub fn new(processor: &str, summary: impl Into<String>) -> ProofNode {
        ProofNode {
            processor: processor.to_string(),
            summary: summary.into(),
            consumed: Vec::new(),
            produced: Vec::new(),
            certificate: None,
            children: Vec::new(),
        }
    }

    /// All nodes of the subtree in pre-order.
    pub fn walk<'a>(&'a self, out: &mut Vec<&'a ProofNode>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }

    fn render(&self, out: &mut String, indent: usize, full: bool) {
        let pad = "  ".repeat(indent);
        let _ = writeln!(out, "{pad}{}: {}", self.processor, self.summary);
        if full {
            if let Some(c) = &self.certificate {
                let _ = writeln!(out, "{pad}  interpretation ({}): {}", c.method, c.interp);
                let strict: Vec<String> = c.orientations.iter().filter(|o| o.1).map(|o| o.0.id.to_string()).collect();
                let _ = writeln!(out, "{pad}  strict: {{{}}}", strict.join(", "));
            }
            for e in &self.consumed {
                let _ = writeln!(out, "{pad}  uses {e}");
            }
            for e in &self.produced {
                let _ = writeln!(out, "{pad}  {e}");
            }
        }
        for c in &self.children {
            c.render(out, indent + 1, full);
        }
    }
}

/// Render proof nodes as indented text, with entries and certificates when
/// `full`.
pub fn render_proof(nodes: &[ProofNode], full: bool) -> String {
    let mut s = String::new();
    for n in nodes {
        n.render(&mut s, 0, full);
    }
    s
}

/// `⊢ P : (T, S)` with its proof. Missing entries are `ω`.
#[derive(Clone, Debug)]
pub struct Judgement {
    pub problem: Problem,
    pub dg: DepGraph,
    evg: Option<Evg>,
    pub t: BTreeMap<usize, Bound>,
    pub s: BTreeMap<(usize, Arc<str>), Bound>,
    pub proof: Vec<ProofNode>,
}

/// Whether `new` should replace `old`: strictly smaller under `leq_bound`,
/// or incomparable and of a smaller asymptotic class.
pub fn improves(old: &Bound, new: &Bound) -> bool {
    if new.is_omega() || new == old {
        return false;
    }
    if old.is_omega() {
        return true;
    }
    let le = leq_bound(new, old);
    let ge = leq_bound(old, new);
    match (le, ge) {
        (true, false) => true,
        (false, false) => asymptotic_class(new) < asymptotic_class(old),
        _ => false,
    }
}

impl Judgement {
    /// The judgement with all entries `ω` and no proof.
    pub fn new(problem: Problem, smt: &Smt) -> Judgement {
        let dg = build_dg(&problem, smt);
        Judgement {
            problem,
            dg,
            evg: None,
            t: BTreeMap::new(),
            s: BTreeMap::new(),
            proof: Vec::new(),
        }
    }

    pub fn t(&self, id: usize) -> Bound {
        self.t.get(&id).cloned().unwrap_or(Bound::Omega)
    }

    pub fn s(&self, id: usize, y: &str) -> Bound {
        self.s.get(&(id, Arc::from(y))).cloned().unwrap_or(Bound::Omega)
    }

    /// `S⃗_δ`: the size bounds of the entry variables of `d`.
    pub fn sizes_of(&self, d: &DepTuple) -> BTreeMap<Arc<str>, Bound> {
        d.entry_vars().into_iter().map(|(_, v)| (v.name.clone(), self.s(d.id, &v.name))).collect()
    }

    /// Replace the problem, dropping entries of tuples that disappeared.
    pub fn set_problem(&mut self, p: Problem, dg: DepGraph) {
        let ids = p.ids();
        self.t.retain(|k, _| ids.contains(k));
        self.s.retain(|k, _| ids.contains(&k.0));
        self.problem = p;
        self.dg = dg;
        self.evg = None;
    }

    pub fn evg(&mut self, smt: &Smt) -> &Evg {
        if self.evg.is_none() {
            self.evg = Some(build_evg(&self.problem, &self.dg, smt));
        }
        self.evg.get_or_insert_with(Evg::default)
    }

    /// Min-combine `T(id)` with `b`; the changed entry is returned.
    pub fn refine_t(&mut self, id: usize, b: Bound) -> Option<String> {
        if improves(&self.t(id), &b) {
            let label = self.problem.dt(id).map_or_else(|| id.to_string(), |d| d.label.clone());
            let e = format!("T({label}) = {b}");
            self.t.insert(id, b);
            return Some(e);
        }
        None
    }

    pub fn refine_s(&mut self, id: usize, y: &Arc<str>, b: Bound) -> Option<String> {
        if improves(&self.s(id, y), &b) {
            let label = self.problem.dt(id).map_or_else(|| id.to_string(), |d| d.label.clone());
            let e = format!("S({label}, {y}) = {b}");
            self.s.insert((id, y.clone()), b);
            return Some(e);
        }
        None
    }

    pub fn unbounded(&self) -> BTreeSet<usize> {
        self.problem.ids().into_iter().filter(|i| self.t(*i).is_omega()).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.unbounded().is_empty()
    }

    /// Label of a DT for proof output.
    pub fn label(&self, id: usize) -> String {
        self.problem.dt(id).map_or_else(|| id.to_string(), |d| format!("({})", d.label))
    }

    pub fn labels(&self, ids: &BTreeSet<usize>) -> String {
        let v: Vec<String> = ids.iter().map(|i| self.label(*i)).collect();
        format!("{{{}}}", v.join(", "))
    }
}

/// `Σ_{ρ∈D} T(ρ)`.
pub fn total_bound(j: &Judgement) -> Bound {
    Bound::sum(j.problem.ids().into_iter().map(|i| j.t(i)))
}

/// Every certificate in the proof, in pre-order.
pub fn certificates(nodes: &[ProofNode]) -> Vec<&Certificate> {
    let mut all = Vec::new();
    for n in nodes {
        n.walk(&mut all);
    }
    all.into_iter().filter_map(|n| n.certificate.as_ref()).collect()
}

#[cfg(test)]
mod tests;
