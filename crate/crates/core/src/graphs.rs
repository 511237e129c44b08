//! Dependency tuples, the dependency graph, local size bounds and the
//! entry-variable graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::bounds::{leq_bound, Bound};
use crate::constraints::{is_satisfiable, linearize, valid_encoded, Answer, Encoder};
use crate::smt::Smt;
use crate::system::Lctrs;
use crate::term::{Op, Sort, Term, Var};

/// A dependency tuple `f♯(x⃗) → ⟨t₁♯, …, tₖ♯⟩ [φ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTuple {
    pub id: usize,
    pub label: String,
    /// Original rule ids this tuple accounts for, with multiplicity.
    pub origins: Vec<usize>,
    pub lhs: Term,
    pub rhs: Term,
    pub guard: Term,
}

impl DepTuple {
    pub fn components(&self) -> Vec<Term> {
        self.rhs.tuple_components()
    }

    pub fn root(&self) -> Arc<str> {
        self.lhs.root_fun().map(|f| f.name.clone()).unwrap_or_else(|| Arc::from(""))
    }

    /// `(position, variable)` for every lhs argument that is a variable of
    /// integer or list sort.
    pub fn entry_vars(&self) -> Vec<(usize, Var)> {
        self.lhs
            .args()
            .iter()
            .enumerate()
            .filter_map(|(i, a)| match a {
                Term::Var(v) if matches!(v.sort, Sort::Int | Sort::List) => Some((i, v.clone())),
                _ => None,
            })
            .collect()
    }
}

impl fmt::Display for DepTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {} -> {}", self.label, self.lhs, self.rhs)?;
        if !self.guard.is_true() {
            write!(f, " [{}]", self.guard)?;
        }
        Ok(())
    }
}

/// `DT(ℓ → r [φ]) = ℓ♯ → ⟨t₁♯, …, tₖ♯⟩ [φ]` for the subterms `tᵢ` of `r`
/// rooted in defined symbols, in pre-order.
pub fn dependency_tuples(sys: &Lctrs) -> Vec<DepTuple> {
    let defined = sys.defined_symbols();
    sys.rules
        .iter()
        .map(|r| {
            let comps: Vec<Term> = r
                .rhs
                .positions_rooted_in(&defined)
                .iter()
                .filter_map(|p| r.rhs.subterm_at(p).ok())
                .filter_map(|t| sys.signature.sharp(t).ok())
                .collect();
            DepTuple {
                id: r.id,
                label: r.id.to_string(),
                origins: vec![r.id],
                lhs: sys.signature.sharp(&r.lhs).unwrap_or_else(|_| r.lhs.clone()),
                rhs: Term::tuple(comps),
                guard: r.guard.clone(),
            }
        })
        .collect()
}

/// A complexity problem `((t₀♯, φ₀), D, R)`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub sys: Arc<Lctrs>,
    pub start: Term,
    pub start_guard: Term,
    pub dts: Vec<DepTuple>,
}

impl Problem {
    pub fn from_system(sys: Arc<Lctrs>) -> Problem {
        let start = sys.signature.sharp(&sys.init).unwrap_or_else(|_| sys.init.clone());
        Problem {
            start,
            start_guard: sys.init_guard.clone(),
            dts: dependency_tuples(&sys),
            sys,
        }
    }

    pub fn dt(&self, id: usize) -> Option<&DepTuple> {
        self.dts.iter().find(|d| d.id == id)
    }

    pub fn ids(&self) -> BTreeSet<usize> {
        self.dts.iter().map(|d| d.id).collect()
    }

    pub fn start_root(&self) -> Arc<str> {
        self.start.root_fun().map(|f| f.name.clone()).unwrap_or_else(|| Arc::from(""))
    }

    pub fn is_initial(&self, d: &DepTuple) -> bool {
        d.root() == self.start_root()
    }

    pub fn input_vars(&self) -> Vec<Var> {
        self.start.args().iter().filter_map(|a| if let Term::Var(v) = a { Some(v.clone()) } else { None }).collect()
    }

    /// The same rules with another start and a subset of the tuples.
    pub fn restrict(&self, start: Term, start_guard: Term, keep: &BTreeSet<usize>) -> Problem {
        Problem {
            sys: self.sys.clone(),
            start,
            start_guard,
            dts: self.dts.iter().filter(|d| keep.contains(&d.id)).cloned().collect(),
        }
    }

    pub fn next_id(&self) -> usize {
        let sys_max = self.sys.rules.iter().map(|r| r.id).max().unwrap_or(0);
        self.dts.iter().map(|d| d.id).max().unwrap_or(0).max(sys_max) + 1
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "start {}", self.start)?;
        if !self.start_guard.is_true() {
            write!(f, " [{}]", self.start_guard)?;
        }
        writeln!(f)?;
        for d in &self.dts {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

/// The dependency graph. Each edge keeps the indices of the rhs components
/// of its source that may lead to the target.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DepGraph {
    pub nodes: BTreeSet<usize>,
    pub edges: BTreeMap<(usize, usize), Vec<usize>>,
}

impl DepGraph {
    pub fn successors(&self, id: usize) -> Vec<usize> {
        self.edges.keys().filter(|(a, _)| *a == id).map(|(_, b)| *b).collect()
    }

    pub fn predecessors(&self, id: usize) -> Vec<usize> {
        self.edges.keys().filter(|(_, b)| *b == id).map(|(a, _)| *a).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains_key(&(a, b))
    }

    /// Number of rhs components of `a` that may lead to `b`.
    pub fn multiplicity(&self, a: usize, b: usize) -> usize {
        self.edges.get(&(a, b)).map_or(0, Vec::len)
    }

    /// Strongly connected components, sources first.
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let mut g: DiGraph<usize, ()> = DiGraph::new();
        let mut idx: BTreeMap<usize, NodeIndex> = BTreeMap::new();
        for n in &self.nodes {
            idx.insert(*n, g.add_node(*n));
        }
        for (a, b) in self.edges.keys() {
            g.add_edge(idx[a], idx[b], ());
        }
        let mut out: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|i| g[i]).collect();
                v.sort();
                v
            })
            .collect();
        out.reverse();
        out
    }

    pub fn is_nontrivial(&self, scc: &[usize]) -> bool {
        scc.len() > 1 || scc.iter().any(|n| self.has_edge(*n, *n))
    }

    /// `pre(D′)`: edges entering `ds` from outside.
    pub fn pre_set(&self, ds: &BTreeSet<usize>) -> BTreeSet<(usize, usize)> {
        self.edges.keys().filter(|(a, b)| !ds.contains(a) && ds.contains(b)).copied().collect()
    }

    pub fn reachable_from(&self, roots: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut seen = roots.clone();
        let mut todo: Vec<usize> = roots.iter().copied().collect();
        while let Some(n) = todo.pop() {
            for s in self.successors(n) {
                if seen.insert(s) {
                    todo.push(s);
                }
            }
        }
        seen
    }

    pub fn to_dot(&self, p: &Problem) -> String {
        let mut s = String::from("digraph dg {\n");
        for n in &self.nodes {
            let label = p.dt(*n).map_or_else(|| n.to_string(), |d| d.label.clone());
            let _ = writeln!(s, "  n{n} [label=\"{label}\"];");
        }
        for ((a, b), comps) in &self.edges {
            if comps.len() > 1 {
                let _ = writeln!(s, "  n{a} -> n{b} [label=\"x{}\"];", comps.len());
            } else {
                let _ = writeln!(s, "  n{a} -> n{b};");
            }
        }
        s.push_str("}\n");
        s
    }
}

fn rename_apart(t: &Term) -> Term {
    t.rename(&|v| Var::new(&format!("{}~r", v.name), v.sort.clone()))
}

/// Whether component `c` of a tuple with guard `phi` may be followed by a
/// step with `rho`.
fn may_follow(smt: &Smt, defined: &BTreeSet<Arc<str>>, phi: &Term, c: &Term, rho: &DepTuple) -> bool {
    if c.root_fun().map(|f| &f.name) != rho.lhs.root_fun().map(|f| &f.name) {
        return false;
    }
    let lhs = rename_apart(&rho.lhs);
    let mut parts = vec![phi.clone(), rename_apart(&rho.guard)];
    for (a, b) in c.args().iter().zip(lhs.args()) {
        match b {
            Term::Var(v) if v.sort.is_theory() && a.is_theory() && a.sort() == v.sort => {
                parts.push(Term::bin(Op::Eq, b.clone(), a.clone()));
            }
            Term::Var(_) => {}
            pat if pat.is_theory() && a.is_theory() => parts.push(Term::bin(Op::Eq, pat.clone(), a.clone())),
            Term::Fun(f, _) => {
                if let Some(g) = a.root_fun() {
                    if !defined.contains(&g.name) && g.name != f.name {
                        return false;
                    }
                }
            }
            _ => {}
        }
    }
    is_satisfiable(smt, &Term::and_all(parts)) != Answer::No
}

/// Edges `δ → ρ` whenever some component of `δ` may be followed by `ρ`.
pub fn build_dg(p: &Problem, smt: &Smt) -> DepGraph {
    let mut g = DepGraph {
        nodes: p.ids(),
        ..DepGraph::default()
    };
    let defined = p.sys.defined_symbols();
    for d in &p.dts {
        let comps = d.components();
        for r in &p.dts {
            let ok: Vec<usize> = comps.iter().enumerate().filter(|(_, c)| may_follow(smt, &defined, &d.guard, c, r)).map(|(i, _)| i).collect();
            if !ok.is_empty() {
                g.edges.insert((d.id, r.id), ok);
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Local size bounds

/// Syntactic bound `Σ|kᵢ|·|wᵢ| + |k₀|` when `e` is linear over `vars`.
fn syntactic_size(e: &Term, vars: &[Var]) -> Option<Bound> {
    let lin = linearize(e)?;
    let mut items = vec![Bound::int(lin.konst.abs())];
    for (w, k) in &lin.coeffs {
        let name = w.strip_prefix("len(").and_then(|s| s.strip_suffix(')')).unwrap_or(w);
        if !vars.iter().any(|v| &*v.name == name) {
            return None;
        }
        items.push(Bound::times(Bound::int(k.abs()), Bound::var(name)));
    }
    Some(Bound::sum(items))
}

struct SizeQuery<'a> {
    smt: &'a Smt,
    enc: Encoder,
    hyp: String,
    size: String,
    vars: Vec<(Var, String)>,
}

impl SizeQuery<'_> {
    /// `φ ⊨ k·|e| ≤ Σ aᵢ|zᵢ| + c`.
    fn holds(&self, k: u32, coeffs: &[(usize, u32)], c: i64) -> bool {
        let mut rhs: Vec<String> = coeffs.iter().map(|(i, a)| format!("(* {a} {})", self.vars[*i].1)).collect();
        rhs.push(c.to_string());
        let goal = format!("(<= (* {k} {}) (+ {}))", self.size, rhs.join(" "));
        valid_encoded(self.smt, &self.enc, vec![self.hyp.clone()], goal) == Answer::Yes
    }

    /// Least `c` in `0..=max` with `holds(k, coeffs, c)`.
    fn least_const(&self, k: u32, coeffs: &[(usize, u32)], max: i64) -> Option<i64> {
        if !self.holds(k, coeffs, max) {
            return None;
        }
        let (mut lo, mut hi) = (0, max);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.holds(k, coeffs, mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    fn bound(&self, k: u32, coeffs: &[(usize, u32)], c: i64) -> Bound {
        let mut items = vec![Bound::int(c)];
        for (i, a) in coeffs {
            items.push(Bound::times(Bound::int(*a as i64), Bound::var(&self.vars[*i].0.name)));
        }
        Bound::div(Bound::sum(items), k)
    }
}

const SIZE_CONST_MAX: i64 = 8;

/// Template-based bound on `|e|` under `phi` in terms of the sizes of
/// `vars`: a constant, `|z|`, `|z| + c`, a weighted sum, in this order.
/// With `tight`, a bound `|z| + c` is refined to `(|z| + c′)/k` when
/// possible.
pub fn size_bound_of_term(smt: &Smt, phi: &Term, e: &Term, vars: &[Var], tight: bool) -> Bound {
    if let Some(v) = e.as_value() {
        return Bound::int(v.size() as i64);
    }
    if !e.is_theory() || !matches!(e.sort(), Sort::Int | Sort::List) {
        return Bound::Omega;
    }
    if let Term::Var(v) = e {
        if vars.contains(v) {
            return Bound::var(&v.name);
        }
    }
    let syn = syntactic_size(e, vars);
    let mut enc = Encoder::new();
    let (Ok(hyp), Ok(size)) = (enc.term(phi), enc.size(e)) else {
        return syn.unwrap_or(Bound::Omega);
    };
    let mut vs = Vec::new();
    for v in vars {
        if let Ok(s) = enc.size(&Term::Var(v.clone())) {
            vs.push((v.clone(), s));
        }
    }
    let q = SizeQuery { smt, enc, hyp, size, vars: vs };
    if let Some(c) = q.least_const(1, &[], SIZE_CONST_MAX) {
        return Bound::int(c);
    }
    for i in 0..q.vars.len() {
        if let Some(c) = q.least_const(1, &[(i, 1)], SIZE_CONST_MAX) {
            if tight {
                for k in [4u32, 3, 2] {
                    for c2 in 0..k as i64 {
                        if q.holds(k, &[(i, 1)], c2) {
                            return q.bound(k, &[(i, 1)], c2);
                        }
                    }
                }
            }
            return q.bound(1, &[(i, 1)], c);
        }
    }
    if let Some(s) = syn {
        return s;
    }
    for a in [1u32, 2] {
        let all: Vec<(usize, u32)> = (0..q.vars.len()).map(|i| (i, a)).collect();
        if let Some(c) = q.least_const(1, &all, SIZE_CONST_MAX) {
            return q.bound(1, &all, c);
        }
    }
    Bound::Omega
}

/// `S_{δ→ρ}(y)`: bound on the value passed by `δ` to the entry variable `y`
/// of `ρ`, in terms of the entry variables of `δ`.
pub fn local_size_bound(smt: &Smt, dg: &DepGraph, delta: &DepTuple, rho: &DepTuple, y: &Var, tight: bool) -> Bound {
    let Some(pos) = rho.lhs.args().iter().position(|a| matches!(a, Term::Var(v) if v == y)) else {
        return Bound::Omega;
    };
    let vars: Vec<Var> = delta.entry_vars().into_iter().map(|(_, v)| v).collect();
    let comps = delta.components();
    let idx = dg.edges.get(&(delta.id, rho.id)).cloned().unwrap_or_default();
    Bound::maximum(
        idx.iter()
            .filter_map(|i| comps.get(*i))
            .map(|c| c.args().get(pos).map_or(Bound::Omega, |e| size_bound_of_term(smt, &delta.guard, e, &vars, tight))),
    )
}

// ---------------------------------------------------------------------------
// Entry-variable graph

/// An entry variable `(ρ, y)`.
pub type EvgNode = (usize, Arc<str>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeClass {
    /// Label is a constant or a single `|x|`.
    Eq,
    /// Label is at most `|x| + a`.
    Plus(i64),
    /// Label is at most `c + Σ a·|x|`.
    Times(i64),
    Other,
}

/// Classify a label by the smallest class whose defining inequality holds.
pub fn classify_edge(label: &Bound) -> EdgeClass {
    let vars = label.vars();
    match label {
        Bound::Const(_) | Bound::Var(_) => return EdgeClass::Eq,
        Bound::Omega => return EdgeClass::Other,
        _ => {}
    }
    if vars.len() == 1 {
        let x = vars.iter().next().cloned().unwrap_or_else(|| Arc::from(""));
        for a in 0..=16 {
            if leq_bound(label, &Bound::sum([Bound::Var(x.clone()), Bound::int(a)])) {
                return if a == 0 { EdgeClass::Eq } else { EdgeClass::Plus(a) };
            }
        }
    }
    for a in 1..=8i64 {
        for c in [0i64, 1, 2, 4, 8, 16] {
            let t = Bound::sum(vars.iter().map(|v| Bound::times(Bound::int(a), Bound::Var(v.clone()))).chain([Bound::int(c)]));
            if leq_bound(label, &t) {
                return EdgeClass::Times(c);
            }
        }
    }
    EdgeClass::Other
}

#[derive(Clone, Debug, Default)]
pub struct Evg {
    pub nodes: BTreeSet<EvgNode>,
    /// `(δ, ρ, y) ↦ S_{δ→ρ}(y)` for every DG edge and entry variable.
    pub labels: BTreeMap<(usize, usize, Arc<str>), Bound>,
    pub edges: BTreeSet<(EvgNode, EvgNode)>,
}

impl Evg {
    /// Strongly connected components, sources first.
    pub fn sccs(&self) -> Vec<Vec<EvgNode>> {
        let mut g: DiGraph<EvgNode, ()> = DiGraph::new();
        let mut idx: BTreeMap<EvgNode, NodeIndex> = BTreeMap::new();
        for n in &self.nodes {
            idx.insert(n.clone(), g.add_node(n.clone()));
        }
        for (a, b) in &self.edges {
            if let (Some(x), Some(y)) = (idx.get(a), idx.get(b)) {
                g.add_edge(*x, *y, ());
            }
        }
        let mut out: Vec<Vec<EvgNode>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<EvgNode> = c.into_iter().map(|i| g[i].clone()).collect();
                v.sort();
                v
            })
            .collect();
        out.reverse();
        out
    }

    pub fn is_nontrivial(&self, scc: &[EvgNode]) -> bool {
        scc.len() > 1 || scc.iter().any(|n| self.edges.contains(&(n.clone(), n.clone())))
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph evg {\n");
        let name = |n: &EvgNode| format!("\"({}, {})\"", n.0, n.1);
        for n in &self.nodes {
            let _ = writeln!(s, "  {};", name(n));
        }
        for (a, b) in &self.edges {
            let label = self.labels.get(&(a.0, b.0, b.1.clone())).map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(s, "  {} -> {} [label=\"{}\"];", name(a), name(b), label);
        }
        s.push_str("}\n");
        s
    }
}

/// Build the entry-variable graph. Labels of edges inside a DG SCC use the
/// first provable template; other edges use the tightest one.
pub fn build_evg(p: &Problem, dg: &DepGraph, smt: &Smt) -> Evg {
    let mut scc_of: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, c) in dg.sccs().iter().enumerate() {
        for n in c {
            scc_of.insert(*n, i);
        }
    }
    let mut evg = Evg::default();
    for d in &p.dts {
        for (_, y) in d.entry_vars() {
            evg.nodes.insert((d.id, y.name.clone()));
        }
    }
    for (a, b) in dg.edges.keys() {
        let (Some(delta), Some(rho)) = (p.dt(*a), p.dt(*b)) else { continue };
        let tight = scc_of.get(a) != scc_of.get(b);
        for (_, y) in rho.entry_vars() {
            let label = local_size_bound(smt, dg, delta, rho, &y, tight);
            for z in label.vars() {
                evg.edges.insert(((*a, z), (*b, y.name.clone())));
            }
            evg.labels.insert((*a, *b, y.name.clone()), label);
        }
    }
    evg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, Format};
    use crate::smt::SmtConfig;

    fn mergesort() -> Problem {
        let text = include_str!("../corpus/mergesort.koat");
        let pf = parse(text, Format::Its).expect("parse");
        Problem::from_system(Arc::new(pf))
    }

    #[test]
    fn mergesort_dependency_graph() {
        let p = mergesort();
        let smt = Smt::new(SmtConfig::default());
        let dg = build_dg(&p, &smt);
        let expected: BTreeSet<(usize, usize)> = [
            (1, 9),
            (9, 3),
            (3, 9),
            (9, 7),
            (7, 9),
            (9, 2),
            (9, 5),
            (2, 4),
            (2, 8),
            (4, 8),
            (8, 4),
            (4, 4),
            (8, 8),
            (6, 6),
            (5, 6),
        ]
        .into_iter()
        .collect();
        let got: BTreeSet<(usize, usize)> = dg.edges.keys().copied().collect();
        assert_eq!(got, expected);
        let nontrivial: Vec<Vec<usize>> = dg.sccs().into_iter().filter(|c| dg.is_nontrivial(c)).collect();
        assert!(nontrivial.contains(&vec![4, 8]));
        assert!(nontrivial.contains(&vec![6]));
        assert!(nontrivial.contains(&vec![3, 7, 9]));
        let pre = dg.pre_set(&[4, 8].into_iter().collect());
        assert_eq!(pre, [(2, 4), (2, 8)].into_iter().collect());
    }

    #[test]
    fn mergesort_size_bounds() {
        let p = mergesort();
        let smt = Smt::new(SmtConfig::default());
        let dg = build_dg(&p, &smt);
        let (d9, d2, d6) = (p.dt(9).unwrap(), p.dt(2).unwrap(), p.dt(6).unwrap());
        let y = Var::int("y");
        let x = Var::int("x");
        let tight = local_size_bound(&smt, &dg, d9, d2, &y, true);
        assert_eq!(tight, Bound::div(parse_b("|x| + 1"), 2));
        assert_eq!(local_size_bound(&smt, &dg, d9, d2, &y, false), Bound::var("x"));
        assert_eq!(local_size_bound(&smt, &dg, d6, d6, &x, false), Bound::var("x"));
        let evg = build_evg(&p, &dg, &smt);
        assert_eq!(classify_edge(&evg.labels[&(6, 6, Arc::from("x"))]), EdgeClass::Eq);
        assert_eq!(classify_edge(&parse_b("|x| + 1")), EdgeClass::Plus(1));
        assert_eq!(classify_edge(&parse_b("2*|x| + |y|")), EdgeClass::Times(0));
        assert_eq!(classify_edge(&parse_b("|x|*|y|")), EdgeClass::Other);
    }

    fn parse_b(s: &str) -> Bound {
        crate::bounds::parse_bound(s).expect("bound")
    }

    #[test]
    fn unsatisfiable_successor_guard_cuts_edge() {
        let text = "(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS f))\n(VAR x)\n(RULES\n  f(x) -> g(x) :|: x >= 5\n  g(x) -> h(x) :|: x <= 2\n  h(x) -> h(x - 1) :|: x >= 1\n)\n";
        let pf = parse(text, Format::Its).expect("parse");
        let p = Problem::from_system(Arc::new(pf));
        let smt = Smt::new(SmtConfig::default());
        let dg = build_dg(&p, &smt);
        assert!(!dg.edges.keys().any(|(a, b)| *a == 1 && *b == 2));
        assert!(dg.has_edge(3, 3));
    }
}
