//! Cyclic problems: loop-shape detection, recurrence extraction and
//! closed-form solutions for divide-and-conquer and subtract recurrences.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{leq_bound, upper_coeffs, Bound, Rat};
use crate::constraints::{valid_encoded, Answer, Encoder};
use crate::graphs::{size_bound_of_term, DepGraph, DepTuple, Problem};
use crate::smt::{Smt, SmtResult};
use crate::term::{Sort, Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecError {
    #[error("unsupported recurrence shape: {0}")]
    UnsupportedShape(String),
    #[error("additive term `{0}` is not polynomial in the pivot")]
    NotPolynomial(String),
}

/// Relation between a recursive argument and the pivot of the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BranchShape {
    /// `b·|r| <= |x| + c` together with `|r| < |x|`.
    Divide { b: u32, c: i64 },
    /// `|r| <= |x| - d`.
    Subtract { d: i64 },
}

impl fmt::Display for BranchShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchShape::Divide { b, c } => write!(f, "Divide({b}, offset {c})"),
            BranchShape::Subtract { d } => write!(f, "Subtract({d})"),
        }
    }
}

/// A DT `f(x⃗) → ⟨f(r⃗₁) … f(r⃗ₚ), γ₁ … γₘ⟩ [ψ]` recursing on a pivot.
#[derive(Clone, Debug)]
pub struct CyclicLoop {
    pub delta: DepTuple,
    /// Argument position of the pivot.
    pub pivot: usize,
    pub pivot_var: Var,
    /// Component index and certified shape of every recursive call.
    pub branches: Vec<(usize, BranchShape)>,
    /// Component indices of the exits.
    pub exits: Vec<usize>,
    /// Per argument position: largest `B` with `|xⱼ| > B` entailed, or
    /// `None` for `-∞`.
    pub base: Vec<Option<i64>>,
    /// Entry variables whose size does not grow along any branch.
    pub stable: BTreeSet<Arc<str>>,
}

impl CyclicLoop {
    pub fn pivot_base(&self) -> i64 {
        self.base.get(self.pivot).copied().flatten().unwrap_or(0)
    }
}

/// `f(n) = p·f(r(n)) + h(n) + g(n)` for `n > base`, `f(n) = g(n)` else.
/// `h` is charged at every unfolding, `g` at every node of the call tree
/// including the leaves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recurrence {
    pub branches: usize,
    pub shape: BranchShape,
    /// Size variable of the pivot.
    pub var: Arc<str>,
    pub h: Bound,
    pub g: Bound,
    pub base: i64,
}

impl Recurrence {
    pub fn new(branches: usize, shape: BranchShape, var: &str, h: Bound, base: i64) -> Recurrence {
        Recurrence {
            branches,
            shape,
            var: Arc::from(var),
            h,
            g: Bound::zero(),
            base,
        }
    }
}

impl fmt::Display for Recurrence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = &self.var;
        let call = match self.shape {
            BranchShape::Divide { b, .. } => format!("f({x}/{b})"),
            BranchShape::Subtract { d } => format!("f({x}-{d})"),
        };
        let calls = if self.branches == 1 { call } else { format!("{}*{call}", self.branches) };
        let add = Bound::sum([self.h.clone(), self.g.clone()]);
        write!(f, "f({x}) = {calls} + {add}, f({}) = 0", self.base)
    }
}

// ---------------------------------------------------------------------------
// Loop shape

struct Entail<'a> {
    smt: &'a Smt,
    enc: Encoder,
    hyp: String,
}

impl Entail<'_> {
    fn valid(&self, goal: String) -> bool {
        valid_encoded(self.smt, &self.enc, vec![self.hyp.clone()], goal) == Answer::Yes
    }

    /// Independent re-check: `hyp ∧ ¬goal` posed as a satisfiability query.
    fn recheck(&self, negated_goal: String) -> bool {
        let q = self.enc.query(vec![self.hyp.clone(), negated_goal], false);
        matches!(self.smt.check(&q), Ok(SmtResult::Unsat))
    }
}

const DIVISORS: [u32; 3] = [4, 3, 2];
const OFFSETS: [i64; 3] = [0, 1, 2];
const BASE_MAX: i64 = 64;

fn certify_shape(e: &Entail, x: &str, r: &str) -> Option<BranchShape> {
    let descends = e.valid(format!("(< {r} {x})"));
    if descends {
        for b in DIVISORS {
            for c in OFFSETS {
                if e.valid(format!("(<= (* {b} {r}) (+ {x} {c}))")) {
                    return Some(BranchShape::Divide { b, c });
                }
            }
        }
    }
    (1..=4).rev().find(|d| e.valid(format!("(<= {r} (- {x} {d}))"))).map(|d| BranchShape::Subtract { d })
}

fn recheck_shape(e: &Entail, x: &str, r: &str, s: BranchShape) -> bool {
    match s {
        BranchShape::Divide { b, c } => e.recheck(format!("(>= {r} {x})")) && e.recheck(format!("(> (* {b} {r}) (+ {x} {c}))")),
        BranchShape::Subtract { d } => e.recheck(format!("(> {r} (- {x} {d}))")),
    }
}

/// Largest `L <= BASE_MAX` with `φ ⊨ |x| >= L`.
fn entailed_lower(e: &Entail, x: &str) -> i64 {
    let (mut lo, mut hi) = (0, BASE_MAX);
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if e.valid(format!("(>= {x} {mid})")) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Recognize `P` as cyclic: `D = {δ} ⊎ D′` where `δ` is the only DT that
/// reaches itself, `D′` never leads back to `δ`, and the start symbol is the
/// root of `δ`.
pub fn match_loop_shape(smt: &Smt, p: &Problem, dg: &DepGraph) -> Option<CyclicLoop> {
    let root = p.start_root();
    let delta = p.dts.iter().filter(|d| d.root() == root && dg.has_edge(d.id, d.id)).find(|d| {
        let others: BTreeSet<usize> = p.ids().into_iter().filter(|i| *i != d.id).collect();
        !dg.reachable_from(&others).contains(&d.id)
    })?;
    let comps = delta.components();
    let (rec, exits): (Vec<usize>, Vec<usize>) = (0..comps.len()).partition(|i| comps[*i].root_fun().map(|f| f.name.clone()) == Some(root.clone()));
    if rec.is_empty() {
        return None;
    }
    let mut enc = Encoder::new();
    let hyp = enc.term(&delta.guard).ok()?;
    let args = delta.lhs.args().to_vec();
    let mut sizes: Vec<Option<String>> = Vec::new();
    for a in &args {
        sizes.push(match a {
            Term::Var(v) if matches!(v.sort, Sort::Int | Sort::List) => enc.size(a).ok(),
            _ => None,
        });
    }
    let mut rec_sizes: Vec<Vec<Option<String>>> = Vec::new();
    for i in &rec {
        rec_sizes.push(comps[*i].args().iter().map(|a| if a.is_theory() { enc.size(a).ok() } else { None }).collect());
    }
    let e = Entail { smt, enc, hyp };
    for (j, xs) in sizes.iter().enumerate() {
        let Some(xs) = xs else { continue };
        let mut shapes = Vec::new();
        for (k, i) in rec.iter().enumerate() {
            let Some(Some(rs)) = rec_sizes[k].get(j) else { break };
            let Some(s) = certify_shape(&e, xs, rs) else { break };
            shapes.push((*i, s));
        }
        if shapes.len() != rec.len() {
            continue;
        }
        if !shapes.iter().zip(&rec_sizes).all(|((_, s), rs)| rs[j].as_ref().is_some_and(|r| recheck_shape(&e, xs, r, *s))) {
            continue;
        }
        let lower = entailed_lower(&e, xs).max(1);
        if !e.recheck(format!("(< {xs} {lower})")) {
            continue;
        }
        let mut base = vec![None; args.len()];
        base[j] = Some(lower - 1);
        let Term::Var(pivot_var) = &args[j] else { continue };
        let entry: Vec<Var> = delta.entry_vars().into_iter().map(|(_, v)| v).collect();
        let mut stable = BTreeSet::new();
        for (pos, v) in delta.entry_vars() {
            let ok = rec.iter().all(|i| {
                comps[*i].args().get(pos).is_some_and(|r| {
                    let s = size_bound_of_term(smt, &delta.guard, r, &entry, false);
                    leq_bound(&s, &Bound::var(&v.name))
                })
            });
            if ok {
                stable.insert(v.name.clone());
            }
        }
        return Some(CyclicLoop {
            delta: delta.clone(),
            pivot: j,
            pivot_var: pivot_var.clone(),
            branches: shapes,
            exits,
            base,
            stable,
        });
    }
    None
}

/// Combine branch shapes into one recurrence shape: the weakest divisor
/// with the largest offset, or the smallest decrement.
fn joint_shape(branches: &[(usize, BranchShape)]) -> Result<BranchShape, RecError> {
    let divides: Vec<(u32, i64)> = branches
        .iter()
        .filter_map(|(_, s)| match s {
            BranchShape::Divide { b, c } => Some((*b, *c)),
            _ => None,
        })
        .collect();
    if divides.len() == branches.len() {
        let b = divides.iter().map(|d| d.0).min().unwrap_or(2);
        let c = divides.iter().map(|d| d.1).max().unwrap_or(0);
        return Ok(BranchShape::Divide { b, c });
    }
    if branches.len() > 1 {
        return Err(RecError::UnsupportedShape(format!("{} subtract branches", branches.len())));
    }
    let d = branches
        .iter()
        .map(|(_, s)| match s {
            BranchShape::Subtract { d } => *d,
            BranchShape::Divide { .. } => 1,
        })
        .min()
        .unwrap_or(1);
    Ok(BranchShape::Subtract { d })
}

/// The recurrence of `lp` whose per-unfolding cost is `h` and per-node cost
/// is `g`, both over the entry variables of the loop DT. Fails if a cost
/// is infinite or depends on a variable other than the pivot that may grow
/// along a branch.
pub fn extract_recurrence(lp: &CyclicLoop, h: &Bound, g: &Bound) -> Result<Recurrence, RecError> {
    let shape = joint_shape(&lp.branches)?;
    let var = lp.pivot_var.name.clone();
    for cost in [h, g] {
        if !cost.is_finite() {
            return Err(RecError::NotPolynomial(cost.to_string()));
        }
        if cost.vars().iter().any(|v| *v != var && !lp.stable.contains(v)) {
            return Err(RecError::NotPolynomial(cost.to_string()));
        }
    }
    Ok(Recurrence {
        branches: lp.branches.len(),
        shape,
        h: template(h, &var),
        g: template(g, &var),
        var,
        base: lp.pivot_base(),
    })
}

/// Least `a·|x|^e + c` above `b` when `b` is univariate with constant
/// coefficients; `b` itself otherwise.
fn template(b: &Bound, var: &str) -> Bound {
    let Some(coeffs) = upper_coeffs(b, var) else { return b.clone() };
    let mut consts = Vec::new();
    for c in &coeffs {
        match c.eval_with(&|_| None).finite() {
            Some(v) if c.vars().is_empty() => consts.push(v.ceil() as i64),
            _ => return b.clone(),
        }
    }
    let deg = consts.iter().rposition(|c| *c > 0).unwrap_or(0);
    let a: i64 = consts.iter().skip(1).sum();
    let x = Bound::var(var);
    let t = Bound::sum([Bound::times(Bound::int(a), Bound::product(std::iter::repeat_n(x, deg))), Bound::int(consts[0])]);
    if deg == 0 {
        return Bound::int(consts[0]);
    }
    if leq_bound(b, &t) {
        t
    } else {
        b.clone()
    }
}

// ---------------------------------------------------------------------------
// Closed forms

fn scale(b: Bound, r: Rat) -> Bound {
    if r.is_one() {
        return b;
    }
    Bound::div(Bound::times(Bound::int(*r.numer() as i64), b), *r.denom() as u32)
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

fn power(n: &Bound, e: usize) -> Bound {
    Bound::product(std::iter::repeat_n(n.clone(), e))
}

/// `p^{log_b n}`, as `n^d` when `p = b^d`.
fn pow_log(p: u32, b: u32, n: &Bound) -> Bound {
    let mut acc = 1u64;
    for d in 0..=16usize {
        if acc == p as u64 {
            return power(n, d);
        }
        acc = acc.saturating_mul(b as u64);
    }
    Bound::pow(p, Bound::log(b, n.clone()))
}

/// `Σ_{ℓ < log_b n + extra} p^ℓ · K(n/b^ℓ + γ)` for `K(m) = Σ kₑ mᵉ`.
fn divide_sum(coeffs: &[Bound], p: u32, b: u32, gamma: Rat, extra: i64, n: &Bound) -> Bound {
    let mut shifted: Vec<Bound> = Vec::new();
    for j in 0..coeffs.len() {
        let items = (j..coeffs.len()).map(|e| {
            let g = gamma.pow((e - j) as i32) * Rat::from_integer(binomial(e as u32, j as u32));
            scale(coeffs[e].clone(), g)
        });
        shifted.push(if gamma.is_zero() { coeffs[j].clone() } else { Bound::sum(items) });
    }
    let levels = Bound::sum([Bound::log(b, n.clone()), Bound::int(extra)]);
    let mut out = Vec::new();
    for (j, k) in shifted.into_iter().enumerate() {
        if k.is_zero() {
            continue;
        }
        let q = Rat::new(p as i128, (b as i128).pow(j as u32));
        let term = if q < Rat::one() {
            Bound::times(scale(power(n, j), (Rat::one() - q).recip()), k)
        } else if q == Rat::one() {
            Bound::product([k, power(n, j), levels.clone()])
        } else {
            let c = q.pow(extra as i32) / (q - Rat::one());
            Bound::times(k, scale(pow_log(p, b, n), c))
        };
        out.push(term);
    }
    Bound::sum(out)
}

/// Upper bound on the solution of `rec`, one per unfolding plus the
/// accumulated `h` and `g`, in terms of the pivot size.
pub fn solve_recurrence(rec: &Recurrence) -> Result<Bound, RecError> {
    solve_parts(rec).map(|(unfold, cost)| Bound::sum([unfold, cost]))
}

/// `(number of unfoldings, accumulated h and g)`.
pub fn solve_parts(rec: &Recurrence) -> Result<(Bound, Bound), RecError> {
    let n = Bound::Var(rec.var.clone());
    let p = rec.branches as u32;
    if p == 0 {
        return Err(RecError::UnsupportedShape("no recursive call".into()));
    }
    let base = rec.base.max(0);
    match rec.shape {
        BranchShape::Divide { b, c } => {
            let bm1 = (b - 1) as i64;
            let theta = if c <= bm1 { 1 } else { 1 + c / bm1 };
            let e = (theta - base).max(0);
            let inner_extra = 1 + e;
            let gamma = Rat::new(c as i128, bm1 as i128);
            let coeffs_of = |x: &Bound| upper_coeffs(x, &rec.var).ok_or_else(|| RecError::NotPolynomial(x.to_string()));
            let unfold = divide_sum(&[Bound::one()], p, b, Rat::zero(), inner_extra, &n);
            let h = divide_sum(&coeffs_of(&rec.h)?, p, b, gamma, inner_extra, &n);
            let g = divide_sum(&coeffs_of(&rec.g)?, p, b, gamma, inner_extra + 1, &n);
            Ok((unfold, Bound::sum([h, g])))
        }
        BranchShape::Subtract { d } => {
            if p > 1 {
                return Err(RecError::UnsupportedShape(format!("{p} subtract branches")));
            }
            let inner = Bound::div(Bound::sum([n.clone(), Bound::int((d - base - 1).max(0))]), d as u32);
            let all = Bound::sum([inner.clone(), Bound::one()]);
            let cost = Bound::sum([Bound::times(inner.clone(), rec.h.clone()), Bound::times(all, rec.g.clone())]);
            Ok((inner, cost))
        }
    }
}

/// Exact value of the recurrence at `n`, with the recursive argument
/// `floor((n + c)/b)` or `n - d`.
pub fn unroll(rec: &Recurrence, n: i64, memo: &mut std::collections::HashMap<i64, f64>) -> f64 {
    let at = |b: &Bound, m: i64| b.eval_with(&|v| if v == &*rec.var { Some(m as f64) } else { Some(0.0) }).finite().unwrap_or(f64::INFINITY);
    let mut stack = vec![n];
    while let Some(&m) = stack.last() {
        if memo.contains_key(&m) {
            stack.pop();
            continue;
        }
        if m <= rec.base {
            memo.insert(m, at(&rec.g, m));
            stack.pop();
            continue;
        }
        let next = match rec.shape {
            BranchShape::Divide { b, c } => (m + c).div_euclid(b as i64),
            BranchShape::Subtract { d } => m - d,
        };
        assert!(next < m, "recurrence does not descend at {m}");
        match memo.get(&next) {
            Some(v) => {
                let val = rec.branches as f64 * v + 1.0 + at(&rec.h, m) + at(&rec.g, m);
                memo.insert(m, val);
                stack.pop();
            }
            None => stack.push(next),
        }
    }
    memo[&n]
}
