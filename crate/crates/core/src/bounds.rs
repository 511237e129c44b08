//! Bound expressions: sizes of variables combined with constants, `+`, `*`,
//! `max`, `k^p`, `p/k`, `log_k(p)` and the infinite bound ω.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rat = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bound {
    /// `|x|` for a variable `x`.
    Var(Arc<str>),
    Const(i64),
    Omega,
    Plus(Vec<Bound>),
    Times(Vec<Bound>),
    Max(Vec<Bound>),
    /// `k^p`
    Pow(u32, Box<Bound>),
    /// `p/k`, `k >= 1`
    Div(Box<Bound>, u32),
    /// `log_k(p)`, `k >= 2`
    Log(u32, Box<Bound>),
}

/// Value of a bound expression: a nonnegative number or ω.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ext {
    Fin(f64),
    Omega,
}

impl Ext {
    pub fn le(self, other: Ext) -> bool {
        match (self, other) {
            (_, Ext::Omega) => true,
            (Ext::Omega, Ext::Fin(_)) => false,
            (Ext::Fin(a), Ext::Fin(b)) => a <= b,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Fin(v) => Some(v),
            Ext::Omega => None,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(v) => write!(f, "{v}"),
            Ext::Omega => write!(f, "?"),
        }
    }
}

/// Exact logarithm when `v` is a power of `k`, floating point otherwise.
fn log_k(k: u32, v: f64) -> f64 {
    let v = v.max(1.0);
    if v.fract() == 0.0 && v < 9.0e15 {
        let mut n = v as u64;
        let mut e = 0u32;
        while n.is_multiple_of(k as u64) && n > 1 {
            n /= k as u64;
            e += 1;
        }
        if n == 1 {
            return e as f64;
        }
    }
    v.ln() / (k as f64).ln()
}

impl Bound {
    pub fn var(name: &str) -> Bound {
        Bound::Var(Arc::from(name))
    }

    pub fn int(c: i64) -> Bound {
        Bound::Const(c)
    }

    pub fn zero() -> Bound {
        Bound::Const(0)
    }

    pub fn one() -> Bound {
        Bound::Const(1)
    }

    pub fn is_omega(&self) -> bool {
        matches!(self, Bound::Omega)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_omega()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Bound::Const(c) if *c <= 0)
    }

    pub fn as_const(&self) -> Option<i64> {
        match self {
            Bound::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn plus(a: Bound, b: Bound) -> Bound {
        Bound::sum(vec![a, b])
    }

    /// Normalized sum: flattened, constants folded, ω absorbing.
    pub fn sum<I: IntoIterator<Item = Bound>>(items: I) -> Bound {
        let mut konst: i64 = 0;
        let mut rest: Vec<Bound> = Vec::new();
        for it in items {
            match it {
                Bound::Omega => return Bound::Omega,
                Bound::Const(c) => konst = konst.saturating_add(c),
                // a nested sum with a negative constant clamps on its own
                Bound::Plus(inner) if inner.iter().any(|i| matches!(i, Bound::Const(c) if *c < 0)) => {
                    rest.push(Bound::Plus(inner))
                }
                Bound::Plus(inner) => {
                    for i in inner {
                        match i {
                            Bound::Const(c) => konst = konst.saturating_add(c),
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        // merge equal summands into scaled products
        let mut merged: Vec<(Bound, i64)> = Vec::new();
        for r in rest {
            let (base, k) = r.split_scalar();
            if let Some(e) = merged.iter_mut().find(|(b, _)| *b == base) {
                e.1 = e.1.saturating_add(k);
            } else {
                merged.push((base, k));
            }
        }
        let mut rest: Vec<Bound> = merged
            .into_iter()
            .filter(|(_, k)| *k != 0)
            .map(|(b, k)| if k == 1 { b } else { Bound::product(vec![Bound::Const(k), b]) })
            .collect();
        rest.sort();
        if konst != 0 || rest.is_empty() {
            rest.push(Bound::Const(konst));
        }
        if rest.len() == 1 {
            rest.pop().unwrap_or(Bound::zero())
        } else {
            Bound::Plus(rest)
        }
    }

    /// Split `c * b` into `(b, c)`.
    fn split_scalar(self) -> (Bound, i64) {
        if let Bound::Times(items) = &self {
            if let Some(Bound::Const(c)) = items.first() {
                let rest: Vec<Bound> = items[1..].to_vec();
                let base = if rest.len() == 1 { rest[0].clone() } else { Bound::Times(rest) };
                return (base, *c);
            }
        }
        (self, 1)
    }

    pub fn times(a: Bound, b: Bound) -> Bound {
        Bound::product(vec![a, b])
    }

    /// Normalized product. `0 * ω = 0`; negative constant factors clamp the
    /// product to zero.
    pub fn product<I: IntoIterator<Item = Bound>>(items: I) -> Bound {
        let mut konst: i64 = 1;
        let mut omega = false;
        let mut rest: Vec<Bound> = Vec::new();
        for it in items {
            match it {
                Bound::Omega => omega = true,
                Bound::Const(c) => konst = konst.saturating_mul(c),
                Bound::Times(inner) => {
                    for i in inner {
                        match i {
                            Bound::Const(c) => konst = konst.saturating_mul(c),
                            Bound::Omega => omega = true,
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        if konst <= 0 {
            return Bound::zero();
        }
        if omega {
            return Bound::Omega;
        }
        rest.sort();
        if rest.is_empty() {
            return Bound::Const(konst);
        }
        if konst != 1 {
            rest.insert(0, Bound::Const(konst));
        }
        if rest.len() == 1 {
            rest.pop().unwrap_or(Bound::zero())
        } else {
            Bound::Times(rest)
        }
    }

    pub fn max(a: Bound, b: Bound) -> Bound {
        Bound::maximum(vec![a, b])
    }

    /// Normalized maximum; an empty maximum is 0.
    pub fn maximum<I: IntoIterator<Item = Bound>>(items: I) -> Bound {
        let mut konst: Option<i64> = None;
        let mut rest: Vec<Bound> = Vec::new();
        for it in items {
            match it {
                Bound::Omega => return Bound::Omega,
                Bound::Const(c) => konst = Some(konst.map_or(c, |k| k.max(c))),
                Bound::Max(inner) => {
                    for i in inner {
                        match i {
                            Bound::Const(c) => konst = Some(konst.map_or(c, |k| k.max(c))),
                            other => rest.push(other),
                        }
                    }
                }
                other => rest.push(other),
            }
        }
        rest.sort();
        rest.dedup();
        // every expression is nonnegative, so constants <= 0 are redundant
        if let Some(k) = konst {
            if k > 0 || rest.is_empty() {
                rest.push(Bound::Const(k.max(0)));
            }
        }
        // drop arguments dominated by another argument
        if rest.len() > 1 && rest.len() <= 8 {
            let mut keep = vec![true; rest.len()];
            for i in 0..rest.len() {
                for j in 0..rest.len() {
                    if i != j && keep[j] && keep[i] && leq_bound(&rest[i], &rest[j]) {
                        keep[i] = false;
                    }
                }
            }
            rest = rest.into_iter().zip(keep).filter(|(_, k)| *k).map(|(b, _)| b).collect();
        }
        match rest.len() {
            0 => Bound::zero(),
            1 => rest.pop().unwrap_or(Bound::zero()),
            _ => Bound::Max(rest),
        }
    }

    pub fn pow(k: u32, p: Bound) -> Bound {
        match (k, p) {
            (_, Bound::Omega) => Bound::Omega,
            (0, _) => Bound::zero(),
            (1, _) => Bound::one(),
            (k, Bound::Const(c)) if c <= 0 => {
                let _ = k;
                Bound::one()
            }
            (k, Bound::Const(c)) if c < 62 && (k as f64).powi(c as i32) < 4.0e18 => Bound::Const((k as i64).pow(c as u32)),
            (k, p) => Bound::Pow(k, Box::new(p)),
        }
    }

    pub fn div(p: Bound, k: u32) -> Bound {
        let k = k.max(1);
        match p {
            Bound::Omega => Bound::Omega,
            p if k == 1 => p,
            Bound::Const(c) if c <= 0 => Bound::zero(),
            Bound::Const(c) if c % (k as i64) == 0 => Bound::Const(c / k as i64),
            Bound::Div(inner, j) => Bound::Div(inner, j.saturating_mul(k)),
            p => Bound::Div(Box::new(p), k),
        }
    }

    pub fn log(k: u32, p: Bound) -> Bound {
        let k = k.max(2);
        match p {
            Bound::Omega => Bound::Omega,
            Bound::Const(c) if c <= 1 => Bound::zero(),
            Bound::Const(c) => {
                let v = log_k(k, c as f64);
                if v.fract() == 0.0 {
                    Bound::Const(v as i64)
                } else {
                    Bound::Log(k, Box::new(Bound::Const(c)))
                }
            }
            p => Bound::Log(k, Box::new(p)),
        }
    }

    /// Size variables occurring in the expression.
    pub fn vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Bound::Var(v) => {
                out.insert(v.clone());
            }
            Bound::Const(_) | Bound::Omega => {}
            Bound::Plus(a) | Bound::Times(a) | Bound::Max(a) => a.iter().for_each(|b| b.collect_vars(out)),
            Bound::Pow(_, p) | Bound::Div(p, _) | Bound::Log(_, p) => p.collect_vars(out),
        }
    }

    pub fn evaluate(&self, m: &BTreeMap<Arc<str>, f64>) -> Ext {
        self.eval_with(&|v| m.get(v).copied())
    }

    /// Evaluate with a lookup; unassigned size variables evaluate to ω.
    pub fn eval_with(&self, look: &dyn Fn(&str) -> Option<f64>) -> Ext {
        use Ext::*;
        match self {
            Bound::Var(v) => look(v).map_or(Omega, |x| Fin(x.max(0.0))),
            Bound::Const(c) => Fin((*c as f64).max(0.0)),
            Bound::Omega => Omega,
            Bound::Plus(items) => {
                let mut s = 0.0;
                // constants inside sums may be negative: sum raw values first
                for it in items {
                    match it {
                        Bound::Const(c) => s += *c as f64,
                        other => match other.eval_with(look) {
                            Fin(v) => s += v,
                            Omega => return Omega,
                        },
                    }
                }
                Fin(s.max(0.0))
            }
            Bound::Times(items) => {
                let vals: Vec<Ext> = items.iter().map(|b| b.eval_with(look)).collect();
                if vals.contains(&Fin(0.0)) {
                    return Fin(0.0);
                }
                let mut p = 1.0;
                for v in vals {
                    match v {
                        Fin(x) => p *= x,
                        Omega => return Omega,
                    }
                }
                Fin(p.max(0.0))
            }
            Bound::Max(items) => {
                let mut m = 0.0f64;
                for it in items {
                    match it.eval_with(look) {
                        Fin(v) => m = m.max(v),
                        Omega => return Omega,
                    }
                }
                Fin(m)
            }
            Bound::Pow(k, p) => match p.eval_with(look) {
                Fin(v) => Fin((*k as f64).powf(v)),
                Omega => Omega,
            },
            Bound::Div(p, k) => match p.eval_with(look) {
                Fin(v) => Fin(v / *k as f64),
                Omega => Omega,
            },
            Bound::Log(k, p) => match p.eval_with(look) {
                Fin(v) => Fin(log_k(*k, v)),
                Omega => Omega,
            },
        }
    }

    /// Replace size variables by bound expressions; unmapped variables stay.
    pub fn substitute(&self, theta: &BTreeMap<Arc<str>, Bound>) -> Bound {
        match self {
            Bound::Var(v) => theta.get(v).cloned().unwrap_or_else(|| self.clone()),
            Bound::Const(_) | Bound::Omega => self.clone(),
            Bound::Plus(a) => Bound::sum(a.iter().map(|b| b.substitute(theta))),
            Bound::Times(a) => Bound::product(a.iter().map(|b| b.substitute(theta))),
            Bound::Max(a) => Bound::maximum(a.iter().map(|b| b.substitute(theta))),
            Bound::Pow(k, p) => Bound::pow(*k, p.substitute(theta)),
            Bound::Div(p, k) => Bound::div(p.substitute(theta), *k),
            Bound::Log(k, p) => Bound::log(*k, p.substitute(theta)),
        }
    }

    /// Rename size variables.
    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Bound {
        let theta: BTreeMap<Arc<str>, Bound> = self.vars().into_iter().map(|v| (v.clone(), Bound::var(&f(&v)))).collect();
        self.substitute(&theta)
    }
}

pub fn substitute_bounds(p: &Bound, theta: &BTreeMap<Arc<str>, Bound>) -> Bound {
    p.substitute(theta)
}

impl std::ops::Add for Bound {
    type Output = Bound;
    fn add(self, rhs: Bound) -> Bound {
        Bound::plus(self, rhs)
    }
}

impl std::ops::Mul for Bound {
    type Output = Bound;
    fn mul(self, rhs: Bound) -> Bound {
        Bound::times(self, rhs)
    }
}

impl std::iter::Sum for Bound {
    fn sum<I: Iterator<Item = Bound>>(iter: I) -> Bound {
        Bound::sum(iter)
    }
}

fn fmt_bound(b: &Bound, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
    match b {
        Bound::Var(v) => write!(f, "|{v}|"),
        Bound::Const(c) => write!(f, "{c}"),
        Bound::Omega => write!(f, "?"),
        Bound::Plus(items) => {
            if parent > 1 {
                write!(f, "(")?;
            }
            for (i, it) in items.iter().enumerate() {
                match (i, it) {
                    (0, _) => fmt_bound(it, f, 1)?,
                    (_, Bound::Const(c)) if *c < 0 => write!(f, " - {}", -c)?,
                    _ => {
                        write!(f, " + ")?;
                        fmt_bound(it, f, 1)?
                    }
                }
            }
            if parent > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Bound::Times(items) => {
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                fmt_bound(it, f, 2)?;
            }
            Ok(())
        }
        Bound::Max(items) => {
            write!(f, "max(")?;
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_bound(it, f, 0)?;
            }
            write!(f, ")")
        }
        Bound::Pow(k, p) => {
            write!(f, "pow({k},")?;
            fmt_bound(p, f, 0)?;
            write!(f, ")")
        }
        Bound::Div(p, k) => {
            write!(f, "div(")?;
            fmt_bound(p, f, 0)?;
            write!(f, ",{k})")
        }
        Bound::Log(k, p) => {
            write!(f, "log({k},")?;
            fmt_bound(p, f, 0)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_bound(self, f, 0)
    }
}

// ---------------------------------------------------------------------------
// Polynomial view used by the comparison.

/// A product of atoms with exponents. Atoms are size variables or opaque
/// subexpressions (max, log, pow).
type Monomial = BTreeMap<Bound, u32>;

#[derive(Clone, Debug, Default, PartialEq)]
struct Poly(BTreeMap<Monomial, Rat>);

impl Poly {
    fn constant(c: Rat) -> Poly {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Monomial::new(), c);
        }
        Poly(m)
    }

    fn atom(b: Bound) -> Poly {
        let mut mono = Monomial::new();
        mono.insert(b, 1);
        let mut m = BTreeMap::new();
        m.insert(mono, Rat::one());
        Poly(m)
    }

    fn add(&self, other: &Poly) -> Poly {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            let e = out.entry(m.clone()).or_insert_with(Rat::zero);
            *e += *c;
        }
        out.retain(|_, c| !c.is_zero());
        Poly(out)
    }

    fn scale(&self, k: Rat) -> Poly {
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            let v = *c * k;
            if !v.is_zero() {
                out.insert(m.clone(), v);
            }
        }
        Poly(out)
    }

    fn mul(&self, other: &Poly) -> Option<Poly> {
        let mut out: BTreeMap<Monomial, Rat> = BTreeMap::new();
        if self.0.len() * other.0.len() > 256 {
            return None;
        }
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let mut m = m1.clone();
                for (a, e) in m2 {
                    *m.entry(a.clone()).or_insert(0) += e;
                }
                let e = out.entry(m).or_insert_with(Rat::zero);
                *e += *c1 * *c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Some(Poly(out))
    }

    fn nonneg(&self) -> bool {
        self.0.values().all(|c| !c.is_negative())
    }

    fn const_part(&self) -> Rat {
        self.0.get(&Monomial::new()).copied().unwrap_or_else(Rat::zero)
    }

    fn drop_const(&self) -> Poly {
        let mut m = self.0.clone();
        m.remove(&Monomial::new());
        Poly(m)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    /// The polynomial must be pointwise >= the value.
    Upper,
    /// The polynomial must be pointwise <= the value.
    Lower,
}

/// Polynomial view of a finite bound expression, `relax` additionally
/// over-approximates opaque atoms on the upper side.
fn to_poly(b: &Bound, side: Side, relax: bool) -> Option<Poly> {
    match b {
        Bound::Omega => None,
        Bound::Var(_) => Some(Poly::atom(b.clone())),
        Bound::Const(c) => Some(Poly::constant(Rat::from_integer((*c).max(0) as i128))),
        Bound::Plus(items) => {
            let mut acc = Poly::default();
            let mut neg_const = Rat::zero();
            for it in items {
                match it {
                    Bound::Const(c) if *c < 0 => neg_const += Rat::from_integer(*c as i128),
                    other => acc = acc.add(&to_poly(other, side, relax)?),
                }
            }
            match side {
                // max(0, s - c) <= s for nonnegative s
                Side::Upper => Some(acc),
                Side::Lower => Some(acc.add(&Poly::constant(neg_const))),
            }
        }
        Bound::Times(items) => {
            let mut acc = Poly::constant(Rat::one());
            for it in items {
                let p = to_poly(it, side, relax)?;
                if side == Side::Lower && !p.nonneg() {
                    return Some(Poly::atom(b.clone()));
                }
                acc = acc.mul(&p)?;
            }
            Some(acc)
        }
        Bound::Div(p, k) => Some(to_poly(p, side, relax)?.scale(Rat::new(1, *k as i128))),
        Bound::Max(items) if relax && side == Side::Upper => {
            let mut acc = Poly::default();
            for it in items {
                acc = acc.add(&to_poly(it, side, relax)?);
            }
            Some(acc)
        }
        Bound::Log(_, p) if relax && side == Side::Upper => {
            // log_k(v) <= v for v >= 0
            to_poly(p, side, relax)
        }
        _ => Some(Poly::atom(b.clone())),
    }
}

/// Coefficients `[a₀, a₁, …]` with `b <= Σ aₑ·|var|^e` for all nonnegative
/// assignments, each `aₑ` free of `var`. `None` if `var` occurs inside an
/// opaque subexpression.
pub fn upper_coeffs(b: &Bound, var: &str) -> Option<Vec<Bound>> {
    let poly = to_poly(b, Side::Upper, true)?;
    let x = Bound::var(var);
    let mut by_deg: BTreeMap<u32, Vec<Bound>> = BTreeMap::new();
    for (mono, c) in &poly.0 {
        if !c.is_positive() {
            continue;
        }
        let mut e = 0;
        let mut rest = vec![Bound::int(*c.numer() as i64)];
        for (atom, k) in mono {
            if *atom == x {
                e += k;
            } else if atom.vars().iter().any(|v| &**v == var) {
                return None;
            } else {
                rest.extend(std::iter::repeat_n(atom.clone(), *k as usize));
            }
        }
        by_deg.entry(e).or_default().push(Bound::div(Bound::product(rest), *c.denom() as u32));
    }
    let top = by_deg.keys().max().copied().unwrap_or(0);
    Some((0..=top).map(|e| by_deg.remove(&e).map_or(Bound::zero(), Bound::sum)).collect())
}

/// Sound, incomplete check of `p <= q` for all nonnegative assignments.
pub fn leq_bound(p: &Bound, q: &Bound) -> bool {
    leq_depth(p, q, 0)
}

fn leq_depth(p: &Bound, q: &Bound, depth: u32) -> bool {
    if depth > 6 {
        return false;
    }
    if q.is_omega() || p == q {
        return true;
    }
    if p.is_omega() {
        return false;
    }
    if p.is_zero() {
        return true;
    }
    if let Bound::Max(ps) = p {
        return ps.iter().all(|pi| leq_depth(pi, q, depth + 1));
    }
    if let Bound::Max(qs) = q {
        if qs.iter().any(|qi| leq_depth(p, qi, depth + 1)) {
            return true;
        }
    }
    match (p, q) {
        (Bound::Log(k1, a), Bound::Log(k2, b)) if k1 >= k2 && leq_depth(a, b, depth + 1) => return true,
        (Bound::Pow(k1, a), Bound::Pow(k2, b)) if k1 <= k2 && leq_depth(a, b, depth + 1) => return true,
        (Bound::Div(a, k1), Bound::Div(b, k2)) if k1 >= k2 && leq_depth(a, b, depth + 1) => return true,
        _ => {}
    }
    if poly_leq(p, q, false) || poly_leq(p, q, true) {
        return true;
    }
    // positionwise monotonicity for sums and products of equal length
    match (p, q) {
        (Bound::Plus(a), Bound::Plus(b)) | (Bound::Times(a), Bound::Times(b)) if a.len() == b.len() && !has_neg_const(q)
            && a.iter().zip(b).all(|(x, y)| leq_depth(x, y, depth + 1)) => {
                return true;
            }
        _ => {}
    }
    // q = r + s with p <= r
    if let (Bound::Plus(qs), false) = (q, has_neg_const(q)) {
        if qs.iter().any(|qi| leq_depth(p, qi, depth + 1)) {
            return true;
        }
    }
    // p = c * r with c <= 1 impossible after normalization; try dropping a
    // max in q by each of its arguments
    if let Some(q2) = first_max_variants(q) {
        if q2.iter().any(|qv| qv != q && poly_leq(p, qv, true)) {
            return true;
        }
    }
    false
}

fn has_neg_const(b: &Bound) -> bool {
    match b {
        Bound::Const(c) => *c < 0,
        Bound::Var(_) | Bound::Omega => false,
        Bound::Plus(a) | Bound::Times(a) | Bound::Max(a) => a.iter().any(has_neg_const),
        Bound::Pow(_, p) | Bound::Div(p, _) | Bound::Log(_, p) => has_neg_const(p),
    }
}

fn poly_leq(p: &Bound, q: &Bound, relax: bool) -> bool {
    let (Some(pp), Some(qp)) = (to_poly(p, Side::Upper, relax), to_poly(q, Side::Lower, false)) else {
        return false;
    };
    let diff = qp.add(&pp.scale(-Rat::one()));
    if diff.nonneg() {
        return true;
    }
    // a negative constant is absorbed when the remaining part of q has a
    // positive constant-free lower bound of at least one per monomial: only
    // accept when q's constant-free part dominates p's and all variables are
    // integral sizes (|x| >= 1 or the term vanishes) is not known, so stay
    // conservative
    let _ = diff.const_part();
    let _ = diff.drop_const();
    false
}

/// Variants of `b` with its first `max` node replaced by one argument.
fn first_max_variants(b: &Bound) -> Option<Vec<Bound>> {
    match b {
        Bound::Max(items) => Some(items.clone()),
        Bound::Plus(items) | Bound::Times(items) => {
            for (i, it) in items.iter().enumerate() {
                if let Some(vs) = first_max_variants(it) {
                    let rebuilt = vs
                        .into_iter()
                        .map(|v| {
                            let mut c = items.clone();
                            c[i] = v;
                            if matches!(b, Bound::Plus(_)) {
                                Bound::sum(c)
                            } else {
                                Bound::product(c)
                            }
                        })
                        .collect();
                    return Some(rebuilt);
                }
            }
            None
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Asymptotic classes.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AsymptoticClass {
    Const,
    Log,
    Poly(u32),
    PolyLog(u32, u32),
    Exp,
    Unknown,
}

impl AsymptoticClass {
    fn key(self) -> (u32, u32, u32) {
        match self {
            AsymptoticClass::Const => (0, 0, 0),
            AsymptoticClass::Log => (0, 0, 1),
            AsymptoticClass::Poly(d) => (0, d, 0),
            AsymptoticClass::PolyLog(d, e) => (0, d, e),
            AsymptoticClass::Exp => (1, 0, 0),
            AsymptoticClass::Unknown => (2, 0, 0),
        }
    }

    pub fn render(self) -> String {
        match self {
            AsymptoticClass::Const => "O(1)".into(),
            AsymptoticClass::Log => "O(log(n))".into(),
            AsymptoticClass::Poly(d) => format!("O(n^{d})"),
            AsymptoticClass::PolyLog(1, 1) => "O(n*log(n))".into(),
            AsymptoticClass::PolyLog(1, e) => format!("O(n*log(n)^{e})"),
            AsymptoticClass::PolyLog(d, 1) => format!("O(n^{d}*log(n))"),
            AsymptoticClass::PolyLog(d, e) => format!("O(n^{d}*log(n)^{e})"),
            AsymptoticClass::Exp => "O(EXP)".into(),
            AsymptoticClass::Unknown => "MAYBE".into(),
        }
    }
}

impl PartialOrd for AsymptoticClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AsymptoticClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for AsymptoticClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Growth of an expression when all size variables grow uniformly with n:
/// `n^deg * log(n)^log`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Growth {
    Poly { deg: f64, log: u32 },
    Exp,
    Unknown,
}

impl Growth {
    const CONST: Growth = Growth::Poly { deg: 0.0, log: 0 };

    fn key(self) -> (u32, f64, u32) {
        match self {
            Growth::Poly { deg, log } => (0, deg, log),
            Growth::Exp => (1, 0.0, 0),
            Growth::Unknown => (2, 0.0, 0),
        }
    }

    fn join(self, o: Growth) -> Growth {
        if self.key() >= o.key() {
            self
        } else {
            o
        }
    }

    fn mul(self, o: Growth) -> Growth {
        match (self, o) {
            (Growth::Unknown, _) | (_, Growth::Unknown) => Growth::Unknown,
            (Growth::Exp, _) | (_, Growth::Exp) => Growth::Exp,
            (Growth::Poly { deg: d1, log: l1 }, Growth::Poly { deg: d2, log: l2 }) => Growth::Poly {
                deg: d1 + d2,
                log: l1 + l2,
            },
        }
    }

    fn is_const(self) -> bool {
        self == Growth::CONST
    }
}

fn growth(b: &Bound) -> Growth {
    match b {
        Bound::Var(_) => Growth::Poly { deg: 1.0, log: 0 },
        Bound::Const(_) => Growth::CONST,
        Bound::Omega => Growth::Unknown,
        Bound::Plus(items) | Bound::Max(items) => items.iter().map(growth).fold(Growth::CONST, Growth::join),
        Bound::Times(items) => items.iter().map(growth).fold(Growth::CONST, Growth::mul),
        Bound::Div(p, _) => growth(p),
        Bound::Log(_, p) => match growth(p) {
            Growth::Unknown => Growth::Unknown,
            Growth::Exp => Growth::Poly { deg: 1.0, log: 0 },
            g if g.is_const() => Growth::CONST,
            _ => Growth::Poly { deg: 0.0, log: 1 },
        },
        Bound::Pow(k, p) => match growth(p) {
            g if g.is_const() => Growth::CONST,
            Growth::Poly { deg, log: 1 } if deg == 0.0 => match log_exponent(*k, p) {
                Some(d) => Growth::Poly { deg: d, log: 0 },
                None => Growth::Exp,
            },
            Growth::Unknown => Growth::Unknown,
            _ => Growth::Exp,
        },
    }
}

/// For `p` of shape `c*log_b(q) + d` (or sums of such terms), the exponent
/// `e` with `k^p in O(n^e)`.
fn log_exponent(k: u32, p: &Bound) -> Option<f64> {
    let kf = (k as f64).ln();
    match p {
        Bound::Log(b, q) => match growth(q) {
            Growth::Poly { deg, log } => {
                let dq = if log > 0 && deg == 0.0 { 1.0 } else { deg + if log > 0 { 1.0 } else { 0.0 } };
                Some(dq * kf / (*b as f64).ln())
            }
            _ => None,
        },
        Bound::Const(_) => Some(0.0),
        Bound::Plus(items) => items.iter().map(|i| log_exponent(k, i)).sum(),
        Bound::Times(items) => {
            let mut c = 1.0;
            let mut inner = None;
            for it in items {
                match it {
                    Bound::Const(v) => c *= *v as f64,
                    other if inner.is_none() => inner = Some(other),
                    _ => return None,
                }
            }
            inner.map_or(Some(0.0), |i| log_exponent(k, i).map(|e| e * c))
        }
        Bound::Div(q, d) => log_exponent(k, q).map(|e| e / *d as f64),
        _ => None,
    }
}

pub fn asymptotic_class(p: &Bound) -> AsymptoticClass {
    match growth(p) {
        Growth::Unknown => AsymptoticClass::Unknown,
        Growth::Exp => AsymptoticClass::Exp,
        Growth::Poly { deg, log } => {
            let eps = 1e-9;
            if deg < eps {
                match log {
                    0 => AsymptoticClass::Const,
                    1 => AsymptoticClass::Log,
                    _ => AsymptoticClass::Poly(1),
                }
            } else if (deg - deg.round()).abs() < eps {
                let d = deg.round() as u32;
                match log {
                    0 => AsymptoticClass::Poly(d),
                    e => AsymptoticClass::PolyLog(d, e),
                }
            } else {
                AsymptoticClass::Poly(deg.ceil() as u32)
            }
        }
    }
}

/// Parse the textual rendering back into an expression (used by proof replay
/// and tests).
pub fn parse_bound(s: &str) -> Result<Bound, String> {
    let toks = tokenize(s)?;
    let mut pos = 0;
    let b = parse_sum(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(format!("trailing input in bound `{s}`"));
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(i64),
    Ident(String),
    Bar,
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    Comma,
    Omega,
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        match c {
            ' ' | '\t' => i += 1,
            '|' => {
                out.push(Tok::Bar);
                i += 1
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1
            }
            '?' => {
                out.push(Tok::Omega);
                i += 1
            }
            d if d.is_ascii_digit() => {
                let st = i;
                while i < cs.len() && cs[i].is_ascii_digit() {
                    i += 1;
                }
                let n: String = cs[st..i].iter().collect();
                out.push(Tok::Num(n.parse().map_err(|e| format!("{e}"))?));
            }
            a if a.is_alphanumeric() || a == '_' || a == '\'' || a == '#' || a == '.' => {
                let st = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || "_'#.".contains(cs[i])) {
                    i += 1;
                }
                out.push(Tok::Ident(cs[st..i].iter().collect()));
            }
            other => return Err(format!("unexpected character `{other}` in bound")),
        }
    }
    Ok(out)
}

fn parse_sum(t: &[Tok], pos: &mut usize) -> Result<Bound, String> {
    let mut items = vec![parse_prod(t, pos)?];
    loop {
        match t.get(*pos) {
            Some(Tok::Plus) => {
                *pos += 1;
                items.push(parse_prod(t, pos)?);
            }
            Some(Tok::Minus) => {
                *pos += 1;
                match t.get(*pos) {
                    Some(Tok::Num(n)) => {
                        *pos += 1;
                        items.push(Bound::Const(-n));
                    }
                    _ => return Err("only constants can be subtracted in bounds".into()),
                }
            }
            _ => break,
        }
    }
    Ok(Bound::sum(items))
}

fn parse_prod(t: &[Tok], pos: &mut usize) -> Result<Bound, String> {
    let mut items = vec![parse_atom(t, pos)?];
    while let Some(Tok::Star) = t.get(*pos) {
        *pos += 1;
        items.push(parse_atom(t, pos)?);
    }
    Ok(Bound::product(items))
}

fn expect(t: &[Tok], pos: &mut usize, tok: Tok) -> Result<(), String> {
    if t.get(*pos) == Some(&tok) {
        *pos += 1;
        Ok(())
    } else {
        Err(format!("expected {tok:?} in bound"))
    }
}

fn parse_nat(t: &[Tok], pos: &mut usize) -> Result<u32, String> {
    match t.get(*pos) {
        Some(Tok::Num(n)) if *n >= 0 => {
            *pos += 1;
            Ok(*n as u32)
        }
        _ => Err("expected a natural number in bound".into()),
    }
}

fn parse_atom(t: &[Tok], pos: &mut usize) -> Result<Bound, String> {
    match t.get(*pos).cloned() {
        Some(Tok::Num(n)) => {
            *pos += 1;
            Ok(Bound::Const(n))
        }
        Some(Tok::Minus) => {
            *pos += 1;
            let n = parse_nat(t, pos)?;
            Ok(Bound::Const(-(n as i64)))
        }
        Some(Tok::Omega) => {
            *pos += 1;
            Ok(Bound::Omega)
        }
        Some(Tok::Bar) => {
            *pos += 1;
            let name = match t.get(*pos) {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return Err("expected variable after `|`".into()),
            };
            *pos += 1;
            expect(t, pos, Tok::Bar)?;
            Ok(Bound::var(&name))
        }
        Some(Tok::LParen) => {
            *pos += 1;
            let b = parse_sum(t, pos)?;
            expect(t, pos, Tok::RParen)?;
            Ok(b)
        }
        Some(Tok::Ident(f)) => {
            *pos += 1;
            expect(t, pos, Tok::LParen)?;
            let b = match f.as_str() {
                "max" => {
                    let mut items = vec![parse_sum(t, pos)?];
                    while let Some(Tok::Comma) = t.get(*pos) {
                        *pos += 1;
                        items.push(parse_sum(t, pos)?);
                    }
                    Bound::maximum(items)
                }
                "pow" => {
                    let k = parse_nat(t, pos)?;
                    expect(t, pos, Tok::Comma)?;
                    Bound::pow(k, parse_sum(t, pos)?)
                }
                "log" => {
                    let k = parse_nat(t, pos)?;
                    expect(t, pos, Tok::Comma)?;
                    Bound::log(k, parse_sum(t, pos)?)
                }
                "div" => {
                    let p = parse_sum(t, pos)?;
                    expect(t, pos, Tok::Comma)?;
                    Bound::div(p, parse_nat(t, pos)?)
                }
                other => return Err(format!("unknown bound function `{other}`")),
            };
            expect(t, pos, Tok::RParen)?;
            Ok(b)
        }
        other => Err(format!("unexpected token {other:?} in bound")),
    }
}

/// Approximate numeric value of a rational, for diagnostics.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x() -> Bound {
        Bound::var("x")
    }

    fn at(pairs: &[(&str, f64)]) -> BTreeMap<Arc<str>, f64> {
        pairs.iter().map(|(k, v)| (Arc::from(*k), *v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let b = Bound::int(2) * x() + Bound::one();
        assert_eq!(b.evaluate(&at(&[("x", 10.0)])), Ext::Fin(21.0));
        assert_eq!(Bound::Omega.evaluate(&at(&[])), Ext::Omega);
        let h = Bound::div(x() + Bound::one(), 2);
        assert_eq!(h.evaluate(&at(&[("x", 5.0)])), Ext::Fin(3.0));
        // negative sums clamp at zero
        let n = x() + Bound::int(-3);
        assert_eq!(n.evaluate(&at(&[("x", 1.0)])), Ext::Fin(0.0));
        assert_eq!(Bound::log(2, x()).evaluate(&at(&[("x", 0.0)])), Ext::Fin(0.0));
        assert_eq!(Bound::log(2, x()).evaluate(&at(&[("x", 1024.0)])), Ext::Fin(10.0));
    }

    #[test]
    fn substitute_examples() {
        let mut th = BTreeMap::new();
        th.insert(Arc::from("y"), Bound::div(x() + Bound::one(), 2));
        assert_eq!(Bound::var("y").substitute(&th), Bound::div(x() + Bound::one(), 2));
        let p = Bound::var("a") + Bound::var("b");
        assert_eq!(p.substitute(&BTreeMap::new()), p);
        let mut th2 = BTreeMap::new();
        th2.insert(Arc::from("a"), Bound::Omega);
        assert_eq!(p.substitute(&th2), Bound::Omega);
    }

    #[test]
    fn leq_examples() {
        assert!(leq_bound(&x(), &(Bound::int(2) * x() + Bound::one())));
        let lhs = x() + Bound::var("u") + Bound::var("v") + Bound::one();
        let mut th = BTreeMap::new();
        th.insert(Arc::from("u"), Bound::div(x(), 2));
        th.insert(Arc::from("v"), Bound::div(x(), 2));
        assert!(leq_bound(&lhs.substitute(&th), &(Bound::int(2) * x() + Bound::one())));
        assert!(!leq_bound(&x(), &Bound::var("y")));
        assert!(leq_bound(&Bound::log(2, x()), &x()));
        assert!(leq_bound(&Bound::max(x(), Bound::var("y")), &(x() + Bound::var("y"))));
        assert!(leq_bound(&x(), &Bound::max(x(), Bound::var("y"))));
        assert!(leq_bound(&(x() + Bound::int(-2)), &x()));
        assert!(!leq_bound(&x(), &(x() + Bound::int(-2))));
    }

    #[test]
    fn class_examples() {
        assert_eq!(asymptotic_class(&(Bound::int(2) * x() + Bound::one())), AsymptoticClass::Poly(1));
        let nlogn = x() * Bound::log(2, x()) + Bound::int(3) * x();
        assert_eq!(asymptotic_class(&nlogn), AsymptoticClass::PolyLog(1, 1));
        assert_eq!(asymptotic_class(&Bound::int(7)), AsymptoticClass::Const);
        assert_eq!(asymptotic_class(&Bound::log(2, x())), AsymptoticClass::Log);
        assert_eq!(asymptotic_class(&Bound::Omega), AsymptoticClass::Unknown);
        assert_eq!(asymptotic_class(&Bound::pow(2, x())), AsymptoticClass::Exp);
        // 4^log2(n) = n^2
        assert_eq!(asymptotic_class(&Bound::pow(4, Bound::log(2, x()))), AsymptoticClass::Poly(2));
        assert!(AsymptoticClass::Log < AsymptoticClass::Poly(1));
        assert!(AsymptoticClass::Poly(1) < AsymptoticClass::PolyLog(1, 1));
        assert!(AsymptoticClass::PolyLog(1, 1) < AsymptoticClass::Poly(2));
        assert!(AsymptoticClass::Poly(9) < AsymptoticClass::Exp);
        assert!(AsymptoticClass::Exp < AsymptoticClass::Unknown);
    }

    #[test]
    fn rendering_round_trips() {
        let b = Bound::maximum(vec![x() + Bound::one(), Bound::log(2, Bound::var("y"))]) * Bound::pow(2, Bound::div(x(), 3));
        let s = b.to_string();
        assert_eq!(parse_bound(&s).unwrap(), b);
        assert_eq!(Bound::Omega.to_string(), "?");
        assert_eq!((x() + Bound::int(-1)).to_string(), "|x| - 1");
    }

    fn arb_bound() -> impl Strategy<Value = Bound> {
        let leaf = prop_oneof![
            (0i64..5).prop_map(Bound::Const),
            prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(Bound::var),
        ];
        leaf.prop_recursive(4, 24, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..3).prop_map(Bound::sum),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Bound::product),
                prop::collection::vec(inner.clone(), 2..3).prop_map(Bound::maximum),
                (2u32..4, inner.clone()).prop_map(|(k, p)| Bound::log(k, p)),
                (inner.clone(), 1u32..4).prop_map(|(p, k)| Bound::div(p, k)),
                (inner, Just(2u32)).prop_map(|(p, k)| Bound::pow(k, Bound::log(2, p))),
            ]
        })
    }

    fn arb_assign() -> impl Strategy<Value = BTreeMap<Arc<str>, f64>> {
        (0u32..40, 0u32..40, 0u32..40).prop_map(|(a, b, c)| at(&[("x", a as f64), ("y", b as f64), ("z", c as f64)]))
    }

    proptest! {
        #[test]
        fn evaluate_is_monotone(b in arb_bound(), m in arb_assign(), d in 0u32..10) {
            let mut m2 = m.clone();
            for v in m2.values_mut() { *v += d as f64; }
            let lo = b.evaluate(&m).finite().unwrap();
            let hi = b.evaluate(&m2).finite().unwrap();
            prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-9, "{} : {} > {}", b, lo, hi);
        }

        #[test]
        fn leq_is_sound(p in arb_bound(), q in arb_bound(), ms in prop::collection::vec(arb_assign(), 20)) {
            if leq_bound(&p, &q) {
                for m in &ms {
                    let (a, b) = (p.evaluate(m).finite().unwrap(), q.evaluate(m).finite().unwrap());
                    prop_assert!(a <= b * (1.0 + 1e-9) + 1e-9, "{} <= {} fails at {:?}: {} > {}", p, q, m, a, b);
                }
            }
        }

        #[test]
        fn substitute_commutes_with_evaluate(p in arb_bound(), a in arb_bound(), m in arb_assign()) {
            let mut th = BTreeMap::new();
            th.insert(Arc::from("x"), a.clone());
            let lhs = p.substitute(&th).evaluate(&m).finite().unwrap();
            let mut m2 = m.clone();
            m2.insert(Arc::from("x"), a.evaluate(&m).finite().unwrap());
            let rhs = p.evaluate(&m2).finite().unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-6 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
        }
    }
}
