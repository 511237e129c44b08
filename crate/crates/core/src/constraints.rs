//! Constraints (theory terms of sort bool): evaluation under the fixed
//! interpretation, SMT encoding, satisfiability and entailment, and a linear
//! abstraction over integer values and list lengths.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use thiserror::Error;

use crate::smt::{Model, Query, Smt, SmtError, SmtResult, SmtValue};
use crate::term::{Op, Sort, Substitution, Term, Value, Var};

pub type Constraint = Term;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("cannot encode `{0}` for the solver")]
    Unencodable(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("ill-sorted application of `{0}`")]
    IllSorted(String),
}

/// Answer of a solver-backed decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl Answer {
    pub fn is_yes(self) -> bool {
        self == Answer::Yes
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverResult {
    Sat(Substitution),
    Unsat,
    Unknown(String),
}

/// Interpretation of a theory operator on values.
pub fn apply_op(op: Op, args: &[Value]) -> Result<Value, EvalError> {
    use Value::*;
    let ill = || EvalError::IllSorted(op.symbol().to_string());
    Ok(match (op, args) {
        (Op::Add, [Int(a), Int(b)]) => Int(a.checked_add(*b).ok_or(EvalError::Overflow)?),
        (Op::Sub, [Int(a), Int(b)]) => Int(a.checked_sub(*b).ok_or(EvalError::Overflow)?),
        (Op::Mul, [Int(a), Int(b)]) => Int(a.checked_mul(*b).ok_or(EvalError::Overflow)?),
        (Op::Div, [Int(_), Int(0)]) | (Op::Mod, [Int(_), Int(0)]) => return Err(EvalError::DivisionByZero),
        (Op::Div, [Int(a), Int(b)]) => Int(a.checked_div_euclid(*b).ok_or(EvalError::Overflow)?),
        (Op::Mod, [Int(a), Int(b)]) => Int(a.checked_rem_euclid(*b).ok_or(EvalError::Overflow)?),
        (Op::Neg, [Int(a)]) => Int(a.checked_neg().ok_or(EvalError::Overflow)?),
        (Op::Eq, [a, b]) if a.sort() == b.sort() => Bool(a == b),
        (Op::Ne, [a, b]) if a.sort() == b.sort() => Bool(a != b),
        (Op::Lt, [Int(a), Int(b)]) => Bool(a < b),
        (Op::Le, [Int(a), Int(b)]) => Bool(a <= b),
        (Op::Gt, [Int(a), Int(b)]) => Bool(a > b),
        (Op::Ge, [Int(a), Int(b)]) => Bool(a >= b),
        (Op::And, [Bool(a), Bool(b)]) => Bool(*a && *b),
        (Op::Or, [Bool(a), Bool(b)]) => Bool(*a || *b),
        (Op::Implies, [Bool(a), Bool(b)]) => Bool(!*a || *b),
        (Op::Not, [Bool(a)]) => Bool(!*a),
        (Op::Cons, [Int(h), List(t)]) => {
            let mut v = Vec::with_capacity(t.len() + 1);
            v.push(*h);
            v.extend(t.iter());
            List(Arc::new(v))
        }
        _ => return Err(ill()),
    })
}

/// Evaluate a ground theory term.
pub fn eval_ground(t: &Term) -> Result<Option<Value>, EvalError> {
    match t {
        Term::Val(v) => Ok(Some(v.clone())),
        Term::Var(_) | Term::Fun(..) => Ok(None),
        Term::Op(op, args) => {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                match eval_ground(a)? {
                    Some(v) => vals.push(v),
                    None => return Ok(None),
                }
            }
            apply_op(*op, &vals).map(Some)
        }
    }
}

/// Does σ respect φ: every variable of φ is mapped to a value and φσ
/// evaluates to true.
pub fn respects(sigma: &Substitution, phi: &Constraint) -> bool {
    for v in phi.vars() {
        match sigma.get(&v) {
            Some(Term::Val(val)) if val.sort() == v.sort => {}
            _ => return false,
        }
    }
    matches!(eval_ground(&phi.subst(sigma)), Ok(Some(Value::Bool(true))))
}

// ---------------------------------------------------------------------------
// SMT encoding

pub const LIST_SORT: &str = "IList";
const LIST_DECL: &str = "(declare-datatypes ((IList 0)) (((nil) (cons (hd Int) (tl IList)))))\n(declare-fun len (IList) Int)";

/// Name of a variable in solver queries.
pub fn smt_name(name: &str) -> String {
    if !name.is_empty()
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "_.'".contains(c))
        && !name.chars().next().is_some_and(|c| c.is_ascii_digit())
        && !["and", "or", "not", "true", "false", "ite", "abs", "div", "mod", "len", "nil", "cons", "hd", "tl"].contains(&name)
    {
        if name.contains('\'') {
            format!("|{name}|")
        } else {
            name.to_string()
        }
    } else {
        format!("|{}|", name.replace('|', "_"))
    }
}

pub fn smt_int(i: i128) -> String {
    if i < 0 {
        format!("(- {})", -i)
    } else {
        i.to_string()
    }
}

pub fn sort_name(s: &Sort) -> Option<&'static str> {
    match s {
        Sort::Int => Some("Int"),
        Sort::Bool => Some("Bool"),
        Sort::List => Some(LIST_SORT),
        _ => None,
    }
}

/// Collects declarations while encoding terms for one query.
#[derive(Clone, Debug, Default)]
pub struct Encoder {
    consts: BTreeMap<String, String>,
    lists: bool,
    /// Encoded list terms needing length axioms.
    list_terms: BTreeSet<String>,
    nonlinear: bool,
    extra: Vec<String>,
}

impl Encoder {
    pub fn new() -> Encoder {
        Encoder::default()
    }

    pub fn declare(&mut self, name: &str, sort: &str) -> String {
        let n = smt_name(name);
        if sort == LIST_SORT {
            self.lists = true;
            self.list_terms.insert(n.clone());
        }
        self.consts.entry(n.clone()).or_insert_with(|| sort.to_string());
        n
    }

    pub fn var(&mut self, v: &Var) -> Result<String, ConstraintError> {
        let sort = sort_name(&v.sort).ok_or_else(|| ConstraintError::Unencodable(v.to_string()))?;
        Ok(self.declare(&v.name, sort))
    }

    pub fn term(&mut self, t: &Term) -> Result<String, ConstraintError> {
        Ok(match t {
            Term::Var(v) => self.var(v)?,
            Term::Val(Value::Int(i)) => smt_int(*i as i128),
            Term::Val(Value::Bool(b)) => b.to_string(),
            Term::Val(Value::List(l)) => {
                self.lists = true;
                let mut s = "nil".to_string();
                for x in l.iter().rev() {
                    s = format!("(cons {} {s})", smt_int(*x as i128));
                    self.list_terms.insert(s.clone());
                }
                s
            }
            Term::Fun(..) => return Err(ConstraintError::Unencodable(t.to_string())),
            Term::Op(op, args) => {
                let a: Vec<String> = args.iter().map(|x| self.term(x)).collect::<Result<_, _>>()?;
                match (op, a.as_slice()) {
                    (Op::Neg, [x]) => format!("(- {x})"),
                    (Op::Not, [x]) => format!("(not {x})"),
                    (Op::Ne, [x, y]) => format!("(not (= {x} {y}))"),
                    (Op::Cons, [x, y]) => {
                        self.lists = true;
                        let s = format!("(cons {x} {y})");
                        self.list_terms.insert(s.clone());
                        self.list_terms.insert(y.clone());
                        s
                    }
                    (Op::Mul, [x, y]) => {
                        if !args[0].is_ground() && !args[1].is_ground() {
                            self.nonlinear = true;
                        }
                        format!("(* {x} {y})")
                    }
                    (Op::Div | Op::Mod, [x, y]) => {
                        if !args[1].is_ground() {
                            self.nonlinear = true;
                        }
                        format!("({} {x} {y})", if *op == Op::Div { "div" } else { "mod" })
                    }
                    (_, [x, y]) => {
                        let sym = match op {
                            Op::Add => "+",
                            Op::Sub => "-",
                            Op::Eq => "=",
                            Op::Lt => "<",
                            Op::Le => "<=",
                            Op::Gt => ">",
                            Op::Ge => ">=",
                            Op::And => "and",
                            Op::Or => "or",
                            Op::Implies => "=>",
                            _ => return Err(ConstraintError::Unencodable(t.to_string())),
                        };
                        format!("({sym} {x} {y})")
                    }
                    _ => return Err(ConstraintError::Unencodable(t.to_string())),
                }
            }
        })
    }

    /// The size `|t|` of a theory term: absolute value or list length.
    pub fn size(&mut self, t: &Term) -> Result<String, ConstraintError> {
        let e = self.term(t)?;
        Ok(match t.sort() {
            Sort::Int => format!("(abs {e})"),
            Sort::List => {
                self.list_terms.insert(e.clone());
                format!("(len {e})")
            }
            Sort::Bool => "1".to_string(),
            _ => return Err(ConstraintError::Unencodable(t.to_string())),
        })
    }

    pub fn mark_nonlinear(&mut self) {
        self.nonlinear = true;
    }

    /// Extra declarations placed before the constants.
    pub fn add_preamble(&mut self, s: impl Into<String>) {
        self.extra.push(s.into());
    }

    pub fn uses_lists(&self) -> bool {
        self.lists
    }

    pub fn logic(&self) -> &'static str {
        match (self.lists, self.nonlinear) {
            (true, _) => "ALL",
            (false, true) => "QF_NIA",
            (false, false) => "QF_LIA",
        }
    }

    /// Build a query asserting all of `asserts`.
    pub fn query(&self, asserts: Vec<String>, want_model: bool) -> Query {
        let mut q = Query::new(self.logic());
        if self.lists {
            q.preamble.push(LIST_DECL.to_string());
        }
        q.preamble.extend(self.extra.iter().cloned());
        for (n, s) in &self.consts {
            q.declare(n, s);
        }
        if self.lists {
            q.assert("(= (len nil) 0)");
            for t in &self.list_terms {
                if t == "nil" {
                    continue;
                }
                q.assert(format!("(>= (len {t}) 0)"));
                q.assert(format!("(=> ((_ is cons) {t}) (= (len {t}) (+ 1 (len (tl {t})))))"));
                q.assert(format!("(=> ((_ is cons) {t}) (>= (len (tl {t})) 0))"));
                q.assert(format!("(=> ((_ is nil) {t}) (= (len {t}) 0))"));
            }
        }
        for a in asserts {
            q.assert(a);
        }
        q.want_model = want_model;
        q
    }
}

fn value_of_model(v: &Var, val: &SmtValue) -> Option<Value> {
    match (&v.sort, val) {
        (Sort::Int, SmtValue::Int(i)) => i64::try_from(*i).ok().map(Value::Int),
        (Sort::Bool, SmtValue::Bool(b)) => Some(Value::Bool(*b)),
        (Sort::List, SmtValue::List(l)) => l.iter().map(|x| i64::try_from(*x).ok()).collect::<Option<Vec<_>>>().map(|l| Value::List(Arc::new(l))),
        _ => None,
    }
}

/// Default value used for variables the solver leaves unconstrained.
fn default_value(s: &Sort) -> Option<Value> {
    match s {
        Sort::Int => Some(Value::Int(0)),
        Sort::Bool => Some(Value::Bool(false)),
        Sort::List => Some(Value::nil()),
        _ => None,
    }
}

/// Values of `vars` in a model; unconstrained variables get defaults.
pub fn model_substitution(model: &Model, vars: &BTreeSet<Var>) -> Substitution {
    let mut sigma = Substitution::new();
    for v in vars {
        let val = model
            .get(smt_name(&v.name).trim_matches('|'))
            .and_then(|m| value_of_model(v, m))
            .or_else(|| default_value(&v.sort));
        if let Some(val) = val {
            sigma.insert(v.clone(), Term::Val(val));
        }
    }
    sigma
}

pub fn check_sat(smt: &Smt, phi: &Constraint) -> Result<SolverResult, ConstraintError> {
    let mut enc = Encoder::new();
    let e = enc.term(phi)?;
    let vars = phi.vars();
    for v in &vars {
        enc.var(v)?;
    }
    match smt.check(&enc.query(vec![e], true))? {
        SmtResult::Sat(model) => {
            let sigma = model_substitution(&model, &vars);
            if cfg!(debug_assertions) && !respects(&sigma, phi) {
                return Ok(SolverResult::Unknown("solver model does not satisfy the constraint".into()));
            }
            Ok(SolverResult::Sat(sigma))
        }
        SmtResult::Unsat => Ok(SolverResult::Unsat),
        SmtResult::Unknown(r) => Ok(SolverResult::Unknown(r)),
    }
}

/// Satisfiability answer without a model: `No` only when proven unsat.
pub fn is_satisfiable(smt: &Smt, phi: &Constraint) -> Answer {
    let mut enc = Encoder::new();
    let Ok(e) = enc.term(phi) else { return Answer::Unknown };
    match smt.check(&enc.query(vec![e], false)) {
        Ok(SmtResult::Sat(_)) => Answer::Yes,
        Ok(SmtResult::Unsat) => Answer::No,
        _ => Answer::Unknown,
    }
}

/// `ψ ⊨ φ`: yes iff `ψ ∧ ¬φ` is unsatisfiable.
pub fn entails(smt: &Smt, psi: &Constraint, phi: &Constraint) -> Result<Answer, ConstraintError> {
    let mut enc = Encoder::new();
    let p = enc.term(psi)?;
    let f = enc.term(phi)?;
    Ok(match smt.check(&enc.query(vec![p, format!("(not {f})")], false))? {
        SmtResult::Unsat => Answer::Yes,
        SmtResult::Sat(_) => Answer::No,
        SmtResult::Unknown(_) => Answer::Unknown,
    })
}

/// Validity of `hyps ⇒ goal` given already-encoded formulas.
pub fn valid_encoded(smt: &Smt, enc: &Encoder, hyps: Vec<String>, goal: String) -> Answer {
    let mut asserts = hyps;
    asserts.push(format!("(not {goal})"));
    match smt.check(&enc.query(asserts, false)) {
        Ok(SmtResult::Unsat) => Answer::Yes,
        Ok(SmtResult::Sat(_)) => Answer::No,
        _ => Answer::Unknown,
    }
}

// ---------------------------------------------------------------------------
// Linear abstraction

/// `Σ coeffs[v]·v + konst` over integer values and list lengths. List
/// variables appear under the name returned by [`len_name`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, i64>,
    pub konst: i64,
}

pub fn len_name(v: &str) -> String {
    format!("len({v})")
}

impl LinExpr {
    pub fn constant(c: i64) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            konst: c,
        }
    }

    pub fn var(name: &str) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.to_string(), 1);
        LinExpr { coeffs, konst: 0 }
    }

    pub fn add(&self, o: &LinExpr) -> Option<LinExpr> {
        let mut r = self.clone();
        for (v, c) in &o.coeffs {
            let e = r.coeffs.entry(v.clone()).or_insert(0);
            *e = e.checked_add(*c)?;
        }
        r.coeffs.retain(|_, c| *c != 0);
        r.konst = r.konst.checked_add(o.konst)?;
        Some(r)
    }

    pub fn scale(&self, k: i64) -> Option<LinExpr> {
        let mut r = LinExpr::constant(self.konst.checked_mul(k)?);
        for (v, c) in &self.coeffs {
            let m = c.checked_mul(k)?;
            if m != 0 {
                r.coeffs.insert(v.clone(), m);
            }
        }
        Some(r)
    }

    pub fn sub(&self, o: &LinExpr) -> Option<LinExpr> {
        self.add(&o.scale(-1)?)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }

    /// Evaluate under integer values for the variables.
    pub fn eval(&self, m: &BTreeMap<String, i64>) -> Option<i64> {
        let mut s = self.konst as i128;
        for (v, c) in &self.coeffs {
            s += (*c as i128) * (*m.get(v)? as i128);
        }
        i64::try_from(s).ok()
    }

    /// SMT rendering; variables are mapped through `name`.
    pub fn to_smt(&self, name: &dyn Fn(&str) -> String) -> String {
        let mut parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(v, c)| if *c == 1 { name(v) } else { format!("(* {} {})", smt_int(*c as i128), name(v)) })
            .collect();
        if self.konst != 0 || parts.is_empty() {
            parts.push(smt_int(self.konst as i128));
        }
        if parts.len() == 1 {
            parts.pop().unwrap_or_default()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

/// Linear form of an integer term (or the length of a list term).
pub fn linearize(t: &Term) -> Option<LinExpr> {
    match t {
        Term::Var(v) => match v.sort {
            Sort::Int => Some(LinExpr::var(&v.name)),
            Sort::List => Some(LinExpr::var(&len_name(&v.name))),
            _ => None,
        },
        Term::Val(Value::Int(i)) => Some(LinExpr::constant(*i)),
        Term::Val(Value::List(l)) => Some(LinExpr::constant(l.len() as i64)),
        Term::Val(_) | Term::Fun(..) => None,
        Term::Op(op, args) => match (op, args.as_slice()) {
            (Op::Add, [a, b]) => linearize(a)?.add(&linearize(b)?),
            (Op::Sub, [a, b]) => linearize(a)?.sub(&linearize(b)?),
            (Op::Neg, [a]) => linearize(a)?.scale(-1),
            (Op::Mul, [a, b]) => {
                let (la, lb) = (linearize(a)?, linearize(b)?);
                if la.is_constant() {
                    lb.scale(la.konst)
                } else if lb.is_constant() {
                    la.scale(lb.konst)
                } else {
                    None
                }
            }
            (Op::Cons, [_, tl]) => linearize(tl)?.add(&LinExpr::constant(1)),
            _ => None,
        },
    }
}

/// A linear atom `e >= 0` or `e = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinAtom {
    Ge(LinExpr),
    Eq(LinExpr),
}

impl LinAtom {
    pub fn expr(&self) -> &LinExpr {
        match self {
            LinAtom::Ge(e) | LinAtom::Eq(e) => e,
        }
    }

    pub fn holds(&self, m: &BTreeMap<String, i64>) -> Option<bool> {
        let v = self.expr().eval(m)?;
        Some(match self {
            LinAtom::Ge(_) => v >= 0,
            LinAtom::Eq(_) => v == 0,
        })
    }

    pub fn to_smt(&self, name: &dyn Fn(&str) -> String) -> String {
        match self {
            LinAtom::Ge(e) => format!("(>= {} 0)", e.to_smt(name)),
            LinAtom::Eq(e) => format!("(= {} 0)", e.to_smt(name)),
        }
    }
}

fn lin_atom(op: Op, a: &Term, b: &Term) -> Option<LinAtom> {
    if a.sort() == Sort::List || b.sort() == Sort::List {
        return match op {
            Op::Eq => Some(LinAtom::Eq(linearize(a)?.sub(&linearize(b)?)?)),
            _ => None,
        };
    }
    if a.sort() != Sort::Int {
        return None;
    }
    let (la, lb) = (linearize(a)?, linearize(b)?);
    Some(match op {
        Op::Ge => LinAtom::Ge(la.sub(&lb)?),
        Op::Le => LinAtom::Ge(lb.sub(&la)?),
        Op::Gt => LinAtom::Ge(la.sub(&lb)?.add(&LinExpr::constant(-1))?),
        Op::Lt => LinAtom::Ge(lb.sub(&la)?.add(&LinExpr::constant(-1))?),
        Op::Eq => LinAtom::Eq(la.sub(&lb)?),
        _ => return None,
    })
}

/// Linear atoms implied by φ. Non-linear atoms, disjunctions and
/// disequalities are dropped, so the result is weaker than φ. List
/// variables contribute nonnegative lengths.
pub fn linear_abstraction(phi: &Constraint) -> Vec<LinAtom> {
    let mut out = Vec::new();
    for c in phi.conjuncts() {
        match &c {
            Term::Op(op @ (Op::Ge | Op::Le | Op::Gt | Op::Lt | Op::Eq), args) => {
                if let Some(a) = lin_atom(*op, &args[0], &args[1]) {
                    out.push(a);
                }
            }
            Term::Op(Op::Not, args) => {
                let neg = match &args[0] {
                    Term::Op(Op::Ge, a) => Some((Op::Lt, a)),
                    Term::Op(Op::Le, a) => Some((Op::Gt, a)),
                    Term::Op(Op::Gt, a) => Some((Op::Le, a)),
                    Term::Op(Op::Lt, a) => Some((Op::Ge, a)),
                    _ => None,
                };
                if let Some((op, a)) = neg {
                    if let Some(at) = lin_atom(op, &a[0], &a[1]) {
                        out.push(at);
                    }
                }
            }
            _ => {}
        }
    }
    for v in phi.vars() {
        if v.sort == Sort::List {
            out.push(LinAtom::Ge(LinExpr::var(&len_name(&v.name))));
        }
    }
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smt::SmtConfig;

    fn x() -> Term {
        Term::int_var("x")
    }
    fn y() -> Term {
        Term::int_var("y")
    }
    fn ge(a: Term, b: Term) -> Term {
        Term::bin(Op::Ge, a, b)
    }
    fn smt() -> Smt {
        Smt::new(SmtConfig::default())
    }

    #[test]
    fn sat_examples() {
        let s = smt();
        let phi = Term::and(ge(x(), Term::int(1)), ge(y(), Term::int(1)));
        match check_sat(&s, &phi).unwrap() {
            SolverResult::Sat(m) => assert!(respects(&m, &phi)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(check_sat(&s, &Term::tt()).unwrap(), SolverResult::Sat(_)));
        let bad = Term::and(ge(x(), Term::int(1)), Term::bin(Op::Le, x(), Term::int(0)));
        assert_eq!(check_sat(&s, &bad).unwrap(), SolverResult::Unsat);
    }

    #[test]
    fn entailment_examples() {
        let s = smt();
        let u = Term::int_var("u");
        let v = Term::int_var("v");
        let two = |t: Term| Term::bin(Op::Mul, Term::int(2), t);
        // side condition of the mergesort recursion
        let psi = Term::and_all(vec![
            ge(x(), Term::int(2)),
            ge(u.clone(), Term::int(0)),
            ge(v.clone(), Term::int(0)),
            ge(Term::bin(Op::Add, x(), Term::int(1)), two(u.clone())),
            ge(two(u.clone()), x()),
            ge(x(), two(v.clone())),
            ge(Term::bin(Op::Add, two(v), Term::int(1)), x()),
        ]);
        let goal = ge(Term::bin(Op::Add, x(), Term::int(1)), two(u));
        assert_eq!(entails(&s, &psi, &goal).unwrap(), Answer::Yes);
        assert_eq!(entails(&s, &psi, &psi).unwrap(), Answer::Yes);
        assert_eq!(entails(&s, &ge(x(), Term::int(0)), &ge(x(), Term::int(1))).unwrap(), Answer::No);
    }

    #[test]
    fn respects_examples() {
        let phi = Term::and(ge(x(), Term::int(1)), ge(y(), Term::int(1)));
        let mut s = Substitution::new();
        s.insert(Var::int("x"), Term::int(3));
        s.insert(Var::int("y"), Term::int(2));
        assert!(respects(&s, &phi));
        let mut t = Substitution::new();
        t.insert(Var::int("x"), Term::bin(Op::Add, y(), Term::int(1)));
        assert!(!respects(&t, &ge(x(), Term::int(1))));
        let mut z = Substitution::new();
        z.insert(Var::int("x"), Term::int(0));
        assert!(!respects(&z, &ge(x(), Term::int(1))));
    }

    #[test]
    fn lists_are_encoded() {
        let s = smt();
        let xs = Term::var("xs", Sort::List);
        let h = Term::int_var("h");
        let t = Term::var("t", Sort::List);
        let phi = Term::and(
            Term::bin(Op::Eq, xs.clone(), Term::bin(Op::Cons, h.clone(), t.clone())),
            Term::bin(Op::Le, h, Term::int(3)),
        );
        match check_sat(&s, &phi).unwrap() {
            SolverResult::Sat(m) => assert!(respects(&m, &phi), "{m:?}"),
            other => panic!("{other:?}"),
        }
        // |t| < |xs| whenever xs = h :: t
        let mut enc = Encoder::new();
        let p = enc.term(&phi).unwrap();
        let (st, sx) = (enc.size(&t).unwrap(), enc.size(&xs).unwrap());
        assert_eq!(valid_encoded(&s, &enc, vec![p], format!("(< {st} {sx})")), Answer::Yes);
    }

    #[test]
    fn evaluation() {
        assert_eq!(apply_op(Op::Div, &[Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(-4));
        assert_eq!(apply_op(Op::Mod, &[Value::Int(-7), Value::Int(2)]).unwrap(), Value::Int(1));
        assert_eq!(apply_op(Op::Div, &[Value::Int(1), Value::Int(0)]), Err(EvalError::DivisionByZero));
        let c = Term::bin(Op::Cons, Term::int(1), Term::Val(Value::nil()));
        assert_eq!(eval_ground(&c).unwrap(), Some(Value::List(Arc::new(vec![1]))));
    }

    #[test]
    fn abstraction() {
        let u = Term::int_var("u");
        let phi = Term::and_all(vec![
            Term::bin(Op::Lt, x(), y()),
            Term::bin(Op::Ge, Term::bin(Op::Mul, x(), y()), Term::int(0)),
            Term::bin(Op::Or, ge(x(), Term::int(0)), ge(u, Term::int(0))),
        ]);
        let atoms = linear_abstraction(&phi);
        assert_eq!(atoms.len(), 1);
        let mut m = BTreeMap::new();
        m.insert("x".to_string(), 1);
        m.insert("y".to_string(), 2);
        assert_eq!(atoms[0].holds(&m), Some(true));
        m.insert("y".to_string(), 1);
        assert_eq!(atoms[0].holds(&m), Some(false));
    }
}
