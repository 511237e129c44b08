//! Constrained rewrite systems, calculation steps, innermost rewriting and a
//! bounded interpreter computing derivation heights of concrete start terms.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::rc::Rc;
use std::sync::Arc;

use thiserror::Error;

use crate::constraints::{apply_op, check_sat, eval_ground, respects, EvalError, SolverResult};
use crate::smt::Smt;
use crate::term::{FunSym, Op, Signature, Sort, SymKind, Substitution, Term, Value, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("rule {0}: left-hand side must be rooted in a term symbol")]
    BadLhs(usize),
    #[error("rule {0}: guard must be a theory term of sort bool")]
    BadGuard(usize),
    #[error("rule {rule}: sorts of left- and right-hand side differ ({lhs} vs {rhs})")]
    RuleSort { rule: usize, lhs: Sort, rhs: Sort },
    #[error("initial term must have the shape f(x1, ..., xn) with distinct variables, found `{0}`")]
    InitShape(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("rule {rule}: guard admits unboundedly many values for `{var}`")]
    UnboundedNondeterminism { rule: usize, var: String },
    #[error("evaluation error: {0}")]
    Eval(#[from] EvalError),
    #[error("solver could not decide a guard: {0}")]
    Solver(String),
    #[error("infinite derivation detected")]
    Diverges,
}

/// A constrained rule `lhs → rhs [guard]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub id: usize,
    pub lhs: Term,
    pub rhs: Term,
    pub guard: Term,
}

impl Rule {
    pub fn new(id: usize, lhs: Term, rhs: Term, guard: Term) -> Rule {
        Rule { id, lhs, rhs, guard }
    }

    pub fn root(&self) -> Option<&Arc<FunSym>> {
        self.lhs.root_fun()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut s = self.lhs.vars();
        self.rhs.collect_vars(&mut s);
        self.guard.collect_vars(&mut s);
        s
    }

    /// Variables of the guard and right-hand side not bound by the lhs.
    pub fn extra_vars(&self) -> BTreeSet<Var> {
        let l = self.lhs.vars();
        let mut s = self.guard.vars();
        self.rhs.collect_vars(&mut s);
        s.retain(|v| !l.contains(v));
        s
    }

    /// Left-linear form with only variables or non-theory patterns as lhs
    /// arguments: repeated variables `x` become `x'` with `x = x'` in the
    /// guard, theory patterns `p` become fresh variables `a` with `a = p`.
    /// Unguarded extra variables of theory sort are added to the guard as
    /// `y = y` so that they range over values.
    pub fn normalized(&self) -> Rule {
        let mut used: BTreeSet<Arc<str>> = self.vars().into_iter().map(|v| v.name).collect();
        let mut fresh = |base: &str| -> Arc<str> {
            let mut n = base.to_string();
            while used.contains(n.as_str()) {
                n.push('\'');
            }
            let a: Arc<str> = Arc::from(n.as_str());
            used.insert(a.clone());
            a
        };
        let mut guard = Vec::new();
        let mut seen = BTreeSet::new();
        let lhs = match &self.lhs {
            Term::Fun(f, args) => {
                let mut new_args = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    let na = if matches!(a, Term::Val(_) | Term::Op(..)) && a.sort().is_theory() {
                        let v = Var::new(&fresh(&format!("a{}", i + 1)), a.sort());
                        guard.push(Term::bin(Op::Eq, Term::Var(v.clone()), a.clone()));
                        seen.extend(a.vars());
                        Term::Var(v)
                    } else {
                        linearize_pattern(a, &mut seen, &mut guard, &mut fresh)
                    };
                    new_args.push(na);
                }
                Term::Fun(f.clone(), new_args)
            }
            t => t.clone(),
        };
        let mut g = self.guard.clone();
        for c in guard {
            g = Term::and(g, c);
        }
        let bound: BTreeSet<Var> = lhs.vars().into_iter().chain(g.vars()).collect();
        for v in self.rhs.vars() {
            if !bound.contains(&v) && v.sort.is_theory() {
                g = Term::and(g, Term::bin(Op::Eq, Term::Var(v.clone()), Term::Var(v)));
            }
        }
        Rule::new(self.id, lhs, self.rhs.clone(), g)
    }
}

fn linearize_pattern(
    t: &Term,
    seen: &mut BTreeSet<Var>,
    guard: &mut Vec<Term>,
    fresh: &mut dyn FnMut(&str) -> Arc<str>,
) -> Term {
    match t {
        Term::Var(v) => {
            if seen.insert(v.clone()) {
                t.clone()
            } else {
                let nv = Var::new(&fresh(&v.name), v.sort.clone());
                guard.push(Term::bin(Op::Eq, Term::Var(v.clone()), Term::Var(nv.clone())));
                Term::Var(nv)
            }
        }
        Term::Fun(f, args) => Term::Fun(f.clone(), args.iter().map(|a| linearize_pattern(a, seen, guard, fresh)).collect()),
        Term::Op(o, args) => Term::Op(*o, args.iter().map(|a| linearize_pattern(a, seen, guard, fresh)).collect()),
        Term::Val(_) => t.clone(),
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.lhs, self.rhs)?;
        if !self.guard.is_true() {
            write!(f, " [{}]", self.guard)?;
        }
        Ok(())
    }
}

/// A logically constrained rewrite system with its initial state.
#[derive(Clone, Debug)]
pub struct Lctrs {
    pub signature: Signature,
    pub rules: Vec<Rule>,
    pub init: Term,
    pub init_guard: Term,
}

impl Lctrs {
    /// Validate and normalize. If the start symbol occurs on a right-hand
    /// side, a fresh start symbol with a single rule into the old one is
    /// introduced.
    pub fn new(signature: Signature, rules: Vec<Rule>, init: Term, init_guard: Term) -> Result<Lctrs, SystemError> {
        let mut rules: Vec<Rule> = rules.iter().map(Rule::normalized).collect();
        for r in &rules {
            match &r.lhs {
                Term::Fun(f, _) if f.kind == SymKind::Plain => {}
                _ => return Err(SystemError::BadLhs(r.id)),
            }
            if r.guard.sort() != Sort::Bool || !r.guard.is_theory() {
                return Err(SystemError::BadGuard(r.id));
            }
            let (ls, rs) = (r.lhs.sort(), r.rhs.sort());
            if ls != rs && !r.rhs.root_fun().is_some_and(|f| f.is_tuple()) {
                return Err(SystemError::RuleSort { rule: r.id, lhs: ls, rhs: rs });
            }
        }
        let mut init = init;
        let Term::Fun(f0, args) = &init else {
            return Err(SystemError::InitShape(init.to_string()));
        };
        let distinct: BTreeSet<_> = args.iter().collect();
        if distinct.len() != args.len() || !args.iter().all(|a| matches!(a, Term::Var(_))) {
            return Err(SystemError::InitShape(init.to_string()));
        }
        let on_rhs = rules.iter().any(|r| !r.rhs.positions_where(|g| g.name == f0.name).is_empty());
        if on_rhs {
            let mut name = format!("{}_start", f0.name);
            while signature.get(&name).is_some() {
                name.push('_');
            }
            let start = signature.intern(FunSym::new(&name, f0.arg_sorts.clone(), f0.res_sort.clone()));
            let id = rules.iter().map(|r| r.id).max().unwrap_or(0) + 1;
            let new_init = Term::app(&start, args.clone());
            rules.insert(0, Rule::new(id, new_init.clone(), init.clone(), Term::tt()));
            init = new_init;
        }
        Ok(Lctrs {
            signature,
            rules,
            init,
            init_guard,
        })
    }

    pub fn defined_symbols(&self) -> BTreeSet<Arc<str>> {
        self.rules.iter().filter_map(|r| r.root().map(|f| f.name.clone())).collect()
    }

    pub fn rule(&self, id: usize) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn start_symbol(&self) -> Arc<FunSym> {
        self.init.root_fun().cloned().expect("validated initial term")
    }

    /// The input variables x⃗ of the initial term.
    pub fn input_vars(&self) -> Vec<Var> {
        self.init
            .args()
            .iter()
            .filter_map(|a| match a {
                Term::Var(v) => Some(v.clone()),
                _ => None,
            })
            .collect()
    }

    /// Integer transition system shape: variable arguments on the left,
    /// theory arguments on the right (possibly under a tuple), integer sorts
    /// only.
    pub fn is_its(&self) -> bool {
        let int_only = |t: &Term| {
            let mut ok = true;
            t.visit(&mut |s| match s {
                Term::Var(v) if v.sort != Sort::Int && v.sort != Sort::Bool => ok = false,
                Term::Val(Value::List(_)) | Term::Op(Op::Cons, _) => ok = false,
                _ => {}
            });
            ok
        };
        self.rules.iter().all(|r| {
            let lhs_ok = r.lhs.args().iter().all(|a| matches!(a, Term::Var(v) if v.sort == Sort::Int));
            let comps = r.rhs.tuple_components();
            let rhs_ok = comps
                .iter()
                .all(|c| matches!(c, Term::Fun(f, a) if f.kind == SymKind::Plain && a.iter().all(|x| x.is_theory() && x.sort() == Sort::Int)));
            lhs_ok && rhs_ok && int_only(&r.guard) && int_only(&r.lhs) && int_only(&r.rhs)
        })
    }
}

impl fmt::Display for Lctrs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "({}) {}", r.id, r)?;
        }
        Ok(())
    }
}

/// Innermost-exhaustive calculation steps.
pub fn calc_normalize(t: &Term) -> Result<Term, EvalError> {
    Ok(match t {
        Term::Var(_) | Term::Val(_) => t.clone(),
        Term::Fun(f, args) => Term::Fun(f.clone(), args.iter().map(calc_normalize).collect::<Result<_, _>>()?),
        Term::Op(op, args) => {
            let args: Vec<Term> = args.iter().map(calc_normalize).collect::<Result<_, _>>()?;
            let vals: Option<Vec<Value>> = args.iter().map(|a| a.as_value().cloned()).collect();
            match vals {
                Some(vals) => Term::Val(apply_op(*op, &vals)?),
                None => Term::Op(*op, args),
            }
        }
    })
}

/// Upper limit on the number of guard instantiations enumerated per step.
const MAX_MODELS: usize = 64;

/// Innermost rewriting on ground terms, with guard variables enumerated
/// through the solver when they are not bound by matching.
pub struct Interpreter<'a> {
    sys: &'a Lctrs,
    smt: &'a Smt,
    defined: BTreeSet<Arc<str>>,
}

impl<'a> Interpreter<'a> {
    pub fn new(sys: &'a Lctrs, smt: &'a Smt) -> Interpreter<'a> {
        Interpreter {
            sys,
            smt,
            defined: sys.defined_symbols(),
        }
    }

    fn is_defined(&self, t: &Term) -> bool {
        matches!(t, Term::Fun(f, _) if self.defined.contains(&f.name))
    }

    /// All rule steps at the root of `t`.
    pub fn root_steps(&self, t: &Term) -> Result<Vec<(usize, Term)>, OracleError> {
        let mut out = Vec::new();
        let Term::Fun(f, _) = t else { return Ok(out) };
        for r in &self.sys.rules {
            if r.root().map(|g| &g.name) != Some(&f.name) {
                continue;
            }
            let Some(sigma) = r.lhs.match_term(t) else { continue };
            if r.guard.vars().iter().any(|v| sigma.get(v).is_some_and(|b| !b.is_value())) {
                continue;
            }
            for theta in self.instantiate(r, &sigma)? {
                out.push((r.id, calc_normalize(&r.rhs.subst(&theta))?));
            }
        }
        Ok(out)
    }

    /// All extensions of σ to the guard variables that respect the guard.
    fn instantiate(&self, r: &Rule, sigma: &Substitution) -> Result<Vec<Substitution>, OracleError> {
        let mut sigma = sigma.clone();
        let mut unbound: BTreeSet<Var> = r.guard.vars().into_iter().filter(|v| !sigma.contains_key(v)).collect();
        // propagate equations `x = e` with e ground and destructure lists
        loop {
            let mut changed = false;
            for c in r.guard.conjuncts() {
                let Term::Op(Op::Eq, a) = &c else { continue };
                let (l, rr) = (calc_normalize(&a[0].subst(&sigma))?, calc_normalize(&a[1].subst(&sigma))?);
                for (x, e) in [(&l, &rr), (&rr, &l)] {
                    match (x, e) {
                        (Term::Var(v), Term::Val(_)) if unbound.contains(v) => {
                            sigma.insert(v.clone(), e.clone());
                            unbound.remove(v);
                            changed = true;
                        }
                        (Term::Op(Op::Cons, parts), Term::Val(Value::List(l))) => {
                            let Some((h, t)) = l.split_first() else { return Ok(Vec::new()) };
                            let tail = Term::Val(Value::List(Arc::new(t.to_vec())));
                            for (p, val) in [(&parts[0], Term::int(*h)), (&parts[1], tail)] {
                                if let Term::Var(v) = p {
                                    if unbound.remove(v) {
                                        sigma.insert(v.clone(), val);
                                        changed = true;
                                    }
                                }
                            }
                        }
                        _ => {}
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let phi = calc_normalize(&r.guard.subst(&sigma))?;
        if unbound.is_empty() {
            return Ok(if respects(&sigma, &r.guard) { vec![sigma] } else { Vec::new() });
        }
        if let Some(v) = unbound.iter().find(|v| v.sort != Sort::Int && v.sort != Sort::Bool) {
            return Err(OracleError::UnboundedNondeterminism { rule: r.id, var: v.name.to_string() });
        }
        let mut out = Vec::new();
        let mut blocked = phi.clone();
        loop {
            match check_sat(self.smt, &blocked).map_err(|e| OracleError::Solver(e.to_string()))? {
                SolverResult::Unsat => break,
                SolverResult::Unknown(why) => return Err(OracleError::Solver(why)),
                SolverResult::Sat(m) => {
                    if out.len() >= MAX_MODELS {
                        let var = unbound.iter().next().map(|v| v.name.to_string()).unwrap_or_default();
                        return Err(OracleError::UnboundedNondeterminism { rule: r.id, var });
                    }
                    let mut s = sigma.clone();
                    let mut block = Vec::new();
                    for v in &unbound {
                        let val = m.get(v).cloned().unwrap_or(Term::int(0));
                        block.push(Term::bin(Op::Eq, Term::Var(v.clone()), val.clone()));
                        s.insert(v.clone(), val);
                    }
                    blocked = Term::and(blocked, Term::op(Op::Not, vec![Term::and_all(block)]));
                    if respects(&s, &r.guard) {
                        out.push(s);
                    }
                }
            }
        }
        Ok(out)
    }

    /// One-step innermost successors; `None` marks a normal form.
    fn successors_of(&self, t: &Term) -> Result<Option<Vec<(usize, Term)>>, OracleError> {
        let args = t.args();
        let mut out = Vec::new();
        let mut all_nf = true;
        for (i, a) in args.iter().enumerate() {
            if let Some(steps) = self.successors_of(a)? {
                all_nf = false;
                for (id, s) in steps {
                    let mut new_args = args.to_vec();
                    new_args[i] = s;
                    let nt = match t {
                        Term::Fun(f, _) => Term::Fun(f.clone(), new_args),
                        Term::Op(o, _) => Term::Op(*o, new_args),
                        _ => unreachable!("only applications have arguments"),
                    };
                    out.push((id, calc_normalize(&nt)?));
                }
            }
        }
        if !all_nf {
            return Ok(Some(out));
        }
        if self.is_defined(t) {
            let steps = self.root_steps(t)?;
            if !steps.is_empty() {
                return Ok(Some(steps));
            }
        }
        Ok(None)
    }

    pub fn successors(&self, t: &Term) -> Result<Vec<(usize, Term)>, OracleError> {
        Ok(self.successors_of(&calc_normalize(t)?)?.unwrap_or_default())
    }
}

/// All one-step innermost successors of `t` with the rule used.
pub fn innermost_successors(t: &Term, sys: &Lctrs, smt: &Smt) -> Result<Vec<(usize, Term)>, OracleError> {
    Interpreter::new(sys, smt).successors(t)
}

type Reach = Rc<BTreeMap<Term, u64>>;

/// Exhaustive search for the longest innermost derivation. Tracks, for each
/// term, the reachable normal forms with the maximal number of rule steps.
struct HeightSearch<'a> {
    it: Interpreter<'a>,
    fuel: u64,
    memo: HashMap<Term, Reach>,
    root_memo: HashMap<Term, Reach>,
    active: HashSet<Term>,
}

const MAX_COMBINATIONS: usize = 1 << 16;

impl HeightSearch<'_> {
    fn spend(&mut self, n: u64) -> Result<(), OracleError> {
        if self.fuel < n {
            return Err(OracleError::FuelExhausted);
        }
        self.fuel -= n;
        Ok(())
    }

    fn reach(&mut self, t: &Term) -> Result<Reach, OracleError> {
        if let Some(r) = self.memo.get(t) {
            return Ok(r.clone());
        }
        let res = match t {
            Term::Var(_) | Term::Val(_) => Rc::new(BTreeMap::from([(t.clone(), 0)])),
            Term::Fun(_, args) | Term::Op(_, args) => {
                let mut combos: Vec<(Vec<Term>, u64)> = vec![(Vec::new(), 0)];
                for a in args {
                    let ra = self.reach(a)?;
                    let mut next = Vec::with_capacity(combos.len() * ra.len());
                    for (pre, s) in &combos {
                        for (nf, s2) in ra.iter() {
                            let mut v = pre.clone();
                            v.push(nf.clone());
                            next.push((v, s + s2));
                        }
                    }
                    if next.len() > MAX_COMBINATIONS {
                        return Err(OracleError::FuelExhausted);
                    }
                    combos = next;
                }
                let mut out: BTreeMap<Term, u64> = BTreeMap::new();
                for (nfs, s) in combos {
                    let u = match t {
                        Term::Fun(f, _) => Term::Fun(f.clone(), nfs),
                        Term::Op(o, _) => calc_normalize(&Term::Op(*o, nfs))?,
                        _ => unreachable!("only applications have arguments"),
                    };
                    let ru = if self.it.is_defined(&u) { self.reach_root(&u)? } else { Rc::new(BTreeMap::from([(u, 0)])) };
                    for (nf, s2) in ru.iter() {
                        let e = out.entry(nf.clone()).or_insert(0);
                        *e = (*e).max(s + s2);
                    }
                }
                Rc::new(out)
            }
        };
        self.memo.insert(t.clone(), res.clone());
        Ok(res)
    }

    /// Reachable normal forms of a term whose arguments are normal.
    fn reach_root(&mut self, u: &Term) -> Result<Reach, OracleError> {
        if let Some(r) = self.root_memo.get(u) {
            return Ok(r.clone());
        }
        if !self.active.insert(u.clone()) {
            return Err(OracleError::Diverges);
        }
        let steps = self.it.root_steps(u)?;
        self.spend(steps.len() as u64)?;
        let res = if steps.is_empty() {
            Rc::new(BTreeMap::from([(u.clone(), 0)]))
        } else {
            let mut out: BTreeMap<Term, u64> = BTreeMap::new();
            for (_, w) in steps {
                for (nf, s) in self.reach(&w)?.iter() {
                    let e = out.entry(nf.clone()).or_insert(0);
                    *e = (*e).max(s + 1);
                }
            }
            Rc::new(out)
        };
        self.active.remove(u);
        self.root_memo.insert(u.clone(), res.clone());
        Ok(res)
    }
}

/// The maximal number of rule steps of an innermost derivation from `t`;
/// calculation steps are free. `fuel` bounds the number of explored rule
/// steps.
pub fn derivation_height_sample(t: &Term, sys: &Lctrs, smt: &Smt, fuel: u64) -> Result<u64, OracleError> {
    let t = calc_normalize(t)?;
    let smt = smt.fork();
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(1 << 29)
            .spawn_scoped(s, move || {
                let mut search = HeightSearch {
                    it: Interpreter::new(sys, &smt),
                    fuel,
                    memo: HashMap::new(),
                    root_memo: HashMap::new(),
                    active: HashSet::new(),
                };
                let r = search.reach(&t)?;
                Ok(r.values().copied().max().unwrap_or(0))
            })
            .expect("spawn interpreter thread")
            .join()
            .unwrap_or(Err(OracleError::FuelExhausted))
    })
}

/// Instantiate the initial term with values for the input variables.
pub fn instantiate_init(sys: &Lctrs, values: &[Value]) -> Option<Term> {
    let vars = sys.input_vars();
    if vars.len() != values.len() {
        return None;
    }
    let sigma: Substitution = vars.iter().cloned().zip(values.iter().map(|v| Term::Val(v.clone()))).collect();
    let guard_vars = sys.init_guard.vars();
    if guard_vars.iter().all(|v| sigma.contains_key(v)) && !respects(&sigma, &sys.init_guard) {
        return None;
    }
    if !guard_vars.is_empty() && guard_vars.iter().any(|v| !sigma.contains_key(v)) {
        let g = sys.init_guard.subst(&sigma);
        if matches!(eval_ground(&g), Ok(Some(Value::Bool(false)))) {
            return None;
        }
    }
    Some(sys.init.subst(&sigma))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::smt::SmtConfig;

    pub(crate) fn sym(sig: &Signature, name: &str, n: usize) -> Arc<FunSym> {
        sig.intern(FunSym::new(name, vec![Sort::Int; n], Sort::User(Arc::from("o"))))
    }

    fn v(n: &str) -> Term {
        Term::int_var(n)
    }

    fn smt() -> Smt {
        Smt::new(SmtConfig::default())
    }

    /// f(x) → f(x − 1) [x ≥ 1], started from init(x) → f(x).
    fn countdown() -> Lctrs {
        let sig = Signature::new();
        let (init, f) = (sym(&sig, "init", 1), sym(&sig, "f", 1));
        let rules = vec![
            Rule::new(1, Term::app(&init, vec![v("x")]), Term::app(&f, vec![v("x")]), Term::tt()),
            Rule::new(
                2,
                Term::app(&f, vec![v("x")]),
                Term::app(&f, vec![Term::bin(Op::Sub, v("x"), Term::int(1))]),
                Term::bin(Op::Ge, v("x"), Term::int(1)),
            ),
        ];
        Lctrs::new(sig, rules, Term::app(&init, vec![v("x")]), Term::tt()).unwrap()
    }

    #[test]
    fn calc() {
        let t = Term::bin(
            Op::Add,
            Term::bin(Op::Add, Term::int(1), Term::int(2)),
            Term::bin(Op::Mul, Term::int(3), Term::int(0)),
        );
        assert_eq!(calc_normalize(&t).unwrap(), Term::int(3));
        assert_eq!(calc_normalize(&Term::int(5)).unwrap(), Term::int(5));
        let sig = Signature::new();
        let len = sig.intern(FunSym::new("len", vec![Sort::List, Sort::Int], Sort::User(Arc::from("o"))));
        let l2 = Term::Val(Value::List(Arc::new(vec![2])));
        let t = Term::app(&len, vec![l2.clone(), Term::bin(Op::Sub, Term::int(2), Term::int(1))]);
        assert_eq!(calc_normalize(&t).unwrap(), Term::app(&len, vec![l2, Term::int(1)]));
    }

    #[test]
    fn defined_and_its() {
        let sys = countdown();
        let d: Vec<String> = sys.defined_symbols().iter().map(|s| s.to_string()).collect();
        assert_eq!(d, vec!["f", "init"]);
        assert!(sys.is_its());
        let empty = Lctrs::new(Signature::new(), vec![], Term::app(&sym(&Signature::new(), "i", 0), vec![]), Term::tt()).unwrap();
        assert!(empty.defined_symbols().is_empty());
    }

    #[test]
    fn left_linearization() {
        let sig = Signature::new();
        let g = sym(&sig, "g", 2);
        let r = Rule::new(1, Term::app(&g, vec![v("m"), v("m")]), Term::app(&g, vec![v("m"), Term::int(0)]), Term::tt());
        let n = r.normalized();
        assert_eq!(n.lhs, Term::app(&g, vec![v("m"), v("m'")]));
        assert_eq!(n.guard, Term::bin(Op::Eq, v("m"), v("m'")));
        let p = Rule::new(2, Term::app(&g, vec![Term::int(0), v("y")]), v("y"), Term::tt()).normalized();
        assert_eq!(p.lhs, Term::app(&g, vec![v("a1"), v("y")]));
        assert_eq!(p.guard, Term::bin(Op::Eq, v("a1"), Term::int(0)));
    }

    #[test]
    fn successors_and_heights() {
        let sys = countdown();
        let s = smt();
        let f = sys.signature.get("f").unwrap();
        assert!(innermost_successors(&Term::int(7), &sys, &s).unwrap().is_empty());
        let succ = innermost_successors(&Term::app(&f, vec![Term::int(3)]), &sys, &s).unwrap();
        assert_eq!(succ, vec![(2, Term::app(&f, vec![Term::int(2)]))]);
        for n in 0..6 {
            let t = instantiate_init(&sys, &[Value::Int(n)]).unwrap();
            assert_eq!(derivation_height_sample(&t, &sys, &s, 1000).unwrap(), 1 + n.max(0) as u64);
        }
        let t = instantiate_init(&sys, &[Value::Int(50)]).unwrap();
        assert_eq!(derivation_height_sample(&t, &sys, &s, 10), Err(OracleError::FuelExhausted));
    }

    #[test]
    fn guard_variables_are_enumerated() {
        // f(x) → g(u) [0 ≤ u ∧ u ≤ x]
        let sig = Signature::new();
        let (f, g) = (sym(&sig, "f", 1), sym(&sig, "g", 1));
        let u = v("u");
        let guard = Term::and(Term::bin(Op::Le, Term::int(0), u.clone()), Term::bin(Op::Le, u.clone(), v("x")));
        let rules = vec![Rule::new(1, Term::app(&f, vec![v("x")]), Term::app(&g, vec![u]), guard)];
        let sys = Lctrs::new(sig, rules, Term::app(&f, vec![v("x")]), Term::tt()).unwrap();
        let s = smt();
        let succ = innermost_successors(&Term::app(&f, vec![Term::int(2)]), &sys, &s).unwrap();
        let got: BTreeSet<Term> = succ.into_iter().map(|(_, t)| t).collect();
        let want: BTreeSet<Term> = (0..=2).map(|i| Term::app(&g, vec![Term::int(i)])).collect();
        assert_eq!(got, want);
        let sig2 = Signature::new();
        let (f2, g2) = (sym(&sig2, "f", 1), sym(&sig2, "g", 1));
        let free = vec![Rule::new(1, Term::app(&f2, vec![v("x")]), Term::app(&g2, vec![v("w")]), Term::tt())];
        let sys2 = Lctrs::new(sig2, free, Term::app(&f2, vec![v("x")]), Term::tt()).unwrap();
        assert!(matches!(
            innermost_successors(&Term::app(&f2, vec![Term::int(0)]), &sys2, &s),
            Err(OracleError::UnboundedNondeterminism { .. })
        ));
    }

    #[test]
    fn start_symbol_on_rhs_gets_fresh_rule() {
        let sig = Signature::new();
        let f = sym(&sig, "f", 1);
        let rules = vec![Rule::new(
            1,
            Term::app(&f, vec![v("x")]),
            Term::app(&f, vec![Term::bin(Op::Sub, v("x"), Term::int(1))]),
            Term::bin(Op::Ge, v("x"), Term::int(1)),
        )];
        let sys = Lctrs::new(sig, rules, Term::app(&f, vec![v("x")]), Term::tt()).unwrap();
        assert_eq!(sys.rules.len(), 2);
        assert_eq!(sys.start_symbol().name.as_ref(), "f_start");
    }
}
