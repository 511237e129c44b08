//! Sorted first-order terms over a signature split into term symbols and
//! theory symbols.
//!
//! Term symbols (user functions, their sharped variants and tuple symbols) are
//! interned [`FunSym`]s. Theory symbols are either value constants
//! ([`Value`], one per carrier element, represented by the element itself) or
//! the fixed operators in [`Op`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("invalid position {0}")]
    InvalidPosition(Position),
    #[error("sort mismatch: variable {var} of sort {expected} bound to a term of sort {found}")]
    SortMismatch {
        var: String,
        expected: Sort,
        found: Sort,
    },
    #[error("term `{0}` is not an application of a term symbol")]
    NotApplication(String),
    #[error("term `{0}` is rooted by a theory symbol")]
    TheoryRooted(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
    /// Lists of integers.
    List,
    User(Arc<str>),
    /// Result sort of sharped symbols and tuple symbols.
    TupleElem,
}

impl Sort {
    pub fn is_theory(&self) -> bool {
        matches!(self, Sort::Int | Sort::Bool | Sort::List)
    }

    pub fn from_name(name: &str) -> Sort {
        match name {
            "int" | "Int" => Sort::Int,
            "bool" | "Bool" => Sort::Bool,
            "list" | "List" | "intlist" => Sort::List,
            other => Sort::User(Arc::from(other)),
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => write!(f, "int"),
            Sort::Bool => write!(f, "bool"),
            Sort::List => write!(f, "list"),
            Sort::User(n) => write!(f, "{n}"),
            Sort::TupleElem => write!(f, "tuple-elem"),
        }
    }
}

/// Value constants of the theory sorts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Bool(bool),
    List(Arc<Vec<i64>>),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Int(_) => Sort::Int,
            Value::Bool(_) => Sort::Bool,
            Value::List(_) => Sort::List,
        }
    }

    pub fn nil() -> Value {
        Value::List(Arc::new(Vec::new()))
    }

    /// The size measure: absolute value for integers, length for lists.
    pub fn size(&self) -> u64 {
        match self {
            Value::Int(i) => i.unsigned_abs(),
            Value::Bool(_) => 1,
            Value::List(l) => l.len() as u64,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(l) => {
                write!(f, "[")?;
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// Non-value theory symbols with their fixed interpretation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Neg,
    /// Equality, indexed by the sort of its arguments.
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Implies,
    Cons,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Neg | Op::Not => 1,
            _ => 2,
        }
    }

    pub fn result_sort(self) -> Sort {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Mod | Op::Neg => Sort::Int,
            Op::Cons => Sort::List,
            _ => Sort::Bool,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Mod => "%",
            Op::Neg => "-",
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "/\\",
            Op::Or => "\\/",
            Op::Not => "not",
            Op::Implies => "=>",
            Op::Cons => "::",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Implies => 1,
            Op::Or => 2,
            Op::And => 3,
            Op::Not => 4,
            Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge => 5,
            Op::Cons => 6,
            Op::Add | Op::Sub => 7,
            Op::Mul | Op::Div | Op::Mod => 8,
            Op::Neg => 9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymKind {
    /// A user-declared term symbol (defined symbol or constructor).
    Plain,
    /// The marked variant f♯ of a defined symbol f.
    Sharp,
    /// The tuple symbol ⟨…⟩ₖ; never defined.
    Tuple,
}

/// A term symbol. Identity is the name; profiles are carried along.
#[derive(Clone, Debug)]
pub struct FunSym {
    pub name: Arc<str>,
    pub arg_sorts: Vec<Sort>,
    pub res_sort: Sort,
    pub kind: SymKind,
}

impl PartialEq for FunSym {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}
impl Eq for FunSym {}
impl std::hash::Hash for FunSym {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}
impl PartialOrd for FunSym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for FunSym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name.cmp(&other.name)
    }
}

impl FunSym {
    pub fn new(name: &str, arg_sorts: Vec<Sort>, res_sort: Sort) -> FunSym {
        FunSym {
            name: Arc::from(name),
            arg_sorts,
            res_sort,
            kind: SymKind::Plain,
        }
    }

    pub fn arity(&self) -> usize {
        self.arg_sorts.len()
    }

    pub fn is_sharp(&self) -> bool {
        self.kind == SymKind::Sharp
    }

    pub fn is_tuple(&self) -> bool {
        self.kind == SymKind::Tuple
    }

    /// The sharped variant: same argument profile, result sort `tuple-elem`.
    pub fn sharped(&self) -> FunSym {
        FunSym {
            name: Arc::from(format!("{}#", self.name)),
            arg_sorts: self.arg_sorts.clone(),
            res_sort: Sort::TupleElem,
            kind: SymKind::Sharp,
        }
    }

    /// Name of the unsharped symbol.
    pub fn base_name(&self) -> &str {
        match self.kind {
            SymKind::Sharp => self.name.strip_suffix('#').unwrap_or(&self.name),
            _ => &self.name,
        }
    }

    pub fn tuple(arity: usize) -> FunSym {
        FunSym {
            name: Arc::from(format!("Com_{arity}")),
            arg_sorts: vec![Sort::TupleElem; arity],
            res_sort: Sort::TupleElem,
            kind: SymKind::Tuple,
        }
    }
}

impl fmt::Display for FunSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var {
            name: Arc::from(name),
            sort,
        }
    }

    pub fn int(name: &str) -> Var {
        Var::new(name, Sort::Int)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Val(Value),
    Fun(Arc<FunSym>, Vec<Term>),
    Op(Op, Vec<Term>),
}

/// A position: sequence of 1-based argument indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<usize>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn child(&self, i: usize) -> Position {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }

    pub fn is_prefix_of(&self, other: &Position) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

impl From<Vec<usize>> for Position {
    fn from(v: Vec<usize>) -> Self {
        Position(v)
    }
}

pub type Substitution = BTreeMap<Var, Term>;

impl Term {
    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(Var::new(name, sort))
    }

    pub fn int_var(name: &str) -> Term {
        Term::Var(Var::int(name))
    }

    pub fn int(i: i64) -> Term {
        Term::Val(Value::Int(i))
    }

    pub fn bool(b: bool) -> Term {
        Term::Val(Value::Bool(b))
    }

    pub fn tt() -> Term {
        Term::bool(true)
    }

    pub fn app(f: &Arc<FunSym>, args: Vec<Term>) -> Term {
        Term::Fun(f.clone(), args)
    }

    pub fn op(op: Op, args: Vec<Term>) -> Term {
        Term::Op(op, args)
    }

    pub fn bin(op: Op, a: Term, b: Term) -> Term {
        Term::Op(op, vec![a, b])
    }

    pub fn tuple(args: Vec<Term>) -> Term {
        Term::Fun(Arc::new(FunSym::tuple(args.len())), args)
    }

    /// Conjunction with `true` units dropped.
    pub fn and(a: Term, b: Term) -> Term {
        if a.is_true() {
            return b;
        }
        if b.is_true() {
            return a;
        }
        Term::bin(Op::And, a, b)
    }

    pub fn and_all<I: IntoIterator<Item = Term>>(items: I) -> Term {
        items.into_iter().fold(Term::tt(), Term::and)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Val(Value::Bool(true)))
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Var(v) => v.sort.clone(),
            Term::Val(v) => v.sort(),
            Term::Fun(f, _) => f.res_sort.clone(),
            Term::Op(op, _) => op.result_sort(),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Fun(_, a) | Term::Op(_, a) => a,
            _ => &[],
        }
    }

    pub fn root_fun(&self) -> Option<&Arc<FunSym>> {
        match self {
            Term::Fun(f, _) => Some(f),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Term::Val(_))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Term::Val(v) => Some(v),
            _ => None,
        }
    }

    /// True iff the term contains only theory symbols and variables.
    pub fn is_theory(&self) -> bool {
        match self {
            Term::Var(_) | Term::Val(_) => true,
            Term::Fun(..) => false,
            Term::Op(_, args) => args.iter().all(Term::is_theory),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Val(_) => true,
            Term::Fun(_, a) | Term::Op(_, a) => a.iter().all(Term::is_ground),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars_ordered(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Val(_) => {}
            Term::Fun(_, a) | Term::Op(_, a) => a.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    /// Pre-order traversal.
    pub fn visit<F: FnMut(&Term)>(&self, f: &mut F) {
        f(self);
        for a in self.args() {
            a.visit(f);
        }
    }

    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    pub fn subterm_at(&self, p: &Position) -> Result<&Term, TermError> {
        let mut t = self;
        for &i in &p.0 {
            let args = t.args();
            if i == 0 || i > args.len() {
                return Err(TermError::InvalidPosition(p.clone()));
            }
            t = &args[i - 1];
        }
        Ok(t)
    }

    pub fn replace_at(&self, p: &Position, replacement: Term) -> Result<Term, TermError> {
        fn go(t: &Term, path: &[usize], r: Term, full: &Position) -> Result<Term, TermError> {
            match path.split_first() {
                None => Ok(r),
                Some((&i, rest)) => {
                    let (rebuild, args): (Box<dyn Fn(Vec<Term>) -> Term>, &Vec<Term>) = match t {
                        Term::Fun(f, a) => {
                            let f = f.clone();
                            (Box::new(move |a| Term::Fun(f.clone(), a)), a)
                        }
                        Term::Op(o, a) => {
                            let o = *o;
                            (Box::new(move |a| Term::Op(o, a)), a)
                        }
                        _ => return Err(TermError::InvalidPosition(full.clone())),
                    };
                    if i == 0 || i > args.len() {
                        return Err(TermError::InvalidPosition(full.clone()));
                    }
                    let mut new_args = args.clone();
                    new_args[i - 1] = go(&args[i - 1], rest, r, full)?;
                    Ok(rebuild(new_args))
                }
            }
        }
        go(self, &p.0, replacement, p)
    }

    /// All positions whose subterm is rooted by a term symbol satisfying
    /// `pred`, in pre-order (outermost first, then left to right).
    pub fn positions_where<F: Fn(&FunSym) -> bool>(&self, pred: F) -> Vec<Position> {
        fn go<F: Fn(&FunSym) -> bool>(t: &Term, at: Position, pred: &F, out: &mut Vec<Position>) {
            if let Term::Fun(f, _) = t {
                if pred(f) {
                    out.push(at.clone());
                }
            }
            for (i, a) in t.args().iter().enumerate() {
                go(a, at.child(i + 1), pred, out);
            }
        }
        let mut out = Vec::new();
        go(self, Position::root(), &pred, &mut out);
        out
    }

    /// Positions rooted by a symbol whose name is in `names`.
    pub fn positions_rooted_in(&self, names: &BTreeSet<Arc<str>>) -> Vec<Position> {
        self.positions_where(|f| names.contains(&f.name))
    }

    pub fn apply(&self, sigma: &Substitution) -> Result<Term, TermError> {
        Ok(match self {
            Term::Var(v) => match sigma.get(v) {
                Some(t) => {
                    let s = t.sort();
                    if s != v.sort {
                        return Err(TermError::SortMismatch {
                            var: v.name.to_string(),
                            expected: v.sort.clone(),
                            found: s,
                        });
                    }
                    t.clone()
                }
                None => self.clone(),
            },
            Term::Val(_) => self.clone(),
            Term::Fun(f, a) => Term::Fun(f.clone(), a.iter().map(|t| t.apply(sigma)).collect::<Result<_, _>>()?),
            Term::Op(o, a) => Term::Op(*o, a.iter().map(|t| t.apply(sigma)).collect::<Result<_, _>>()?),
        })
    }

    /// Substitution application for substitutions known to be sort-correct.
    pub fn subst(&self, sigma: &Substitution) -> Term {
        match self {
            Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Val(_) => self.clone(),
            Term::Fun(f, a) => Term::Fun(f.clone(), a.iter().map(|t| t.subst(sigma)).collect()),
            Term::Op(o, a) => Term::Op(*o, a.iter().map(|t| t.subst(sigma)).collect()),
        }
    }

    /// Rename every variable through `f`.
    pub fn rename(&self, f: &dyn Fn(&Var) -> Var) -> Term {
        match self {
            Term::Var(v) => Term::Var(f(v)),
            Term::Val(_) => self.clone(),
            Term::Fun(s, a) => Term::Fun(s.clone(), a.iter().map(|t| t.rename(f)).collect()),
            Term::Op(o, a) => Term::Op(*o, a.iter().map(|t| t.rename(f)).collect()),
        }
    }

    /// Syntactic matching of a linear pattern: returns σ with `self σ = t`.
    pub fn match_term(&self, t: &Term) -> Option<Substitution> {
        let mut sigma = Substitution::new();
        if self.match_into(t, &mut sigma) {
            Some(sigma)
        } else {
            None
        }
    }

    pub fn match_into(&self, t: &Term, sigma: &mut Substitution) -> bool {
        match (self, t) {
            (Term::Var(v), _) => {
                if v.sort != t.sort() {
                    return false;
                }
                match sigma.get(v) {
                    Some(bound) => bound == t,
                    None => {
                        sigma.insert(v.clone(), t.clone());
                        true
                    }
                }
            }
            (Term::Val(a), Term::Val(b)) => a == b,
            (Term::Fun(f, a), Term::Fun(g, b)) => {
                f == g && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.match_into(y, sigma))
            }
            (Term::Op(o, a), Term::Op(p, b)) => {
                o == p && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.match_into(y, sigma))
            }
            _ => false,
        }
    }

    /// Split a conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<Term> {
        match self {
            Term::Op(Op::And, a) => a.iter().flat_map(Term::conjuncts).collect(),
            t if t.is_true() => Vec::new(),
            t => vec![t.clone()],
        }
    }

    /// Flatten nested tuple symbols into one component list.
    pub fn tuple_components(&self) -> Vec<Term> {
        match self {
            Term::Fun(f, a) if f.is_tuple() => a.iter().flat_map(Term::tuple_components).collect(),
            t => vec![t.clone()],
        }
    }
}

/// The sharp transformation f(t₁..tₙ) ↦ f♯(t₁..tₙ).
pub fn sharp(t: &Term) -> Result<Term, TermError> {
    match t {
        Term::Fun(f, args) if f.kind == SymKind::Plain => Ok(Term::Fun(Arc::new(f.sharped()), args.clone())),
        Term::Fun(..) => Err(TermError::NotApplication(t.to_string())),
        Term::Op(..) | Term::Val(_) => Err(TermError::TheoryRooted(t.to_string())),
        Term::Var(_) => Err(TermError::NotApplication(t.to_string())),
    }
}

/// Interning table for term symbols. Mutated while parsing and while sharp
/// symbols are registered; read-only afterwards.
#[derive(Debug, Default)]
pub struct Signature {
    syms: Mutex<BTreeMap<Arc<str>, Arc<FunSym>>>,
}

impl Clone for Signature {
    fn clone(&self) -> Self {
        Signature {
            syms: Mutex::new(self.syms.lock().expect("signature lock").clone()),
        }
    }
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Register `f`, returning the interned symbol (the existing one if a
    /// symbol of that name is already present).
    pub fn intern(&self, f: FunSym) -> Arc<FunSym> {
        let mut syms = self.syms.lock().expect("signature lock");
        syms.entry(f.name.clone()).or_insert_with(|| Arc::new(f)).clone()
    }

    pub fn get(&self, name: &str) -> Option<Arc<FunSym>> {
        self.syms.lock().expect("signature lock").get(name).cloned()
    }

    pub fn symbols(&self) -> Vec<Arc<FunSym>> {
        self.syms.lock().expect("signature lock").values().cloned().collect()
    }

    /// The interned f♯ for `f`; created on first request.
    pub fn sharp_symbol(&self, f: &FunSym) -> Arc<FunSym> {
        self.intern(f.sharped())
    }

    /// Sharp a term, registering its sharped root.
    pub fn sharp(&self, t: &Term) -> Result<Term, TermError> {
        match t {
            Term::Fun(f, args) if f.kind == SymKind::Plain => Ok(Term::Fun(self.sharp_symbol(f), args.clone())),
            _ => sharp(t),
        }
    }
}

fn fmt_term(t: &Term, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
    match t {
        Term::Var(v) => write!(f, "{v}"),
        Term::Val(Value::Int(i)) if *i < 0 && parent > 0 => write!(f, "({i})"),
        Term::Val(v) => write!(f, "{v}"),
        Term::Fun(s, args) => {
            if s.is_tuple() {
                write!(f, "<")?;
            } else {
                write!(f, "{}", s.name)?;
                if args.is_empty() {
                    return Ok(());
                }
                write!(f, "(")?;
            }
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                fmt_term(a, f, 0)?;
            }
            write!(f, "{}", if s.is_tuple() { ">" } else { ")" })
        }
        Term::Op(op, args) => {
            let prec = op.precedence();
            let paren = prec <= parent;
            if paren {
                write!(f, "(")?;
            }
            match (op, args.as_slice()) {
                (Op::Neg, [a]) => {
                    write!(f, "-")?;
                    fmt_term(a, f, prec)?;
                }
                (Op::Not, [a]) => {
                    write!(f, "not ")?;
                    fmt_term(a, f, prec)?;
                }
                (_, [a, b]) => {
                    // left-associative printing: the left operand may share precedence
                    fmt_term(a, f, prec.saturating_sub(1).max(if *op == Op::Cons { prec } else { 0 }))?;
                    write!(f, " {} ", op.symbol())?;
                    fmt_term(b, f, if *op == Op::Cons { prec - 1 } else { prec })?;
                }
                _ => {
                    write!(f, "{}(", op.symbol())?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        fmt_term(a, f, 0)?;
                    }
                    write!(f, ")")?;
                }
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, f, 0)
    }
}
