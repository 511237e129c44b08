//! Readers for KoAT-style integer transition systems (`.koat`) and the
//! native constrained rewriting format (`.lctrs`), plus pretty-printers.

mod lexer;
mod print;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::system::{Lctrs, Rule, SystemError};
use crate::term::{FunSym, Op, Signature, Sort, SymKind, Term, Value, Var};
use lexer::{tokenize, Tok, Token};

pub use print::{print_its, print_lctrs};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown variable `{name}` at {line}:{col}")]
    UnknownVariable { name: String, line: usize, col: usize },
    #[error("symbol `{symbol}` used with {found} arguments, expected {expected}")]
    ArityMismatch { symbol: String, expected: usize, found: usize },
    #[error("sort error at {line}:{col}: {msg}")]
    SortError { line: usize, col: usize, msg: String },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Its,
    Lctrs,
}

/// A parsed input file.
#[derive(Clone, Debug)]
pub struct ProblemFile {
    pub format: Format,
    pub source: String,
    pub lctrs: Lctrs,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("lctrs") => Format::Lctrs,
            _ => Format::Its,
        }
    }
}

pub fn parse(text: &str, format: Format) -> Result<Lctrs, ParseError> {
    match format {
        Format::Its => parse_its(text),
        Format::Lctrs => parse_lctrs(text),
    }
}

/// Read a problem file, choosing the format by extension.
pub fn read_problem(path: &Path) -> Result<ProblemFile, ParseError> {
    let source = std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let format = Format::from_path(path);
    let lctrs = parse(&source, format)?;
    Ok(ProblemFile { format, source, lctrs })
}

// ---------------------------------------------------------------------------
// Untyped syntax

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Loc {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum Ast {
    Ident(String, Loc),
    Int(i64),
    List(Vec<Ast>, Loc),
    App(String, Vec<Ast>, Loc),
    Tuple(Vec<Ast>),
    Un(Op, Box<Ast>, Loc),
    Bin(Op, Box<Ast>, Box<Ast>, Loc),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn loc(&self) -> Loc {
        let t = &self.toks[self.pos];
        Loc { line: t.line, col: t.col }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let l = self.loc();
        Err(ParseError::Syntax {
            line: l.line,
            col: l.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.error(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let lhs = self.or()?;
        let loc = self.loc();
        if self.eat(&Tok::Implies) {
            let rhs = self.expr()?;
            return Ok(Ast::Bin(Op::Implies, Box::new(lhs), Box::new(rhs), loc));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.and()?;
        loop {
            let loc = self.loc();
            if !self.eat(&Tok::Or) {
                return Ok(lhs);
            }
            lhs = Ast::Bin(Op::Or, Box::new(lhs), Box::new(self.and()?), loc);
        }
    }

    fn and(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.not()?;
        loop {
            let loc = self.loc();
            if !self.eat(&Tok::And) {
                return Ok(lhs);
            }
            lhs = Ast::Bin(Op::And, Box::new(lhs), Box::new(self.not()?), loc);
        }
    }

    fn not(&mut self) -> Result<Ast, ParseError> {
        let loc = self.loc();
        if self.eat(&Tok::Not) {
            return Ok(Ast::Un(Op::Not, Box::new(self.not()?), loc));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Ast, ParseError> {
        let lhs = self.cons()?;
        let loc = self.loc();
        let op = match self.peek() {
            Tok::Eq => Op::Eq,
            Tok::Ne => Op::Ne,
            Tok::Lt => Op::Lt,
            Tok::Le => Op::Le,
            Tok::Gt => Op::Gt,
            Tok::Ge => Op::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.cons()?;
        Ok(Ast::Bin(op, Box::new(lhs), Box::new(rhs), loc))
    }

    fn cons(&mut self) -> Result<Ast, ParseError> {
        let lhs = self.add()?;
        let loc = self.loc();
        if self.eat(&Tok::Cons) {
            let rhs = self.cons()?;
            return Ok(Ast::Bin(Op::Cons, Box::new(lhs), Box::new(rhs), loc));
        }
        Ok(lhs)
    }

    fn add(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.mul()?;
        loop {
            let loc = self.loc();
            let op = match self.peek() {
                Tok::Plus => Op::Add,
                Tok::Minus => Op::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.mul()?), loc);
        }
    }

    fn mul(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let loc = self.loc();
            let op = match self.peek() {
                Tok::Star => Op::Mul,
                Tok::Slash => Op::Div,
                Tok::Percent => Op::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(self.unary()?), loc);
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        let loc = self.loc();
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Ast::Int(i) => Ast::Int(-i),
                a => Ast::Un(Op::Neg, Box::new(a), loc),
            });
        }
        self.atom()
    }

    fn args(&mut self, close: &Tok, what: &str) -> Result<Vec<Ast>, ParseError> {
        let mut out = Vec::new();
        if self.eat(close) {
            return Ok(out);
        }
        loop {
            out.push(if *close == Tok::Gt { self.cons()? } else { self.expr()? });
            if self.eat(close) {
                return Ok(out);
            }
            self.expect(&Tok::Comma, &format!("`,` or {what}"))?;
        }
    }

    fn atom(&mut self) -> Result<Ast, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Ast::Int(i))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(&Tok::LParen) {
                    let args = self.args(&Tok::RParen, "`)`")?;
                    Ok(Ast::App(name, args, loc))
                } else {
                    Ok(Ast::Ident(name, loc))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::LBracket => {
                self.bump();
                let items = self.args(&Tok::RBracket, "`]`")?;
                Ok(Ast::List(items, loc))
            }
            Tok::Lt => {
                self.bump();
                let items = self.args(&Tok::Gt, "`>`")?;
                Ok(Ast::Tuple(items))
            }
            t => self.error(format!("expected a term, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Eof => "end of input".to_string(),
        other => format!("{other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Elaboration into sorted terms

/// How identifiers and applications are resolved.
struct Elab<'a> {
    sig: &'a Signature,
    vars: &'a BTreeMap<String, Sort>,
    /// ITS mode: every symbol is declared on first use with integer
    /// arguments, unknown identifiers are unknown variables.
    its: bool,
}

fn is_tuple_name(name: &str) -> Option<usize> {
    let lower = name.to_ascii_lowercase();
    lower.strip_prefix("com_").and_then(|k| k.parse().ok())
}

pub(crate) const ITS_SORT: &str = "o";

impl Elab<'_> {
    fn sort_err<T>(loc: Loc, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::SortError {
            line: loc.line,
            col: loc.col,
            msg: msg.into(),
        })
    }

    fn term(&self, a: &Ast) -> Result<Term, ParseError> {
        match a {
            Ast::Int(i) => Ok(Term::int(*i)),
            Ast::Ident(name, loc) => match name.as_str() {
                "true" => Ok(Term::bool(true)),
                "false" => Ok(Term::bool(false)),
                _ => match self.vars.get(name) {
                    Some(s) => Ok(Term::var(name, s.clone())),
                    None if self.its => Err(ParseError::UnknownVariable {
                        name: name.clone(),
                        line: loc.line,
                        col: loc.col,
                    }),
                    None => match self.sig.get(name) {
                        Some(f) if f.arity() == 0 => Ok(Term::app(&f, vec![])),
                        _ => Self::sort_err(*loc, format!("undeclared variable `{name}`")),
                    },
                },
            },
            Ast::List(items, loc) => {
                let ts: Vec<Term> = items.iter().map(|i| self.term(i)).collect::<Result<_, _>>()?;
                if let Some(t) = ts.iter().find(|t| t.sort() != Sort::Int) {
                    return Self::sort_err(*loc, format!("list element `{t}` is not an integer"));
                }
                let vals: Option<Vec<i64>> = ts.iter().map(|t| t.as_value().and_then(Value::as_int)).collect();
                Ok(match vals {
                    Some(v) => Term::Val(Value::List(Arc::new(v))),
                    None => ts.into_iter().rev().fold(Term::Val(Value::nil()), |acc, h| Term::bin(Op::Cons, h, acc)),
                })
            }
            Ast::Tuple(items) => {
                let ts: Vec<Term> = items.iter().map(|i| self.term(i)).collect::<Result<_, _>>()?;
                Ok(mk_tuple(ts))
            }
            Ast::App(name, args, loc) => {
                let ts: Vec<Term> = args.iter().map(|i| self.term(i)).collect::<Result<_, _>>()?;
                if let Some(k) = is_tuple_name(name) {
                    if k != ts.len() {
                        return Err(ParseError::ArityMismatch {
                            symbol: name.clone(),
                            expected: k,
                            found: ts.len(),
                        });
                    }
                    return Ok(mk_tuple(ts));
                }
                let f = match self.sig.get(name) {
                    Some(f) => f,
                    None if self.its => self.sig.intern(FunSym::new(name, vec![Sort::Int; ts.len()], Sort::User(Arc::from(ITS_SORT)))),
                    None => return Self::sort_err(*loc, format!("undeclared function symbol `{name}`")),
                };
                if f.arity() != ts.len() {
                    return Err(ParseError::ArityMismatch {
                        symbol: name.clone(),
                        expected: f.arity(),
                        found: ts.len(),
                    });
                }
                for (t, s) in ts.iter().zip(&f.arg_sorts) {
                    if t.sort() != *s {
                        return Self::sort_err(*loc, format!("argument `{t}` of `{name}` has sort {}, expected {s}", t.sort()));
                    }
                }
                Ok(Term::app(&f, ts))
            }
            Ast::Un(op, a, loc) => {
                let t = self.term(a)?;
                let want = if *op == Op::Not { Sort::Bool } else { Sort::Int };
                if t.sort() != want {
                    return Self::sort_err(*loc, format!("operand `{t}` of `{}` must have sort {want}", op.symbol()));
                }
                Ok(Term::op(*op, vec![t]))
            }
            Ast::Bin(op, a, b, loc) => {
                let (ta, tb) = (self.term(a)?, self.term(b)?);
                let (sa, sb) = (ta.sort(), tb.sort());
                let ok = match op {
                    Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Mod | Op::Lt | Op::Le | Op::Gt | Op::Ge => sa == Sort::Int && sb == Sort::Int,
                    Op::Eq | Op::Ne => sa == sb && sa.is_theory(),
                    Op::And | Op::Or | Op::Implies => sa == Sort::Bool && sb == Sort::Bool,
                    Op::Cons => sa == Sort::Int && sb == Sort::List,
                    Op::Neg | Op::Not => false,
                };
                if !ok {
                    return Self::sort_err(*loc, format!("ill-sorted operands `{ta}` ({sa}) and `{tb}` ({sb}) of `{}`", op.symbol()));
                }
                Ok(Term::bin(*op, ta, tb))
            }
        }
    }

    fn guard(&self, a: &Ast, loc: Loc) -> Result<Term, ParseError> {
        let g = self.term(a)?;
        if g.sort() != Sort::Bool || !g.is_theory() {
            return Self::sort_err(loc, format!("guard `{g}` is not a constraint"));
        }
        Ok(g)
    }
}

fn mk_tuple(ts: Vec<Term>) -> Term {
    if ts.len() == 1 {
        ts.into_iter().next().expect("one component")
    } else {
        Term::tuple(ts)
    }
}

struct RawRule {
    lhs: Ast,
    rhs: Ast,
    guard: Option<(Ast, Loc)>,
    loc: Loc,
}

/// `lhs -> rhs [:|: guard | [guard]]`
fn raw_rule(p: &mut Parser) -> Result<RawRule, ParseError> {
    let loc = p.loc();
    let lhs = p.cons()?;
    p.expect(&Tok::Arrow, "`->`")?;
    let rhs = p.cons()?;
    let guard = if p.eat(&Tok::GuardSep) {
        let l = p.loc();
        Some((p.expr()?, l))
    } else if *p.peek() == Tok::LBracket {
        p.bump();
        let l = p.loc();
        let g = p.expr()?;
        p.expect(&Tok::RBracket, "`]`")?;
        Some((g, l))
    } else {
        None
    };
    Ok(RawRule { lhs, rhs, guard, loc })
}

fn elaborate_rule(e: &Elab, r: &RawRule, id: usize) -> Result<Rule, ParseError> {
    let lhs = e.term(&r.lhs)?;
    let rhs = e.term(&r.rhs)?;
    if !matches!(&lhs, Term::Fun(f, _) if f.kind == SymKind::Plain) {
        return Err(ParseError::Syntax {
            line: r.loc.line,
            col: r.loc.col,
            msg: format!("left-hand side `{lhs}` must be a function application"),
        });
    }
    let guard = match &r.guard {
        Some((g, l)) => e.guard(g, *l)?,
        None => Term::tt(),
    };
    let rs = rhs.sort();
    if lhs.sort() != rs && rs != Sort::TupleElem {
        return Elab::sort_err(r.loc, format!("rule sides have different sorts ({} vs {rs})", lhs.sort()));
    }
    Ok(Rule::new(id, lhs, rhs, guard))
}

// ---------------------------------------------------------------------------
// ITS format

/// Parse a KoAT-style integer transition system.
pub fn parse_its(text: &str) -> Result<Lctrs, ParseError> {
    let mut p = Parser::new(tokenize(text, false)?);
    let mut start: Option<(String, Loc)> = None;
    let mut vars: BTreeMap<String, Sort> = BTreeMap::new();
    let mut raw = Vec::new();
    while *p.peek() != Tok::Eof {
        p.expect(&Tok::LParen, "`(`")?;
        let kw = p.ident()?;
        match kw.as_str() {
            "GOAL" => {
                p.ident()?;
            }
            "STARTTERM" => {
                p.expect(&Tok::LParen, "`(`")?;
                if !p.is_keyword("FUNCTIONSYMBOLS") {
                    return p.error("expected FUNCTIONSYMBOLS");
                }
                p.bump();
                let l = p.loc();
                start = Some((p.ident()?, l));
                p.expect(&Tok::RParen, "`)`")?;
            }
            "VAR" => {
                while let Tok::Ident(v) = p.peek().clone() {
                    p.bump();
                    vars.insert(v, Sort::Int);
                }
            }
            "RULES" => {
                while *p.peek() != Tok::RParen && *p.peek() != Tok::Eof {
                    raw.push(raw_rule(&mut p)?);
                }
            }
            other => return p.error(format!("unknown block `{other}`")),
        }
        p.expect(&Tok::RParen, "`)`")?;
    }
    let Some((start, sloc)) = start else {
        return p.error("missing STARTTERM block");
    };
    let sig = Signature::new();
    let e = Elab { sig: &sig, vars: &vars, its: true };
    let rules: Vec<Rule> = raw.iter().enumerate().map(|(i, r)| elaborate_rule(&e, r, i + 1)).collect::<Result<_, _>>()?;
    let init = match rules.iter().find(|r| r.root().is_some_and(|f| f.name.as_ref() == start)) {
        Some(r) => r.normalized().lhs,
        None => match sig.get(&start) {
            Some(f) => fresh_init(&f),
            None => {
                return Err(ParseError::Syntax {
                    line: sloc.line,
                    col: sloc.col,
                    msg: format!("start symbol `{start}` does not occur in the rules"),
                })
            }
        },
    };
    Ok(Lctrs::new(sig, rules, init, Term::tt())?)
}

fn fresh_init(f: &Arc<FunSym>) -> Term {
    let args = f.arg_sorts.iter().enumerate().map(|(i, s)| Term::var(&format!("x{}", i + 1), s.clone())).collect();
    Term::app(f, args)
}

// ---------------------------------------------------------------------------
// Native format

/// Parse the native block format (SORTS, SIG, VARS, INIT, RULES).
pub fn parse_lctrs(text: &str) -> Result<Lctrs, ParseError> {
    let mut p = Parser::new(tokenize(text, true)?);
    let sig = Signature::new();
    let mut vars: BTreeMap<String, Sort> = BTreeMap::new();
    let mut init_raw: Option<(Ast, Option<(Ast, Loc)>, Loc)> = None;
    let mut raw = Vec::new();
    let blocks = ["SORTS", "SIG", "VARS", "INIT", "RULES"];
    let at_block = |p: &Parser| matches!(p.peek(), Tok::Ident(s) if blocks.contains(&s.as_str())) || *p.peek() == Tok::Eof;
    while *p.peek() != Tok::Eof {
        let kw = p.ident()?;
        match kw.as_str() {
            "SORTS" => {
                while !at_block(&p) {
                    p.ident()?;
                    p.eat(&Tok::Comma);
                }
            }
            "SIG" => {
                while !at_block(&p) {
                    let name = p.ident()?;
                    p.expect(&Tok::Colon, "`:`")?;
                    let mut sorts = vec![Sort::from_name(&p.ident()?)];
                    while p.eat(&Tok::Star) {
                        sorts.push(Sort::from_name(&p.ident()?));
                    }
                    let res = if p.eat(&Tok::Arrow) {
                        Sort::from_name(&p.ident()?)
                    } else {
                        sorts.pop().expect("one sort")
                    };
                    sig.intern(FunSym::new(&name, sorts, res));
                }
            }
            "VARS" => {
                while !at_block(&p) {
                    let mut names = vec![p.ident()?];
                    while !p.eat(&Tok::Colon) {
                        p.eat(&Tok::Comma);
                        names.push(p.ident()?);
                    }
                    let s = Sort::from_name(&p.ident()?);
                    for n in names {
                        vars.insert(n, s.clone());
                    }
                }
            }
            "INIT" => {
                let loc = p.loc();
                let t = p.cons()?;
                let g = if p.eat(&Tok::LBracket) {
                    let l = p.loc();
                    let g = p.expr()?;
                    p.expect(&Tok::RBracket, "`]`")?;
                    Some((g, l))
                } else {
                    None
                };
                init_raw = Some((t, g, loc));
            }
            "RULES" => {
                while !at_block(&p) {
                    raw.push(raw_rule(&mut p)?);
                }
            }
            other => return p.error(format!("unknown block `{other}`")),
        }
    }
    let Some((init_ast, init_guard, iloc)) = init_raw else {
        return p.error("missing INIT block");
    };
    let e = Elab { sig: &sig, vars: &vars, its: false };
    let rules: Vec<Rule> = raw.iter().enumerate().map(|(i, r)| elaborate_rule(&e, r, i + 1)).collect::<Result<_, _>>()?;
    let init = e.term(&init_ast)?;
    if !matches!(&init, Term::Fun(_, a) if a.iter().all(|x| matches!(x, Term::Var(_)))) {
        return Err(ParseError::Syntax {
            line: iloc.line,
            col: iloc.col,
            msg: format!("initial term `{init}` must be a function symbol applied to variables"),
        });
    }
    let guard = match init_guard {
        Some((g, l)) => e.guard(&g, l)?,
        None => Term::tt(),
    };
    Ok(Lctrs::new(sig, rules, init, guard)?)
}

/// Sorted variable declaration used by the printers.
pub(crate) fn collect_vars(sys: &Lctrs) -> BTreeMap<Sort, Vec<Var>> {
    let mut all = sys.init.vars();
    sys.init_guard.collect_vars(&mut all);
    for r in &sys.rules {
        all.extend(r.vars());
    }
    let mut by_sort: BTreeMap<Sort, Vec<Var>> = BTreeMap::new();
    for v in all {
        by_sort.entry(v.sort.clone()).or_default().push(v);
    }
    by_sort
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "(GOAL COMPLEXITY)(STARTTERM (FUNCTIONSYMBOLS init))(VAR x)(RULES init(x) -> f(x) :|: x >= 0\n f(x) -> f(x-1) :|: x >= 1)";

    #[test]
    fn minimal_its() {
        let sys = parse_its(MINIMAL).unwrap();
        assert_eq!(sys.rules.len(), 2);
        assert_eq!(sys.init.to_string(), "init(x)");
        assert!(sys.init_guard.is_true());
        assert_eq!(sys.rules[1].to_string(), "f(x) -> f(x - 1) [x >= 1]");
    }

    #[test]
    fn its_errors() {
        assert!(matches!(
            parse_its("(GOAL COMPLEXITY)(STARTTERM (FUNCTIONSYMBOLS f))(VAR x)(RULES f(x ->"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_its("(GOAL COMPLEXITY)(STARTTERM (FUNCTIONSYMBOLS f))(VAR x)(RULES f(x) -> f(y))"),
            Err(ParseError::UnknownVariable { .. })
        ));
        assert!(matches!(
            parse_its("(GOAL COMPLEXITY)(STARTTERM (FUNCTIONSYMBOLS f))(VAR x)(RULES f(x) -> f(x, x))"),
            Err(ParseError::ArityMismatch { .. })
        ));
        match parse_its("(GOAL COMPLEXITY)\n(VAR x)\n(RULES\n  f(x) -> f(x) :|: x >= )") {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn com_tuples() {
        let text = "(GOAL COMPLEXITY)(STARTTERM (FUNCTIONSYMBOLS m))(VAR x y z u v)(RULES
          m(x,y,z) -> Com_4(m0(x,u,v),m1(x,u,v),m2(x,u,v),m3(x,u,v)) :|: x >= 2 && u >= 0 && v >= 0 && x+1 >= 2*u && 2*u >= x && x >= 2*v && 2*v+1 >= x)";
        let sys = parse_its(text).unwrap();
        let r = sys.rules.iter().find(|r| r.lhs.to_string() == "m(x, y, z)").unwrap();
        assert_eq!(r.rhs.to_string(), "<m0(x, u, v), m1(x, u, v), m2(x, u, v), m3(x, u, v)>");
        assert_eq!(r.guard.conjuncts().len(), 7);
    }

    const MAX_LENGTH: &str = "# maximum and length of a list
SORTS o
SIG
  max_length : list * int * int -> o
  len : list * int -> o
  max : list * int * int -> o
VARS
  ls xs t : list
  m n l h : int
INIT max_length(ls, m, l)
RULES
  max_length(ls,m,l) -> <max(ls,0,m), len(ls,l)>
  len(xs,l) -> len(t,l-1) [xs = h::t]
  len([],0) -> <>
  max(xs,n,m) -> max(t,n,m) [h <= n /\\ xs = h::t]
  max([],m,m) -> <>
  max(xs,n,m) -> max(t,h,m) [h > n /\\ xs = h::t]
";

    #[test]
    fn native_format() {
        let sys = parse_lctrs(MAX_LENGTH).unwrap();
        assert_eq!(sys.rules.len(), 6);
        let d: Vec<String> = sys.defined_symbols().iter().map(|s| s.to_string()).collect();
        assert_eq!(d, vec!["len", "max", "max_length"]);
        assert!(!sys.is_its());
        let nil = &sys.rules[4];
        assert_eq!(nil.to_string(), "max(a1, m, m') -> <> [a1 = [] /\\ m = m']");
        let empty = parse_lctrs("SIG f : int -> o\nVARS x : int\nINIT f(x)").unwrap();
        assert!(empty.rules.is_empty());
        assert!(matches!(
            parse_lctrs("SIG f : int -> o\nVARS x : int\nINIT f(x)\nRULES f(x) -> f(x) [y > 0]"),
            Err(ParseError::SortError { .. })
        ));
        assert!(matches!(
            parse_lctrs("SIG f : int -> o\nVARS xs : list\nINIT f(x)"),
            Err(ParseError::SortError { .. })
        ));
    }

    fn same(a: &Lctrs, b: &Lctrs) {
        assert_eq!(a.rules, b.rules);
        assert_eq!(a.init, b.init);
        assert_eq!(a.init_guard, b.init_guard);
    }

    #[test]
    fn round_trips() {
        let sys = parse_its(MINIMAL).unwrap();
        let printed = print_its(&sys).unwrap();
        let again = parse_its(&printed).unwrap();
        same(&sys, &again);
        assert_eq!(print_its(&again).unwrap(), printed);
        let l = parse_lctrs(MAX_LENGTH).unwrap();
        let printed = print_lctrs(&l);
        let again = parse_lctrs(&printed).unwrap();
        same(&l, &again);
        assert_eq!(print_lctrs(&again), printed);
    }
}
