//! SMT-LIB v2 client over a child process, with a shared query cache and a
//! record/replay mode for deterministic reruns.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmtError {
    #[error("SMT solver unavailable: {0}")]
    Unavailable(String),
    #[error("SMT protocol error: {0}")]
    Protocol(String),
    #[error("cannot access SMT session file: {0}")]
    SessionFile(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmtValue {
    Int(i128),
    Real(Rat),
    Bool(bool),
    List(Vec<i128>),
    Other(String),
}

impl SmtValue {
    pub fn as_int(&self) -> Option<i128> {
        match self {
            SmtValue::Int(i) => Some(*i),
            SmtValue::Real(r) if r.is_integer() => Some(r.to_integer()),
            _ => None,
        }
    }

    pub fn as_rat(&self) -> Option<Rat> {
        match self {
            SmtValue::Int(i) => Some(Rat::from_integer(*i)),
            SmtValue::Real(r) => Some(*r),
            _ => None,
        }
    }
}

pub type Model = BTreeMap<String, SmtValue>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmtResult {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SmtResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SmtResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SmtResult::Unsat)
    }
}

/// A single self-contained query.
#[derive(Clone, Debug, Default)]
pub struct Query {
    pub logic: String,
    /// Preamble commands such as datatype or function declarations.
    pub preamble: Vec<String>,
    /// `(name, sort)` pairs.
    pub consts: Vec<(String, String)>,
    pub asserts: Vec<String>,
    pub want_model: bool,
}

impl Query {
    pub fn new(logic: &str) -> Query {
        Query {
            logic: logic.to_string(),
            ..Query::default()
        }
    }

    pub fn declare(&mut self, name: &str, sort: &str) {
        if !self.consts.iter().any(|(n, _)| n == name) {
            self.consts.push((name.to_string(), sort.to_string()));
        }
    }

    pub fn assert(&mut self, s: impl Into<String>) {
        self.asserts.push(s.into());
    }

    /// Canonical text of the query, also used as the cache key.
    pub fn text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("(set-logic {})\n", self.logic));
        for p in &self.preamble {
            s.push_str(p);
            s.push('\n');
        }
        for (n, sort) in &self.consts {
            s.push_str(&format!("(declare-const {n} {sort})\n"));
        }
        for a in &self.asserts {
            s.push_str(&format!("(assert {a})\n"));
        }
        s.push_str("(check-sat)\n");
        if self.want_model {
            s.push_str("(get-model)\n");
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct SmtConfig {
    pub path: PathBuf,
    pub timeout: Duration,
}

impl Default for SmtConfig {
    fn default() -> Self {
        SmtConfig {
            path: default_solver_path(),
            timeout: Duration::from_secs(2),
        }
    }
}

/// Solver path from `LCTRS_SMT`, falling back to `z3` on the `PATH`.
pub fn default_solver_path() -> PathBuf {
    std::env::var_os("LCTRS_SMT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("z3"))
}

#[derive(Clone, Debug)]
enum Mode {
    Live,
    Record(PathBuf),
    Replay,
}

#[derive(Debug, Default)]
struct Shared {
    cache: HashMap<String, SmtResult>,
    /// Session log in query order, written out in record mode.
    log: Vec<(String, SmtResult)>,
    queries: u64,
    hits: u64,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A solver session. One session per thread; `fork` creates a new session
/// sharing the cache.
pub struct Smt {
    config: SmtConfig,
    mode: Mode,
    shared: Arc<Mutex<Shared>>,
    proc: RefCell<Option<Process>>,
}

impl fmt::Debug for Smt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Smt").field("config", &self.config).field("mode", &self.mode).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct SessionFile {
    queries: Vec<(String, SmtResult)>,
}

impl Smt {
    pub fn new(config: SmtConfig) -> Smt {
        Smt {
            config,
            mode: Mode::Live,
            shared: Arc::new(Mutex::new(Shared::default())),
            proc: RefCell::new(None),
        }
    }

    /// Record every answer; the session is written by [`Smt::save`].
    pub fn recording(config: SmtConfig, file: &Path) -> Smt {
        let mut s = Smt::new(config);
        s.mode = Mode::Record(file.to_path_buf());
        s
    }

    /// Answer queries from a recorded session only; unrecorded queries are
    /// unknown.
    pub fn replaying(config: SmtConfig, file: &Path) -> Result<Smt, SmtError> {
        let text = std::fs::read_to_string(file).map_err(|e| SmtError::SessionFile(format!("{}: {e}", file.display())))?;
        let sess: SessionFile = serde_json::from_str(&text).map_err(|e| SmtError::SessionFile(e.to_string()))?;
        let s = Smt::new(config);
        {
            let mut sh = s.shared.lock().expect("smt cache lock");
            for (q, r) in sess.queries {
                sh.cache.insert(q, r);
            }
        }
        Ok(Smt { mode: Mode::Replay, ..s })
    }

    /// A new session for another thread sharing cache and mode.
    pub fn fork(&self) -> Smt {
        Smt {
            config: self.config.clone(),
            mode: self.mode.clone(),
            shared: self.shared.clone(),
            proc: RefCell::new(None),
        }
    }

    pub fn timeout(&self) -> Duration {
        self.config.timeout
    }

    /// `(queries, cache hits)` so far.
    pub fn stats(&self) -> (u64, u64) {
        let sh = self.shared.lock().expect("smt cache lock");
        (sh.queries, sh.hits)
    }

    /// Write the recorded session (record mode only).
    pub fn save(&self) -> Result<(), SmtError> {
        if let Mode::Record(path) = &self.mode {
            let sh = self.shared.lock().expect("smt cache lock");
            let sess = SessionFile { queries: sh.log.clone() };
            let text = serde_json::to_string_pretty(&sess).map_err(|e| SmtError::SessionFile(e.to_string()))?;
            std::fs::write(path, text).map_err(|e| SmtError::SessionFile(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// Check availability by running a trivial query.
    pub fn probe(&self) -> Result<(), SmtError> {
        if matches!(self.mode, Mode::Replay) {
            return Ok(());
        }
        let mut q = Query::new("QF_LIA");
        q.assert("true");
        match self.run(&q.text(), false)? {
            SmtResult::Sat(_) => Ok(()),
            other => Err(SmtError::Unavailable(format!("unexpected answer {other:?} to a trivial query"))),
        }
    }

    pub fn check(&self, q: &Query) -> Result<SmtResult, SmtError> {
        let key = q.text();
        {
            let mut sh = self.shared.lock().expect("smt cache lock");
            sh.queries += 1;
            if let Some(r) = sh.cache.get(&key).cloned() {
                sh.hits += 1;
                if matches!(self.mode, Mode::Record(_)) && !sh.log.iter().any(|(k, _)| *k == key) {
                    sh.log.push((key, r.clone()));
                }
                return Ok(r);
            }
        }
        let r = match self.mode {
            Mode::Replay => SmtResult::Unknown("query not in recorded session".into()),
            _ => self.run(&key, q.want_model)?,
        };
        let mut sh = self.shared.lock().expect("smt cache lock");
        sh.cache.insert(key.clone(), r.clone());
        if matches!(self.mode, Mode::Record(_)) {
            sh.log.push((key, r.clone()));
        }
        Ok(r)
    }

    fn spawn(&self) -> Result<Process, SmtError> {
        let path = &self.config.path;
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let args: Vec<&str> = if name.starts_with("z3") {
            vec!["-in", "-smt2"]
        } else if name.starts_with("cvc5") || name.starts_with("cvc4") {
            vec!["--lang=smt2", "--incremental", "--produce-models"]
        } else if name.starts_with("yices") {
            vec!["--incremental"]
        } else {
            vec![]
        };
        let mut child = Command::new(path)
            .args(&args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SmtError::Unavailable(format!("{}: {e}", path.display())))?;
        let stdin = child.stdin.take().ok_or_else(|| SmtError::Unavailable("no stdin".into()))?;
        let stdout = child.stdout.take().ok_or_else(|| SmtError::Unavailable("no stdout".into()))?;
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut p = Process { child, stdin, lines: rx };
        writeln!(p.stdin, "(set-option :print-success false)\n(set-option :produce-models true)")
            .map_err(|e| SmtError::Unavailable(e.to_string()))?;
        Ok(p)
    }

    fn run(&self, text: &str, want_model: bool) -> Result<SmtResult, SmtError> {
        let mut slot = self.proc.borrow_mut();
        if slot.is_none() {
            *slot = Some(self.spawn()?);
        }
        let ms = self.config.timeout.as_millis().max(1);
        let deadline = Instant::now() + self.config.timeout + Duration::from_millis(1000);
        let outcome = {
            let p = slot.as_mut().expect("solver process");
            let payload = format!("(reset)\n(set-option :produce-models true)\n(set-option :timeout {ms})\n{text}");
            match p.stdin.write_all(payload.as_bytes()).and_then(|_| p.stdin.flush()) {
                Err(_) => Err(ReadError::Closed),
                Ok(()) => read_answer(&p.lines, deadline, want_model),
            }
        };
        match outcome {
            Ok(r) => Ok(r),
            Err(ReadError::Timeout) => {
                *slot = None;
                Ok(SmtResult::Unknown("timeout".into()))
            }
            Err(ReadError::Closed) => {
                *slot = None;
                Err(SmtError::Unavailable("solver process terminated".into()))
            }
            Err(ReadError::Protocol(m)) => {
                *slot = None;
                Err(SmtError::Protocol(m))
            }
        }
    }
}

enum ReadError {
    Timeout,
    Closed,
    Protocol(String),
}

impl From<SmtError> for ReadError {
    fn from(e: SmtError) -> Self {
        ReadError::Protocol(e.to_string())
    }
}

fn next_line(rx: &Receiver<String>, deadline: Instant) -> Result<String, ReadError> {
    let now = Instant::now();
    if now >= deadline {
        return Err(ReadError::Timeout);
    }
    match rx.recv_timeout(deadline - now) {
        Ok(l) => Ok(l),
        Err(RecvTimeoutError::Timeout) => Err(ReadError::Timeout),
        Err(RecvTimeoutError::Disconnected) => Err(ReadError::Closed),
    }
}

/// Read one balanced s-expression (or atom) spanning possibly several lines.
fn read_sexp_text(rx: &Receiver<String>, deadline: Instant) -> Result<String, ReadError> {
    let mut buf = String::new();
    let mut depth: i64 = 0;
    let mut in_str = false;
    loop {
        let line = next_line(rx, deadline)?;
        if buf.is_empty() && line.trim().is_empty() {
            continue;
        }
        for c in line.chars() {
            match c {
                '"' => in_str = !in_str,
                '(' if !in_str => depth += 1,
                ')' if !in_str => depth -= 1,
                _ => {}
            }
        }
        buf.push_str(&line);
        buf.push('\n');
        if depth <= 0 && !in_str {
            return Ok(buf);
        }
    }
}

fn read_answer(rx: &Receiver<String>, deadline: Instant, want_model: bool) -> Result<SmtResult, ReadError> {
    let head = read_sexp_text(rx, deadline)?;
    let head = head.trim();
    if head.starts_with("(error") {
        return Err(ReadError::Protocol(head.to_string()));
    }
    let drain = |r: SmtResult| -> Result<SmtResult, ReadError> {
        if want_model {
            // the solver answers the pending (get-model) with an error
            read_sexp_text(rx, deadline)?;
        }
        Ok(r)
    };
    match head {
        "unsat" => drain(SmtResult::Unsat),
        "unknown" => drain(SmtResult::Unknown("solver returned unknown".into())),
        "sat" => {
            if !want_model {
                return Ok(SmtResult::Sat(Model::new()));
            }
            let model = read_sexp_text(rx, deadline)?;
            if model.trim_start().starts_with("(error") {
                return Err(ReadError::Protocol(model));
            }
            Ok(SmtResult::Sat(parse_model(&model)?))
        }
        other => Err(ReadError::Protocol(format!("unexpected solver output `{other}`"))),
    }
}

/// Minimal s-expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub fn parse_sexp(s: &str) -> Result<Sexp, SmtError> {
    let toks = sexp_tokens(s);
    let mut pos = 0;
    let e = sexp_at(&toks, &mut pos)?;
    Ok(e)
}

fn sexp_tokens(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = s.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            '"' => {
                cur.push(c);
                for d in chars.by_ref() {
                    cur.push(d);
                    if d == '"' {
                        break;
                    }
                }
            }
            '|' => {
                for d in chars.by_ref() {
                    if d == '|' {
                        break;
                    }
                    cur.push(d);
                }
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn sexp_at(t: &[String], pos: &mut usize) -> Result<Sexp, SmtError> {
    match t.get(*pos).map(String::as_str) {
        None => Err(SmtError::Protocol("unexpected end of s-expression".into())),
        Some("(") => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                match t.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    None => return Err(SmtError::Protocol("unbalanced s-expression".into())),
                    _ => items.push(sexp_at(t, pos)?),
                }
            }
        }
        Some(")") => Err(SmtError::Protocol("unexpected `)`".into())),
        Some(a) => {
            *pos += 1;
            Ok(Sexp::Atom(a.to_string()))
        }
    }
}

fn parse_number(a: &str) -> Option<Rat> {
    if let Ok(i) = a.parse::<i128>() {
        return Some(Rat::from_integer(i));
    }
    let (int, frac) = a.split_once('.')?;
    let ip: i128 = int.parse().ok()?;
    let digits = frac.len() as u32;
    if digits > 30 {
        return None;
    }
    let fp: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let den = 10i128.pow(digits);
    Some(Rat::new(ip * den + fp, den))
}

fn value_of(e: &Sexp) -> SmtValue {
    match e {
        Sexp::Atom(a) if a == "true" => SmtValue::Bool(true),
        Sexp::Atom(a) if a == "false" => SmtValue::Bool(false),
        Sexp::Atom(a) if a == "nil" => SmtValue::List(vec![]),
        Sexp::Atom(a) => match parse_number(a) {
            Some(r) if r.is_integer() && !a.contains('.') => SmtValue::Int(r.to_integer()),
            Some(r) => SmtValue::Real(r),
            None => SmtValue::Other(a.clone()),
        },
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(m), x] if m == "-" => match value_of(x) {
                SmtValue::Int(i) => SmtValue::Int(-i),
                SmtValue::Real(r) => SmtValue::Real(-r),
                other => other,
            },
            [Sexp::Atom(d), x, y] if d == "/" => match (value_of(x).as_rat(), value_of(y).as_rat()) {
                (Some(a), Some(b)) if b != Rat::from_integer(0) => SmtValue::Real(a / b),
                _ => SmtValue::Other(format!("{e:?}")),
            },
            [Sexp::Atom(c), h, t] if c == "cons" => match (value_of(h).as_int(), value_of(t)) {
                (Some(h), SmtValue::List(mut rest)) => {
                    rest.insert(0, h);
                    SmtValue::List(rest)
                }
                _ => SmtValue::Other(format!("{e:?}")),
            },
            [Sexp::Atom(a), inner] if a == "as" || a == "_" => value_of(inner),
            [Sexp::List(q), ..] if matches!(q.first(), Some(Sexp::Atom(a)) if a == "as") => match q.get(1) {
                Some(Sexp::Atom(n)) if n == "nil" => SmtValue::List(vec![]),
                _ => SmtValue::Other(format!("{e:?}")),
            },
            _ => SmtValue::Other(format!("{e:?}")),
        },
    }
}

/// Parse a `(get-model)` answer (`(model ...)` or bare list of
/// `define-fun`s) into constant values.
pub fn parse_model(text: &str) -> Result<Model, SmtError> {
    let e = parse_sexp(text)?;
    let items = match e {
        Sexp::List(items) => items,
        Sexp::Atom(a) => return Err(SmtError::Protocol(format!("malformed model `{a}`"))),
    };
    let mut m = Model::new();
    for it in items {
        if let Sexp::List(parts) = it {
            if let [Sexp::Atom(df), Sexp::Atom(name), Sexp::List(params), _sort, body] = parts.as_slice() {
                if df == "define-fun" && params.is_empty() {
                    m.insert(name.clone(), value_of(body));
                }
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smt() -> Smt {
        Smt::new(SmtConfig::default())
    }

    #[test]
    fn model_parsing() {
        let m = parse_model("(\n (define-fun x () Int\n  (- 3))\n (define-fun y () Real (/ 1.0 2.0))\n (define-fun b () Bool true))").unwrap();
        assert_eq!(m["x"], SmtValue::Int(-3));
        assert_eq!(m["y"], SmtValue::Real(Rat::new(1, 2)));
        assert_eq!(m["b"], SmtValue::Bool(true));
        let l = parse_model("((define-fun xs () IList (cons 1 (cons 2 nil))))").unwrap();
        assert_eq!(l["xs"], SmtValue::List(vec![1, 2]));
    }

    #[test]
    fn sat_unsat_and_cache() {
        let s = smt();
        let mut q = Query::new("QF_LIA");
        q.declare("x", "Int");
        q.declare("y", "Int");
        q.assert("(and (>= x 1) (>= y 1))");
        q.want_model = true;
        match s.check(&q).unwrap() {
            SmtResult::Sat(m) => {
                assert!(m["x"].as_int().unwrap() >= 1);
                assert!(m["y"].as_int().unwrap() >= 1);
            }
            other => panic!("expected sat, got {other:?}"),
        }
        let mut u = Query::new("QF_LIA");
        u.declare("x", "Int");
        u.assert("(and (>= x 1) (<= x 0))");
        assert_eq!(s.check(&u).unwrap(), SmtResult::Unsat);
        let before = s.stats();
        assert_eq!(s.check(&u).unwrap(), SmtResult::Unsat);
        assert_eq!(s.stats().1, before.1 + 1);
    }

    #[test]
    fn record_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("session.json");
        let rec = Smt::recording(SmtConfig::default(), &file);
        let mut q = Query::new("QF_LIA");
        q.declare("x", "Int");
        q.assert("(> x 5)");
        let r1 = rec.check(&q).unwrap();
        rec.save().unwrap();
        let rep = Smt::replaying(SmtConfig::default(), &file).unwrap();
        assert_eq!(rep.check(&q).unwrap(), r1);
        let mut other = Query::new("QF_LIA");
        other.assert("false");
        assert!(matches!(rep.check(&other).unwrap(), SmtResult::Unknown(_)));
    }

    #[test]
    fn missing_solver_is_reported() {
        let s = Smt::new(SmtConfig {
            path: PathBuf::from("/nonexistent/solver"),
            timeout: Duration::from_secs(1),
        });
        assert!(matches!(s.probe(), Err(SmtError::Unavailable(_))));
    }
}
