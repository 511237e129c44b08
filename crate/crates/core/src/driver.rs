//! The analysis pipeline, result rendering and graph dumps.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{asymptotic_class, AsymptoticClass, Bound};
use crate::graphs::{build_evg, Problem};
use crate::parse::ParseError;
use crate::processors::{render_proof, solve, total_bound, Ctx, Judgement};
use crate::smt::{Smt, SmtConfig, SmtError};
use crate::system::Lctrs;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub enum Verbosity {
    None,
    #[default]
    Short,
    Full,
}

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub timeout: Duration,
    pub smt: SmtConfig,
    /// Maximal degree of synthesized interpretations, 1 or 2.
    pub degree: u32,
    pub chain_cap: usize,
    pub dump_graphs: Option<PathBuf>,
    pub proof: Verbosity,
    /// Worker threads for independent subproblems.
    pub jobs: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            timeout: Duration::from_secs(60),
            smt: SmtConfig::default(),
            degree: 2,
            chain_cap: 4,
            dump_graphs: None,
            proof: Verbosity::Short,
            jobs: 1,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.timeout.is_zero() {
            return Err(DriverError::Config("timeout must be positive".into()));
        }
        if !(1..=2).contains(&self.degree) {
            return Err(DriverError::Config("degree must be 1 or 2".into()));
        }
        if self.jobs == 0 {
            return Err(DriverError::Config("jobs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisResult {
    /// `None` means MAYBE.
    pub class: Option<AsymptoticClass>,
    pub bound: Option<Bound>,
    pub judgement: Judgement,
    pub wall_time: Duration,
    pub timed_out: bool,
}

/// Run the full strategy on `sys` within `cfg.timeout`.
pub fn run_strategy(sys: Lctrs, cfg: &AnalysisConfig, smt: &Smt) -> Result<AnalysisResult, DriverError> {
    cfg.validate()?;
    let started = Instant::now();
    let deadline = started + cfg.timeout;
    let problem = Problem::from_system(Arc::new(sys));
    if let Some(dir) = &cfg.dump_graphs {
        dump_graphs(dir, &problem, smt)?;
    }
    let ctx = Ctx {
        degree: cfg.degree,
        chain_cap: cfg.chain_cap,
        deadline: Some(deadline),
        jobs: cfg.jobs,
        ..Ctx::new(smt)
    };
    let judgement = solve(&ctx, problem, 0);
    let total = total_bound(&judgement);
    let (class, bound) = if total.is_omega() {
        (None, None)
    } else {
        let c = asymptotic_class(&total);
        ((c != AsymptoticClass::Unknown).then_some(c), Some(total))
    };
    Ok(AnalysisResult {
        timed_out: class.is_none() && Instant::now() >= deadline,
        class,
        bound,
        judgement,
        wall_time: started.elapsed(),
    })
}

fn dump_graphs(dir: &std::path::Path, p: &Problem, smt: &Smt) -> Result<(), DriverError> {
    let io = |path: &std::path::Path, e: std::io::Error| DriverError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let dg = crate::graphs::build_dg(p, smt);
    let evg = build_evg(p, &dg, smt);
    for (name, text) in [("dg.dot", dg.to_dot(p)), ("evg.dot", evg.to_dot())] {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

/// The class line, followed by the bound and the proof per `verbosity`.
pub fn render_result(res: &AnalysisResult, verbosity: Verbosity) -> String {
    let mut out = match res.class {
        Some(c) => c.render(),
        None => "MAYBE".to_string(),
    };
    out.push('\n');
    if verbosity == Verbosity::None {
        return out;
    }
    if let Some(b) = &res.bound {
        out.push_str(&format!("bound: {b}\n"));
    }
    if res.timed_out {
        out.push_str("timeout: partial proof\n");
    }
    out.push_str(&render_proof(&res.judgement.proof, verbosity == Verbosity::Full));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse, Format};

    fn run(text: &str, format: Format) -> AnalysisResult {
        let smt = Smt::new(SmtConfig::default());
        run_strategy(parse(text, format).unwrap(), &AnalysisConfig::default(), &smt).unwrap()
    }

    #[test]
    fn empty_system_is_constant() {
        let res = run("SIG\n  f : int -> int\nVARS\n  x : int\nINIT f(x)\nRULES\n", Format::Lctrs);
        assert_eq!(res.class, Some(AsymptoticClass::Const));
        assert_eq!(res.bound, Some(Bound::zero()));
    }

    #[test]
    fn render_first_lines() {
        let res = run("(GOAL COMPLEXITY)\n(STARTTERM (FUNCTIONSYMBOLS f))\n(VAR x)\n(RULES\n  f(x) -> f(x-1) :|: x > 0\n)\n", Format::Its);
        assert_eq!(render_result(&res, Verbosity::None), "O(n^1)\n");
        let maybe = AnalysisResult {
            class: None,
            bound: None,
            ..res.clone()
        };
        assert_eq!(render_result(&maybe, Verbosity::None).lines().next(), Some("MAYBE"));
        let sq = AnalysisResult {
            class: Some(AsymptoticClass::Poly(2)),
            ..res.clone()
        };
        assert!(render_result(&sq, Verbosity::Short).starts_with("O(n^2)\n"));
        let nlogn = AnalysisResult {
            class: Some(AsymptoticClass::PolyLog(1, 1)),
            ..res
        };
        assert!(render_result(&nlogn, Verbosity::Full).starts_with("O(n*log(n))\n"));
    }

    #[test]
    fn runs_are_deterministic_and_replayable() {
        let text = include_str!("../corpus/mergesort.koat");
        let cfg = AnalysisConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let session = dir.path().join("session.json");
        let rec = Smt::recording(SmtConfig::default(), &session);
        let first = render_result(&run_strategy(parse(text, Format::Its).unwrap(), &cfg, &rec).unwrap(), Verbosity::Full);
        rec.save().unwrap();
        let live = Smt::new(SmtConfig::default());
        let second = render_result(&run_strategy(parse(text, Format::Its).unwrap(), &cfg, &live).unwrap(), Verbosity::Full);
        assert_eq!(first, second);
        let replay = Smt::replaying(SmtConfig::default(), &session).unwrap();
        let third = render_result(&run_strategy(parse(text, Format::Its).unwrap(), &cfg, &replay).unwrap(), Verbosity::Full);
        assert_eq!(first, third);
    }

    #[test]
    fn graphs_are_dumped() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = AnalysisConfig {
            dump_graphs: Some(dir.path().join("graphs")),
            ..AnalysisConfig::default()
        };
        let smt = Smt::new(SmtConfig::default());
        run_strategy(parse(include_str!("../corpus/counter.koat"), Format::Its).unwrap(), &cfg, &smt).unwrap();
        let dg = std::fs::read_to_string(dir.path().join("graphs/dg.dot")).unwrap();
        assert!(dg.starts_with("digraph"));
        assert!(dir.path().join("graphs/evg.dot").exists());
    }

    #[test]
    fn zero_timeout_is_rejected() {
        let cfg = AnalysisConfig {
            timeout: Duration::ZERO,
            ..AnalysisConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
