use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, ValueEnum};

use lctrs_complexity::driver::{render_result, run_strategy, AnalysisConfig, Verbosity};
use lctrs_complexity::parse::{parse, Format};
use lctrs_complexity::smt::{Smt, SmtConfig};

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Its,
    Lctrs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProofArg {
    None,
    Short,
    Full,
}

/// Innermost runtime complexity of logically constrained rewrite systems.
#[derive(Parser)]
#[command(name = "lctrs-complexity", version)]
struct Cli {
    /// Input format; guessed from the file extension when absent.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// SMT solver executable.
    #[arg(long, default_value = "z3")]
    smt: PathBuf,
    /// Maximal degree of interpretations.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..=2))]
    degree: u32,
    #[arg(long, value_enum, default_value = "short")]
    proof: ProofArg,
    /// Write the proof as JSON, one record per proof node.
    #[arg(long)]
    proof_json: Option<PathBuf>,
    /// Write the dependency graph and entry-variable graph as DOT files.
    #[arg(long)]
    dump_graphs: Option<PathBuf>,
    /// Record all solver queries to this file.
    #[arg(long, conflicts_with = "replay_smt")]
    record_smt: Option<PathBuf>,
    /// Answer solver queries from a recorded session.
    #[arg(long)]
    replay_smt: Option<PathBuf>,
    /// Worker threads for independent subproblems.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    file: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Box<dyn std::error::Error>> {
    let format = match cli.format {
        Some(FormatArg::Its) => Format::Its,
        Some(FormatArg::Lctrs) => Format::Lctrs,
        None => Format::from_path(&cli.file),
    };
    let text = std::fs::read_to_string(&cli.file).map_err(|e| format!("cannot read {}: {e}", cli.file.display()))?;
    let sys = parse(&text, format)?;
    let smt_cfg = SmtConfig {
        path: cli.smt.clone(),
        ..SmtConfig::default()
    };
    let smt = match (&cli.record_smt, &cli.replay_smt) {
        (Some(f), _) => Smt::recording(smt_cfg.clone(), f),
        (None, Some(f)) => Smt::replaying(smt_cfg.clone(), f)?,
        (None, None) => Smt::new(smt_cfg.clone()),
    };
    smt.probe()?;
    let cfg = AnalysisConfig {
        timeout: Duration::from_secs(cli.timeout),
        smt: smt_cfg,
        degree: cli.degree,
        dump_graphs: cli.dump_graphs.clone(),
        proof: match cli.proof {
            ProofArg::None => Verbosity::None,
            ProofArg::Short => Verbosity::Short,
            ProofArg::Full => Verbosity::Full,
        },
        jobs: cli.jobs,
        ..AnalysisConfig::default()
    };
    let res = run_strategy(sys, &cfg, &smt)?;
    smt.save()?;
    if let Some(path) = &cli.proof_json {
        let json = serde_json::to_string_pretty(&res.judgement.proof)?;
        std::fs::write(path, json).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    print!("{}", render_result(&res, cfg.proof));
    Ok(match (res.class, res.timed_out) {
        (Some(_), _) => 0,
        (None, true) => 3,
        (None, false) => 2,
    })
}
