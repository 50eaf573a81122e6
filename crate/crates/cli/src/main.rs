use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdlab_cli::lab::{build_depseq, build_pair, DepSeqRequest, PairParams, Strategy};
use bdlab_cli::report::level_counts;
use bdlab_cli::{load_config, verify, Suite, VerifyOptions};
use bdlab_core::sequence::Status;
use bdlab_core::{ConstructionConfig, Universe, Q};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bdlab", version, about = "Exact verification suites for coded Bourgain-Delbaen index sets")]
struct Cli {
    /// Config file, or a bundled name: desk-strict, desk-relaxed.
    #[arg(long, global = true, default_value = "desk-relaxed")]
    config: String,
    /// Overrides the configured horizon.
    #[arg(long, global = true, env = "BDLAB_HORIZON")]
    horizon: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the primary output to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the capped universe; `--out` receives the dump.
    Enumerate,
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Build an exact pair and certify it.
    Pair(PairArgs),
    /// Build a dependent sequence and certify it.
    Depseq(DepseqArgs),
    /// Run every suite and write report.json, report.txt and universe.dump into `--out`.
    Report(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock time per suite (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated subset of gamma, functional, shift, sequence, estimates.
    #[arg(long, value_delimiter = ',')]
    suites: Vec<Suite>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long, default_value_t = 1)]
    j: usize,
    #[arg(long, default_value_t = 2)]
    length: usize,
    #[arg(long, default_value = "explicit")]
    strategy: Strategy,
    #[arg(long)]
    zero_b: bool,
    /// Shift power for the shifted strategy; 0 means k.
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value = "48")]
    c: Q,
    /// Accepted for interface uniformity; constructions are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DepseqArgs {
    #[arg(long, default_value_t = 1)]
    j0: usize,
    #[arg(long, default_value_t = 1)]
    length: usize,
    #[arg(long, default_value = "explicit")]
    strategy: Strategy,
    #[arg(long)]
    weak: bool,
    #[arg(long, default_value = "48")]
    c: Q,
    #[arg(long)]
    j1: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pair_length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("outputs serialize") + "\n"
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    print!("{text}");
    if let Some(p) = out {
        fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EnumerateSummary<'a> {
    config: &'a str,
    elements: usize,
    levels: Vec<bdlab_cli::report::LevelCount>,
}

fn enumerate(cfg: &ConstructionConfig, cli: &Cli) -> Result<ExitCode, String> {
    let u = Universe::build(cfg.clone()).map_err(|e| e.to_string())?;
    let summary = EnumerateSummary { config: &cfg.name, elements: u.len(), levels: level_counts(&u) };
    match &cli.out {
        Some(p) => {
            fs::write(p, u.dump()).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            let text = match cli.format {
                Format::Json => json(&summary),
                Format::Text => {
                    let lv: Vec<String> = summary.levels.iter().map(|l| format!("{}:{}", l.rank, l.count)).collect();
                    format!("{} elements (levels {})\n", summary.elements, lv.join(" "))
                }
            };
            print!("{text}");
        }
        None => print!("{}", u.dump()),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(
    cfg: &ConstructionConfig,
    suites: Vec<Suite>,
    run: &RunArgs,
) -> Result<bdlab_cli::VerificationReport, String> {
    let mut suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites };
    suites.sort();
    suites.dedup();
    let opts = VerifyOptions { suites, seed: run.seed, timings: run.timings, ..VerifyOptions::default() };
    verify(cfg, &opts).map_err(|e| format!("verification aborted: {e}"))
}

fn exit_for(status: Status) -> ExitCode {
    if status == Status::Fail {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    let cfg = load_config(&cli.config, cli.horizon).map_err(|e| e.to_string())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Enumerate => enumerate(&cfg, cli),
        Command::Verify(a) => {
            let rep = run_verify(&cfg, a.suites.clone(), &a.run)?;
            let text = match cli.format {
                Format::Json => rep.to_json(),
                Format::Text => rep.to_text(),
            };
            emit(out, &text)?;
            Ok(ExitCode::from(rep.exit_code() as u8))
        }
        Command::Report(a) => {
            let dir = out.ok_or("report needs --out DIR")?;
            fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
            let rep = run_verify(&cfg, Vec::new(), a)?;
            let u = Universe::build(cfg.clone()).map_err(|e| e.to_string())?;
            for (name, body) in
                [("report.json", rep.to_json()), ("report.txt", rep.to_text()), ("universe.dump", u.dump())]
            {
                let p = dir.join(name);
                fs::write(&p, body).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            }
            print!("{}", if cli.format == Format::Json { rep.to_json() } else { rep.to_text() });
            Ok(ExitCode::from(rep.exit_code() as u8))
        }
        Command::Pair(a) => {
            let p =
                PairParams { j: a.j, length: a.length, strategy: a.strategy, zero_b: a.zero_b, m: a.m, c: a.c.clone() };
            let (_, cert) = build_pair(&cfg, &p).map_err(|e| format!("pair construction failed: {e}"))?;
            let text = match cli.format {
                Format::Json => json(&cert),
                Format::Text => {
                    let mut s = format!(
                        "pair eta = {}, z(eta) = {}, status {}\n",
                        cert.pair.eta, cert.value_at_eta, cert.status
                    );
                    for c in &cert.report.conditions {
                        s += &format!("  {c}\n");
                    }
                    s
                }
            };
            emit(out, &text)?;
            Ok(exit_for(cert.status))
        }
        Command::Depseq(a) => {
            let r = DepSeqRequest {
                j0: a.j0,
                length: a.length,
                strategy: a.strategy,
                weak: a.weak,
                c: a.c.clone(),
                j1: a.j1,
                pair_length: a.pair_length,
            };
            let (_, doc) =
                build_depseq(&cfg, &r).map_err(|e| format!("dependent sequence construction failed: {e}"))?;
            let text = match cli.format {
                Format::Json => json(&doc),
                Format::Text => {
                    let c = &doc.certificate;
                    let mut s = format!("dependent sequence of length {}, status {}\n", c.length, doc.status);
                    for ch in c.clauses.iter().chain(std::iter::once(&c.magnitude)) {
                        s += &format!("  {ch}\n");
                    }
                    s
                }
            };
            emit(out, &text)?;
            Ok(exit_for(doc.status))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("bdlab: {msg}");
            ExitCode::from(2)
        }
    }
}
