use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crowdcov_core::engines::{check, CheckOptions, EngineChoice, EngineError, Outcome, Stats, Verdict};
use crowdcov_core::model::{parse_template, validate, TemplateAutomaton, ValidationReport};
use crowdcov_core::net::compile;
use crowdcov_core::oracle::{explore, ExploreOptions, OracleError, DEFAULT_CONFIG_BUDGET};
use crowdcov_core::semantics::{replay_witness, Witness};

const EXIT_SAFE: u8 = 0;
const EXIT_COVERABLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INAPPLICABLE: u8 = 3;
const EXIT_BOUNDED: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "crowdcov",
    version,
    about = "Coverability checker for crowds of anonymous processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the target demand is coverable.
    Check(CheckArgs),
    /// List every configuration reachable with exactly N processes.
    Explore(ExploreArgs),
    /// Report well-formedness violations.
    Validate(FileArgs),
    /// Print the compiled net.
    Compile(FileArgs),
    /// Replay a witness file against a template.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct FileArgs {
    file: PathBuf,
    /// Add self-loop receives wherever a broadcast template lacks one.
    #[arg(long)]
    complete_receives: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Auto,
    Backward,
    Km,
    Leaderless,
    Oracle,
}

impl From<EngineArg> for EngineChoice {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Auto => EngineChoice::Auto,
            EngineArg::Backward => EngineChoice::Backward,
            EngineArg::Km => EngineChoice::KarpMiller,
            EngineArg::Leaderless => EngineChoice::Leaderless,
            EngineArg::Oracle => EngineChoice::Oracle,
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    input: FileArgs,
    #[arg(long, value_enum, default_value = "auto")]
    engine: EngineArg,
    /// Largest crowd size tried by the oracle engine.
    #[arg(long, default_value_t = 5)]
    oracle_n: u32,
    /// Print a replayable trace when the target is coverable.
    #[arg(long)]
    witness: bool,
    #[arg(long)]
    json: bool,
    /// Use the sequential code path.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    input: FileArgs,
    #[arg(short, long)]
    n: u32,
    #[arg(long, default_value_t = DEFAULT_CONFIG_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    input: FileArgs,
    witness: PathBuf,
}

/// Error carrying its exit status; the message goes to stderr.
struct Failure(u8, String);

type CmdResult = Result<u8, Failure>;

fn input_error(msg: impl Into<String>) -> Failure {
    Failure(EXIT_INPUT, msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load(args: &FileArgs) -> Result<(String, TemplateAutomaton), Failure> {
    let text = read(&args.file)?;
    let mut t = parse_template(&text).map_err(|e| input_error(format!("{}: {e}", args.file.display())))?;
    if args.complete_receives {
        t = t.complete_receives().map_err(|e| input_error(e.to_string()))?;
    }
    Ok((text, t))
}

fn invalid(t: &TemplateAutomaton, r: &ValidationReport) -> Failure {
    input_error(format!("invalid template:\n{}", r.render(t).trim_end()))
}

#[derive(Serialize)]
struct RunReport<'a> {
    verdict: String,
    engine: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
    stats: &'a std::collections::BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<Vec<String>>,
    digest: String,
    timing_ms: u128,
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn exit_for(outcome: &Outcome) -> u8 {
    match outcome {
        Outcome::Safe => EXIT_SAFE,
        Outcome::Coverable => EXIT_COVERABLE,
        Outcome::Inapplicable(_) => EXIT_INAPPLICABLE,
        Outcome::SafeUpTo(_) | Outcome::BudgetExceeded(_) => EXIT_BOUNDED,
    }
}

fn verdict_text(outcome: &Outcome) -> String {
    match outcome {
        Outcome::SafeUpTo(n) => format!("SAFE-UP-TO {n}"),
        other => other.keyword().to_owned(),
    }
}

fn cmd_check(args: &CheckArgs) -> CmdResult {
    let start = Instant::now();
    let (text, t) = load(&args.input)?;
    let opts = CheckOptions {
        engine: args.engine.into(),
        oracle_n: args.oracle_n,
        witness: args.witness,
        parallelism: if args.sequential {
            crowdcov_core::Parallelism::Sequential
        } else {
            crowdcov_core::Parallelism::Parallel
        },
        ..CheckOptions::default()
    };
    let (engine, verdict) = match check(&t, &opts) {
        Ok(r) => r,
        Err(EngineError::InvalidTemplate(report)) => {
            if args.json {
                let empty = Stats::default();
                let out = RunReport {
                    verdict: "INVALID".into(),
                    engine: None,
                    n: None,
                    witness: None,
                    stats: &empty.counters,
                    violations: Some(report.violations.iter().map(|v| v.describe(&t)).collect()),
                    digest: digest(&text),
                    timing_ms: start.elapsed().as_millis(),
                };
                println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
            }
            return Err(invalid(&t, &report));
        }
        Err(e) => return Err(Failure(EXIT_INTERNAL, e.to_string())),
    };
    if let Outcome::Inapplicable(why) | Outcome::BudgetExceeded(why) = &verdict.outcome {
        eprintln!("{}: {why}", engine.name());
    }
    let Verdict {
        outcome,
        witness,
        stats,
    } = verdict;
    let witness = witness.filter(|_| args.witness);
    if args.json {
        let out = RunReport {
            verdict: verdict_text(&outcome),
            engine: Some(engine.name()),
            n: witness.as_ref().map(|w| w.n),
            witness: witness.as_ref().map(|w| w.render(&t)),
            stats: &stats.counters,
            violations: None,
            digest: digest(&text),
            timing_ms: start.elapsed().as_millis(),
        };
        println!("{}", serde_json::to_string_pretty(&out).expect("report serializes"));
    } else {
        println!("verdict {}", verdict_text(&outcome));
        println!("engine {}", engine.name());
        for (k, v) in &stats.counters {
            println!("stat {k} {v}");
        }
        if let Some(w) = &witness {
            print!("{}", w.render(&t));
        }
    }
    Ok(exit_for(&outcome))
}

fn cmd_explore(args: &ExploreArgs) -> CmdResult {
    let (_, t) = load(&args.input)?;
    let report = validate(&t);
    if !report.is_valid() {
        return Err(invalid(&t, &report));
    }
    let opts = ExploreOptions {
        budget: args.budget,
        record_edges: false,
    };
    let reach = explore(&t, args.n, opts).map_err(|e| match e {
        OracleError::BudgetExceeded(_) => Failure(EXIT_BOUNDED, e.to_string()),
        OracleError::TooFewProcesses { .. } => input_error(e.to_string()),
        other => Failure(EXIT_INTERNAL, other.to_string()),
    })?;
    for c in &reach.configs {
        println!("{}", c.render(&t));
    }
    println!("configs={}", reach.configs.len());
    Ok(EXIT_SAFE)
}

fn cmd_validate(args: &FileArgs) -> CmdResult {
    let (_, t) = load(args)?;
    let report = validate(&t);
    if report.is_valid() {
        println!("valid");
        Ok(EXIT_SAFE)
    } else {
        print!("{}", report.render(&t));
        println!("{report}");
        Ok(EXIT_INPUT)
    }
}

fn cmd_compile(args: &FileArgs) -> CmdResult {
    let (_, t) = load(args)?;
    let net = compile(&t).map_err(|e| match e {
        crowdcov_core::net::NetError::InvalidTemplate(r) => invalid(&t, &r),
        other => Failure(EXIT_INTERNAL, other.to_string()),
    })?;
    print!("{}", net.dump(&t));
    Ok(EXIT_SAFE)
}

fn cmd_replay(args: &ReplayArgs) -> CmdResult {
    let (_, t) = load(&args.input)?;
    let report = validate(&t);
    if !report.is_valid() {
        return Err(invalid(&t, &report));
    }
    let text = read(&args.witness)?;
    let w = Witness::parse(&t, &text).map_err(|e| input_error(format!("{}: {e}", args.witness.display())))?;
    match replay_witness(&t, &w) {
        Ok(trace) => {
            for c in &trace {
                println!("{}", c.render(&t));
            }
            println!("replay ok, {} step(s)", w.steps.len());
            Ok(EXIT_SAFE)
        }
        Err(e) => Err(input_error(format!("replay failed: {e}"))),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("crowdcov: {msg}");
            ExitCode::from(code)
        }
    }
}
