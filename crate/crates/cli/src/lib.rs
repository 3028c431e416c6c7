//! Command-line front end: argument parsing and subcommand dispatch.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime or SUT error, 3 the
//! `diff` verdict was `distinguished`.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use statelearn::active::{learn_active, EquivalenceConfig, EquivalenceMode};
use statelearn::analysis::{coverage, coverage_dot, diff};
use statelearn::automata::{parse, parse_symbol_list, to_json, MealyMachine, Symbol, Verdict};
use statelearn::fuzz::{fuzz_campaign_sharded, model_guided_traces, FuzzConfig};
use statelearn::passive::{learn_passive, MergeConfig};
use statelearn::sut::{open_target, serve_builtin, AbstractionConfig, SutSession, Variant};
use statelearn::trace::TraceLog;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_DISTINGUISHED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "statelearn", version, about = "Learn Mealy models of stateful systems, fuzz them, and compare models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a model by querying a SUT
    LearnActive(LearnActiveArgs),
    /// Learn a model from a recorded trace log
    LearnPassive(LearnPassiveArgs),
    /// Run a seeded fuzzing campaign and record a trace log
    Fuzz(FuzzArgs),
    /// Measure the state and transition coverage of a trace log
    Coverage(CoverageArgs),
    /// Compare two models and report distinguishing input sequences
    Diff(DiffArgs),
    /// Serve a builtin reference SUT over TCP until interrupted
    SutServe(SutServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EqMode {
    Exhaustive,
    WMethod,
    RandomWalk,
}

impl From<EqMode> for EquivalenceMode {
    fn from(m: EqMode) -> Self {
        match m {
            EqMode::Exhaustive => EquivalenceMode::Exhaustive,
            EqMode::WMethod => EquivalenceMode::WMethod,
            EqMode::RandomWalk => EquivalenceMode::RandomWalk,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct LearnActiveArgs {
    /// SUT to learn: builtin:<varA|varB|varC> or tcp:<host:port>
    #[arg(long)]
    sut: String,
    /// Abstraction config (JSON) for tcp targets; default is the identity mapping
    #[arg(long)]
    abstraction: Option<PathBuf>,
    /// Comma-separated input alphabet; default is every input the SUT accepts
    #[arg(long)]
    alphabet: Option<String>,
    /// Equivalence oracle
    #[arg(long, value_enum, default_value = "w-method")]
    eq: EqMode,
    /// Extra depth for w-method, maximal word length for exhaustive
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Number of random walks
    #[arg(long, default_value_t = 1000)]
    walks: usize,
    /// Length of each random walk
    #[arg(long, default_value_t = 20)]
    walk_len: usize,
    /// Seed for random walks
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the model (JSON); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the per-round learning log (JSON lines)
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct LearnPassiveArgs {
    /// Trace log (JSON lines)
    #[arg(long)]
    traces: PathBuf,
    /// Minimum overlap evidence for a merge
    #[arg(long, default_value_t = 0)]
    min_evidence: u64,
    /// Where to write the model (JSON); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the merge log (JSON lines)
    #[arg(long)]
    merge_log: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct FuzzArgs {
    /// SUT to fuzz: builtin:<varA|varB|varC> or tcp:<host:port>
    #[arg(long)]
    sut: String,
    /// Abstraction config (JSON) for tcp targets
    #[arg(long)]
    abstraction: Option<PathBuf>,
    /// Seed traces: a JSON array of input-symbol arrays; default is the empty trace
    #[arg(long)]
    seeds: Option<PathBuf>,
    /// Number of mutated executions
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    /// Maximum trace length
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    /// Per-step probability of sending MALFORMED
    #[arg(long, default_value_t = 0.0)]
    malformed_ratio: f64,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model whose state access sequences become the seeds (guided mode)
    #[arg(long, conflicts_with = "seeds")]
    guided_model: Option<PathBuf>,
    /// Parallel workers, each with its own SUT session
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Where to write the trace log (JSON lines); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CoverageArgs {
    /// Reference model (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Trace log (JSON lines)
    #[arg(long)]
    log: PathBuf,
    /// Where to write the report (JSON); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the annotated Graphviz rendering
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DiffArgs {
    /// First model (JSON)
    #[arg(long)]
    a: PathBuf,
    /// Second model (JSON)
    #[arg(long)]
    b: PathBuf,
    /// Maximum number of witnesses to report
    #[arg(long, default_value_t = 5)]
    max_witnesses: usize,
    /// Where to write the report (JSON); stdout if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SutServeArgs {
    /// Builtin variant: varA, varB or varC
    #[arg(long)]
    name: String,
    /// Address to listen on; port 0 picks a free port
    #[arg(long, default_value = "127.0.0.1:2121")]
    bind: String,
}

/// A failed run and the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Display) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn runtime(message: impl Display) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: message.to_string(),
    }
}

type Outcome = Result<i32, Failure>;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::LearnActive(args) => run_learn_active(args),
        Command::LearnPassive(args) => run_learn_passive(args),
        Command::Fuzz(args) => run_fuzz(args),
        Command::Coverage(args) => run_coverage(args),
        Command::Diff(args) => run_diff(args),
        Command::SutServe(args) => run_sut_serve(args),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn print_config(command: &str, args: &impl Serialize) {
    let json = serde_json::to_string(args).expect("arguments serialize");
    eprintln!("statelearn {command} {json}");
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| runtime(format!("cannot write to stdout: {e}")))
        }
    }
}

fn load_model(path: &Path) -> Result<MealyMachine, Failure> {
    parse(&read(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_log(path: &Path) -> Result<TraceLog, Failure> {
    TraceLog::from_jsonl(&read(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn load_abstraction(path: Option<&Path>) -> Result<Option<AbstractionConfig>, Failure> {
    path.map(|p| AbstractionConfig::from_json(&read(p)?).map_err(|e| runtime(format!("{}: {e}", p.display()))))
        .transpose()
}

fn open(target: &str, abstraction: Option<AbstractionConfig>) -> Result<Box<dyn SutSession>, Failure> {
    if !target.starts_with("builtin:") && !target.starts_with("tcp:") {
        return Err(usage(format!("--sut must be builtin:<name> or tcp:<host:port>, got {target:?}")));
    }
    open_target(target, abstraction).map_err(runtime)
}

fn run_learn_active(args: LearnActiveArgs) -> Outcome {
    print_config("learn-active", &args);
    let alphabet = args
        .alphabet
        .as_deref()
        .map(parse_symbol_list)
        .transpose()
        .map_err(|e| usage(format!("--alphabet: {e}")))?;
    let eq = EquivalenceConfig {
        mode: args.eq.into(),
        depth_bound: args.depth,
        walk_count: args.walks,
        walk_length: args.walk_len,
        seed: args.seed,
    };
    eq.validate().map_err(usage)?;
    let mut sut = open(&args.sut, load_abstraction(args.abstraction.as_deref())?)?;
    let alphabet = alphabet.unwrap_or_else(|| sut.descriptor().inputs.clone());
    let result = learn_active(sut.as_mut(), &alphabet, &eq).map_err(runtime)?;
    eprintln!(
        "learned {} states in {} rounds ({} resets, {} symbols)",
        result.model.state_count(),
        result.rounds.len(),
        result.stats.resets,
        result.stats.symbols
    );
    if let Some(path) = &args.log {
        emit(Some(path), &result.log_jsonl())?;
    }
    emit(args.out.as_deref(), &to_json(&result.model))?;
    Ok(EXIT_OK)
}

fn run_learn_passive(args: LearnPassiveArgs) -> Outcome {
    print_config("learn-passive", &args);
    let log = load_log(&args.traces)?;
    let cfg = MergeConfig {
        min_evidence: args.min_evidence,
    };
    let result = learn_passive(&log, &cfg).map_err(runtime)?;
    eprintln!(
        "merged {} prefix-tree nodes into {} states",
        result.pta_nodes,
        result.model.state_count()
    );
    if let Some(path) = &args.merge_log {
        emit(Some(path), &result.merge_log_jsonl())?;
    }
    emit(args.out.as_deref(), &to_json(&result.model))?;
    Ok(EXIT_OK)
}

fn load_seeds(path: &Path) -> Result<Vec<Vec<Symbol>>, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn run_fuzz(args: FuzzArgs) -> Outcome {
    print_config("fuzz", &args);
    let cfg = FuzzConfig {
        seed: args.seed,
        iterations: args.iterations,
        max_trace_len: args.max_len,
        malformed_ratio: args.malformed_ratio,
        ..FuzzConfig::default()
    };
    cfg.validate().map_err(usage)?;
    if args.jobs == 0 {
        return Err(usage("--jobs must be positive"));
    }
    let (seeds, guided) = match (&args.seeds, &args.guided_model) {
        (_, Some(model)) => (model_guided_traces(&load_model(model)?), true),
        (Some(path), None) => (load_seeds(path)?, false),
        (None, None) => (Vec::new(), false),
    };
    let abstraction = load_abstraction(args.abstraction.as_deref())?;
    // Fail early on a bad target before spawning workers.
    drop(open(&args.sut, abstraction.clone())?);
    let log = fuzz_campaign_sharded(
        || open_target(&args.sut, abstraction.clone()),
        &seeds,
        &cfg,
        args.jobs,
        guided,
    )
    .map_err(runtime)?;
    let aborted = log.entries.iter().filter(|t| t.aborted).count();
    eprintln!("recorded {} traces ({} steps, {aborted} aborted)", log.len(), log.total_steps());
    emit(args.out.as_deref(), &log.to_jsonl())?;
    Ok(EXIT_OK)
}

fn run_coverage(args: CoverageArgs) -> Outcome {
    print_config("coverage", &args);
    let model = load_model(&args.model)?;
    let log = load_log(&args.log)?;
    let report = coverage(&model, &log);
    eprint!("{}", report.summary());
    if let Some(path) = &args.dot {
        emit(Some(path), &coverage_dot(&model, &report))?;
    }
    emit(args.out.as_deref(), &report.to_json())?;
    Ok(EXIT_OK)
}

fn run_diff(args: DiffArgs) -> Outcome {
    print_config("diff", &args);
    let a = load_model(&args.a)?;
    let b = load_model(&args.b)?;
    let report = diff(&a, &b, args.max_witnesses);
    eprint!("{}", report.summary());
    emit(args.out.as_deref(), &report.to_json())?;
    Ok(match report.verdict {
        Verdict::Equivalent => EXIT_OK,
        Verdict::Distinguished => EXIT_DISTINGUISHED,
    })
}

fn run_sut_serve(args: SutServeArgs) -> Outcome {
    print_config("sut-serve", &args);
    let variant: Variant = args.name.parse().map_err(runtime)?;
    let (tx, rx) = mpsc::channel();
    // Keeps the channel open when no handler could be installed, so the
    // server then runs until the process is killed.
    let _keep_open = tx.clone();
    if let Err(e) = ctrlc::set_handler(move || {
        let _ = tx.send(());
    }) {
        log::warn!("cannot install interrupt handler: {e}");
    }
    let server = serve_builtin(variant, &args.bind).map_err(runtime)?;
    println!("listening on {}", server.local_addr());
    let _ = std::io::stdout().flush();
    let _ = rx.recv();
    eprintln!("shutting down");
    server.shutdown();
    Ok(EXIT_OK)
}
