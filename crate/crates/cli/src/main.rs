mod report;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use alignppl::error::{Error, InferenceError};
use alignppl::inference::{Alignment, Compiled, InferenceOutput, McmcConfig, McmcKind, SmcConfig};
use alignppl::lang::Program;
use alignppl::models;
use alignppl::oracle::{self, EnumConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const DEFAULT_SEED: u64 = 1;

/// Alignment analysis and inference for alignppl programs.
#[derive(Parser, Debug)]
#[command(name = "alignppl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print which let binders are aligned.
    Analyze(AnalyzeArgs),
    /// Sequential Monte Carlo.
    Smc(SmcArgs),
    /// Lightweight Metropolis-Hastings.
    Mcmc(McmcArgs),
    /// Check the analysis against sampled executions.
    CheckAlign(CheckArgs),
    /// Exact posterior of a program with only finite-support draws.
    Oracle(OracleArgs),
    /// Time repeated inference runs.
    Bench(BenchArgs),
    /// List the built-in models.
    Models,
}

#[derive(Args, Debug)]
struct Common {
    /// Built-in model id or path to a source file.
    #[arg(long, short)]
    model: String,
    #[arg(long, env = "ALIGNPPL_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the result here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Progress events as JSON lines on standard error.
    #[arg(long)]
    debug: bool,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = AnalyzeFormat::Table)]
    format: AnalyzeFormat,
    /// Also print the generated constraints.
    #[arg(long)]
    dump_constraints: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AnalyzeFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
enum OutFormat {
    /// Summary and samples.
    Json,
    /// Summary only.
    Summary,
    /// One row per sample.
    Csv,
    /// Weighted histogram of a numeric projection.
    Hist,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    /// Record field to project onto for histograms.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

#[derive(Args, Debug)]
#[group(id = "smc-method", required = true, multiple = false)]
struct SmcMethod {
    #[arg(long)]
    aligned: bool,
    #[arg(long)]
    unaligned: bool,
}

#[derive(Args, Debug)]
struct SmcArgs {
    #[command(flatten)]
    method: SmcMethod,
    #[command(flatten)]
    common: Common,
    /// Number of particles.
    #[arg(short = 'n', long, default_value_t = 1000)]
    particles: usize,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
#[group(id = "mcmc-method", required = true, multiple = false)]
struct McmcMethod {
    #[arg(long)]
    aligned: bool,
    #[arg(long)]
    lightweight: bool,
}

#[derive(Args, Debug)]
struct McmcArgs {
    #[command(flatten)]
    method: McmcMethod,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Probability of a global step.
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    /// Fraction of steps discarded as burn-in.
    #[arg(long, default_value_t = 0.1)]
    burn: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    /// Comma-separated binders to check instead of those the analysis found aligned.
    #[arg(long, value_delimiter = ',')]
    names: Option<Vec<String>>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 60)]
    max_trace_len: usize,
    /// Drop executions longer than the limit instead of failing.
    #[arg(long)]
    truncate: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq)]
pub enum Method {
    AlignedSmc,
    UnalignedSmc,
    AlignedMcmc,
    LightweightMcmc,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Methods to compare; the first is the baseline for speedups.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    methods: Vec<Method>,
    /// Timed repetitions per method; repetition `r` uses seed `seed + r`.
    #[arg(short = 'R', long, default_value_t = 10)]
    repeats: usize,
    /// Untimed runs before the timed ones.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(short = 'n', long, default_value_t = 1000)]
    particles: usize,
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    #[arg(long, default_value_t = 0.1)]
    g: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Record field whose posterior mean is the MCMC estimate.
    #[arg(long)]
    field: Option<String>,
    #[arg(long, value_enum, default_value_t = BenchFormat::Json)]
    format: BenchFormat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchFormat {
    Json,
    Csv,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Inference(InferenceError::Invariant(_)) => 3,
            Error::Inference(InferenceError::Config(_)) => 1,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

impl From<InferenceError> for Failure {
    fn from(e: InferenceError) -> Self {
        Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn debug(on: bool, event: &str, fields: serde_json::Value) {
    if on {
        let mut j = json!({ "event": event });
        if let (Some(o), serde_json::Value::Object(f)) = (j.as_object_mut(), fields) {
            o.extend(f);
        }
        eprintln!("{j}");
    }
}

/// Loads a corpus model by id, or else a source file.
fn load(common: &Common) -> Result<(String, Program), Failure> {
    let t = Instant::now();
    let (name, program) = match models::find(&common.model) {
        Ok(m) => (m.id.to_string(), m.program()),
        Err(_) => {
            let src = fs::read_to_string(&common.model)
                .map_err(|e| Failure { code: 2, msg: format!("cannot load model `{}`: {e}", common.model) })?;
            (common.model.clone(), Program::parse(&src).map_err(Error::from)?)
        }
    };
    debug(common.debug, "loaded", json!({ "model": name, "ms": t.elapsed().as_secs_f64() * 1e3 }));
    Ok((name, program))
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn emit_output(common: &Common, o: &InferenceOutput, args: &OutputArgs) -> Result<(), Failure> {
    debug(common.debug, "finished", json!({ "method": o.method, "ms": o.wall_ms }));
    let text = match args.format {
        OutFormat::Json => format!("{}\n", o.to_json(true)),
        OutFormat::Summary => format!("{}\n", o.to_json(false)),
        OutFormat::Csv => report::samples_csv(o)?,
        OutFormat::Hist => report::histogram_csv(o, args.field.as_deref(), args.bins).map_err(usage)?,
    };
    emit(common, &text)
}

fn analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let (name, p) = load(&a.common)?;
    let t = Instant::now();
    let r = alignppl::analysis::analyze_align(&p.anf);
    debug(a.common.debug, "analyzed", json!({ "ms": t.elapsed().as_secs_f64() * 1e3 }));
    let text = match a.format {
        AnalyzeFormat::Table => {
            let mut s = r.table();
            if a.dump_constraints {
                s.push('\n');
                for c in &r.constraints {
                    s.push_str(&format!("{c}\n"));
                }
            }
            s
        }
        AnalyzeFormat::Json => {
            let mut j = json!({ "program": name, "binders": r.to_json() });
            if a.dump_constraints {
                let cs: Vec<String> = r.constraints.iter().map(|c| c.to_string()).collect();
                j["constraints"] = json!(cs);
            }
            format!("{j}\n")
        }
    };
    emit(&a.common, &text)
}

fn smc(a: &SmcArgs) -> Result<(), Failure> {
    let (_, p) = load(&a.common)?;
    let c = Compiled::new(&p);
    let alignment = if a.method.aligned { Alignment::Aligned } else { Alignment::Unaligned };
    let cfg = SmcConfig { threads: a.threads, ..SmcConfig::new(a.particles, a.common.seed, alignment) };
    let o = c.smc(&cfg)?;
    emit_output(&a.common, &o, &a.output)
}

fn mcmc(a: &McmcArgs) -> Result<(), Failure> {
    let (_, p) = load(&a.common)?;
    let c = Compiled::new(&p);
    let kind = if a.method.aligned { McmcKind::Aligned } else { McmcKind::Lightweight };
    let cfg = McmcConfig { g: a.g, burn: a.burn, ..McmcConfig::new(a.steps, a.common.seed) };
    let o = c.mcmc(kind, &cfg)?;
    emit_output(&a.common, &o, &a.output)
}

fn check_align(a: &CheckArgs) -> Result<(), Failure> {
    let (name, p) = load(&a.common)?;
    let c = Compiled::new(&p);
    let names = match &a.names {
        Some(ns) => {
            if let Some(bad) = ns.iter().find(|n| c.code.sym(n).is_none()) {
                return Err(usage(format!("no binder named `{bad}`")));
            }
            ns.iter().map(|n| n.as_str().into()).collect()
        }
        None => c.analysis.aligned(),
    };
    let mask = c.code.mask(&names);
    let r = oracle::check_alignment_empirically(&c.code, &mask, a.runs, a.common.seed, a.threads)
        .map_err(|(seed, e)| Failure { code: 2, msg: format!("run with seed {seed}: {e}") })?;
    emit(&a.common, &format!("{}\n", r.to_json(&name)))?;
    if r.is_consistent() {
        Ok(())
    } else {
        Err(Failure { code: 3, msg: "restricted let-sequences differ between runs".into() })
    }
}

fn exact(a: &OracleArgs) -> Result<(), Failure> {
    let (name, p) = load(&a.common)?;
    let c = Compiled::new(&p);
    let post = oracle::enumerate_posterior(&c.code, EnumConfig { max_trace_len: a.max_trace_len, truncate: a.truncate })
        .map_err(Error::from)?;
    let mut j = post.to_json();
    j["program"] = json!(name);
    emit(&a.common, &format!("{j}\n"))
}

fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let (name, p) = load(&a.common)?;
    if a.repeats == 0 {
        return Err(usage("need at least one repeat"));
    }
    let c = Compiled::new(&p);
    let run = |m: Method, seed: u64| -> Result<InferenceOutput, InferenceError> {
        match m {
            Method::AlignedSmc | Method::UnalignedSmc => {
                let al = if m == Method::AlignedSmc { Alignment::Aligned } else { Alignment::Unaligned };
                c.smc(&SmcConfig { threads: a.threads, ..SmcConfig::new(a.particles, seed, al) })
            }
            Method::AlignedMcmc | Method::LightweightMcmc => {
                let k = if m == Method::AlignedMcmc { McmcKind::Aligned } else { McmcKind::Lightweight };
                c.mcmc(k, &McmcConfig { g: a.g, ..McmcConfig::new(a.steps, seed) })
            }
        }
    };
    let mut rows = Vec::new();
    for &m in &a.methods {
        for w in 0..a.warmup {
            run(m, a.common.seed.wrapping_add(w as u64))?;
        }
        let mut times = Vec::new();
        let mut estimates = Vec::new();
        for r in 0..a.repeats {
            let o = run(m, a.common.seed.wrapping_add(r as u64))?;
            debug(a.common.debug, "repeat", json!({ "method": o.method, "repeat": r, "ms": o.wall_ms }));
            times.push(o.wall_ms);
            if let Some(e) = report::estimate(&o, a.field.as_deref()) {
                estimates.push(e);
            }
        }
        rows.push(report::BenchRow::new(m, times, estimates));
    }
    let text = match a.format {
        BenchFormat::Json => format!("{}\n", report::bench_json(&name, a.repeats, &rows)),
        BenchFormat::Csv => report::bench_csv(&rows)?,
    };
    emit(&a.common, &text)
}

fn list_models() -> Result<(), Failure> {
    for m in models::corpus() {
        println!("{:<12} {}", m.id, m.title);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let r = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Smc(a) => smc(a),
        Command::Mcmc(a) => mcmc(a),
        Command::CheckAlign(a) => check_align(a),
        Command::Oracle(a) => exact(a),
        Command::Bench(a) => bench(a),
        Command::Models => list_models(),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("alignppl: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
