//! `pertinex`: synthesize collections, search them, run evaluations and serve
//! the feedback API.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pertinex_core::evaluation::{
    feedback_curve_csv, overlap_csv, pr_curve_csv, Experiment, MEAN_ROW,
};
use pertinex_core::{
    generate_synthetic, load_collection, score_query, Arm, Collection, FeedbackMethod, Index,
    Judgments, SynthParams, DEFAULT_EXPANSION_SIZE,
};
use pertinex_service::{AppState, SessionManager};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "pertinex",
    version,
    about = "Goal-indexed ranking with pertinence feedback"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic collection with embedded judgments.
    Synth(SynthArgs),
    /// Print collection statistics.
    Stats {
        #[arg(long)]
        collection: PathBuf,
    },
    /// Rank objects for an ad-hoc goal query.
    Search {
        #[arg(long)]
        collection: PathBuf,
        /// Comma-separated goal ids.
        #[arg(long, value_delimiter = ',', required = true)]
        goals: Vec<String>,
        /// Show at most this many rows.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Run evaluations and write CSV reports.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Compare PRF and PPF expansion sets (writes overlap.csv).
    Compare {
        #[command(flatten)]
        input: Input,
        /// Number of pertinent objects fed back.
        #[arg(long = "R", default_value_t = 5)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_SIZE)]
        k: usize,
        #[arg(long, default_value = "overlap.csv")]
        out: PathBuf,
    },
    /// Serve the session HTTP API.
    Serve {
        #[arg(long)]
        collection: PathBuf,
        #[arg(long, env = "PERTINEX_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory holding one append-only log per session.
        #[arg(long, default_value = "pertinex-sessions")]
        sessions_dir: PathBuf,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthParams::default().object_count)]
    objects: usize,
    #[arg(long, default_value_t = SynthParams::default().query_count)]
    queries: usize,
    #[arg(long, default_value_t = SynthParams::default().vocabulary_size)]
    vocabulary: usize,
    #[arg(long, default_value_t = SynthParams::default().avg_goals_per_object)]
    goals_per_object: f64,
    #[arg(long, default_value_t = SynthParams::default().avg_goals_per_query)]
    goals_per_query: f64,
    #[arg(long, default_value_t = SynthParams::default().max_frequency)]
    max_frequency: u32,
    #[arg(long, default_value_t = SynthParams::default().pertinent_per_query)]
    pertinent_per_query: usize,
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long)]
    collection: PathBuf,
    /// Tab-separated `query-id<TAB>object-id` pairs replacing the embedded judgments.
    #[arg(long)]
    judgments: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// 11-point interpolated precision per query plus the mean (pr_curve.csv).
    Pr {
        #[command(flatten)]
        input: Input,
        /// baseline, prf or ppf.
        #[arg(long, default_value = "baseline")]
        method: Arm,
        /// Pertinent objects fed back; 0 evaluates the full baseline ranking.
        #[arg(long = "R", default_value_t = 0)]
        r: usize,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_SIZE)]
        k: usize,
        #[arg(long, default_value = "pr_curve.csv")]
        out: PathBuf,
    },
    /// Mean average precision against the number of objects fed back
    /// (feedback_curve.csv). The baseline arm is always included.
    Feedback {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "prf,ppf")]
        methods: Vec<FeedbackMethod>,
        /// A range `a..b` (inclusive) or a comma-separated list.
        #[arg(long = "R", default_value = "1..10", value_parser = parse_sizes)]
        r: Sizes,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_SIZE)]
        k: usize,
        #[arg(long, default_value = "feedback_curve.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone)]
struct Sizes(Vec<usize>);

fn parse_sizes(s: &str) -> Result<Sizes, String> {
    let bad = |_| format!("invalid feedback size list {s:?}");
    let sizes: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (a, b): (usize, usize) = (
            a.trim().parse().map_err(bad)?,
            b.trim().parse().map_err(bad)?,
        );
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(bad))
            .collect::<Result<_, _>>()?
    };
    if sizes.is_empty() {
        return Err(format!("empty feedback size list {s:?}"));
    }
    if sizes.contains(&0) {
        return Err("feedback sizes must be at least 1".into());
    }
    Ok(Sizes(sizes))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(report) => {
            let mut stdout = io::stdout().lock();
            match stdout
                .write_all(report.as_bytes())
                .and_then(|()| stdout.flush())
            {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                    eprintln!("error: writing to stdout: {e}");
                    ExitCode::from(EXIT_IO)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|cause| cause.is::<io::Error>()) {
        EXIT_IO
    } else {
        EXIT_VALIDATION
    }
}

/// Runs one command and returns what it prints on stdout.
fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Synth(args) => synth(args),
        Command::Stats { collection } => stats(&collection),
        Command::Search {
            collection,
            goals,
            limit,
        } => search(&collection, &goals, limit),
        Command::Eval(EvalCommand::Pr {
            input,
            method,
            r,
            k,
            out,
        }) => eval_pr(&input, method, r, k, &out),
        Command::Eval(EvalCommand::Feedback {
            input,
            methods,
            r,
            k,
            out,
        }) => eval_feedback(&input, &methods, &r.0, k, &out),
        Command::Compare { input, r, k, out } => compare(&input, r, k, &out),
        Command::Serve {
            collection,
            listen,
            sessions_dir,
        } => serve(&collection, listen, &sessions_dir),
    }
}

fn load(input: &Input) -> Result<(Collection, Judgments)> {
    let collection = load_collection(&input.collection)?;
    let Some(path) = &input.judgments else {
        let judgments = collection.judgments().clone();
        return Ok((collection, judgments));
    };
    let judgments = Judgments::load_tsv(path)?;
    let collection = collection
        .with_judgments(judgments.clone())
        .with_context(|| format!("judgments in {}", path.display()))?;
    Ok((collection, judgments))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn synth(args: SynthArgs) -> Result<String> {
    let params = SynthParams {
        object_count: args.objects,
        query_count: args.queries,
        vocabulary_size: args.vocabulary,
        avg_goals_per_object: args.goals_per_object,
        avg_goals_per_query: args.goals_per_query,
        max_frequency: args.max_frequency,
        pertinent_per_query: args.pertinent_per_query,
    };
    let mut report = String::new();
    let (collection, _) = generate_synthetic(&params, args.seed)?;
    collection.save(&args.out)?;
    let s = collection.stats();
    writeln!(
        report,
        "wrote {} ({} objects, {} queries, {} goals)",
        args.out.display(),
        s.object_count,
        s.query_count,
        s.vocabulary_size
    )?;
    Ok(report)
}

fn stats(path: &Path) -> Result<String> {
    let mut report = String::new();
    let s = load_collection(path)?.stats();
    writeln!(report, "objects               {}", s.object_count)?;
    writeln!(report, "queries               {}", s.query_count)?;
    writeln!(report, "goals                 {}", s.vocabulary_size)?;
    writeln!(report, "avg goals per query   {:.6}", s.avg_goals_per_query)?;
    writeln!(
        report,
        "avg goals per object  {:.6}",
        s.avg_goals_per_object
    )?;
    Ok(report)
}

fn search(path: &Path, goals: &[String], limit: Option<usize>) -> Result<String> {
    let goals: Vec<&str> = goals
        .iter()
        .map(|g| g.trim())
        .filter(|g| !g.is_empty())
        .collect();
    if goals.is_empty() {
        bail!("query has no goals");
    }
    let collection = load_collection(path)?;
    let ranked = score_query(&Index::build(&collection), &goals);
    let mut report = String::new();
    writeln!(report, "rank\tobject_id\tscore")?;
    for (rank, entry) in ranked.iter().take(limit.unwrap_or(usize::MAX)).enumerate() {
        writeln!(
            report,
            "{}\t{}\t{:.6}",
            rank + 1,
            entry.object_id,
            entry.score
        )?;
    }
    Ok(report)
}

fn eval_pr(input: &Input, arm: Arm, r: usize, k: usize, out: &Path) -> Result<String> {
    if r == 0 && arm != Arm::Baseline {
        bail!("--R must be at least 1 for {arm}");
    }
    let (collection, judgments) = load(input)?;
    let curves = Experiment::new(&collection, &judgments).pr_curves(arm, r, k);
    let csv = pr_curve_csv(&curves);
    let mut report = String::new();
    write(out, &csv)?;
    writeln!(report, "{} queries evaluated; mean curve:", curves.len())?;
    for line in csv.lines().filter(|l| l.starts_with(MEAN_ROW)) {
        let mut fields = line.split(',').skip(1);
        let level = fields.next().unwrap_or_default();
        let precision = fields.next().unwrap_or_default();
        writeln!(report, "  recall {level}  precision {precision}")?;
    }
    writeln!(report, "wrote {}", out.display())?;
    Ok(report)
}

fn eval_feedback(
    input: &Input,
    methods: &[FeedbackMethod],
    sizes: &[usize],
    k: usize,
    out: &Path,
) -> Result<String> {
    let started = Instant::now();
    let (collection, judgments) = load(input)?;
    let experiment = Experiment::new(&collection, &judgments);
    let mut arms = vec![Arm::Baseline];
    arms.extend(methods.iter().map(|&m| Arm::from(m)));
    arms.sort();
    arms.dedup();
    let curves = arms
        .iter()
        .map(|&arm| experiment.feedback_curve(arm, sizes, k))
        .collect::<Result<Vec<_>, _>>()?;
    write(out, &feedback_curve_csv(&curves))?;
    let mut report = String::new();
    writeln!(report, "method    R  MAP       evaluated  skipped")?;
    for curve in &curves {
        for p in &curve.points {
            writeln!(
                report,
                "{:<8} {:>2}  {:.6}  {:>9}  {:>7}",
                curve.arm.to_string(),
                p.r_fed,
                p.mean_avg_precision,
                p.queries_evaluated,
                p.queries_skipped
            )?;
        }
    }
    writeln!(
        report,
        "wrote {} in {:.2?}",
        out.display(),
        started.elapsed()
    )?;
    Ok(report)
}

fn compare(input: &Input, r: usize, k: usize, out: &Path) -> Result<String> {
    let (collection, judgments) = load(input)?;
    let overlap = Experiment::new(&collection, &judgments).overlap_between(
        r,
        k,
        FeedbackMethod::Prf,
        FeedbackMethod::Ppf,
    )?;
    write(out, &overlap_csv(&overlap))?;
    let mut report = String::new();
    writeln!(
        report,
        "PRF vs PPF, R={r}, k={k}: {} queries compared, {} skipped",
        overlap.per_query.len(),
        overlap.queries_skipped
    )?;
    writeln!(
        report,
        "mean set difference     {:>9.6}%",
        overlap.mean_set_difference_pct
    )?;
    writeln!(
        report,
        "mean weight difference  {:>9.6}%",
        overlap.mean_weight_difference_pct
    )?;
    writeln!(report, "wrote {}", out.display())?;
    Ok(report)
}

fn serve(path: &Path, listen: SocketAddr, sessions_dir: &Path) -> Result<String> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .init();
    let collection = load_collection(path)?;
    let sessions = SessionManager::open(&collection, sessions_dir)?;
    let state = AppState::new(sessions, collection.stats());
    let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
    runtime
        .block_on(pertinex_service::serve(listen, state))
        .with_context(|| format!("serving on {listen}"))?;
    Ok(String::new())
}
