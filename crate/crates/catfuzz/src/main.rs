use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use catfuzz::campaign::{resolve_targets, run_campaign, CampaignConfig, LOG_FILE};
use catfuzz::exec::{list_functions, TestCase, WorkerCommand, WorkerSlot, DEFAULT_TIMEOUT_MS};
use catfuzz::log::{read_log, Mode};
use catfuzz::report::{metrics, render_text, test_case, write_report, CRASH_DIR};
use catfuzz::{store, synthetic};
use catfuzz_core::learner::{LearnerConfig, OutcomeKind};
use catfuzz_core::CatalogConfig;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "catfuzz", version, about = "API fuzzing with input categories and active constraint learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fingerprint a seed corpus and build an input database.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Catalog config (JSON); the built-in catalog when omitted.
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a campaign.
    Fuzz(FuzzArgs),
    /// Recompute the report of a finished campaign.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        db: PathBuf,
        /// Also write report files and reproducers here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run one recorded case.
    Repro {
        #[arg(long)]
        case: u64,
        /// Campaign output directory.
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        /// Needed for cases without a reproducer file.
        #[arg(long)]
        db: Option<PathBuf>,
        #[command(flatten)]
        worker: WorkerArgs,
    },
    /// Write the seed corpus of the built-in synthetic suite.
    SyntheticCorpus {
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the synthetic suite over the wire protocol on stdin/stdout.
    #[command(hide = true)]
    Worker,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct WorkerArgs {
    /// Command line of an external worker.
    #[arg(long)]
    harness: Option<String>,
    /// Use the built-in synthetic suite.
    #[arg(long)]
    synthetic: bool,
}

impl WorkerArgs {
    fn command(&self) -> Result<WorkerCommand> {
        match &self.harness {
            Some(line) => WorkerCommand::parse(line).context("empty harness command"),
            None => Ok(WorkerCommand::synthetic(std::env::current_exe()?)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    NoLearning,
    FullyRandom,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long)]
    db: PathBuf,
    /// `all`, or comma-separated names (`name:arity` when the worker does not report arities).
    #[arg(long, default_value = "all")]
    targets: String,
    /// Wall-clock budget in seconds.
    #[arg(long, default_value_t = 3600.0)]
    budget: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory for the log, report and reproducers.
    #[arg(long)]
    report: PathBuf,
    #[command(flatten)]
    worker: WorkerArgs,
    #[arg(long, value_enum, default_value = "full")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    timeout_ms: u64,
    /// Cases per function.
    #[arg(long, default_value_t = catfuzz::campaign::DEFAULT_CASE_CAP)]
    case_cap: u64,
    /// Cases over the whole campaign.
    #[arg(long)]
    max_cases: Option<u64>,
    /// Learner settings (JSON); missing keys keep their defaults.
    #[arg(long)]
    learner: Option<PathBuf>,
    /// Continue from the checkpoint in the report directory.
    #[arg(long)]
    resume: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CF_LOG_LEVEL", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest { corpus, catalog, out } => {
            let config = match catalog {
                Some(path) => store::read_catalog_config(&path)?,
                None => CatalogConfig::default(),
            };
            let (values, dropped) = store::read_corpus(&corpus)?;
            if values.is_empty() {
                bail!("corpus {} has no usable seeds", corpus.display());
            }
            let (db, report) = store::ingest(values, dropped, &config)?;
            store::save(&db, &report, &out)?;
            println!(
                "{} seeds, {} kept, {} dropped; {} properties, {} categories",
                report.seeds,
                report.kept,
                report.dropped.len(),
                report.properties,
                report.categories
            );
            if !report.near_miss_possible {
                println!("single category: the learner cannot pose near-miss queries");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fuzz(args) => fuzz(args),
        Command::Report { log, db, out } => {
            let db = store::load(&db)?;
            let (header, records) = read_log(&log)?;
            let report = metrics(&header, &records, &db)?;
            if let Some(dir) = out {
                write_report(&report, &dir)?;
            }
            print!("{}", render_text(&report));
            Ok(exit_for(report.crash_groups.is_empty()))
        }
        Command::Repro { case, dir, db, worker } => repro(case, &dir, db.as_deref(), &worker),
        Command::SyntheticCorpus { out } => {
            store::write_corpus(&out, &synthetic::seeds::corpus())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Worker => {
            let stdin = std::io::stdin();
            synthetic::worker::serve(stdin.lock(), std::io::stdout().lock())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_for(clean: bool) -> ExitCode {
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn fuzz(args: FuzzArgs) -> Result<ExitCode> {
    if args.budget.is_nan() || args.budget <= 0.0 {
        bail!("budget must be positive");
    }
    let db = store::load(&args.db)?;
    let command = args.worker.command()?;
    let (names, arities) = list_functions(&command)?;
    let targets = resolve_targets(&args.targets, &names, arities.as_deref())?;
    let learner = match &args.learner {
        Some(path) => serde_json::from_str::<LearnerConfig>(&std::fs::read_to_string(path)?).context("learner config")?,
        None => LearnerConfig::default(),
    };
    let mut config = CampaignConfig::new(targets, args.seed);
    config.budget = Duration::from_secs_f64(args.budget);
    config.timeout_ms = args.timeout_ms;
    config.learner = learner;
    config.workers = args.workers;
    config.mode = match args.mode {
        ModeArg::Full => Mode::Full,
        ModeArg::NoLearning => Mode::NoLearning,
        ModeArg::FullyRandom => Mode::FullyRandom,
    };
    config.case_cap = args.case_cap;
    config.max_cases = args.max_cases;

    let run = run_campaign(&db, &command, &config, &args.report, args.resume)?;
    let (header, records) = read_log(&run.log)?;
    if records.is_empty() {
        println!("no cases executed");
        return Ok(ExitCode::SUCCESS);
    }
    let report = metrics(&header, &records, &db)?;
    write_report(&report, &args.report)?;
    print!("{}", render_text(&report));
    Ok(exit_for(report.crash_groups.is_empty()))
}

fn repro(case: u64, dir: &Path, db: Option<&Path>, worker: &WorkerArgs) -> Result<ExitCode> {
    let file = dir.join(CRASH_DIR).join(format!("{case}.json"));
    let tc: TestCase = if file.exists() {
        serde_json::from_str(&std::fs::read_to_string(&file)?).context("corrupt reproducer")?
    } else {
        let Some(db) = db else {
            bail!("no reproducer for case {case}; pass --db to rebuild it from the log");
        };
        let db = store::load(db)?;
        let (_, records) = read_log(&dir.join(LOG_FILE))?;
        let Some(record) = records.iter().find(|r| r.case == case) else {
            bail!("case {case} is not in the log");
        };
        test_case(record, &db)
    };
    let mut slot = WorkerSlot::new(worker.command()?);
    let execution = slot.run_case(&tc)?;
    let (outcome, incident) = (execution.outcome, execution.incident);
    match outcome {
        Some(o) => {
            println!("{}", serde_json::to_string(&o)?);
            Ok(exit_for(o.kind != OutcomeKind::Crash))
        }
        None => bail!("protocol desync: {}", incident.unwrap_or_default()),
    }
}

