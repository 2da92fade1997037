//! The fuzzing loop: round-robin over target functions, one case per active
//! function per round. Each round's cases run in parallel on the worker
//! pool; outcomes are applied in case-id order, so the log depends only on
//! the configuration and seed.
//!
//! Inside a function the focus parameter rotates with the case count. The
//! focus parameter's learner picks its category; the other arguments are
//! pinned to the most recent valid tuple (random until one exists), so each
//! outcome is attributed to a single learner.

use std::fs::{self, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use catfuzz_core::lattice::{CategoryId, InputDatabase, InputId};
use catfuzz_core::learner::{LearnerConfig, LearnerState, OutcomeKind, Phase, Polarity, Query};
use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{Executor, TestArg, TestCase, WorkerCommand, DEFAULT_TIMEOUT_MS};
use crate::log::{write_header, write_record, Accepted, LogArg, LogHeader, LogRecord, Mode, PhaseChange, Target, LOG_FORMAT};

pub const DEFAULT_CASE_CAP: u64 = 1000;
pub const DEFAULT_QUARANTINE_AFTER: u32 = 50;
pub const DEFAULT_CHECKPOINT_EVERY: u64 = 500;

pub const LOG_FILE: &str = "log.jsonl";
pub const TIMING_FILE: &str = "timing.jsonl";
pub const INCIDENT_FILE: &str = "incidents.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub targets: Vec<Target>,
    pub budget: Duration,
    pub timeout_ms: u64,
    pub seed: u64,
    pub learner: LearnerConfig,
    pub workers: usize,
    pub mode: Mode,
    /// Cases per function.
    pub case_cap: u64,
    /// Cases over the whole campaign.
    pub max_cases: Option<u64>,
    /// Consecutive crash or timeout outcomes before a function is dropped.
    pub quarantine_after: u32,
    pub checkpoint_every: u64,
}

impl CampaignConfig {
    pub fn new(targets: Vec<Target>, seed: u64) -> Self {
        CampaignConfig {
            targets,
            budget: Duration::from_secs(3600),
            timeout_ms: DEFAULT_TIMEOUT_MS,
            seed,
            learner: LearnerConfig::default(),
            workers: 1,
            mode: Mode::Full,
            case_cap: DEFAULT_CASE_CAP,
            max_cases: None,
            quarantine_after: DEFAULT_QUARANTINE_AFTER,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FunctionState {
    target: Target,
    rng: ChaCha8Rng,
    learners: Vec<LearnerState>,
    /// Most recent valid argument tuple.
    pinned: Option<Vec<LogArg>>,
    cases: u64,
    consecutive_faults: u32,
    quarantined: bool,
}

impl FunctionState {
    fn new(target: Target, index: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let learners = (0..target.arity).map(|p| LearnerState::new(target.name.clone(), p)).collect();
        FunctionState {
            target,
            rng,
            learners,
            pinned: None,
            cases: 0,
            consecutive_faults: 0,
            quarantined: false,
        }
    }

    fn active(&self, config: &CampaignConfig) -> bool {
        !self.quarantined && self.cases < config.case_cap
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    header: LogHeader,
    next_case: u64,
    log_len: u64,
    functions: Vec<FunctionState>,
}

/// A case about to run, with what the scheduler needs to apply its outcome.
struct Planned {
    function: usize,
    focus: Option<usize>,
    query: Option<Query>,
    phase: Phase,
    args: Vec<LogArg>,
    case: TestCase,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    Budget,
    CaseLimit,
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct CampaignRun {
    pub cases: u64,
    pub incidents: u64,
    pub stop: StopReason,
    pub log: PathBuf,
}

pub fn header(db: &InputDatabase, config: &CampaignConfig) -> LogHeader {
    LogHeader {
        format: LOG_FORMAT,
        catalog_id: format!("{:016x}", db.catalog().id()),
        categories: db.category_count(),
        mode: config.mode,
        seed: config.seed,
        targets: config.targets.clone(),
        learner: config.learner.clone(),
    }
}

/// Runs a campaign writing into `out`. With `resume`, continues from the
/// checkpoint in `out`, discarding log lines written after it.
pub fn run_campaign(
    db: &InputDatabase,
    command: &WorkerCommand,
    config: &CampaignConfig,
    out: &Path,
    resume: bool,
) -> Result<CampaignRun> {
    ensure!(!config.budget.is_zero(), "budget must be positive");
    ensure!(!config.targets.is_empty(), "no target functions");
    ensure!(db.category_count() > 0, "empty input database");
    fs::create_dir_all(out)?;
    let header = header(db, config);
    let log_path = out.join(LOG_FILE);

    let (mut functions, mut next_case) = if resume {
        let text = fs::read_to_string(out.join(CHECKPOINT_FILE)).context("no checkpoint to resume from")?;
        let cp: Checkpoint = serde_json::from_str(&text).context("corrupt checkpoint")?;
        if cp.header != header {
            bail!("checkpoint was written by a campaign with a different configuration");
        }
        let log = OpenOptions::new().write(true).open(&log_path)?;
        log.set_len(cp.log_len)?;
        info!("resuming at case {}", cp.next_case);
        (cp.functions, cp.next_case)
    } else {
        let mut log = fs::File::create(&log_path)?;
        write_header(&mut log, &header)?;
        for side in [TIMING_FILE, INCIDENT_FILE, CHECKPOINT_FILE] {
            let _ = fs::remove_file(out.join(side));
        }
        let functions = config
            .targets
            .iter()
            .enumerate()
            .map(|(i, t)| FunctionState::new(t.clone(), i, config.seed))
            .collect::<Vec<_>>();
        (functions, 0)
    };

    let mut log = BufWriter::new(OpenOptions::new().append(true).open(&log_path)?);
    let mut timing = BufWriter::new(OpenOptions::new().create(true).append(true).open(out.join(TIMING_FILE))?);
    let mut incidents = OpenOptions::new().create(true).append(true).open(out.join(INCIDENT_FILE))?;
    let mut executor = Executor::new(command.clone(), config.workers);
    let start = Instant::now();
    let mut incident_count = 0;
    let mut since_checkpoint = 0;

    let stop = loop {
        if start.elapsed() >= config.budget {
            break StopReason::Budget;
        }
        let mut order: Vec<usize> = (0..functions.len()).filter(|&i| functions[i].active(config)).collect();
        if order.is_empty() {
            break StopReason::Exhausted;
        }
        if let Some(max) = config.max_cases {
            let left = max.saturating_sub(next_case) as usize;
            if left == 0 {
                break StopReason::CaseLimit;
            }
            order.truncate(left);
        }

        let planned: Vec<Planned> = order
            .iter()
            .map(|&f| {
                let id = next_case;
                next_case += 1;
                plan(db, config, &mut functions[f], f, id)
            })
            .collect();
        let cases: Vec<TestCase> = planned.iter().map(|p| p.case.clone()).collect();
        let executions = executor.run_batch(&cases)?;

        for (p, ex) in planned.into_iter().zip(executions) {
            writeln!(
                timing,
                "{}",
                serde_json::json!({"case": p.case.case_id, "wall_ms": ex.wall_ms, "restarted": ex.restarted})
            )?;
            let Some(outcome) = ex.outcome else {
                let why = ex.incident.unwrap_or_default();
                warn!("case {} discarded: {why}", p.case.case_id);
                writeln!(
                    incidents,
                    "{}",
                    serde_json::json!({"case": p.case.case_id, "function": p.case.function, "incident": why})
                )?;
                incident_count += 1;
                continue;
            };
            let record = apply(db, config, &mut functions[p.function], &p, outcome);
            debug!("case {} {} {}", record.case, record.function, record.outcome.kind.name());
            write_record(&mut log, &record)?;
            since_checkpoint += 1;
        }

        if since_checkpoint >= config.checkpoint_every {
            log.flush()?;
            timing.flush()?;
            checkpoint(out, &header, next_case, &functions)?;
            since_checkpoint = 0;
        }
    };

    log.flush()?;
    timing.flush()?;
    checkpoint(out, &header, next_case, &functions)?;
    info!("campaign stopped ({stop:?}) after {next_case} cases");
    Ok(CampaignRun {
        cases: next_case,
        incidents: incident_count,
        stop,
        log: log_path,
    })
}

fn checkpoint(out: &Path, header: &LogHeader, next_case: u64, functions: &[FunctionState]) -> Result<()> {
    let log_len = fs::metadata(out.join(LOG_FILE))?.len();
    let cp = Checkpoint {
        header: header.clone(),
        next_case,
        log_len,
        functions: functions.to_vec(),
    };
    let tmp = out.join(format!("{CHECKPOINT_FILE}.tmp"));
    fs::write(&tmp, serde_json::to_vec(&cp)?)?;
    fs::rename(&tmp, out.join(CHECKPOINT_FILE))?;
    Ok(())
}

fn random_arg<R: Rng>(db: &InputDatabase, rng: &mut R) -> LogArg {
    let category = rng.random_range(0..db.category_count());
    LogArg {
        input: db.sample_member(category, rng),
        category,
    }
}

fn arg_from(db: &InputDatabase, category: CategoryId, rng: &mut ChaCha8Rng) -> LogArg {
    LogArg {
        input: db.sample_member(category, rng),
        category,
    }
}

fn plan(db: &InputDatabase, config: &CampaignConfig, state: &mut FunctionState, index: usize, case_id: u64) -> Planned {
    let arity = state.target.arity;
    let focus = (arity > 0).then(|| (state.cases % arity as u64) as usize);
    let mut query = None;
    let mut phase = Phase::Random;
    let args: Vec<LogArg> = match config.mode {
        Mode::FullyRandom => (0..arity)
            .map(|_| {
                let input: InputId = state.rng.random_range(0..db.inputs().len());
                LogArg {
                    input,
                    category: db.input(input).category,
                }
            })
            .collect(),
        Mode::NoLearning => (0..arity).map(|_| random_arg(db, &mut state.rng)).collect(),
        Mode::Full => match focus {
            None => Vec::new(),
            Some(f) => {
                let learner = &mut state.learners[f];
                phase = learner.phase;
                let q = learner.next_query(db, &config.learner, &mut state.rng);
                query = Some(q);
                let chosen = arg_from(db, q.category, &mut state.rng);
                (0..arity)
                    .map(|p| {
                        if p == f {
                            chosen
                        } else if let Some(pinned) = &state.pinned {
                            pinned[p]
                        } else {
                            random_arg(db, &mut state.rng)
                        }
                    })
                    .collect()
            }
        },
    };
    finish(state, index, case_id, focus, query, phase, args, db, config)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    state: &FunctionState,
    index: usize,
    case_id: u64,
    focus: Option<usize>,
    query: Option<Query>,
    phase: Phase,
    args: Vec<LogArg>,
    db: &InputDatabase,
    config: &CampaignConfig,
) -> Planned {
    let case = TestCase {
        case_id,
        function: state.target.name.clone(),
        args: args
            .iter()
            .enumerate()
            .map(|(parameter, a)| TestArg {
                parameter,
                value: db.input(a.input).value.clone(),
                category: a.category,
            })
            .collect(),
        timeout_ms: config.timeout_ms,
    };
    Planned {
        function: index,
        focus,
        query,
        phase,
        args,
        case,
    }
}

fn apply(
    db: &InputDatabase,
    config: &CampaignConfig,
    state: &mut FunctionState,
    p: &Planned,
    outcome: crate::exec::Outcome,
) -> LogRecord {
    let kind = outcome.kind;
    let mut record = LogRecord {
        case: p.case.case_id,
        function: state.target.name.clone(),
        focus: p.focus,
        phase: p.phase,
        polarity: p.query.map_or(Polarity::Exploratory, |q| q.polarity),
        args: p.args.clone(),
        outcome,
        entered: Vec::new(),
        accepted: Vec::new(),
        inference_failed: Vec::new(),
        quarantined: false,
    };
    if let (Some(f), Some(q)) = (p.focus, p.query) {
        let effect = state.learners[f].update(db, &config.learner, p.case.case_id, &q, kind);
        note(&mut record, f, effect);
        if kind == OutcomeKind::Valid {
            if state.pinned.is_none() {
                // The first valid tuple is evidence for every parameter.
                for (other, arg) in p.args.iter().enumerate().filter(|&(o, _)| o != f) {
                    let q = Query {
                        category: arg.category,
                        polarity: Polarity::Exploratory,
                        provenance: None,
                    };
                    let effect = state.learners[other].update(db, &config.learner, p.case.case_id, &q, kind);
                    note(&mut record, other, effect);
                }
                record.entered.sort_by_key(|c| c.parameter);
                record.accepted.sort_by_key(|a| a.parameter);
            }
            state.pinned = Some(p.args.clone());
        }
    }
    state.cases += 1;
    if matches!(kind, OutcomeKind::Crash | OutcomeKind::Timeout) {
        state.consecutive_faults += 1;
        if state.consecutive_faults >= config.quarantine_after {
            state.quarantined = true;
            record.quarantined = true;
            warn!("{} quarantined after {} consecutive faults", state.target.name, state.consecutive_faults);
        }
    } else {
        state.consecutive_faults = 0;
    }
    record
}

fn note(record: &mut LogRecord, parameter: usize, effect: catfuzz_core::learner::UpdateEffect) {
    if let Some(phase) = effect.entered {
        record.entered.push(PhaseChange { parameter, phase });
    }
    if let Some(categories) = effect.accepted {
        record.accepted.push(Accepted { parameter, categories });
    }
    if effect.inference_failed {
        record.inference_failed.push(parameter);
    }
}

/// Resolves a target spec: `all`, or a comma-separated list of names with
/// optional `:arity` suffixes. Arities come from the worker when it reports
/// them.
pub fn resolve_targets(spec: &str, names: &[String], arities: Option<&[usize]>) -> Result<Vec<Target>> {
    let known = |name: &str| -> Option<usize> {
        let i = names.iter().position(|n| n == name)?;
        arities.and_then(|a| a.get(i).copied())
    };
    let mut targets = Vec::new();
    if spec.trim() == "all" {
        for name in names {
            let Some(arity) = known(name) else {
                bail!("worker does not report arities; list targets as name:arity");
            };
            targets.push(Target {
                name: name.clone(),
                arity,
            });
        }
        return Ok(targets);
    }
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, given) = match item.split_once(':') {
            Some((n, a)) => (n, Some(a.parse::<usize>().with_context(|| format!("bad arity in {item}"))?)),
            None => (item, None),
        };
        if !names.iter().any(|n| n == name) {
            bail!("worker does not provide function {name}");
        }
        let arity = match (given, known(name)) {
            (Some(a), Some(k)) if a != k => bail!("{name} takes {k} arguments, not {a}"),
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => bail!("arity of {name} unknown; write {name}:<arity>"),
        };
        targets.push(Target {
            name: name.to_string(),
            arity,
        });
    }
    ensure!(!targets.is_empty(), "empty target list");
    Ok(targets)
}
