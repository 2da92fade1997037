#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use std::path::Path;

use catfuzz::campaign::{run_campaign, CampaignConfig, CampaignRun};
use catfuzz::exec::WorkerCommand;
use catfuzz::log::{read_log, LogHeader, LogRecord, Target};
use catfuzz::report::{metrics, Report};
use catfuzz::store;
use catfuzz::synthetic::{eval_types, predict, seeds, suite, Cond, Prediction, Step, TargetSpec};
use catfuzz_core::lattice::InputDatabase;
use catfuzz_core::property::EvalContext;
use catfuzz_core::{CatalogConfig, Value};

pub fn worker() -> WorkerCommand {
    WorkerCommand::synthetic(env!("CARGO_BIN_EXE_catfuzz"))
}

pub fn synthetic_db() -> InputDatabase {
    store::ingest(seeds::corpus(), Vec::new(), &CatalogConfig::default()).unwrap().0
}

pub fn suite_targets() -> Vec<Target> {
    suite()
        .iter()
        .map(|s| Target {
            name: s.name.clone(),
            arity: s.arity(),
        })
        .collect()
}

pub struct Finished {
    pub run: CampaignRun,
    pub header: LogHeader,
    pub records: Vec<LogRecord>,
    pub report: Report,
}

pub fn campaign(db: &InputDatabase, config: &CampaignConfig, out: &Path) -> Finished {
    let run = run_campaign(db, &worker(), config, out, false).unwrap();
    let (header, records) = read_log(&run.log).unwrap();
    let report = metrics(&header, &records, db).unwrap();
    Finished {
        run,
        header,
        records,
        report,
    }
}

/// Planted crash id of a crash class (`SIGABRT planted: <id>`).
pub fn planted_id(crash_class: &str) -> Option<&str> {
    crash_class.split("planted: ").nth(1)
}

fn atoms<'a>(c: &'a Cond, arg: usize, out: &mut Vec<&'a Cond>) {
    match c {
        Cond::Prop { arg: a, .. } if *a == arg => out.push(c),
        Cond::Prop { .. } => {}
        Cond::Not(inner) => atoms(inner, arg, out),
        Cond::All(cs) | Cond::Any(cs) => cs.iter().for_each(|c| atoms(c, arg, out)),
    }
}

/// Planted crash ids of `spec` that some tuple of corpus values triggers.
/// Values are grouped per position by the truth of every predicate atom on
/// that position, so one representative per group suffices.
pub fn reachable_crashes(spec: &TargetSpec, corpus: &[Value]) -> BTreeSet<String> {
    let types = eval_types();
    let ctx = EvalContext {
        constructor_types: &types,
    };
    let n = spec.arity();
    let mut reps: Vec<Vec<Value>> = Vec::new();
    for pos in 0..n {
        let mut found = Vec::new();
        for step in &spec.steps {
            match step {
                Step::Check { cond, .. } | Step::Crash { cond, .. } => atoms(cond, pos, &mut found),
            }
        }
        let mut groups: BTreeMap<(Vec<bool>, String), Value> = BTreeMap::new();
        for v in corpus {
            let mut padded = vec![Value::None; n];
            padded[pos] = v.clone();
            let truth: Vec<bool> = found.iter().map(|a| a.holds(&padded, &ctx)).collect();
            let recipe = match v {
                Value::Recipe(_) => v.encode_string().unwrap(),
                _ => String::new(),
            };
            groups.entry((truth, recipe)).or_insert_with(|| v.clone());
        }
        reps.push(groups.into_values().collect());
    }
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; n];
    loop {
        let args: Vec<Value> = (0..n).map(|p| reps[p][idx[p]].clone()).collect();
        if let Prediction::Crash(id) = predict(spec, &args, &types) {
            out.insert(id);
        }
        let mut p = 0;
        loop {
            if p == n {
                return out;
            }
            idx[p] += 1;
            if idx[p] < reps[p].len() {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// (function, crash id) pairs reachable from `corpus` over the whole suite.
pub fn reachable_suite(corpus: &[Value]) -> BTreeSet<(String, String)> {
    suite()
        .iter()
        .flat_map(|s| reachable_crashes(s, corpus).into_iter().map(|id| (s.name.clone(), id)))
        .collect()
}
