//! Campaign metrics and crash grouping, computed from the log and the
//! database alone.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{ensure, Result};
use catfuzz_core::lattice::{CategoryId, InputDatabase};
use catfuzz_core::learner::{OutcomeKind, Phase};
use catfuzz_core::PropSet;
use serde::{Deserialize, Serialize};

use crate::exec::{TestArg, TestCase, DEFAULT_TIMEOUT_MS};
use crate::log::{LogHeader, LogRecord};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const CRASH_DIR: &str = "crashes";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrashGroup {
    pub function: String,
    pub crash_class: String,
    pub representative: u64,
    pub members: Vec<u64>,
    pub reproducer: TestCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub parameter: usize,
    pub phase: Phase,
    pub inference_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionSummary {
    pub name: String,
    pub cases: u64,
    pub valid: u64,
    pub quarantined: bool,
    /// Quarantined without a single valid or invalid outcome.
    pub early_crasher: bool,
    pub parameters: Vec<ParameterSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptedHypothesis {
    pub function: String,
    pub parameter: usize,
    pub case: u64,
    pub categories: Vec<CategoryId>,
    /// One line per disjunct: the conjunction of the category's properties.
    pub disjuncts: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: String,
    pub seed: u64,
    pub cases: u64,
    pub targets: usize,
    pub outcomes: BTreeMap<String, u64>,
    pub property_coverage: f64,
    pub properties_covered: usize,
    pub properties: usize,
    pub api_coverage: f64,
    pub valid_rate: f64,
    pub valid_generation_cases: u64,
    /// `None` when no case ran in valid-generation mode.
    pub valid_rate_valid_generation: Option<f64>,
    pub crash_groups: Vec<CrashGroup>,
    pub functions: Vec<FunctionSummary>,
    pub accepted: Vec<AcceptedHypothesis>,
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Rebuilds the test case a record ran.
pub fn test_case(record: &LogRecord, db: &InputDatabase) -> TestCase {
    TestCase {
        case_id: record.case,
        function: record.function.clone(),
        args: record
            .args
            .iter()
            .enumerate()
            .map(|(parameter, a)| TestArg {
                parameter,
                value: db.input(a.input).value.clone(),
                category: a.category,
            })
            .collect(),
        timeout_ms: DEFAULT_TIMEOUT_MS,
    }
}

/// Groups crash records by (function, crash class), ordered by
/// representative case id.
pub fn dedup_crashes(records: &[LogRecord], db: &InputDatabase) -> Vec<CrashGroup> {
    let mut groups: BTreeMap<(String, String), Vec<&LogRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.outcome.kind == OutcomeKind::Crash) {
        groups
            .entry((r.function.clone(), r.outcome.crash_class()))
            .or_default()
            .push(r);
    }
    let mut out: Vec<CrashGroup> = groups
        .into_iter()
        .map(|((function, crash_class), members)| {
            let first = members.iter().min_by_key(|r| r.case).expect("groups are nonempty");
            let mut ids: Vec<u64> = members.iter().map(|r| r.case).collect();
            ids.sort_unstable();
            CrashGroup {
                function,
                crash_class,
                representative: first.case,
                members: ids,
                reproducer: test_case(first, db),
            }
        })
        .collect();
    out.sort_by_key(|g| g.representative);
    out
}

pub fn metrics(header: &LogHeader, records: &[LogRecord], db: &InputDatabase) -> Result<Report> {
    ensure!(!records.is_empty(), "log has no records");
    ensure!(
        header.catalog_id == format!("{:016x}", db.catalog().id()),
        "log was written against a different database"
    );
    let catalog = db.catalog();
    let mut covered = PropSet::empty(catalog.len());
    let mut outcomes: BTreeMap<String, u64> = BTreeMap::new();
    let mut valid = 0;
    let mut vg_cases = 0;
    let mut vg_valid = 0;
    let mut functions: Vec<FunctionSummary> = header
        .targets
        .iter()
        .map(|t| FunctionSummary {
            name: t.name.clone(),
            cases: 0,
            valid: 0,
            quarantined: false,
            early_crasher: false,
            parameters: (0..t.arity)
                .map(|parameter| ParameterSummary {
                    parameter,
                    phase: Phase::Random,
                    inference_failed: false,
                })
                .collect(),
        })
        .collect();
    let index: BTreeMap<&str, usize> = header.targets.iter().enumerate().map(|(i, t)| (t.name.as_str(), i)).collect();
    let mut accepted = Vec::new();

    for r in records {
        for a in &r.args {
            covered.union_with(&db.input(a.input).fingerprint.bits);
        }
        *outcomes.entry(r.outcome.kind.name().to_string()).or_default() += 1;
        let is_valid = r.outcome.kind == OutcomeKind::Valid;
        valid += u64::from(is_valid);
        if r.phase == Phase::ValidGeneration {
            vg_cases += 1;
            vg_valid += u64::from(is_valid);
        }
        let Some(&fi) = index.get(r.function.as_str()) else {
            continue;
        };
        let f = &mut functions[fi];
        f.cases += 1;
        f.valid += u64::from(is_valid);
        f.quarantined |= r.quarantined;
        for change in &r.entered {
            if let Some(p) = f.parameters.get_mut(change.parameter) {
                p.phase = p.phase.max(change.phase);
            }
        }
        for &p in &r.inference_failed {
            if let Some(p) = f.parameters.get_mut(p) {
                p.inference_failed = true;
            }
        }
        for a in &r.accepted {
            accepted.push(AcceptedHypothesis {
                function: r.function.clone(),
                parameter: a.parameter,
                case: r.case,
                categories: a.categories.clone(),
                disjuncts: a
                    .categories
                    .iter()
                    .map(|&c| catalog.describe(&db.category(c).props))
                    .collect(),
            });
        }
    }
    let failed: Vec<bool> = functions
        .iter()
        .map(|f| {
            records
                .iter()
                .filter(|r| r.function == f.name)
                .all(|r| matches!(r.outcome.kind, OutcomeKind::Crash | OutcomeKind::Timeout))
        })
        .collect();
    for (f, all_faults) in functions.iter_mut().zip(failed) {
        f.early_crasher = f.quarantined && all_faults;
    }

    let targets = header.targets.len();
    let reached = functions.iter().filter(|f| f.valid > 0).count();
    Ok(Report {
        mode: header.mode.name().to_string(),
        seed: header.seed,
        cases: records.len() as u64,
        targets,
        outcomes,
        property_coverage: ratio(covered.len() as u64, catalog.len() as u64),
        properties_covered: covered.len(),
        properties: catalog.len(),
        api_coverage: ratio(reached as u64, targets as u64),
        valid_rate: ratio(valid, records.len() as u64),
        valid_generation_cases: vg_cases,
        valid_rate_valid_generation: (vg_cases > 0).then(|| ratio(vg_valid, vg_cases)),
        crash_groups: dedup_crashes(records, db),
        functions,
        accepted,
    })
}

pub fn render_text(report: &Report) -> String {
    let mut s = String::new();
    let pct = |x: f64| format!("{:.1}%", x * 100.0);
    let _ = writeln!(s, "mode {}  seed {}  cases {}", report.mode, report.seed, report.cases);
    let outcomes: Vec<String> = report.outcomes.iter().map(|(k, v)| format!("{k} {v}")).collect();
    let _ = writeln!(s, "outcomes: {}", outcomes.join(", "));
    let _ = writeln!(
        s,
        "property coverage: {} ({} of {})",
        pct(report.property_coverage),
        report.properties_covered,
        report.properties
    );
    let _ = writeln!(s, "api coverage: {} of {} targets", pct(report.api_coverage), report.targets);
    let _ = writeln!(s, "valid rate: {}", pct(report.valid_rate));
    match report.valid_rate_valid_generation {
        Some(r) => {
            let _ = writeln!(s, "valid rate in valid generation: {} over {} cases", pct(r), report.valid_generation_cases);
        }
        None => {
            let _ = writeln!(s, "valid rate in valid generation: no cases");
        }
    }
    let _ = writeln!(s, "\ncrash groups: {}", report.crash_groups.len());
    for g in &report.crash_groups {
        let _ = writeln!(
            s,
            "  {} [{}] first case {}, {} hits",
            g.function,
            g.crash_class,
            g.representative,
            g.members.len()
        );
    }
    let _ = writeln!(s, "\nfunctions:");
    for f in &report.functions {
        let phases: Vec<String> = f
            .parameters
            .iter()
            .map(|p| {
                let mut name = p.phase.name().to_string();
                if p.inference_failed {
                    name.push_str(" (inference failed)");
                }
                name
            })
            .collect();
        let flag = if f.early_crasher {
            "  early crasher"
        } else if f.quarantined {
            "  quarantined"
        } else {
            ""
        };
        let _ = writeln!(s, "  {}: {} cases, {} valid; {}{}", f.name, f.cases, f.valid, phases.join(" | "), flag);
    }
    if !report.accepted.is_empty() {
        let _ = writeln!(s, "\naccepted hypotheses:");
        for a in &report.accepted {
            let _ = writeln!(s, "  {} arg {} (case {}):", a.function, a.parameter, a.case);
            for d in &a.disjuncts {
                let _ = writeln!(s, "    or {d}");
            }
        }
    }
    s
}

/// Writes report.json, report.txt and one reproducer per crash group.
pub fn write_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(REPORT_JSON), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join(REPORT_TEXT), render_text(report))?;
    let crashes = dir.join(CRASH_DIR);
    if crashes.exists() {
        fs::remove_dir_all(&crashes)?;
    }
    if !report.crash_groups.is_empty() {
        fs::create_dir_all(&crashes)?;
        for g in &report.crash_groups {
            let path = crashes.join(format!("{}.json", g.representative));
            fs::write(path, serde_json::to_string_pretty(&g.reproducer)? + "\n")?;
        }
    }
    Ok(())
}
