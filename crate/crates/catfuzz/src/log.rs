//! Execution log: a header line followed by one record per executed case,
//! ordered by case id. Wall-clock times live in a sidecar file so the log
//! itself is reproducible.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use catfuzz_core::lattice::{CategoryId, InputId};
use catfuzz_core::learner::{LearnerConfig, Phase, Polarity};
use serde::{Deserialize, Serialize};

use crate::exec::Outcome;

pub const LOG_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Category-based selection steered by the learner.
    Full,
    /// Categories, but a uniformly random category per argument.
    NoLearning,
    /// Uniformly random corpus inputs, categories ignored.
    FullyRandom,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::NoLearning => "no-learning",
            Mode::FullyRandom => "fully-random",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: u32,
    pub catalog_id: String,
    pub categories: usize,
    pub mode: Mode,
    pub seed: u64,
    pub targets: Vec<Target>,
    pub learner: LearnerConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogArg {
    pub input: InputId,
    pub category: CategoryId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseChange {
    pub parameter: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accepted {
    pub parameter: usize,
    pub categories: Vec<CategoryId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub case: u64,
    pub function: String,
    /// Parameter whose learner chose this case; `None` for nullary targets.
    pub focus: Option<usize>,
    pub phase: Phase,
    pub polarity: Polarity,
    pub args: Vec<LogArg>,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entered: Vec<PhaseChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepted: Vec<Accepted>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inference_failed: Vec<usize>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub quarantined: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Line {
    Header { header: LogHeader },
    Record(LogRecord),
}

pub fn write_header(out: &mut impl Write, header: &LogHeader) -> Result<()> {
    let line = serde_json::to_string(&Line::Header { header: header.clone() })?;
    writeln!(out, "{line}")?;
    Ok(())
}

pub fn write_record(out: &mut impl Write, record: &LogRecord) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string(record)?)?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<(LogHeader, Vec<LogRecord>)> {
    let file = fs::File::open(path).with_context(|| format!("cannot open log {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().context("empty log")??;
    let Line::Header { header } = serde_json::from_str(&first).context("log header")? else {
        bail!("log does not start with a header");
    };
    if header.format != LOG_FORMAT {
        bail!("unsupported log format {}", header.format);
    }
    let mut records: Vec<LogRecord> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let record: LogRecord = serde_json::from_str(&line).with_context(|| format!("log line {}", i + 2))?;
        if records.last().is_some_and(|r| r.case >= record.case) {
            bail!("log line {} is out of case order", i + 2);
        }
        records.push(record);
    }
    Ok((header, records))
}
