//! Seed corpora and on-disk input databases.
//!
//! A database directory holds:
//! - `catalog.json`: property instances and the constructor type map;
//! - `inputs.jsonl`: one line per input with its value, fingerprint and category;
//! - `categories.txt`: `id <tab> property-set hex <tab> member ids`;
//! - `order.txt`: `id: stronger ids`;
//! - `ingest.json`: the ingest report.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use catfuzz_core::lattice::{InputDatabase, DAG_PRECOMPUTE_LIMIT};
use catfuzz_core::property::Group;
use catfuzz_core::{instantiate_catalog, Catalog, CatalogConfig, Fingerprint, PropSet, PropertyInstance, Value};
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedSeed {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub seeds: usize,
    pub kept: usize,
    pub dropped: Vec<DroppedSeed>,
    pub properties: usize,
    pub categories: usize,
    pub catalog_id: String,
    /// False for a single-category database: no category can lie outside a
    /// hypothesis, so the learner can never pose a near-miss query.
    pub near_miss_possible: bool,
}

/// Reads a corpus: one value per line, either bare or as an object with a
/// `value` field (other fields are ignored). Undecodable lines are dropped.
pub fn read_corpus(path: &Path) -> Result<(Vec<Value>, Vec<DroppedSeed>)> {
    let file = fs::File::open(path).with_context(|| format!("cannot open corpus {}", path.display()))?;
    let mut values = Vec::new();
    let mut dropped = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let decoded = serde_json::from_str::<Json>(&line)
            .map_err(|e| e.to_string())
            .and_then(|json| {
                let inner = match json.get("value") {
                    Some(v) if json.get("kind").is_none() => v.clone(),
                    _ => json,
                };
                Value::from_json(&inner).map_err(|e| e.to_string())
            });
        match decoded {
            Ok(v) => values.push(v),
            Err(reason) => dropped.push(DroppedSeed { line: i + 1, reason }),
        }
    }
    Ok((values, dropped))
}

pub fn write_corpus(path: &Path, values: &[Value]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for v in values {
        writeln!(out, "{}", v.encode_string()?)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_catalog_config(path: &Path) -> Result<CatalogConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read catalog config {}", path.display()))?;
    let config: CatalogConfig = serde_json::from_str(&text).context("invalid catalog config")?;
    config.validate()?;
    Ok(config)
}

/// Instantiates the catalog, fingerprints every seed and builds the
/// database.
pub fn ingest(corpus: Vec<Value>, dropped: Vec<DroppedSeed>, config: &CatalogConfig) -> Result<(InputDatabase, IngestReport)> {
    let seeds = corpus.len() + dropped.len();
    let catalog = instantiate_catalog(&corpus, config)?;
    let fingerprinted: Vec<(Value, Fingerprint)> = corpus
        .into_iter()
        .map(|v| {
            let f = catalog.fingerprint(&v);
            (v, f)
        })
        .collect();
    let kept = fingerprinted.len();
    let db = InputDatabase::build(catalog, fingerprinted, DAG_PRECOMPUTE_LIMIT)?;
    let report = IngestReport {
        seeds,
        kept,
        dropped,
        properties: db.catalog().len(),
        categories: db.category_count(),
        catalog_id: format!("{:016x}", db.catalog().id()),
        near_miss_possible: db.category_count() > 1,
    };
    Ok((db, report))
}

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    template: String,
    group: Group,
    constants: Vec<Value>,
}

#[derive(Serialize, Deserialize)]
struct CatalogRecord {
    id: String,
    constructor_types: BTreeMap<String, String>,
    instances: Vec<InstanceRecord>,
}

#[derive(Serialize, Deserialize)]
struct InputRecord {
    id: usize,
    category: usize,
    bits: String,
    unknown: String,
    value: Value,
}

pub fn save(db: &InputDatabase, report: &IngestReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let catalog = db.catalog();
    let record = CatalogRecord {
        id: format!("{:016x}", catalog.id()),
        constructor_types: catalog.constructor_types().clone(),
        instances: catalog
            .instances()
            .iter()
            .map(|i| InstanceRecord {
                template: i.template_id.clone(),
                group: i.group,
                constants: i.constants.clone(),
            })
            .collect(),
    };
    fs::write(dir.join("catalog.json"), serde_json::to_string_pretty(&record)? + "\n")?;

    let mut inputs = BufWriter::new(fs::File::create(dir.join("inputs.jsonl"))?);
    for input in db.inputs() {
        let line = InputRecord {
            id: input.id,
            category: input.category,
            bits: input.fingerprint.bits.to_hex(),
            unknown: input.fingerprint.unknown.to_hex(),
            value: input.value.clone(),
        };
        writeln!(inputs, "{}", serde_json::to_string(&line)?)?;
    }
    inputs.flush()?;

    let mut cats = BufWriter::new(fs::File::create(dir.join("categories.txt"))?);
    let mut order = BufWriter::new(fs::File::create(dir.join("order.txt"))?);
    for c in db.categories() {
        let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
        writeln!(cats, "{}\t{}\t{}", c.id, c.props.to_hex(), members.join(","))?;
        let stronger: Vec<String> = db.stronger_set(c.id).iter().map(|s| s.to_string()).collect();
        writeln!(order, "{}: {}", c.id, stronger.join(" "))?;
    }
    cats.flush()?;
    order.flush()?;
    fs::write(dir.join("ingest.json"), serde_json::to_string_pretty(report)? + "\n")?;
    Ok(())
}

/// Loads a database directory, re-deriving fingerprints and checking them
/// against the stored ones.
pub fn load(dir: &Path) -> Result<InputDatabase> {
    let text = fs::read_to_string(dir.join("catalog.json"))
        .with_context(|| format!("{} is not a database directory", dir.display()))?;
    let record: CatalogRecord = serde_json::from_str(&text).context("corrupt catalog.json")?;
    let instances = record
        .instances
        .into_iter()
        .map(|i| PropertyInstance {
            template_id: i.template,
            group: i.group,
            constants: i.constants,
            ordinal: 0,
        })
        .collect();
    let catalog = Catalog::from_instances(instances, record.constructor_types)?;
    if format!("{:016x}", catalog.id()) != record.id {
        bail!("catalog id mismatch in {}", dir.display());
    }
    let file = fs::File::open(dir.join("inputs.jsonl"))?;
    let mut corpus = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let r: InputRecord = serde_json::from_str(&line?).with_context(|| format!("corrupt inputs.jsonl line {}", i + 1))?;
        let fingerprint = catalog.fingerprint(&r.value);
        let stored_bits = PropSet::from_hex(catalog.len(), &r.bits)?;
        let stored_unknown = PropSet::from_hex(catalog.len(), &r.unknown)?;
        if r.id != i || fingerprint.bits != stored_bits || fingerprint.unknown != stored_unknown {
            bail!("input {} in {} does not match its stored fingerprint", r.id, dir.display());
        }
        corpus.push((r.value, fingerprint));
    }
    Ok(InputDatabase::build(catalog, corpus, DAG_PRECOMPUTE_LIMIT)?)
}
