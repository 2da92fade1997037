//! Property catalogs: template instantiation against a seed corpus and
//! three-valued fingerprinting of values.

mod templates;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::bitset::PropSet;
use crate::error::Error;
use crate::value::{numeric_elements, Value};

pub use templates::{
    constant_text, evaluate, is_floating_dtype, is_integer_dtype, is_quantized_dtype, length,
    shape, size, template, type_name, ConstantSource, EvalContext, Group, Monotone,
    PropertyTemplate, Truth, TEMPLATES,
};

/// Constants every numeric pool contains regardless of the corpus.
pub const CANONICAL_NUMBERS: [i64; 4] = [-1, 0, 1, 2];
const CANONICAL_TYPES: [&str; 8] = ["NoneType", "Tensor", "bool", "dict", "float", "int", "list", "str"];
const CANONICAL_DTYPES: [&str; 3] = ["float32", "int32", "int64"];
const CANONICAL_EXTENTS: [i64; 3] = [0, 1, 2];
const ELEMENT_INDICES: [i64; 2] = [0, 1];
const MAX_DIM_INDEX: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateSetting {
    pub id: String,
    pub group: Group,
    pub constants: ConstantSource,
    #[serde(default = "yes")]
    pub enabled: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CatalogConfig {
    pub templates: Vec<TemplateSetting>,
    /// Upper bound on the numeric constant pool.
    pub pool_cap: usize,
    /// Observed values must occur this many times to enter the pool.
    pub pool_min_count: usize,
    pub max_properties: usize,
    /// Maps recipe constructor names to the type name they produce.
    pub constructor_types: BTreeMap<String, String>,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            templates: TEMPLATES
                .iter()
                .map(|t| TemplateSetting {
                    id: t.id.to_string(),
                    group: t.group,
                    constants: t.source,
                    enabled: true,
                })
                .collect(),
            pool_cap: 64,
            pool_min_count: 2,
            max_properties: 4096,
            constructor_types: [
                ("constant", "Tensor"),
                ("ragged_constant", "RaggedTensor"),
                ("tensor_shape", "TensorShape"),
                ("sparse_tensor", "SparseTensor"),
            ]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
        }
    }
}

impl CatalogConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let mut seen = BTreeMap::new();
        for setting in &self.templates {
            let t = template(&setting.id).ok_or_else(|| Error::UnknownTemplate(setting.id.clone()))?;
            if t.group != setting.group {
                return Err(Error::InvalidConfig(format!(
                    "template `{}` belongs to group {}, not {}",
                    t.id,
                    t.group.name(),
                    setting.group.name()
                )));
            }
            if setting.constants.arity() != t.arity() {
                return Err(Error::InvalidConfig(format!(
                    "template `{}` takes {} constants",
                    t.id,
                    t.arity()
                )));
            }
            if seen.insert(setting.id.as_str(), ()).is_some() {
                return Err(Error::InvalidConfig(format!("template `{}` listed twice", t.id)));
            }
        }
        if self.max_properties == 0 {
            return Err(Error::InvalidConfig("max_properties must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyInstance {
    pub template_id: String,
    pub group: Group,
    pub constants: Vec<Value>,
    pub ordinal: usize,
}

impl PropertyInstance {
    pub fn template(&self) -> &'static PropertyTemplate {
        template(&self.template_id).expect("instances only reference known templates")
    }

    pub fn render(&self) -> String {
        self.template().render(&self.constants)
    }

    /// Canonical constant encoding used for ordinal tie-breaks.
    pub fn constants_key(&self) -> String {
        constants_key(&self.constants)
    }
}

fn constants_key(constants: &[Value]) -> String {
    let parts: Vec<String> = constants
        .iter()
        .map(|c| c.encode_string().expect("scalar constants always encode"))
        .collect();
    format!("[{}]", parts.join(","))
}

/// Fingerprint of one value: satisfied ordinals plus those that evaluated to
/// unknown. The two sets are disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub bits: PropSet,
    pub unknown: PropSet,
    pub catalog_id: u64,
}

/// An instantiated, immutable catalog of property instances.
#[derive(Clone, Debug)]
pub struct Catalog {
    instances: Vec<PropertyInstance>,
    /// `implied[i]`: every ordinal implied by ordinal `i` (including `i`).
    implied: Vec<PropSet>,
    constructor_types: BTreeMap<String, String>,
    id: u64,
}

impl Catalog {
    /// Builds a catalog from explicit instances (sorted into canonical
    /// ordinal order).
    pub fn from_instances(
        mut instances: Vec<PropertyInstance>,
        constructor_types: BTreeMap<String, String>,
    ) -> Result<Self, Error> {
        for inst in &instances {
            let t = template(&inst.template_id).ok_or_else(|| Error::UnknownTemplate(inst.template_id.clone()))?;
            if t.arity() != inst.constants.len() {
                return Err(Error::InvalidConfig(format!(
                    "instance of `{}` has {} constants",
                    t.id,
                    inst.constants.len()
                )));
            }
        }
        let mut keyed: Vec<(String, String, PropertyInstance)> = instances
            .drain(..)
            .map(|mut inst| {
                inst.group = inst.template().group;
                (inst.template_id.clone(), inst.constants_key(), inst)
            })
            .collect();
        keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        keyed.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let instances: Vec<PropertyInstance> = keyed
            .into_iter()
            .enumerate()
            .map(|(ordinal, (_, _, mut inst))| {
                inst.ordinal = ordinal;
                inst
            })
            .collect();
        let implied = implication_table(&instances);
        let id = catalog_hash(&instances, &constructor_types);
        Ok(Catalog {
            instances,
            implied,
            constructor_types,
            id,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[PropertyInstance] {
        &self.instances
    }

    pub fn get(&self, ordinal: usize) -> Option<&PropertyInstance> {
        self.instances.get(ordinal)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn constructor_types(&self) -> &BTreeMap<String, String> {
        &self.constructor_types
    }

    pub fn context(&self) -> EvalContext<'_> {
        EvalContext {
            constructor_types: &self.constructor_types,
        }
    }

    /// Ordinal of the instance with this template and constants.
    pub fn find(&self, template_id: &str, constants: &[Value]) -> Option<usize> {
        let key = constants_key(constants);
        self.instances
            .binary_search_by(|inst| {
                (inst.template_id.as_str(), inst.constants_key()).cmp(&(template_id, key.clone()))
            })
            .ok()
    }

    pub fn evaluate(&self, ordinal: usize, v: &Value) -> Truth {
        let inst = &self.instances[ordinal];
        (inst.template().eval)(v, &inst.constants, &self.context())
    }

    pub fn fingerprint(&self, v: &Value) -> Fingerprint {
        let mut bits = PropSet::empty(self.len());
        let mut unknown = PropSet::empty(self.len());
        let ctx = self.context();
        for inst in &self.instances {
            match (inst.template().eval)(v, &inst.constants, &ctx) {
                Truth::True => bits.insert(inst.ordinal),
                Truth::Unknown => unknown.insert(inst.ordinal),
                Truth::False => {}
            }
        }
        Fingerprint {
            bits,
            unknown,
            catalog_id: self.id,
        }
    }

    /// Closes a property set under the templates' monotone implication rules.
    pub fn close(&self, set: &PropSet) -> PropSet {
        let mut out = set.clone();
        for ordinal in set.iter() {
            out.union_with(&self.implied[ordinal]);
        }
        out
    }

    pub fn implied_by(&self, ordinal: usize) -> &PropSet {
        &self.implied[ordinal]
    }

    /// Human-readable conjunction of a property set.
    pub fn describe(&self, set: &PropSet) -> String {
        let parts: Vec<String> = set.iter().map(|o| self.instances[o].render()).collect();
        parts.join(" ∧ ")
    }
}

fn implication_table(instances: &[PropertyInstance]) -> Vec<PropSet> {
    let n = instances.len();
    let mut implied: Vec<PropSet> = (0..n).map(|i| PropSet::from_ordinals(n, [i])).collect();
    let mut start = 0;
    while start < n {
        let id = &instances[start].template_id;
        let end = start + instances[start..].iter().take_while(|i| &i.template_id == id).count();
        if let Some(direction) = instances[start].template().monotone {
            for a in start..end {
                let Some(ca) = instances[a].constants[0].as_f64() else { continue };
                for b in start..end {
                    let Some(cb) = instances[b].constants[0].as_f64() else { continue };
                    let implies = match direction {
                        Monotone::Increasing => cb >= ca,
                        Monotone::Decreasing => cb <= ca,
                    };
                    if implies && exact_order_agrees(&instances[a].constants[0], &instances[b].constants[0], direction) {
                        implied[a].insert(b);
                    }
                }
            }
        }
        start = end;
    }
    implied
}

/// Guards the f64 comparison against integers that collapse to the same f64.
fn exact_order_agrees(a: &Value, b: &Value, direction: Monotone) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => match direction {
            Monotone::Increasing => y >= x,
            Monotone::Decreasing => y <= x,
        },
        _ => true,
    }
}

/// FNV-1a over the canonical instance listing.
fn catalog_hash(instances: &[PropertyInstance], constructor_types: &BTreeMap<String, String>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for inst in instances {
        feed(inst.template_id.as_bytes());
        feed(inst.constants_key().as_bytes());
    }
    for (k, v) in constructor_types {
        feed(k.as_bytes());
        feed(v.as_bytes());
    }
    h
}

/// Frequency-ranked constant pools drawn from a corpus.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstantPools {
    pub numbers: Vec<Value>,
    pub type_names: Vec<Value>,
    pub dtypes: Vec<Value>,
    pub extents: Vec<Value>,
    pub dim_indices: Vec<Value>,
}

#[derive(Default)]
struct Tally {
    counts: BTreeMap<String, (usize, Value)>,
}

impl Tally {
    fn add(&mut self, v: Value) {
        let key = v.encode_string().expect("scalar");
        self.counts.entry(key).or_insert((0, v)).0 += 1;
    }

    /// Canonical values first (in the given order), then observed values by
    /// descending count and ascending encoding, up to `cap` in total.
    fn ranked(self, canonical: Vec<Value>, cap: usize, min_count: usize) -> Vec<Value> {
        let mut out = canonical;
        let taken: Vec<String> = out.iter().map(|v| v.encode_string().expect("scalar")).collect();
        let mut observed: Vec<(String, usize, Value)> = self
            .counts
            .into_iter()
            .filter(|(k, (n, _))| *n >= min_count && !taken.contains(k))
            .map(|(k, (n, v))| (k, n, v))
            .collect();
        observed.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let room = cap.saturating_sub(out.len());
        out.extend(observed.into_iter().take(room).map(|(_, _, v)| v));
        out
    }
}

impl ConstantPools {
    pub fn from_corpus(corpus: &[Value], config: &CatalogConfig) -> Self {
        let ctx = EvalContext {
            constructor_types: &config.constructor_types,
        };
        let mut numbers = Tally::default();
        let mut types = Tally::default();
        let mut dtypes = Tally::default();
        let mut extents = Tally::default();
        let mut max_rank = 0usize;
        for v in corpus {
            types.add(Value::Str(type_name(v, &ctx).to_string()));
            match v {
                Value::Int(i) => numbers.add(Value::Int(*i)),
                Value::Float(f) if f.is_finite() => numbers.add(Value::Float(*f)),
                Value::Tensor(t) => dtypes.add(Value::Str(t.dtype.clone())),
                _ => {}
            }
            if let Some(elements) = numeric_elements(v) {
                if !matches!(v, Value::Int(_) | Value::Float(_)) {
                    for e in elements {
                        match e {
                            crate::value::Scalar::Int(i) => numbers.add(Value::Int(i)),
                            crate::value::Scalar::Float(f) if f.is_finite() => numbers.add(Value::Float(f)),
                            _ => {}
                        }
                    }
                }
            }
            if let Some(len) = length(v) {
                numbers.add(Value::Int(len as i64));
            }
            if let Some(s) = shape(v) {
                if !s.is_empty() {
                    numbers.add(Value::Int(s.len() as i64));
                }
                max_rank = max_rank.max(s.len());
                for &e in &s {
                    numbers.add(Value::Int(e as i64));
                    extents.add(Value::Int(e as i64));
                }
            }
        }
        let cap = config.pool_cap.max(CANONICAL_NUMBERS.len());
        let min_count = config.pool_min_count.max(1);
        let dims = max_rank.clamp(1, MAX_DIM_INDEX);
        ConstantPools {
            numbers: numbers.ranked(
                CANONICAL_NUMBERS.iter().map(|&i| Value::Int(i)).collect(),
                cap,
                min_count,
            ),
            type_names: types.ranked(
                CANONICAL_TYPES.iter().map(|s| Value::Str(s.to_string())).collect(),
                usize::MAX,
                1,
            ),
            dtypes: dtypes.ranked(
                CANONICAL_DTYPES.iter().map(|s| Value::Str(s.to_string())).collect(),
                usize::MAX,
                1,
            ),
            extents: extents.ranked(
                CANONICAL_EXTENTS.iter().map(|&i| Value::Int(i)).collect(),
                cap,
                1,
            ),
            dim_indices: (0..dims as i64).map(Value::Int).collect(),
        }
    }

    fn constants_for(&self, source: ConstantSource) -> Vec<Vec<Value>> {
        let singles = |pool: &[Value]| pool.iter().map(|v| vec![v.clone()]).collect();
        let pairs = |first: &[Value], second: &[Value]| {
            // Interleave so that truncation keeps a spread of both axes.
            let mut out = Vec::new();
            for b in second {
                for a in first {
                    out.push(vec![a.clone(), b.clone()]);
                }
            }
            out
        };
        match source {
            ConstantSource::None => vec![Vec::new()],
            ConstantSource::Numeric => singles(&self.numbers),
            ConstantSource::TypeNames => singles(&self.type_names),
            ConstantSource::Dtypes => singles(&self.dtypes),
            ConstantSource::IndexNumeric => {
                let indices: Vec<Value> = ELEMENT_INDICES.iter().map(|&i| Value::Int(i)).collect();
                pairs(&indices, &self.numbers)
            }
            ConstantSource::DimExtent => pairs(&self.dim_indices, &self.extents),
        }
    }
}

/// Instantiates every enabled template against the corpus's constant pools.
///
/// When the total exceeds `max_properties`, instances are kept round-robin
/// across templates in pool order, so every template keeps its most
/// frequent constants.
pub fn instantiate_catalog(corpus: &[Value], config: &CatalogConfig) -> Result<Catalog, Error> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    config.validate()?;
    let pools = ConstantPools::from_corpus(corpus, config);
    let mut per_template: Vec<(String, Vec<Vec<Value>>)> = config
        .templates
        .iter()
        .filter(|s| s.enabled)
        .map(|s| (s.id.clone(), pools.constants_for(s.constants)))
        .collect();
    per_template.sort_by(|a, b| a.0.cmp(&b.0));

    let mut chosen = Vec::new();
    let mut round = 0;
    loop {
        let mut progressed = false;
        for (id, constants) in &per_template {
            if chosen.len() >= config.max_properties {
                break;
            }
            if let Some(c) = constants.get(round) {
                chosen.push(PropertyInstance {
                    template_id: id.clone(),
                    group: template(id).expect("validated").group,
                    constants: c.clone(),
                    ordinal: 0,
                });
                progressed = true;
            }
        }
        if !progressed || chosen.len() >= config.max_properties {
            break;
        }
        round += 1;
    }
    Catalog::from_instances(chosen, config.constructor_types.clone())
}

/// Orders instances the way catalog ordinals are assigned.
pub fn ordinal_order(a: &PropertyInstance, b: &PropertyInstance) -> Ordering {
    (a.template_id.as_str(), a.constants_key()).cmp(&(b.template_id.as_str(), b.constants_key()))
}
