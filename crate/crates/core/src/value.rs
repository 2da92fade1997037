//! Language-neutral test input values and their canonical line-JSON encoding.
//!
//! Every value travels as a JSON object tagged by `kind`. Tensors carry
//! `dtype`, `shape`, and either `data` (at most [`DATA_CAP`] elements) or
//! `stats`; recipes carry `steps` and `result`. Encoding is canonical: map
//! keys are sorted, floats are written in shortest round-trip form, and
//! non-finite floats become the strings `"nan"`, `"inf"` and `"-inf"`.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Number, Value as Json};

use crate::error::Error;

/// Tensors with more elements than this travel as shape + dtype + stats.
pub const DATA_CAP: usize = 1024;

/// Maximum nesting depth accepted for any value.
pub const MAX_DEPTH: usize = 16;

#[derive(Clone, Debug)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Seq(Vec<Value>),
    Map(BTreeMap<String, Value>),
    Tensor(Tensor),
    Recipe(Recipe),
}

/// One tensor element.
#[derive(Clone, Copy, Debug)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl Scalar {
    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Bool(b) => b as u8 as f64,
            Scalar::Int(i) => i as f64,
            Scalar::Float(f) => f,
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => a == b,
            (Scalar::Int(a), Scalar::Int(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => float_eq(*a, *b),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub dtype: String,
    pub shape: Vec<u64>,
    pub data: Option<Vec<Scalar>>,
    pub stats: Option<ValueStats>,
}

/// Aggregate facts about the elements of a tensor or numeric sequence.
///
/// `min`/`max` are `None` for empty inputs and skip NaN elements.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValueStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub has_nan: bool,
    pub has_inf: bool,
    pub all_positive: bool,
    pub all_nonnegative: bool,
    pub element_count: u64,
}

/// A recorded constructor sequence that rebuilds an opaque host object.
#[derive(Clone, Debug, PartialEq)]
pub struct Recipe {
    pub steps: Vec<RecipeStep>,
    pub result: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecipeStep {
    pub constructor: String,
    pub args: Vec<RecipeArg>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RecipeArg {
    Value(Value),
    Step(usize),
}

fn float_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::None, Value::None) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => float_eq(*a, *b),
            (Value::Str(a), Value::Str(b)) => a == b,
            (Value::Seq(a), Value::Seq(b)) => a == b,
            (Value::Map(a), Value::Map(b)) => a == b,
            (Value::Tensor(a), Value::Tensor(b)) => a == b,
            (Value::Recipe(a), Value::Recipe(b)) => a == b,
            _ => false,
        }
    }
}

impl Tensor {
    /// Builds a tensor from its elements, summarizing to stats when the
    /// element count exceeds [`DATA_CAP`].
    pub fn new(dtype: impl Into<String>, shape: Vec<u64>, data: Vec<Scalar>) -> Result<Self, Error> {
        let expected = shape_product(&shape)?;
        if expected != data.len() as u64 {
            return Err(Error::ShapeDataMismatch {
                expected,
                data: data.len(),
            });
        }
        let dtype = dtype.into();
        if data.len() > DATA_CAP {
            let stats = stats_of(data.iter().copied());
            return Ok(Tensor {
                dtype,
                shape,
                data: None,
                stats: Some(stats),
            });
        }
        Ok(Tensor {
            dtype,
            shape,
            data: Some(data),
            stats: None,
        })
    }

    pub fn stats_only(dtype: impl Into<String>, shape: Vec<u64>, stats: ValueStats) -> Self {
        Tensor {
            dtype: dtype.into(),
            shape,
            data: None,
            stats: Some(stats),
        }
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn element_count(&self) -> u64 {
        self.shape.iter().product()
    }

    fn validate(&self) -> Result<(), Error> {
        let expected = shape_product(&self.shape)?;
        match (&self.data, &self.stats) {
            (Some(data), _) if data.len() as u64 != expected => Err(Error::ShapeDataMismatch {
                expected,
                data: data.len(),
            }),
            (None, None) => Err(Error::MissingStats),
            _ => Ok(()),
        }
    }
}

fn shape_product(shape: &[u64]) -> Result<u64, Error> {
    shape
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or(Error::InvalidShape)
}

impl Recipe {
    pub fn result_constructor(&self) -> &str {
        &self.steps[self.result].constructor
    }

    fn validate(&self, depth: usize) -> Result<(), Error> {
        if self.result >= self.steps.len() {
            return Err(Error::Malformed("recipe result index out of range"));
        }
        for (i, step) in self.steps.iter().enumerate() {
            for arg in &step.args {
                match arg {
                    RecipeArg::Step(target) if *target >= i => {
                        return Err(Error::BadStepRef {
                            step: i,
                            target: *target,
                        })
                    }
                    RecipeArg::Value(v) => v.check_depth(depth + 1)?,
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Serde support through the canonical JSON form.
impl serde::Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        self.to_json()
            .map_err(S::Error::custom)?
            .serialize(serializer)
    }
}

impl<'de> serde::Deserialize<'de> for Value {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let json = Json::deserialize(deserializer)?;
        Value::from_json(&json).map_err(D::Error::custom)
    }
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::None => "none",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
            Value::Seq(_) => "sequence",
            Value::Map(_) => "map",
            Value::Tensor(_) => "tensor",
            Value::Recipe(_) => "recipe",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Checks every structural invariant (depth, tensor shape/data agreement,
    /// recipe references).
    pub fn validate(&self) -> Result<(), Error> {
        self.check_depth(1)
    }

    fn check_depth(&self, depth: usize) -> Result<(), Error> {
        if depth > MAX_DEPTH {
            return Err(Error::DepthExceeded(MAX_DEPTH));
        }
        match self {
            Value::Seq(items) => items.iter().try_for_each(|v| v.check_depth(depth + 1)),
            Value::Map(entries) => entries.values().try_for_each(|v| v.check_depth(depth + 1)),
            Value::Tensor(t) => t.validate(),
            Value::Recipe(r) => r.validate(depth),
            _ => Ok(()),
        }
    }

    /// Canonical JSON bytes for this value.
    pub fn encode(&self) -> Result<Vec<u8>, Error> {
        Ok(self.encode_string()?.into_bytes())
    }

    pub fn encode_string(&self) -> Result<String, Error> {
        let json = self.to_json()?;
        serde_json::to_string(&json).map_err(|e| Error::Decode(e.to_string()))
    }

    /// Canonical JSON tree, for embedding values inside larger records.
    pub fn to_json(&self) -> Result<Json, Error> {
        self.validate()?;
        Ok(self.to_json_unchecked())
    }

    fn to_json_unchecked(&self) -> Json {
        let mut obj = Map::new();
        obj.insert("kind".into(), Json::from(self.kind_name()));
        match self {
            Value::None => {}
            Value::Bool(b) => {
                obj.insert("value".into(), Json::Bool(*b));
            }
            Value::Int(i) => {
                obj.insert("value".into(), Json::from(*i));
            }
            Value::Float(f) => {
                obj.insert("value".into(), float_json(*f));
            }
            Value::Str(s) => {
                obj.insert("value".into(), Json::from(s.as_str()));
            }
            Value::Seq(items) => {
                let items = items.iter().map(Value::to_json_unchecked).collect();
                obj.insert("items".into(), Json::Array(items));
            }
            Value::Map(entries) => {
                let entries = entries
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_json_unchecked()))
                    .collect();
                obj.insert("entries".into(), Json::Object(entries));
            }
            Value::Tensor(t) => {
                obj.insert("dtype".into(), Json::from(t.dtype.as_str()));
                obj.insert(
                    "shape".into(),
                    Json::Array(t.shape.iter().map(|&d| Json::from(d)).collect()),
                );
                if let Some(data) = &t.data {
                    let data = data.iter().map(|&s| scalar_json(s)).collect();
                    obj.insert("data".into(), Json::Array(data));
                }
                if let Some(stats) = &t.stats {
                    obj.insert("stats".into(), stats.to_json());
                }
            }
            Value::Recipe(r) => {
                let steps = r
                    .steps
                    .iter()
                    .map(|step| {
                        let mut s = Map::new();
                        s.insert("constructor".into(), Json::from(step.constructor.as_str()));
                        let args = step
                            .args
                            .iter()
                            .map(|arg| match arg {
                                RecipeArg::Value(v) => v.to_json_unchecked(),
                                RecipeArg::Step(i) => {
                                    let mut m = Map::new();
                                    m.insert("step".into(), Json::from(*i));
                                    Json::Object(m)
                                }
                            })
                            .collect();
                        s.insert("args".into(), Json::Array(args));
                        Json::Object(s)
                    })
                    .collect();
                obj.insert("steps".into(), Json::Array(steps));
                obj.insert("result".into(), Json::from(r.result));
            }
        }
        Json::Object(obj)
    }

    pub fn decode(bytes: &[u8]) -> Result<Value, Error> {
        let json: Json = serde_json::from_slice(bytes).map_err(|e| Error::Decode(e.to_string()))?;
        Value::from_json(&json)
    }

    pub fn from_json(json: &Json) -> Result<Value, Error> {
        let v = from_json_at(json, 1)?;
        v.validate()?;
        Ok(v)
    }
}

fn float_json(f: f64) -> Json {
    if f.is_nan() {
        Json::from("nan")
    } else if f.is_infinite() {
        Json::from(if f > 0.0 { "inf" } else { "-inf" })
    } else {
        Json::Number(Number::from_f64(f).expect("finite"))
    }
}

fn scalar_json(s: Scalar) -> Json {
    match s {
        Scalar::Bool(b) => Json::Bool(b),
        Scalar::Int(i) => Json::from(i),
        Scalar::Float(f) => float_json(f),
    }
}

fn json_float(json: &Json) -> Result<f64, Error> {
    match json {
        Json::Number(n) => n.as_f64().ok_or(Error::Malformed("float")),
        Json::String(s) => match s.as_str() {
            "nan" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => Err(Error::Malformed("float")),
        },
        _ => Err(Error::Malformed("float")),
    }
}

fn json_scalar(json: &Json) -> Result<Scalar, Error> {
    match json {
        Json::Bool(b) => Ok(Scalar::Bool(*b)),
        Json::Number(n) if n.is_i64() => Ok(Scalar::Int(n.as_i64().expect("i64"))),
        Json::Number(n) if n.is_u64() => Err(Error::Malformed("integer element out of range")),
        _ => json_float(json).map(Scalar::Float),
    }
}

fn field<'a>(obj: &'a Map<String, Json>, name: &'static str) -> Result<&'a Json, Error> {
    obj.get(name).ok_or(Error::Malformed(name))
}

fn from_json_at(json: &Json, depth: usize) -> Result<Value, Error> {
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(MAX_DEPTH));
    }
    let obj = json.as_object().ok_or(Error::Malformed("value must be an object"))?;
    let kind = field(obj, "kind")?
        .as_str()
        .ok_or(Error::Malformed("kind"))?;
    let value = match kind {
        "none" => Value::None,
        "bool" => Value::Bool(field(obj, "value")?.as_bool().ok_or(Error::Malformed("bool"))?),
        "int" => Value::Int(field(obj, "value")?.as_i64().ok_or(Error::Malformed("int"))?),
        "float" => Value::Float(json_float(field(obj, "value")?)?),
        "string" => Value::Str(
            field(obj, "value")?
                .as_str()
                .ok_or(Error::Malformed("string"))?
                .to_owned(),
        ),
        "sequence" => {
            let items = field(obj, "items")?
                .as_array()
                .ok_or(Error::Malformed("items"))?;
            Value::Seq(
                items
                    .iter()
                    .map(|j| from_json_at(j, depth + 1))
                    .collect::<Result<_, _>>()?,
            )
        }
        "map" => {
            let entries = field(obj, "entries")?
                .as_object()
                .ok_or(Error::Malformed("entries"))?;
            Value::Map(
                entries
                    .iter()
                    .map(|(k, j)| Ok((k.clone(), from_json_at(j, depth + 1)?)))
                    .collect::<Result<_, Error>>()?,
            )
        }
        "tensor" => {
            let dtype = field(obj, "dtype")?
                .as_str()
                .ok_or(Error::Malformed("dtype"))?
                .to_owned();
            let shape = field(obj, "shape")?
                .as_array()
                .ok_or(Error::Malformed("shape"))?
                .iter()
                .map(|d| d.as_u64().ok_or(Error::InvalidShape))
                .collect::<Result<Vec<_>, _>>()?;
            let data = match obj.get("data") {
                Some(d) => Some(
                    d.as_array()
                        .ok_or(Error::Malformed("data"))?
                        .iter()
                        .map(json_scalar)
                        .collect::<Result<Vec<_>, _>>()?,
                ),
                None => None,
            };
            let stats = match obj.get("stats") {
                Some(s) => Some(ValueStats::from_json(s)?),
                None => None,
            };
            Value::Tensor(Tensor {
                dtype,
                shape,
                data,
                stats,
            })
        }
        "recipe" => {
            let steps = field(obj, "steps")?
                .as_array()
                .ok_or(Error::Malformed("steps"))?
                .iter()
                .map(|s| {
                    let s = s.as_object().ok_or(Error::Malformed("step"))?;
                    let constructor = field(s, "constructor")?
                        .as_str()
                        .ok_or(Error::Malformed("constructor"))?
                        .to_owned();
                    let args = field(s, "args")?
                        .as_array()
                        .ok_or(Error::Malformed("args"))?
                        .iter()
                        .map(|a| match a.as_object().and_then(|o| o.get("step")) {
                            Some(idx) if !a.as_object().expect("object").contains_key("kind") => {
                                let idx = idx.as_u64().ok_or(Error::Malformed("step index"))?;
                                Ok(RecipeArg::Step(idx as usize))
                            }
                            _ => from_json_at(a, depth + 1).map(RecipeArg::Value),
                        })
                        .collect::<Result<Vec<_>, Error>>()?;
                    Ok(RecipeStep { constructor, args })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let result = field(obj, "result")?
                .as_u64()
                .ok_or(Error::Malformed("result"))? as usize;
            Value::Recipe(Recipe { steps, result })
        }
        "opaque" => return Err(Error::UnsupportedValue("opaque host object")),
        other => return Err(Error::Decode(format!("unknown value kind `{other}`"))),
    };
    Ok(value)
}

impl ValueStats {
    fn to_json(&self) -> Json {
        let opt = |v: Option<f64>| v.map(float_json).unwrap_or(Json::Null);
        let mut m = Map::new();
        m.insert("all_nonnegative".into(), Json::Bool(self.all_nonnegative));
        m.insert("all_positive".into(), Json::Bool(self.all_positive));
        m.insert("element_count".into(), Json::from(self.element_count));
        m.insert("has_inf".into(), Json::Bool(self.has_inf));
        m.insert("has_nan".into(), Json::Bool(self.has_nan));
        m.insert("max".into(), opt(self.max));
        m.insert("min".into(), opt(self.min));
        Json::Object(m)
    }

    fn from_json(json: &Json) -> Result<Self, Error> {
        let obj = json.as_object().ok_or(Error::Malformed("stats"))?;
        let flag = |name| field(obj, name)?.as_bool().ok_or(Error::Malformed(name));
        let opt = |name| match field(obj, name)? {
            Json::Null => Ok(None),
            j => json_float(j).map(Some),
        };
        Ok(ValueStats {
            min: opt("min")?,
            max: opt("max")?,
            has_nan: flag("has_nan")?,
            has_inf: flag("has_inf")?,
            all_positive: flag("all_positive")?,
            all_nonnegative: flag("all_nonnegative")?,
            element_count: field(obj, "element_count")?
                .as_u64()
                .ok_or(Error::Malformed("element_count"))?,
        })
    }
}

fn stats_of(elements: impl Iterator<Item = Scalar>) -> ValueStats {
    let mut stats = ValueStats {
        all_positive: true,
        all_nonnegative: true,
        ..ValueStats::default()
    };
    for s in elements {
        let x = s.as_f64();
        stats.element_count += 1;
        if x.is_nan() {
            stats.has_nan = true;
            stats.all_positive = false;
            stats.all_nonnegative = false;
            continue;
        }
        if x.is_infinite() {
            stats.has_inf = true;
        }
        // Compare the exact integer, not its f64 image, for the sign facts.
        let (positive, nonnegative) = match s {
            Scalar::Int(i) => (i > 0, i >= 0),
            _ => (x > 0.0, x >= 0.0),
        };
        stats.all_positive &= positive;
        stats.all_nonnegative &= nonnegative;
        stats.min = Some(stats.min.map_or(x, |m| if x < m { x } else { m }));
        stats.max = Some(stats.max.map_or(x, |m| if x > m { x } else { m }));
    }
    stats
}

/// Flattens a (possibly nested) numeric sequence or a tensor's data into
/// scalars. `None` when some leaf is not numeric.
pub fn numeric_elements(v: &Value) -> Option<Vec<Scalar>> {
    fn walk(v: &Value, out: &mut Vec<Scalar>) -> bool {
        match v {
            Value::Int(i) => out.push(Scalar::Int(*i)),
            Value::Float(f) => out.push(Scalar::Float(*f)),
            Value::Bool(b) => out.push(Scalar::Bool(*b)),
            Value::Seq(items) => return items.iter().all(|item| walk(item, out)),
            _ => return false,
        }
        true
    }
    match v {
        Value::Tensor(t) => t.data.clone(),
        Value::Seq(_) => {
            let mut out = Vec::new();
            walk(v, &mut out).then_some(out)
        }
        _ => None,
    }
}

/// Exact aggregate facts over the elements of a tensor or numeric sequence.
pub fn summarize(v: &Value) -> Result<ValueStats, Error> {
    if let Value::Tensor(Tensor {
        data: None,
        stats: Some(stats),
        ..
    }) = v
    {
        return Ok(stats.clone());
    }
    let elements = numeric_elements(v).ok_or(Error::UnsupportedValue("non-numeric elements"))?;
    Ok(stats_of(elements.into_iter()))
}
