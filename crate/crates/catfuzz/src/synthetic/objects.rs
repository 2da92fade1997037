//! Native objects the synthetic worker materializes from wire values.

use std::collections::BTreeMap;

use catfuzz_core::value::{RecipeArg, Scalar};
use catfuzz_core::{Value, ValueStats};

#[derive(Clone, Debug, PartialEq)]
pub enum Obj {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Obj>),
    Dict(BTreeMap<String, Obj>),
    Array(Array),
    Shape(Vec<i64>),
    Ragged(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Array {
    pub dtype: String,
    pub shape: Vec<u64>,
    /// Element values; absent for summarized tensors.
    pub values: Option<Vec<f64>>,
    pub stats: Option<ValueStats>,
}

impl Array {
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn count(&self) -> u64 {
        self.shape.iter().product()
    }

    pub fn is_float(&self) -> bool {
        matches!(self.dtype.as_str(), "float16" | "bfloat16" | "float32" | "float64" | "half" | "double")
    }

    pub fn is_int(&self) -> bool {
        let d = self.dtype.as_str();
        (d.starts_with("int") || d.starts_with("uint")) && d[d.find("int").unwrap() + 3..].parse::<u32>().is_ok()
    }

    pub fn min(&self) -> Option<f64> {
        match (&self.values, &self.stats) {
            (Some(v), _) => v.iter().copied().reduce(f64::min),
            (None, Some(s)) => s.min,
            _ => None,
        }
    }

    pub fn has_nan(&self) -> bool {
        match (&self.values, &self.stats) {
            (Some(v), _) => v.iter().any(|x| x.is_nan()),
            (None, Some(s)) => s.has_nan,
            _ => false,
        }
    }

    /// Every element satisfies `pred`; summarized tensors answer through
    /// their minimum.
    pub fn all_above(&self, bound: f64, inclusive: bool) -> bool {
        let ok = |x: f64| if inclusive { x >= bound } else { x > bound };
        match (&self.values, &self.stats) {
            (Some(v), _) => v.iter().all(|&x| ok(x)),
            (None, Some(s)) => s.element_count == 0 || (!s.has_nan && s.min.is_some_and(ok)),
            _ => false,
        }
    }
}

/// Argument reconstruction failure; reported as a setup error.
#[derive(Debug, PartialEq)]
pub struct SetupFailure(pub String);

pub fn materialize(v: &Value) -> Result<Obj, SetupFailure> {
    Ok(match v {
        Value::None => Obj::None,
        Value::Bool(b) => Obj::Bool(*b),
        Value::Int(i) => Obj::Int(*i),
        Value::Float(f) => Obj::Float(*f),
        Value::Str(s) => Obj::Str(s.clone()),
        Value::Seq(items) => Obj::List(items.iter().map(materialize).collect::<Result<_, _>>()?),
        Value::Map(m) => Obj::Dict(
            m.iter()
                .map(|(k, v)| Ok((k.clone(), materialize(v)?)))
                .collect::<Result<_, _>>()?,
        ),
        Value::Tensor(t) => Obj::Array(Array {
            dtype: t.dtype.clone(),
            shape: t.shape.clone(),
            values: t.data.as_ref().map(|d| d.iter().map(|s| scalar(*s)).collect()),
            stats: t.stats.clone(),
        }),
        Value::Recipe(r) => {
            let mut built: Vec<Obj> = Vec::with_capacity(r.steps.len());
            for step in &r.steps {
                let args = step
                    .args
                    .iter()
                    .map(|a| match a {
                        RecipeArg::Value(v) => materialize(v),
                        RecipeArg::Step(i) => Ok(built[*i].clone()),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                built.push(construct(&step.constructor, args)?);
            }
            built.swap_remove(r.result)
        }
    })
}

fn scalar(s: Scalar) -> f64 {
    match s {
        Scalar::Bool(b) => b as u8 as f64,
        Scalar::Int(i) => i as f64,
        Scalar::Float(f) => f,
    }
}

fn construct(name: &str, args: Vec<Obj>) -> Result<Obj, SetupFailure> {
    let fail = |why: &str| Err(SetupFailure(format!("{name}: {why}")));
    match name {
        "tensor_shape" => match args.as_slice() {
            [Obj::List(dims)] => dims
                .iter()
                .map(|d| match d {
                    Obj::Int(i) if *i >= 0 => Ok(*i),
                    _ => Err(SetupFailure(format!("{name}: bad dimension"))),
                })
                .collect::<Result<_, _>>()
                .map(Obj::Shape),
            _ => fail("expects one list of dimensions"),
        },
        "ragged_constant" => match args.as_slice() {
            [Obj::List(rows)] => rows
                .iter()
                .map(|row| match row {
                    Obj::List(xs) => xs
                        .iter()
                        .map(|x| match x {
                            Obj::Int(i) => Ok(*i as f64),
                            Obj::Float(f) => Ok(*f),
                            _ => Err(SetupFailure(format!("{name}: non-numeric element"))),
                        })
                        .collect(),
                    _ => Err(SetupFailure(format!("{name}: rows must be lists"))),
                })
                .collect::<Result<_, _>>()
                .map(Obj::Ragged),
            _ => fail("expects one list of rows"),
        },
        _ => fail("unknown constructor"),
    }
}
