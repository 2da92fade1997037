//! Built-in property templates, grouped by type/structure, value and shape.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::value::{numeric_elements, Scalar, Tensor, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Group {
    TypeStructure,
    Value,
    Shape,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::TypeStructure => "type-structure",
            Group::Value => "value",
            Group::Shape => "shape",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl From<bool> for Truth {
    fn from(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }
}

/// Where a template's constants come from when the catalog is instantiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    None,
    Numeric,
    TypeNames,
    Dtypes,
    /// Element index × numeric pool.
    IndexNumeric,
    /// Dimension index × observed extents.
    DimExtent,
}

impl ConstantSource {
    pub fn arity(self) -> usize {
        match self {
            ConstantSource::None => 0,
            ConstantSource::Numeric | ConstantSource::TypeNames | ConstantSource::Dtypes => 1,
            ConstantSource::IndexNumeric | ConstantSource::DimExtent => 2,
        }
    }
}

/// Ordering between instances of one template: `Increasing` means the
/// instance with constant `a` implies every instance with constant `b >= a`
/// (as for `X < C`), `Decreasing` the mirror image (as for `X > C`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Increasing,
    Decreasing,
}

pub struct EvalContext<'a> {
    pub constructor_types: &'a BTreeMap<String, String>,
}

pub type Evaluator = fn(&Value, &[Value], &EvalContext<'_>) -> Truth;

pub struct PropertyTemplate {
    pub id: &'static str,
    pub group: Group,
    pub source: ConstantSource,
    pub monotone: Option<Monotone>,
    /// Display pattern; `{0}` and `{1}` stand for the constants.
    pub display: &'static str,
    pub eval: Evaluator,
}

impl PropertyTemplate {
    pub fn arity(&self) -> usize {
        self.source.arity()
    }

    pub fn render(&self, constants: &[Value]) -> String {
        let mut out = String::from(self.display);
        for (i, c) in constants.iter().enumerate() {
            out = out.replace(&format!("{{{i}}}"), &constant_text(c));
        }
        out
    }
}

pub fn constant_text(c: &Value) -> String {
    match c {
        Value::Int(i) => format!("{i}"),
        Value::Float(f) => format!("{f:?}"),
        Value::Str(s) => s.clone(),
        Value::Bool(b) => format!("{b}"),
        other => String::from(other.kind_name()),
    }
}

pub fn type_name<'a>(v: &'a Value, ctx: &'a EvalContext<'_>) -> &'a str {
    match v {
        Value::None => "NoneType",
        Value::Bool(_) => "bool",
        Value::Int(_) => "int",
        Value::Float(_) => "float",
        Value::Str(_) => "str",
        Value::Seq(_) => "list",
        Value::Map(_) => "dict",
        Value::Tensor(_) => "Tensor",
        Value::Recipe(r) => {
            let ctor = r.result_constructor();
            ctx.constructor_types
                .get(ctor)
                .map(String::as_str)
                .unwrap_or(ctor)
        }
    }
}

pub fn length(v: &Value) -> Option<u64> {
    match v {
        Value::Seq(items) => Some(items.len() as u64),
        Value::Str(s) => Some(s.chars().count() as u64),
        Value::Map(m) => Some(m.len() as u64),
        Value::Tensor(t) => t.shape.first().copied(),
        _ => None,
    }
}

pub fn size(v: &Value) -> Option<u64> {
    match v {
        Value::Tensor(t) => Some(t.element_count()),
        Value::Seq(_) => numeric_elements(v).map(|e| e.len() as u64),
        _ => None,
    }
}

/// Tensor shape, the rectangular shape of a nested numeric sequence, or
/// rank 0 for a bare number.
pub fn shape(v: &Value) -> Option<Vec<u64>> {
    fn seq_shape(v: &Value) -> Option<Vec<u64>> {
        match v {
            Value::Int(_) | Value::Float(_) | Value::Bool(_) => Some(Vec::new()),
            Value::Seq(items) => {
                let mut inner: Option<Vec<u64>> = None;
                for item in items {
                    let s = seq_shape(item)?;
                    match &inner {
                        Some(prev) if *prev != s => return None,
                        Some(_) => {}
                        None => inner = Some(s),
                    }
                }
                let mut out = alloc::vec![items.len() as u64];
                out.extend(inner.unwrap_or_default());
                Some(out)
            }
            _ => None,
        }
    }
    match v {
        Value::Tensor(t) => Some(t.shape.clone()),
        _ => seq_shape(v),
    }
}

enum Elements {
    Data(Vec<Scalar>),
    Stats(crate::value::ValueStats),
}

fn elements(v: &Value) -> Option<Elements> {
    match v {
        Value::Tensor(Tensor { data: Some(d), .. }) => Some(Elements::Data(d.clone())),
        Value::Tensor(Tensor { stats: Some(s), .. }) => Some(Elements::Stats(s.clone())),
        Value::Int(i) => Some(Elements::Data(alloc::vec![Scalar::Int(*i)])),
        Value::Float(f) => Some(Elements::Data(alloc::vec![Scalar::Float(*f)])),
        Value::Seq(_) => numeric_elements(v).map(Elements::Data),
        _ => None,
    }
}

/// Numeric comparison that is exact between two integers.
fn compare(x: Scalar, c: &Value) -> Option<Ordering> {
    match (x, c) {
        (Scalar::Int(a), Value::Int(b)) => Some(a.cmp(b)),
        (x, c) => x.as_f64().partial_cmp(&c.as_f64()?),
    }
}

fn scalar_of(v: &Value) -> Option<Scalar> {
    match v {
        Value::Int(i) => Some(Scalar::Int(*i)),
        Value::Float(f) => Some(Scalar::Float(*f)),
        _ => None,
    }
}

fn int_const(c: &Value) -> Option<i64> {
    match c {
        Value::Int(i) => Some(*i),
        _ => None,
    }
}

fn is_recipe(v: &Value) -> bool {
    matches!(v, Value::Recipe(_))
}

macro_rules! scalar_cmp {
    ($name:ident, $pred:expr) => {
        fn $name(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
            if is_recipe(v) {
                return Truth::Unknown;
            }
            let pred: fn(Ordering) -> bool = $pred;
            match scalar_of(v).and_then(|x| compare(x, &c[0])) {
                Some(ord) => pred(ord).into(),
                None => Truth::False,
            }
        }
    };
}

scalar_cmp!(eval_lt, |o| o == Ordering::Less);
scalar_cmp!(eval_le, |o| o != Ordering::Greater);
scalar_cmp!(eval_gt, |o| o == Ordering::Greater);
scalar_cmp!(eval_ge, |o| o != Ordering::Less);
scalar_cmp!(eval_eq, |o| o == Ordering::Equal);

/// `all(X op C)` with the stats fallback: `bound` picks min or max and the
/// predicate is applied to it.
macro_rules! all_cmp {
    ($name:ident, $pred:expr, $use_max:expr) => {
        fn $name(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
            if is_recipe(v) {
                return Truth::Unknown;
            }
            let pred: fn(Ordering) -> bool = $pred;
            match elements(v) {
                Some(Elements::Data(data)) => data
                    .iter()
                    .all(|&x| compare(x, &c[0]).is_some_and(pred))
                    .into(),
                Some(Elements::Stats(s)) => {
                    if s.element_count == 0 {
                        return Truth::True;
                    }
                    if s.has_nan {
                        return Truth::False;
                    }
                    let bound = if $use_max { s.max } else { s.min };
                    match bound.and_then(|b| compare(Scalar::Float(b), &c[0])) {
                        Some(ord) => pred(ord).into(),
                        None => Truth::Unknown,
                    }
                }
                None => Truth::False,
            }
        }
    };
}

all_cmp!(eval_all_lt, |o| o == Ordering::Less, true);
all_cmp!(eval_all_le, |o| o != Ordering::Greater, true);
all_cmp!(eval_all_gt, |o| o == Ordering::Greater, false);
all_cmp!(eval_all_ge, |o| o != Ordering::Less, false);

fn eval_any_eq(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    match elements(v) {
        Some(Elements::Data(data)) => data
            .iter()
            .any(|&x| compare(x, &c[0]) == Some(Ordering::Equal))
            .into(),
        Some(Elements::Stats(s)) => {
            let Some(target) = c[0].as_f64() else {
                return Truth::False;
            };
            match (s.min, s.max) {
                (Some(lo), Some(hi)) if target < lo || target > hi => Truth::False,
                (None, None) if !s.has_nan => Truth::False,
                _ => Truth::Unknown,
            }
        }
        None => Truth::False,
    }
}

fn eval_elem_eq(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
    let Some(index) = int_const(&c[0]).and_then(|i| usize::try_from(i).ok()) else {
        return Truth::False;
    };
    let element = match v {
        Value::Tensor(Tensor { data: Some(d), .. }) => d.get(index).copied(),
        Value::Tensor(_) | Value::Recipe(_) => return Truth::Unknown,
        Value::Seq(items) => items.get(index).and_then(scalar_of),
        _ => None,
    };
    element
        .and_then(|x| compare(x, &c[1]))
        .is_some_and(|o| o == Ordering::Equal)
        .into()
}

fn eval_all_finite(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    match elements(v) {
        Some(Elements::Data(d)) => d.iter().all(|x| x.as_f64().is_finite()).into(),
        Some(Elements::Stats(s)) => (!s.has_nan && !s.has_inf).into(),
        None => Truth::False,
    }
}

fn eval_has_nan(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    match elements(v) {
        Some(Elements::Data(d)) => d.iter().any(|x| x.as_f64().is_nan()).into(),
        Some(Elements::Stats(s)) => s.has_nan.into(),
        None => Truth::False,
    }
}

fn eval_all_integral(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    match elements(v) {
        Some(Elements::Data(d)) => d
            .iter()
            .all(|x| match *x {
                Scalar::Float(f) => f.is_finite() && (f as i64) as f64 == f,
                _ => true,
            })
            .into(),
        Some(Elements::Stats(_)) => Truth::Unknown,
        None => Truth::False,
    }
}

fn eval_is_none(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    matches!(v, Value::None).into()
}

fn eval_not_none(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    (!matches!(v, Value::None)).into()
}

fn eval_type_is(v: &Value, c: &[Value], ctx: &EvalContext<'_>) -> Truth {
    match &c[0] {
        Value::Str(name) => (type_name(v, ctx) == name).into(),
        _ => Truth::False,
    }
}

fn dtype_of(v: &Value) -> Option<&str> {
    match v {
        Value::Tensor(t) => Some(&t.dtype),
        _ => None,
    }
}

fn eval_dtype_is(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
    match (dtype_of(v), &c[0]) {
        (Some(d), Value::Str(name)) => (d == name).into(),
        _ if is_recipe(v) => Truth::Unknown,
        _ => Truth::False,
    }
}

pub fn is_floating_dtype(d: &str) -> bool {
    matches!(d, "float16" | "bfloat16" | "float32" | "float64" | "half" | "double")
}

pub fn is_integer_dtype(d: &str) -> bool {
    matches!(
        d,
        "int8" | "int16" | "int32" | "int64" | "uint8" | "uint16" | "uint32" | "uint64"
    )
}

pub fn is_quantized_dtype(d: &str) -> bool {
    d.starts_with('q')
}

macro_rules! dtype_class {
    ($name:ident, $pred:expr) => {
        fn $name(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
            if is_recipe(v) {
                return Truth::Unknown;
            }
            let pred: fn(&str) -> bool = $pred;
            dtype_of(v).is_some_and(pred).into()
        }
    };
}

dtype_class!(eval_dtype_floating, is_floating_dtype);
dtype_class!(eval_dtype_integer, is_integer_dtype);
dtype_class!(eval_dtype_quantized, is_quantized_dtype);
dtype_class!(eval_dtype_bool, |d| d == "bool");

fn eval_is_number(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    matches!(v, Value::Int(_) | Value::Float(_)).into()
}

fn eval_is_bool(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    matches!(v, Value::Bool(_)).into()
}

fn eval_is_true(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    matches!(v, Value::Bool(true)).into()
}

fn eval_is_int_sequence(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    match v {
        Value::Seq(items) => items.iter().all(|i| matches!(i, Value::Int(_))).into(),
        _ => Truth::False,
    }
}

fn eval_is_float_sequence(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    match v {
        Value::Seq(items) => (!items.is_empty()
            && items.iter().all(|i| matches!(i, Value::Float(_))))
        .into(),
        _ => Truth::False,
    }
}

fn eval_is_nested_sequence(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    match v {
        Value::Seq(items) => items.iter().any(|i| matches!(i, Value::Seq(_))).into(),
        _ => Truth::False,
    }
}

fn eval_is_ragged_sequence(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    match v {
        Value::Seq(items) => {
            let lens: Vec<_> = items
                .iter()
                .filter_map(|i| match i {
                    Value::Seq(inner) => Some(inner.len()),
                    _ => None,
                })
                .collect();
            (lens.len() == items.len() && lens.windows(2).any(|w| w[0] != w[1])).into()
        }
        _ => Truth::False,
    }
}

fn eval_is_str_sequence(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    match v {
        Value::Seq(items) => (!items.is_empty() && items.iter().all(|i| matches!(i, Value::Str(_)))).into(),
        _ => Truth::False,
    }
}

macro_rules! measure_cmp {
    ($name:ident, $measure:expr, $pred:expr) => {
        fn $name(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
            if is_recipe(v) {
                return Truth::Unknown;
            }
            let measure: fn(&Value) -> Option<u64> = $measure;
            let pred: fn(Ordering) -> bool = $pred;
            let ord = match (measure(v), &c[0]) {
                (Some(m), Value::Int(k)) => Some((m as i128).cmp(&(*k as i128))),
                (Some(m), Value::Float(k)) => (m as f64).partial_cmp(k),
                _ => None,
            };
            ord.is_some_and(pred).into()
        }
    };
}

fn rank(v: &Value) -> Option<u64> {
    shape(v).map(|s| s.len() as u64)
}

measure_cmp!(eval_len_lt, length, |o| o == Ordering::Less);
measure_cmp!(eval_len_gt, length, |o| o == Ordering::Greater);
measure_cmp!(eval_len_eq, length, |o| o == Ordering::Equal);
measure_cmp!(eval_size_lt, size, |o| o == Ordering::Less);
measure_cmp!(eval_size_gt, size, |o| o == Ordering::Greater);
measure_cmp!(eval_size_eq, size, |o| o == Ordering::Equal);
measure_cmp!(eval_rank_lt, rank, |o| o == Ordering::Less);
measure_cmp!(eval_rank_gt, rank, |o| o == Ordering::Greater);
measure_cmp!(eval_rank_eq, rank, |o| o == Ordering::Equal);

fn eval_dim_eq(v: &Value, c: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    let (Some(dim), Some(extent)) = (int_const(&c[0]), int_const(&c[1])) else {
        return Truth::False;
    };
    shape(v)
        .and_then(|s| usize::try_from(dim).ok().and_then(|d| s.get(d).copied()))
        .is_some_and(|e| e as i128 == extent as i128)
        .into()
}

fn eval_has_zero_dim(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    shape(v).is_some_and(|s| s.contains(&0)).into()
}

fn eval_is_square(v: &Value, _: &[Value], _: &EvalContext<'_>) -> Truth {
    if is_recipe(v) {
        return Truth::Unknown;
    }
    shape(v)
        .is_some_and(|s| s.len() >= 2 && s[s.len() - 1] == s[s.len() - 2])
        .into()
}

use ConstantSource as Src;
use Group::{Shape as G_SHAPE, TypeStructure as G_TYPE, Value as G_VALUE};
use Monotone::{Decreasing as DEC, Increasing as INC};

macro_rules! t {
    ($id:literal, $group:expr, $src:expr, $mono:expr, $display:literal, $eval:expr) => {
        PropertyTemplate {
            id: $id,
            group: $group,
            source: $src,
            monotone: $mono,
            display: $display,
            eval: $eval,
        }
    };
}

/// The baseline template catalog, sorted by id.
pub static TEMPLATES: &[PropertyTemplate] = &[
    t!("all_finite", G_VALUE, Src::None, None, "all(isfinite(X))", eval_all_finite),
    t!("all_ge", G_VALUE, Src::Numeric, Some(DEC), "all(X >= {0})", eval_all_ge),
    t!("all_gt", G_VALUE, Src::Numeric, Some(DEC), "all(X > {0})", eval_all_gt),
    t!("all_integral", G_VALUE, Src::None, None, "all(X == floor(X))", eval_all_integral),
    t!("all_le", G_VALUE, Src::Numeric, Some(INC), "all(X <= {0})", eval_all_le),
    t!("all_lt", G_VALUE, Src::Numeric, Some(INC), "all(X < {0})", eval_all_lt),
    t!("any_eq", G_VALUE, Src::Numeric, None, "any(X == {0})", eval_any_eq),
    t!("dim_eq", G_SHAPE, Src::DimExtent, None, "X.shape[{0}] == {1}", eval_dim_eq),
    t!("dtype_bool", G_TYPE, Src::None, None, "X.dtype is bool", eval_dtype_bool),
    t!("dtype_floating", G_TYPE, Src::None, None, "X.dtype is floating", eval_dtype_floating),
    t!("dtype_integer", G_TYPE, Src::None, None, "X.dtype is integer", eval_dtype_integer),
    t!("dtype_is", G_TYPE, Src::Dtypes, None, "X.dtype == {0}", eval_dtype_is),
    t!("dtype_quantized", G_TYPE, Src::None, None, "X.dtype is quantized", eval_dtype_quantized),
    t!("elem_eq", G_VALUE, Src::IndexNumeric, None, "X[{0}] == {1}", eval_elem_eq),
    t!("eq", G_VALUE, Src::Numeric, None, "X == {0}", eval_eq),
    t!("ge", G_VALUE, Src::Numeric, Some(DEC), "X >= {0}", eval_ge),
    t!("gt", G_VALUE, Src::Numeric, Some(DEC), "X > {0}", eval_gt),
    t!("has_nan", G_VALUE, Src::None, None, "any(isnan(X))", eval_has_nan),
    t!("has_zero_dim", G_SHAPE, Src::None, None, "0 in X.shape", eval_has_zero_dim),
    t!("is_bool", G_TYPE, Src::None, None, "isinstance(X, bool)", eval_is_bool),
    t!("is_float_sequence", G_TYPE, Src::None, None, "X is a list of float", eval_is_float_sequence),
    t!("is_int_sequence", G_TYPE, Src::None, None, "X is a list of int", eval_is_int_sequence),
    t!("is_nested_sequence", G_TYPE, Src::None, None, "X is a nested list", eval_is_nested_sequence),
    t!("is_none", G_TYPE, Src::None, None, "X is None", eval_is_none),
    t!("is_number", G_TYPE, Src::None, None, "isinstance(X, number)", eval_is_number),
    t!("is_ragged_sequence", G_TYPE, Src::None, None, "X is a ragged list", eval_is_ragged_sequence),
    t!("is_square", G_SHAPE, Src::None, None, "X.shape[-1] == X.shape[-2]", eval_is_square),
    t!("is_str_sequence", G_TYPE, Src::None, None, "X is a list of str", eval_is_str_sequence),
    t!("is_true", G_VALUE, Src::None, None, "X is True", eval_is_true),
    t!("le", G_VALUE, Src::Numeric, Some(INC), "X <= {0}", eval_le),
    t!("len_eq", G_SHAPE, Src::Numeric, None, "len(X) == {0}", eval_len_eq),
    t!("len_gt", G_SHAPE, Src::Numeric, Some(DEC), "len(X) > {0}", eval_len_gt),
    t!("len_lt", G_SHAPE, Src::Numeric, Some(INC), "len(X) < {0}", eval_len_lt),
    t!("lt", G_VALUE, Src::Numeric, Some(INC), "X < {0}", eval_lt),
    t!("not_none", G_TYPE, Src::None, None, "X is not None", eval_not_none),
    t!("rank_eq", G_SHAPE, Src::Numeric, None, "X.shape.rank == {0}", eval_rank_eq),
    t!("rank_gt", G_SHAPE, Src::Numeric, Some(DEC), "X.shape.rank > {0}", eval_rank_gt),
    t!("rank_lt", G_SHAPE, Src::Numeric, Some(INC), "X.shape.rank < {0}", eval_rank_lt),
    t!("size_eq", G_SHAPE, Src::Numeric, None, "size(X) == {0}", eval_size_eq),
    t!("size_gt", G_SHAPE, Src::Numeric, Some(DEC), "size(X) > {0}", eval_size_gt),
    t!("size_lt", G_SHAPE, Src::Numeric, Some(INC), "size(X) < {0}", eval_size_lt),
    t!("type_is", G_TYPE, Src::TypeNames, None, "type(X) == {0}", eval_type_is),
];

pub fn template(id: &str) -> Option<&'static PropertyTemplate> {
    TEMPLATES
        .binary_search_by(|t| t.id.cmp(id))
        .ok()
        .map(|i| &TEMPLATES[i])
}

/// Evaluates one template by id; `None` for an unknown id.
pub fn evaluate(id: &str, v: &Value, constants: &[Value], ctx: &EvalContext<'_>) -> Option<Truth> {
    template(id).map(|t| (t.eval)(v, constants, ctx))
}
