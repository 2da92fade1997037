//! Built-in synthetic target suite with machine-readable ground truth.
//!
//! Each target is described twice. [`suite`] gives a declarative spec: an
//! ordered list of checks (property predicates over the arguments, each
//! with the exception class raised when it fails) and planted crash
//! predicates. [`targets`] holds an independent hand-written
//! implementation that the `worker` subcommand serves over the wire
//! protocol. Tests compare the two.

pub mod objects;
pub mod seeds;
pub mod targets;
pub mod worker;

use std::collections::BTreeMap;

use catfuzz_core::property::{evaluate, EvalContext, Truth};
use catfuzz_core::{CatalogConfig, Value};
use serde::{Deserialize, Serialize};

/// Constructors the synthetic worker can materialize.
pub const CONSTRUCTORS: [&str; 2] = ["ragged_constant", "tensor_shape"];

/// A predicate over a target's arguments built from property templates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cond {
    Prop {
        arg: usize,
        template: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        constants: Vec<Value>,
    },
    Not(Box<Cond>),
    All(Vec<Cond>),
    Any(Vec<Cond>),
}

impl Cond {
    /// Unknown property values count as unsatisfied.
    pub fn holds(&self, args: &[Value], ctx: &EvalContext<'_>) -> bool {
        match self {
            Cond::Prop { arg, template, constants } => {
                evaluate(template, &args[*arg], constants, ctx) == Some(Truth::True)
            }
            Cond::Not(c) => !c.holds(args, ctx),
            Cond::All(cs) => cs.iter().all(|c| c.holds(args, ctx)),
            Cond::Any(cs) => cs.iter().any(|c| c.holds(args, ctx)),
        }
    }
}

fn p(arg: usize, template: &str) -> Cond {
    Cond::Prop {
        arg,
        template: template.into(),
        constants: vec![],
    }
}

fn pc(arg: usize, template: &str, constants: &[Value]) -> Cond {
    Cond::Prop {
        arg,
        template: template.into(),
        constants: constants.to_vec(),
    }
}

fn int(i: i64) -> Value {
    Value::Int(i)
}

fn tensor(arg: usize) -> Cond {
    pc(arg, "type_is", &[Value::Str("Tensor".into())])
}

fn type_is(arg: usize, name: &str) -> Cond {
    pc(arg, "type_is", &[Value::Str(name.into())])
}

fn not(c: Cond) -> Cond {
    Cond::Not(Box::new(c))
}

/// Extents the cross-argument equalities range over; larger than any
/// extent or index in the shipped corpus.
const EXTENT_RANGE: std::ops::RangeInclusive<i64> = 0..=64;

fn any_k(f: impl Fn(i64) -> Cond) -> Cond {
    Cond::Any(EXTENT_RANGE.map(f).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "step")]
pub enum Step {
    /// Raise `class` unless `cond` holds.
    Check { cond: Cond, class: String },
    /// Abort the process when `cond` holds.
    Crash { cond: Cond, id: String },
}

fn check(cond: Cond, class: &str) -> Step {
    Step::Check {
        cond,
        class: class.into(),
    }
}

fn crash(cond: Cond, id: &str) -> Step {
    Step::Crash { cond, id: id.into() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    pub params: Vec<String>,
    pub steps: Vec<Step>,
}

impl TargetSpec {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn crash_ids(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Crash { id, .. } => Some(id.as_str()),
                Step::Check { .. } => None,
            })
            .collect()
    }
}

fn target(name: &str, params: &[&str], steps: Vec<Step>) -> TargetSpec {
    TargetSpec {
        name: name.into(),
        params: params.iter().map(|s| s.to_string()).collect(),
        steps,
    }
}

/// The declared ground truth of the synthetic suite, sorted by name.
pub fn suite() -> Vec<TargetSpec> {
    let mut all = vec![
        target(
            "adversarial_pair",
            &["x", "key"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_floating"), "TypeError"),
                check(Cond::Any(vec![type_is(1, "TensorShape"), p(1, "is_int_sequence")]), "TypeError"),
                crash(
                    Cond::All(vec![p(0, "has_nan"), pc(0, "rank_eq", &[int(3)]), type_is(1, "TensorShape")]),
                    "nan_volume",
                ),
            ],
        ),
        target(
            "bincount",
            &["arr"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_integer"), "TypeError"),
                check(pc(0, "rank_eq", &[int(1)]), "ValueError"),
                check(pc(0, "all_ge", &[int(0)]), "ValueError"),
                crash(pc(0, "size_eq", &[int(0)]), "empty_bincount"),
            ],
        ),
        target(
            "boolean_mask",
            &["x", "mask"],
            vec![
                check(Cond::All(vec![tensor(0), tensor(1)]), "TypeError"),
                check(p(1, "dtype_bool"), "TypeError"),
                crash(p(1, "has_zero_dim"), "empty_mask"),
            ],
        ),
        target(
            "cast",
            &["x", "to_int"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_floating"), "TypeError"),
                check(p(1, "is_bool"), "TypeError"),
                crash(Cond::All(vec![p(0, "has_nan"), p(1, "is_true")]), "nan_to_int"),
            ],
        ),
        target(
            "clip",
            &["x", "lo", "hi"],
            vec![
                check(tensor(0), "TypeError"),
                check(Cond::All(vec![p(1, "is_number"), p(2, "is_number")]), "TypeError"),
            ],
        ),
        target(
            "conv_like",
            &["input", "filters"],
            vec![
                check(Cond::All(vec![tensor(0), tensor(1)]), "TypeError"),
                check(Cond::All(vec![p(0, "dtype_floating"), p(1, "dtype_floating")]), "TypeError"),
                check(
                    Cond::All(vec![pc(0, "rank_eq", &[int(4)]), pc(1, "rank_eq", &[int(4)])]),
                    "RankError",
                ),
                check(
                    any_k(|k| Cond::All(vec![pc(0, "dim_eq", &[int(3), int(k)]), pc(1, "dim_eq", &[int(2), int(k)])])),
                    "DimensionMismatch",
                ),
                crash(p(1, "has_zero_dim"), "empty_filter"),
            ],
        ),
        target(
            "gather",
            &["params", "index"],
            vec![
                check(tensor(0), "TypeError"),
                check(pc(0, "rank_gt", &[int(0)]), "ValueError"),
                check(type_is(1, "int"), "TypeError"),
                check(pc(1, "ge", &[int(0)]), "IndexError"),
                crash(
                    any_k(|k| Cond::All(vec![pc(0, "dim_eq", &[int(0), int(k)]), pc(1, "ge", &[int(k)])])),
                    "out_of_bounds",
                ),
            ],
        ),
        target(
            "log_softmax",
            &["x"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_floating"), "TypeError"),
                check(pc(0, "rank_gt", &[int(0)]), "ValueError"),
                crash(p(0, "has_nan"), "nan_softmax"),
            ],
        ),
        target(
            "matmul2",
            &["a", "b"],
            vec![
                check(Cond::All(vec![tensor(0), tensor(1)]), "TypeError"),
                check(
                    Cond::All(vec![pc(0, "rank_eq", &[int(2)]), pc(1, "rank_eq", &[int(2)])]),
                    "RankError",
                ),
                check(
                    any_k(|k| Cond::All(vec![pc(0, "dim_eq", &[int(1), int(k)]), pc(1, "dim_eq", &[int(0), int(k)])])),
                    "DimensionMismatch",
                ),
                crash(Cond::Any(vec![p(0, "has_zero_dim"), p(1, "has_zero_dim")]), "zero_extent"),
            ],
        ),
        target(
            "one_hot",
            &["indices", "depth"],
            vec![
                check(
                    Cond::Any(vec![Cond::All(vec![tensor(0), p(0, "dtype_integer")]), p(0, "is_int_sequence")]),
                    "TypeError",
                ),
                check(type_is(1, "int"), "TypeError"),
                check(pc(1, "gt", &[int(0)]), "ValueError"),
                crash(not(pc(0, "all_ge", &[int(0)])), "negative_index"),
            ],
        ),
        target(
            "pad",
            &["x", "paddings"],
            vec![
                check(tensor(0), "TypeError"),
                check(pc(0, "rank_eq", &[int(2)]), "RankError"),
                check(
                    Cond::All(vec![
                        p(1, "is_nested_sequence"),
                        pc(1, "rank_eq", &[int(2)]),
                        pc(1, "dim_eq", &[int(0), int(2)]),
                        pc(1, "dim_eq", &[int(1), int(2)]),
                    ]),
                    "ValueError",
                ),
                crash(pc(1, "any_eq", &[int(-1)]), "negative_pad"),
            ],
        ),
        target(
            "placeholder_like",
            &["x", "shape"],
            vec![
                check(tensor(0), "TypeError"),
                crash(p(0, "dtype_quantized"), "quantized_input"),
                check(Cond::Any(vec![p(1, "is_int_sequence"), type_is(1, "TensorShape")]), "ShapeError"),
            ],
        ),
        target(
            "positive_mean",
            &["x"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_floating"), "TypeError"),
                check(pc(0, "all_gt", &[int(0)]), "ValueRangeError"),
                crash(pc(0, "size_eq", &[int(0)]), "empty_mean"),
            ],
        ),
        target(
            "ragged_to_dense",
            &["rt"],
            vec![check(
                Cond::Any(vec![type_is(0, "RaggedTensor"), p(0, "is_ragged_sequence")]),
                "TypeError",
            )],
        ),
        target(
            "rank4_sum",
            &["x"],
            vec![check(tensor(0), "TypeError"), check(pc(0, "rank_eq", &[int(4)]), "RankError")],
        ),
        target(
            "safe_divide",
            &["x", "y"],
            vec![
                check(Cond::All(vec![p(0, "is_number"), p(1, "is_number")]), "TypeError"),
                crash(Cond::All(vec![type_is(1, "int"), pc(1, "eq", &[int(0)])]), "int_div_zero"),
            ],
        ),
        target(
            "set_seed",
            &["seed"],
            vec![check(type_is(0, "int"), "TypeError"), check(pc(0, "ge", &[int(0)]), "ValueError")],
        ),
        target(
            "sqrt_all",
            &["x"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(0, "dtype_floating"), "TypeError"),
                check(pc(0, "all_ge", &[int(0)]), "ValueError"),
            ],
        ),
        target(
            "squeeze",
            &["x", "axis"],
            vec![
                check(tensor(0), "TypeError"),
                check(type_is(1, "int"), "TypeError"),
                check(
                    Cond::All(vec![
                        pc(1, "ge", &[int(0)]),
                        any_k(|k| Cond::All(vec![pc(0, "rank_gt", &[int(k)]), pc(1, "eq", &[int(k)])])),
                    ]),
                    "AxisError",
                ),
                check(
                    any_k(|k| Cond::All(vec![pc(1, "eq", &[int(k)]), pc(0, "dim_eq", &[int(k), int(1)])])),
                    "ValueError",
                ),
            ],
        ),
        target(
            "string_join",
            &["items", "sep"],
            vec![
                check(p(0, "is_str_sequence"), "TypeError"),
                check(type_is(1, "str"), "TypeError"),
            ],
        ),
        target(
            "transpose",
            &["x", "perm"],
            vec![
                check(tensor(0), "TypeError"),
                check(p(1, "is_int_sequence"), "TypeError"),
                check(
                    any_k(|k| Cond::All(vec![pc(1, "len_eq", &[int(k)]), pc(0, "rank_eq", &[int(k)])])),
                    "ValueError",
                ),
            ],
        ),
        target(
            "unique",
            &["x"],
            vec![
                check(tensor(0), "TypeError"),
                check(pc(0, "rank_eq", &[int(1)]), "RankError"),
                crash(p(0, "dtype_bool"), "bool_unique"),
            ],
        ),
    ];
    all.sort_by(|a, b| a.name.cmp(&b.name));
    all
}

/// Predicted result of invoking a target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prediction {
    Valid,
    Invalid(String),
    Crash(String),
    SetupError,
}

/// Constructor-to-type mapping used when evaluating predicates on recipes.
pub fn eval_types() -> BTreeMap<String, String> {
    CatalogConfig::default().constructor_types
}

fn uses_unknown_constructor(v: &Value) -> bool {
    match v {
        Value::Recipe(r) => r.steps.iter().any(|s| {
            !CONSTRUCTORS.contains(&s.constructor.as_str())
                || s.args.iter().any(|a| match a {
                    catfuzz_core::RecipeArg::Value(v) => uses_unknown_constructor(v),
                    catfuzz_core::RecipeArg::Step(_) => false,
                })
        }),
        Value::Seq(items) => items.iter().any(uses_unknown_constructor),
        Value::Map(m) => m.values().any(uses_unknown_constructor),
        _ => false,
    }
}

pub fn predict(spec: &TargetSpec, args: &[Value], types: &BTreeMap<String, String>) -> Prediction {
    if args.len() != spec.arity() {
        return Prediction::Invalid("TypeError".into());
    }
    if args.iter().any(uses_unknown_constructor) {
        return Prediction::SetupError;
    }
    let ctx = EvalContext {
        constructor_types: types,
    };
    for step in &spec.steps {
        match step {
            Step::Check { cond, class } if !cond.holds(args, &ctx) => return Prediction::Invalid(class.clone()),
            Step::Crash { cond, id } if cond.holds(args, &ctx) => return Prediction::Crash(id.clone()),
            _ => {}
        }
    }
    Prediction::Valid
}

pub fn find(name: &str) -> Option<TargetSpec> {
    suite().into_iter().find(|t| t.name == name)
}
