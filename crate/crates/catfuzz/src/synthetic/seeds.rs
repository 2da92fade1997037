//! Seed corpus for the synthetic suite.
//!
//! The corpus mimics what tracing a library's test suite yields: many
//! near-duplicate inputs of a few common kinds and a long tail of rare
//! ones (empty, quantized, NaN-bearing, recipe-built). Float elements are
//! drawn from continuous ranges, so they never repeat often enough to enter
//! the constant pool and near-duplicates share a category.

use catfuzz_core::value::RecipeArg;
use catfuzz_core::{Recipe, RecipeStep, Scalar, Tensor, Value, ValueStats};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SIZE: usize = 200;
pub const CORPUS_SEED: u64 = 0x5eed_c0de;

const NONNEG_INT: [i64; 3] = [0, 1, 3];

#[derive(Clone, Copy)]
enum Range {
    /// Strictly between 2 and 3.
    Positive,
    /// Alternating signs, magnitudes below 1.
    Signed,
}

fn element(rng: &mut ChaCha8Rng, range: Range, i: u64) -> f64 {
    let m: f64 = rng.random_range(0.01..0.99);
    match range {
        Range::Positive => 2.0 + m,
        Range::Signed if i % 2 == 0 => -m,
        Range::Signed => m,
    }
}

fn floats(rng: &mut ChaCha8Rng, dtype: &str, shape: &[u64], range: Range) -> Value {
    let n: u64 = shape.iter().product();
    let data = (0..n).map(|i| Scalar::Float(element(rng, range, i))).collect();
    Value::Tensor(Tensor::new(dtype, shape.to_vec(), data).expect("consistent shape"))
}

fn ints(rng: &mut ChaCha8Rng, dtype: &str, shape: &[u64], palette: &[i64]) -> Value {
    let n: u64 = shape.iter().product();
    let data = (0..n).map(|_| Scalar::Int(*palette.choose(rng).expect("palette"))).collect();
    Value::Tensor(Tensor::new(dtype, shape.to_vec(), data).expect("consistent shape"))
}

fn bools(rng: &mut ChaCha8Rng, shape: &[u64]) -> Value {
    let n: u64 = shape.iter().product();
    let data = (0..n).map(|_| Scalar::Bool(rng.random())).collect();
    Value::Tensor(Tensor::new("bool", shape.to_vec(), data).expect("consistent shape"))
}

/// A float tensor with one NaN at a random position.
fn with_nan(rng: &mut ChaCha8Rng, shape: &[u64]) -> Value {
    let n: u64 = shape.iter().product();
    let hole = rng.random_range(0..n);
    let data = (0..n)
        .map(|i| {
            let x = element(rng, Range::Positive, i);
            Scalar::Float(if i == hole { f64::NAN } else { x })
        })
        .collect();
    Value::Tensor(Tensor::new("float32", shape.to_vec(), data).expect("consistent shape"))
}

fn int_seq(xs: &[i64]) -> Value {
    Value::Seq(xs.iter().map(|&x| Value::Int(x)).collect())
}

fn recipe(constructor: &str, arg: Value) -> Value {
    Value::Recipe(Recipe {
        steps: vec![RecipeStep {
            constructor: constructor.into(),
            args: vec![RecipeArg::Value(arg)],
        }],
        result: 0,
    })
}

fn large_positive(rng: &mut ChaCha8Rng) -> Value {
    let lo = element(rng, Range::Positive, 0);
    Value::Tensor(Tensor::stats_only(
        "float32",
        vec![40, 40],
        ValueStats {
            min: Some(lo),
            max: Some(lo.max(2.98)),
            has_nan: false,
            has_inf: false,
            all_positive: true,
            all_nonnegative: true,
            element_count: 1600,
        },
    ))
}

type Maker = fn(&mut ChaCha8Rng) -> Value;

/// (copies, generator) per seed kind.
fn kinds() -> Vec<(usize, Maker)> {
    vec![
        // scalars
        (4, |_| Value::Int(0)),
        (6, |_| Value::Int(1)),
        (6, |_| Value::Int(2)),
        (3, |_| Value::Int(3)),
        (3, |_| Value::Int(-1)),
        (2, |_| Value::Int(8)),
        (3, |_| Value::Float(0.5)),
        (2, |_| Value::Float(-2.5)),
        (2, |_| Value::Float(0.0)),
        (3, |_| Value::Bool(true)),
        (3, |_| Value::Bool(false)),
        (3, |_| Value::None),
        (2, |_| Value::Str("SAME".into())),
        (2, |_| Value::Str("x".into())),
        // sequences
        (3, |_| int_seq(&[2])),
        (3, |_| int_seq(&[4])),
        (4, |_| int_seq(&[2, 2])),
        (2, |_| int_seq(&[1, 2, 3, 4])),
        (2, |_| int_seq(&[])),
        (2, |_| int_seq(&[-1, 2])),
        (2, |_| Value::Seq(vec![Value::Float(0.5), Value::Float(1.5)])),
        (3, |_| Value::Seq(vec![Value::Str("a".into()), Value::Str("b".into())])),
        (3, |_| Value::Seq(vec![int_seq(&[0, 1]), int_seq(&[1, 0])])),
        (2, |_| Value::Seq(vec![int_seq(&[-1, 0]), int_seq(&[0, 1])])),
        (2, |_| Value::Seq(vec![int_seq(&[1, 2, 3]), int_seq(&[4, 5, 6])])),
        (2, |_| Value::Seq(vec![int_seq(&[1, 1, 1, 1]), int_seq(&[2])])),
        (2, |_| Value::Map([("a".to_string(), Value::Int(1))].into_iter().collect())),
        // float tensors
        (16, |r| floats(r, "float32", &[2, 2], Range::Positive)),
        (10, |r| floats(r, "float32", &[3], Range::Positive)),
        (8, |r| floats(r, "float32", &[2, 3], Range::Positive)),
        (6, |r| floats(r, "float32", &[3, 2], Range::Positive)),
        (6, |r| floats(r, "float32", &[1, 2, 2, 1], Range::Positive)),
        (4, |r| floats(r, "float32", &[2, 2, 1, 1], Range::Positive)),
        (4, |r| floats(r, "float32", &[2, 1, 3], Range::Positive)),
        (8, |r| floats(r, "float32", &[2, 2], Range::Signed)),
        (6, |r| floats(r, "float32", &[4], Range::Signed)),
        (3, |r| floats(r, "float64", &[2], Range::Positive)),
        (2, |r| floats(r, "float32", &[], Range::Positive)),
        (2, |r| with_nan(r, &[2, 2])),
        (2, |r| with_nan(r, &[2, 2, 2])),
        (2, |r| floats(r, "float32", &[0, 2], Range::Positive)),
        (2, |r| floats(r, "float32", &[2, 0], Range::Positive)),
        (2, |r| floats(r, "float32", &[0], Range::Positive)),
        (2, |r| floats(r, "float32", &[1, 1, 1, 0], Range::Positive)),
        (2, large_positive),
        // integer, bool and quantized tensors
        (8, |r| ints(r, "int32", &[3], &NONNEG_INT)),
        (3, |r| ints(r, "int32", &[3], &[-2, 1])),
        (2, |r| ints(r, "int32", &[0], &[0])),
        (4, |r| ints(r, "int64", &[2, 2], &NONNEG_INT)),
        (3, |r| bools(r, &[2, 2])),
        (3, |r| bools(r, &[3])),
        (2, |r| bools(r, &[0])),
        (2, |r| ints(r, "qint32", &[2, 2], &[1, 2])),
        // recipes
        (3, |_| recipe("tensor_shape", int_seq(&[2, 2]))),
        (2, |_| recipe("tensor_shape", int_seq(&[4]))),
        (3, |_| {
            recipe(
                "ragged_constant",
                Value::Seq(vec![int_seq(&[1, 1, 1, 1]), int_seq(&[2])]),
            )
        }),
        (2, |_| recipe("sparse_from_dense", int_seq(&[1, 0]))),
    ]
}

/// The shipped 200-seed corpus. Deterministic.
pub fn corpus() -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    for (copies, make) in kinds() {
        for _ in 0..copies {
            out.push(make(&mut rng));
        }
    }
    // Pad with the most common kind.
    while out.len() < CORPUS_SIZE {
        out.push(floats(&mut rng, "float32", &[2, 2], Range::Positive));
    }
    out.truncate(CORPUS_SIZE);
    out
}
