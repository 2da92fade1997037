//! Hand-written implementations of the synthetic targets.
//!
//! These work on materialized [`Obj`] values and deliberately share no code
//! with the declarative specs in the parent module.

use super::objects::{Array, Obj};

/// A raised exception.
#[derive(Debug, PartialEq)]
pub struct Raise {
    pub class: &'static str,
    pub message: String,
}

/// What a target call did, short of returning normally.
#[derive(Debug, PartialEq)]
pub enum Fault {
    Raise(Raise),
    /// Planted abort with its id.
    Abort(&'static str),
}

type Outcome = Result<(), Fault>;

fn raise(class: &'static str, message: impl Into<String>) -> Outcome {
    Err(Fault::Raise(Raise {
        class,
        message: message.into(),
    }))
}

fn abort(id: &'static str) -> Outcome {
    Err(Fault::Abort(id))
}

fn array<'a>(o: &'a Obj, what: &str) -> Result<&'a Array, Fault> {
    match o {
        Obj::Array(a) => Ok(a),
        _ => Err(Fault::Raise(Raise {
            class: "TypeError",
            message: format!("{what} must be a tensor"),
        })),
    }
}

fn float_array<'a>(o: &'a Obj, what: &str) -> Result<&'a Array, Fault> {
    let a = array(o, what)?;
    if !a.is_float() {
        return Err(Fault::Raise(Raise {
            class: "TypeError",
            message: format!("{what} must be floating point, got {}", a.dtype),
        }));
    }
    Ok(a)
}

fn is_number(o: &Obj) -> bool {
    matches!(o, Obj::Int(_) | Obj::Float(_))
}

fn numeric_leaf(o: &Obj) -> Option<f64> {
    match o {
        Obj::Int(i) => Some(*i as f64),
        Obj::Float(f) => Some(*f),
        Obj::Bool(b) => Some(*b as u8 as f64),
        _ => None,
    }
}

pub const NAMES: [&str; 22] = [
    "adversarial_pair",
    "bincount",
    "boolean_mask",
    "cast",
    "clip",
    "conv_like",
    "gather",
    "log_softmax",
    "matmul2",
    "one_hot",
    "pad",
    "placeholder_like",
    "positive_mean",
    "ragged_to_dense",
    "rank4_sum",
    "safe_divide",
    "set_seed",
    "sqrt_all",
    "squeeze",
    "string_join",
    "transpose",
    "unique",
];

pub fn arity(name: &str) -> Option<usize> {
    Some(match name {
        "bincount" | "log_softmax" | "positive_mean" | "ragged_to_dense" | "rank4_sum" | "set_seed" | "sqrt_all"
        | "unique" => 1,
        "clip" => 3,
        n if NAMES.contains(&n) => 2,
        _ => return None,
    })
}

/// Calls a target. `None` for an unknown name.
pub fn call(name: &str, args: &[Obj]) -> Option<Outcome> {
    let want = arity(name)?;
    if args.len() != want {
        return Some(raise("TypeError", format!("{name} takes {want} arguments, got {}", args.len())));
    }
    Some(match name {
        "adversarial_pair" => adversarial_pair(&args[0], &args[1]),
        "bincount" => bincount(&args[0]),
        "boolean_mask" => boolean_mask(&args[0], &args[1]),
        "cast" => cast(&args[0], &args[1]),
        "clip" => clip(&args[0], &args[1], &args[2]),
        "conv_like" => conv_like(&args[0], &args[1]),
        "gather" => gather(&args[0], &args[1]),
        "log_softmax" => log_softmax(&args[0]),
        "matmul2" => matmul2(&args[0], &args[1]),
        "one_hot" => one_hot(&args[0], &args[1]),
        "pad" => pad(&args[0], &args[1]),
        "placeholder_like" => placeholder_like(&args[0], &args[1]),
        "positive_mean" => positive_mean(&args[0]),
        "ragged_to_dense" => ragged_to_dense(&args[0]),
        "rank4_sum" => rank4_sum(&args[0]),
        "safe_divide" => safe_divide(&args[0], &args[1]),
        "set_seed" => set_seed(&args[0]),
        "sqrt_all" => sqrt_all(&args[0]),
        "squeeze" => squeeze(&args[0], &args[1]),
        "string_join" => string_join(&args[0], &args[1]),
        "transpose" => transpose(&args[0], &args[1]),
        "unique" => unique(&args[0]),
        _ => return None,
    })
}

fn adversarial_pair(x: &Obj, key: &Obj) -> Outcome {
    let x = float_array(x, "x")?;
    let is_shape = match key {
        Obj::Shape(_) => true,
        Obj::List(items) if items.iter().all(|i| matches!(i, Obj::Int(_))) => false,
        _ => return raise("TypeError", "key must be a TensorShape or a list of int"),
    };
    if is_shape && x.rank() == 3 && x.has_nan() {
        return abort("nan_volume");
    }
    Ok(())
}

fn bincount(arr: &Obj) -> Outcome {
    let a = array(arr, "arr")?;
    if !a.is_int() {
        return raise("TypeError", format!("arr must be integer, got {}", a.dtype));
    }
    if a.rank() != 1 {
        return raise("ValueError", format!("arr must be 1-D, got rank {}", a.rank()));
    }
    if !a.all_above(0.0, true) {
        return raise("ValueError", "arr must be non-negative");
    }
    if a.count() == 0 {
        return abort("empty_bincount");
    }
    Ok(())
}

fn boolean_mask(x: &Obj, mask: &Obj) -> Outcome {
    array(x, "x")?;
    let m = array(mask, "mask")?;
    if m.dtype != "bool" {
        return raise("TypeError", format!("mask must be bool, got {}", m.dtype));
    }
    if m.shape.contains(&0) {
        return abort("empty_mask");
    }
    Ok(())
}

fn cast(x: &Obj, to_int: &Obj) -> Outcome {
    let a = float_array(x, "x")?;
    let Obj::Bool(to_int) = to_int else {
        return raise("TypeError", "to_int must be a bool");
    };
    if *to_int && a.has_nan() {
        return abort("nan_to_int");
    }
    Ok(())
}

fn clip(x: &Obj, lo: &Obj, hi: &Obj) -> Outcome {
    array(x, "x")?;
    if !is_number(lo) || !is_number(hi) {
        return raise("TypeError", "bounds must be numbers");
    }
    Ok(())
}

fn conv_like(input: &Obj, filters: &Obj) -> Outcome {
    array(input, "input")?;
    array(filters, "filters")?;
    let i = float_array(input, "input")?;
    let f = float_array(filters, "filters")?;
    if i.rank() != 4 || f.rank() != 4 {
        return raise("RankError", "input and filters must be 4-D");
    }
    if i.shape[3] != f.shape[2] {
        return raise(
            "DimensionMismatch",
            format!("input depth {} does not match filter depth {}", i.shape[3], f.shape[2]),
        );
    }
    if f.shape.contains(&0) {
        return abort("empty_filter");
    }
    Ok(())
}

fn gather(params: &Obj, index: &Obj) -> Outcome {
    let p = array(params, "params")?;
    if p.rank() == 0 {
        return raise("ValueError", "params must have rank >= 1");
    }
    let Obj::Int(i) = index else {
        return raise("TypeError", "index must be an int");
    };
    if *i < 0 {
        return raise("IndexError", format!("negative index {i}"));
    }
    if *i as u64 >= p.shape[0] {
        return abort("out_of_bounds");
    }
    Ok(())
}

fn log_softmax(x: &Obj) -> Outcome {
    let a = float_array(x, "x")?;
    if a.rank() == 0 {
        return raise("ValueError", "x must have rank >= 1");
    }
    if a.has_nan() {
        return abort("nan_softmax");
    }
    Ok(())
}

fn matmul2(a: &Obj, b: &Obj) -> Outcome {
    let a = array(a, "a")?;
    let b = array(b, "b")?;
    if a.rank() != 2 || b.rank() != 2 {
        return raise("RankError", format!("expected 2-D operands, got {} and {}", a.rank(), b.rank()));
    }
    if a.shape[1] != b.shape[0] {
        return raise(
            "DimensionMismatch",
            format!("inner dimensions {} and {} differ", a.shape[1], b.shape[0]),
        );
    }
    if a.shape.contains(&0) || b.shape.contains(&0) {
        return abort("zero_extent");
    }
    Ok(())
}

fn one_hot(indices: &Obj, depth: &Obj) -> Outcome {
    let min = match indices {
        Obj::Array(a) if a.is_int() => {
            if a.all_above(0.0, true) {
                None
            } else {
                Some(-1.0)
            }
        }
        Obj::List(items) if items.iter().all(|i| matches!(i, Obj::Int(_))) => items
            .iter()
            .filter_map(numeric_leaf)
            .reduce(f64::min),
        _ => return raise("TypeError", "indices must be integers"),
    };
    let Obj::Int(d) = depth else {
        return raise("TypeError", "depth must be an int");
    };
    if *d <= 0 {
        return raise("ValueError", format!("depth must be positive, got {d}"));
    }
    if min.is_some_and(|m| m < 0.0) {
        return abort("negative_index");
    }
    Ok(())
}

fn pad(x: &Obj, paddings: &Obj) -> Outcome {
    let a = array(x, "x")?;
    if a.rank() != 2 {
        return raise("RankError", format!("x must be 2-D, got rank {}", a.rank()));
    }
    let rows: Option<Vec<Vec<f64>>> = match paddings {
        Obj::List(rows) if rows.len() == 2 => rows
            .iter()
            .map(|r| match r {
                Obj::List(pair) if pair.len() == 2 => pair.iter().map(numeric_leaf).collect(),
                _ => None,
            })
            .collect(),
        _ => None,
    };
    let Some(rows) = rows else {
        return raise("ValueError", "paddings must be a 2x2 nested list");
    };
    if rows.iter().flatten().any(|&v| v == -1.0) {
        return abort("negative_pad");
    }
    Ok(())
}

fn placeholder_like(x: &Obj, shape: &Obj) -> Outcome {
    let a = array(x, "x")?;
    if a.dtype.starts_with('q') {
        return abort("quantized_input");
    }
    match shape {
        Obj::Shape(_) => Ok(()),
        Obj::List(items) if items.iter().all(|i| matches!(i, Obj::Int(_))) => Ok(()),
        _ => raise("ShapeError", "shape must be a TensorShape or a list of int"),
    }
}

fn positive_mean(x: &Obj) -> Outcome {
    let a = float_array(x, "x")?;
    if !a.all_above(0.0, false) {
        return raise("ValueRangeError", "all elements must be positive");
    }
    if a.count() == 0 {
        return abort("empty_mean");
    }
    Ok(())
}

fn ragged_to_dense(rt: &Obj) -> Outcome {
    match rt {
        Obj::Ragged(_) => Ok(()),
        Obj::List(rows) => {
            let lens: Option<Vec<usize>> = rows
                .iter()
                .map(|r| match r {
                    Obj::List(xs) => Some(xs.len()),
                    _ => None,
                })
                .collect();
            match lens {
                Some(l) if l.windows(2).any(|w| w[0] != w[1]) => Ok(()),
                _ => raise("TypeError", "expected a ragged list"),
            }
        }
        _ => raise("TypeError", "expected a ragged tensor"),
    }
}

fn rank4_sum(x: &Obj) -> Outcome {
    let a = array(x, "x")?;
    if a.rank() != 4 {
        return raise("RankError", format!("expected rank 4, got {}", a.rank()));
    }
    Ok(())
}

fn safe_divide(x: &Obj, y: &Obj) -> Outcome {
    if !is_number(x) || !is_number(y) {
        return raise("TypeError", "operands must be numbers");
    }
    if *y == Obj::Int(0) {
        return abort("int_div_zero");
    }
    Ok(())
}

fn set_seed(seed: &Obj) -> Outcome {
    match seed {
        Obj::Int(s) if *s >= 0 => Ok(()),
        Obj::Int(s) => raise("ValueError", format!("seed must be non-negative, got {s}")),
        _ => raise("TypeError", "seed must be an int"),
    }
}

fn sqrt_all(x: &Obj) -> Outcome {
    let a = float_array(x, "x")?;
    if !a.all_above(0.0, true) {
        return raise("ValueError", "negative input to sqrt");
    }
    Ok(())
}

fn squeeze(x: &Obj, axis: &Obj) -> Outcome {
    let a = array(x, "x")?;
    let Obj::Int(axis) = axis else {
        return raise("TypeError", "axis must be an int");
    };
    if *axis < 0 || *axis as usize >= a.rank() {
        return raise("AxisError", format!("axis {axis} out of range for rank {}", a.rank()));
    }
    if a.shape[*axis as usize] != 1 {
        return raise("ValueError", format!("cannot squeeze dimension {axis} of extent {}", a.shape[*axis as usize]));
    }
    Ok(())
}

fn string_join(items: &Obj, sep: &Obj) -> Outcome {
    match items {
        Obj::List(xs) if !xs.is_empty() && xs.iter().all(|x| matches!(x, Obj::Str(_))) => {}
        _ => return raise("TypeError", "items must be a non-empty list of str"),
    }
    if !matches!(sep, Obj::Str(_)) {
        return raise("TypeError", "sep must be a str");
    }
    Ok(())
}

fn transpose(x: &Obj, perm: &Obj) -> Outcome {
    let a = array(x, "x")?;
    let Obj::List(items) = perm else {
        return raise("TypeError", "perm must be a list of int");
    };
    if !items.iter().all(|i| matches!(i, Obj::Int(_))) {
        return raise("TypeError", "perm must be a list of int");
    }
    if items.len() != a.rank() {
        return raise("ValueError", format!("perm has {} entries for rank {}", items.len(), a.rank()));
    }
    Ok(())
}

fn unique(x: &Obj) -> Outcome {
    let a = array(x, "x")?;
    if a.rank() != 1 {
        return raise("RankError", format!("expected rank 1, got {}", a.rank()));
    }
    if a.dtype == "bool" {
        return abort("bool_unique");
    }
    Ok(())
}
