//! Hand-built catalogs and databases whose properties are opaque labels.
//!
//! Useful for exercising the lattice and the learner without going through
//! real property evaluation.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::bitset::PropSet;
use crate::error::Error;
use crate::lattice::{build_categories, InputDatabase};
use crate::property::{Catalog, Fingerprint, Group, PropertyInstance};
use crate::value::Value;

/// A catalog whose instances are `X == k` for k in 1..=n, standing for
/// labels p1..pn. For n ≤ 9 label k has ordinal k-1.
pub fn label_catalog(n: i64) -> Catalog {
    let instances = (1..=n)
        .map(|k| PropertyInstance {
            template_id: "eq".to_string(),
            group: Group::Value,
            constants: vec![Value::Int(k)],
            ordinal: 0,
        })
        .collect();
    Catalog::from_instances(instances, BTreeMap::new()).expect("label catalog")
}

/// One corpus entry per set of ordinals; input `i` is `Value::Int(i)`.
pub fn labelled(catalog: &Catalog, sets: &[&[usize]]) -> Vec<(Value, Fingerprint)> {
    sets.iter()
        .enumerate()
        .map(|(i, props)| {
            let bits = PropSet::from_ordinals(catalog.len(), props.iter().copied());
            (
                Value::Int(i as i64),
                Fingerprint {
                    bits,
                    unknown: PropSet::empty(catalog.len()),
                    catalog_id: catalog.id(),
                },
            )
        })
        .collect()
}

/// Database over `n` labels with one input per listed set.
pub fn label_database(n: i64, sets: &[&[usize]]) -> Result<InputDatabase, Error> {
    let catalog = label_catalog(n);
    let corpus = labelled(&catalog, sets);
    build_categories(catalog, corpus)
}
