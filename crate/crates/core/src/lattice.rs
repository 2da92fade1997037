//! Input categories: the partition of fingerprinted inputs by satisfied
//! property set, and the strength order between categories.
//!
//! A category is weaker than another when its property set, closed under
//! the catalog's implication rules, is a strict subset of the other's.
//! Unknown fingerprint bits never take part in category identity.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use alloc::boxed::Box;

use once_cell::race::OnceBox;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitset::PropSet;
use crate::error::Error;
use crate::property::{Catalog, Fingerprint};
use crate::value::Value;

pub type InputId = usize;
pub type CategoryId = usize;

/// Category counts up to this size get an eagerly computed order DAG.
pub const DAG_PRECOMPUTE_LIMIT: usize = 5000;

#[derive(Clone, Debug, PartialEq)]
pub struct StoredInput {
    pub id: InputId,
    pub value: Value,
    pub fingerprint: Fingerprint,
    pub category: CategoryId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputCategory {
    pub id: CategoryId,
    pub props: PropSet,
    pub members: Vec<InputId>,
}

enum StrengthOrder {
    Dag(Vec<Vec<CategoryId>>),
    Lazy(Vec<OnceBox<Vec<CategoryId>>>),
}

/// The frozen category database of one campaign.
pub struct InputDatabase {
    catalog: Catalog,
    inputs: Vec<StoredInput>,
    categories: Vec<InputCategory>,
    index: BTreeMap<PropSet, CategoryId>,
    closed: Vec<PropSet>,
    order: StrengthOrder,
}

impl core::fmt::Debug for InputDatabase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("InputDatabase")
            .field("inputs", &self.inputs.len())
            .field("categories", &self.categories.len())
            .finish()
    }
}

/// `a` is weaker than `b` under the catalog's implication closure.
pub fn is_weaker_sets(catalog: &Catalog, a: &PropSet, b: &PropSet) -> bool {
    catalog.close(a).is_proper_subset(&catalog.close(b))
}

/// Groups fingerprinted inputs into categories. Category ids follow the
/// first appearance of each property set in input order.
pub fn build_categories(catalog: Catalog, corpus: Vec<(Value, Fingerprint)>) -> Result<InputDatabase, Error> {
    InputDatabase::build(catalog, corpus, DAG_PRECOMPUTE_LIMIT)
}

impl InputDatabase {
    pub fn build(catalog: Catalog, corpus: Vec<(Value, Fingerprint)>, dag_limit: usize) -> Result<Self, Error> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut inputs = Vec::with_capacity(corpus.len());
        let mut categories: Vec<InputCategory> = Vec::new();
        let mut index = BTreeMap::new();
        for (id, (value, fingerprint)) in corpus.into_iter().enumerate() {
            if fingerprint.catalog_id != catalog.id() || fingerprint.bits.width() != catalog.len() {
                return Err(Error::MixedCatalog);
            }
            let category = *index.entry(fingerprint.bits.clone()).or_insert_with(|| {
                categories.push(InputCategory {
                    id: categories.len(),
                    props: fingerprint.bits.clone(),
                    members: Vec::new(),
                });
                categories.len() - 1
            });
            categories[category].members.push(id);
            inputs.push(StoredInput {
                id,
                value,
                fingerprint,
                category,
            });
        }
        let closed: Vec<PropSet> = categories.iter().map(|c| catalog.close(&c.props)).collect();
        let order = if categories.len() <= dag_limit {
            StrengthOrder::Dag((0..categories.len()).map(|c| compute_stronger(&closed, c)).collect())
        } else {
            StrengthOrder::Lazy((0..categories.len()).map(|_| OnceBox::new()).collect())
        };
        Ok(InputDatabase {
            catalog,
            inputs,
            categories,
            index,
            closed,
            order,
        })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn inputs(&self) -> &[StoredInput] {
        &self.inputs
    }

    pub fn input(&self, id: InputId) -> &StoredInput {
        &self.inputs[id]
    }

    pub fn categories(&self) -> &[InputCategory] {
        &self.categories
    }

    pub fn category(&self, id: CategoryId) -> &InputCategory {
        &self.categories[id]
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn lookup(&self, props: &PropSet) -> Option<CategoryId> {
        self.index.get(props).copied()
    }

    /// Property set of a category after implication closure.
    pub fn closed_props(&self, id: CategoryId) -> &PropSet {
        &self.closed[id]
    }

    pub fn is_weaker(&self, a: CategoryId, b: CategoryId) -> bool {
        self.closed[a].is_proper_subset(&self.closed[b])
    }

    /// Categories strictly stronger than `c`, by ascending property count
    /// then id.
    pub fn stronger_set(&self, c: CategoryId) -> &[CategoryId] {
        match &self.order {
            StrengthOrder::Dag(dag) => &dag[c],
            StrengthOrder::Lazy(memo) => memo[c].get_or_init(|| Box::new(compute_stronger(&self.closed, c))),
        }
    }

    pub fn is_dag_precomputed(&self) -> bool {
        matches!(self.order, StrengthOrder::Dag(_))
    }

    /// Uniform choice of a member, reproducible for a given seed.
    pub fn sample_input(&self, c: CategoryId, rng_seed: u64) -> InputId {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        self.sample_member(c, &mut rng)
    }

    pub fn sample_member<R: Rng + ?Sized>(&self, c: CategoryId, rng: &mut R) -> InputId {
        let members = &self.categories[c].members;
        members[rng.random_range(0..members.len())]
    }
}

fn compute_stronger(closed: &[PropSet], c: CategoryId) -> Vec<CategoryId> {
    let mut out: Vec<CategoryId> = (0..closed.len())
        .filter(|&other| closed[c].is_proper_subset(&closed[other]))
        .collect();
    out.sort_by_key(|&s| (closed[s].len(), s));
    out
}
