//! Hypothesis scoring and search.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::{HistoryEntry, LearnerConfig, OutcomeKind};
use crate::error::Error;
use crate::lattice::{CategoryId, InputDatabase};

/// A disjunction of input categories.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    /// Sorted, duplicate-free.
    pub categories: Vec<CategoryId>,
    pub accepted: bool,
    pub precision: Ratio<u64>,
    pub recall: Ratio<u64>,
}

impl Hypothesis {
    pub fn new(mut categories: Vec<CategoryId>) -> Self {
        categories.sort_unstable();
        categories.dedup();
        Hypothesis {
            categories,
            accepted: false,
            precision: Ratio::from_integer(0),
            recall: Ratio::from_integer(0),
        }
    }

    /// A record in category `c` falls within the hypothesis when `c` is one
    /// of its categories or is stronger than one of them.
    pub fn covers(&self, db: &InputDatabase, c: CategoryId) -> bool {
        self.categories
            .iter()
            .any(|&m| m == c || db.is_weaker(m, c))
    }

    /// Every category in or stronger than the hypothesis, ascending.
    pub fn cover(&self, db: &InputDatabase) -> Vec<CategoryId> {
        let mut out: Vec<CategoryId> = self.categories.clone();
        for &m in &self.categories {
            out.extend_from_slice(db.stronger_set(m));
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Precision and recall of `h` against the valid/invalid records of a
/// history. Other outcomes are ignored.
///
/// Precision is 0 when nothing is covered; recall is 1 when no valid record
/// exists.
pub fn consistency(
    h: &Hypothesis,
    history: &[HistoryEntry],
    db: &InputDatabase,
) -> Result<(Ratio<u64>, Ratio<u64>), Error> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let (mut covered_valid, mut covered_all, mut valid) = (0u64, 0u64, 0u64);
    for entry in history {
        let is_valid = match entry.outcome {
            OutcomeKind::Valid => true,
            OutcomeKind::Invalid => false,
            _ => continue,
        };
        valid += is_valid as u64;
        if h.covers(db, entry.category) {
            covered_all += 1;
            covered_valid += is_valid as u64;
        }
    }
    let precision = if covered_all == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(covered_valid, covered_all)
    };
    let recall = if valid == 0 {
        Ratio::from_integer(1)
    } else {
        Ratio::new(covered_valid, valid)
    };
    Ok((precision, recall))
}

/// Scores `h` in place.
pub fn score(h: &mut Hypothesis, history: &[HistoryEntry], db: &InputDatabase) -> Result<(), Error> {
    let (p, r) = consistency(h, history, db)?;
    h.precision = p;
    h.recall = r;
    Ok(())
}

fn at_least(r: Ratio<u64>, threshold: f64) -> bool {
    *r.numer() as f64 >= threshold * *r.denom() as f64
}

/// Both metrics meet their thresholds.
pub fn accept(h: &Hypothesis, config: &LearnerConfig) -> bool {
    at_least(h.precision, config.p_threshold) && at_least(h.recall, config.r_threshold)
}

/// Objective value of a candidate subset: more covered valid records,
/// then fewer covered invalid records, then fewer categories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Objective {
    pub covered_valid: u64,
    pub covered_invalid: u64,
    pub size: usize,
}

impl Objective {
    /// `Less` means better.
    pub fn rank(&self, other: &Objective) -> Ordering {
        other
            .covered_valid
            .cmp(&self.covered_valid)
            .then(self.covered_invalid.cmp(&other.covered_invalid))
            .then(self.size.cmp(&other.size))
    }
}

/// Pre-aggregated coverage: for every candidate, which distinct record
/// categories it covers, with per-category valid/invalid counts.
struct CoverageTable {
    candidates: Vec<CategoryId>,
    /// `covers[i]`: indices into `counts` covered by candidate `i`.
    covers: Vec<Vec<bool>>,
    counts: Vec<(u64, u64)>,
}

impl CoverageTable {
    fn new(history: &[HistoryEntry], db: &InputDatabase) -> Self {
        let mut per_category: BTreeMap<CategoryId, (u64, u64)> = BTreeMap::new();
        for entry in history {
            let slot = per_category.entry(entry.category).or_default();
            match entry.outcome {
                OutcomeKind::Valid => slot.0 += 1,
                OutcomeKind::Invalid => slot.1 += 1,
                _ => {}
            }
        }
        per_category.retain(|_, (v, i)| *v + *i > 0);
        let candidates: Vec<CategoryId> = per_category
            .iter()
            .filter(|(_, (v, _))| *v > 0)
            .map(|(&c, _)| c)
            .collect();
        let record_categories: Vec<CategoryId> = per_category.keys().copied().collect();
        let covers = candidates
            .iter()
            .map(|&m| {
                record_categories
                    .iter()
                    .map(|&r| r == m || db.is_weaker(m, r))
                    .collect()
            })
            .collect();
        CoverageTable {
            candidates,
            covers,
            counts: per_category.into_values().collect(),
        }
    }

    fn objective(&self, subset: &[usize]) -> Objective {
        let (mut cv, mut ci) = (0, 0);
        for (r, &(v, i)) in self.counts.iter().enumerate() {
            if subset.iter().any(|&s| self.covers[s][r]) {
                cv += v;
                ci += i;
            }
        }
        Objective {
            covered_valid: cv,
            covered_invalid: ci,
            size: subset.len(),
        }
    }

    fn ids(&self, subset: &[usize]) -> Vec<CategoryId> {
        let mut ids: Vec<CategoryId> = subset.iter().map(|&s| self.candidates[s]).collect();
        ids.sort_unstable();
        ids
    }

    /// Total order over subsets: objective, then the sorted id vector.
    fn better(&self, a: &[usize], b: &[usize]) -> bool {
        match self.objective(a).rank(&self.objective(b)) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.ids(a) < self.ids(b),
        }
    }
}

/// Best hypothesis under the lexicographic objective, built from categories
/// with at least one valid record. Ties go to the lexicographically smallest
/// sorted id list.
///
/// Exhaustive over subsets of size `1..=max_disjuncts` when the candidate
/// count is at most `exact_cap`; greedy construction followed by swap and
/// drop refinement otherwise.
pub fn propose_hypothesis(
    history: &[HistoryEntry],
    db: &InputDatabase,
    config: &LearnerConfig,
) -> Result<Hypothesis, Error> {
    let table = CoverageTable::new(history, db);
    if table.candidates.is_empty() {
        return Err(Error::NoValidRecord);
    }
    let k = config.max_disjuncts.max(1).min(table.candidates.len());
    let best = if table.candidates.len() <= config.exact_cap {
        exhaustive(&table, k)
    } else {
        greedy(&table, k)
    };
    let mut h = Hypothesis::new(table.ids(&best));
    score(&mut h, history, db)?;
    Ok(h)
}

fn exhaustive(table: &CoverageTable, k: usize) -> Vec<usize> {
    let n = table.candidates.len();
    let mut best: Vec<usize> = alloc::vec![0];
    for size in 1..=k {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if table.better(&combo, &best) {
                best = combo.clone();
            }
            // Next combination in lexicographic order.
            let mut i = size;
            while i > 0 && combo[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    best
}

fn greedy(table: &CoverageTable, k: usize) -> Vec<usize> {
    let n = table.candidates.len();
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < k {
        let current = table.objective(&chosen);
        let mut pick: Option<Vec<usize>> = None;
        for c in (0..n).filter(|c| !chosen.contains(c)) {
            let mut trial = chosen.clone();
            trial.push(c);
            if table.objective(&trial).covered_valid <= current.covered_valid && !chosen.is_empty() {
                continue;
            }
            if pick.as_ref().is_none_or(|p| table.better(&trial, p)) {
                pick = Some(trial);
            }
        }
        match pick {
            Some(p) => chosen = p,
            None => break,
        }
    }
    // Local search: single swaps and drops until no move improves.
    loop {
        let mut improved = false;
        for pos in 0..chosen.len() {
            if chosen.len() > 1 {
                let mut dropped = chosen.clone();
                dropped.remove(pos);
                if table.better(&dropped, &chosen) {
                    chosen = dropped;
                    improved = true;
                    break;
                }
            }
            for c in (0..n).filter(|c| !chosen.contains(c)) {
                let mut swapped = chosen.clone();
                swapped[pos] = c;
                if table.better(&swapped, &chosen) {
                    chosen = swapped;
                    improved = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved && chosen.len() < k {
            for c in (0..n).filter(|c| !chosen.contains(c)) {
                let mut grown = chosen.clone();
                grown.push(c);
                if table.better(&grown, &chosen) {
                    chosen = grown;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    chosen
}
