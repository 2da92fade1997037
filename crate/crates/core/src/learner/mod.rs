//! Per-parameter active learning of input constraints.
//!
//! Each `(function, parameter)` pair owns a [`LearnerState`] that moves
//! through three phases: random category selection until the first valid
//! outcome, hypothesis inference, and valid-input generation once a
//! hypothesis is accepted. The campaign asks for a query with
//! [`LearnerState::next_query`], executes it, and feeds the outcome back
//! through [`LearnerState::update`].

mod hypothesis;

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lattice::{CategoryId, InputDatabase};

pub use hypothesis::{accept, consistency, propose_hypothesis, score, Hypothesis, Objective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeKind {
    Valid,
    Invalid,
    Crash,
    Timeout,
    /// Argument reconstruction failed before the target was called.
    SetupError,
}

impl OutcomeKind {
    pub fn name(self) -> &'static str {
        match self {
            OutcomeKind::Valid => "valid",
            OutcomeKind::Invalid => "invalid",
            OutcomeKind::Crash => "crash",
            OutcomeKind::Timeout => "timeout",
            OutcomeKind::SetupError => "setup-error",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Random,
    Inference,
    ValidGeneration,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Random => "random",
            Phase::Inference => "inference",
            Phase::ValidGeneration => "valid-generation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    ExpectValid,
    ExpectInvalid,
    Exploratory,
}

impl Polarity {
    pub fn name(self) -> &'static str {
        match self {
            Polarity::ExpectValid => "expect-valid",
            Polarity::ExpectInvalid => "expect-invalid",
            Polarity::Exploratory => "exploratory",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub category: CategoryId,
    pub polarity: Polarity,
    /// The hypothesis category this query was derived from.
    pub provenance: Option<CategoryId>,
}

impl Query {
    fn exploratory(category: CategoryId) -> Self {
        Query {
            category,
            polarity: Polarity::Exploratory,
            provenance: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub case_id: u64,
    pub category: CategoryId,
    pub polarity: Polarity,
    pub outcome: OutcomeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub p_threshold: f64,
    pub r_threshold: f64,
    pub max_disjuncts: usize,
    /// Exhaustive hypothesis search up to this many candidate categories.
    pub exact_cap: usize,
    /// Inference queries per parameter before giving up.
    pub infer_budget: u32,
    pub no_repeat_window: usize,
    /// Queries generated from one hypothesis before it is judged.
    pub queries_per_hypothesis: usize,
    /// Valid + invalid records required before a hypothesis may be accepted.
    pub min_evidence: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            p_threshold: 0.25,
            r_threshold: 0.25,
            max_disjuncts: 4,
            exact_cap: 12,
            infer_budget: 200,
            no_repeat_window: 8,
            queries_per_hypothesis: 8,
            min_evidence: 4,
        }
    }
}

/// What an update changed, for logging.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UpdateEffect {
    pub entered: Option<Phase>,
    pub accepted: Option<Vec<CategoryId>>,
    pub inference_failed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub function: String,
    pub parameter: usize,
    pub phase: Phase,
    pub inference_failed: bool,
    pub history: Vec<HistoryEntry>,
    pub hypothesis: Option<Hypothesis>,
    pub pending: VecDeque<Query>,
    recent: VecDeque<CategoryId>,
    inference_queries: u32,
    /// History index of the record that started inference.
    inference_from: usize,
}

impl LearnerState {
    pub fn new(function: impl Into<String>, parameter: usize) -> Self {
        LearnerState {
            function: function.into(),
            parameter,
            phase: Phase::Random,
            inference_failed: false,
            history: Vec::new(),
            hypothesis: None,
            pending: VecDeque::new(),
            recent: VecDeque::new(),
            inference_queries: 0,
            inference_from: 0,
        }
    }

    pub fn inference_queries(&self) -> u32 {
        self.inference_queries
    }

    /// Valid + invalid records in the history.
    pub fn evidence(&self) -> usize {
        self.history
            .iter()
            .filter(|e| matches!(e.outcome, OutcomeKind::Valid | OutcomeKind::Invalid))
            .count()
    }

    /// Next category to test for this parameter.
    pub fn next_query<R: Rng + ?Sized>(&mut self, db: &InputDatabase, config: &LearnerConfig, rng: &mut R) -> Query {
        let query = match self.phase {
            Phase::Random => self.explore(db, config, rng),
            Phase::Inference if self.inference_failed => self.explore(db, config, rng),
            Phase::Inference => {
                let window = self.window(config, db.category_count());
                loop {
                    match self.pending.pop_front() {
                        Some(q) if self.recent.iter().rev().take(window).any(|&c| c == q.category) => continue,
                        Some(q) => break q,
                        None => break self.explore(db, config, rng),
                    }
                }
            }
            Phase::ValidGeneration => {
                let h = self.hypothesis.as_ref().expect("valid generation has a hypothesis");
                let cover = h.cover(db);
                let category = self.pick(&cover, config, rng);
                let provenance = h.categories.iter().copied().find(|&m| m == category || db.is_weaker(m, category));
                Query {
                    category,
                    polarity: Polarity::ExpectValid,
                    provenance,
                }
            }
        };
        self.recent.push_back(query.category);
        while self.recent.len() > config.no_repeat_window.max(1) {
            self.recent.pop_front();
        }
        query
    }

    fn explore<R: Rng + ?Sized>(&self, db: &InputDatabase, config: &LearnerConfig, rng: &mut R) -> Query {
        let all: Vec<CategoryId> = (0..db.category_count()).collect();
        Query::exploratory(self.pick(&all, config, rng))
    }

    /// The repeat window shrinks when fewer alternatives exist than it spans.
    fn window(&self, config: &LearnerConfig, choices: usize) -> usize {
        config.no_repeat_window.min(choices.saturating_sub(1))
    }

    fn pick<R: Rng + ?Sized>(&self, candidates: &[CategoryId], config: &LearnerConfig, rng: &mut R) -> CategoryId {
        let window = self.window(config, candidates.len());
        let recent: Vec<CategoryId> = self.recent.iter().rev().take(window).copied().collect();
        let allowed: Vec<CategoryId> = candidates
            .iter()
            .copied()
            .filter(|c| !recent.contains(c))
            .collect();
        let pool = if allowed.is_empty() { candidates } else { &allowed };
        pool[rng.random_range(0..pool.len())]
    }

    /// Records an outcome for a query previously returned by `next_query`.
    pub fn update(
        &mut self,
        db: &InputDatabase,
        config: &LearnerConfig,
        case_id: u64,
        query: &Query,
        outcome: OutcomeKind,
    ) -> UpdateEffect {
        self.history.push(HistoryEntry {
            case_id,
            category: query.category,
            polarity: query.polarity,
            outcome,
        });
        let mut effect = UpdateEffect::default();
        match self.phase {
            Phase::Random => {
                if outcome == OutcomeKind::Valid {
                    self.phase = Phase::Inference;
                    self.inference_from = self.history.len() - 1;
                    effect.entered = Some(Phase::Inference);
                    self.refresh(db, config);
                }
            }
            Phase::Inference if !self.inference_failed => {
                self.inference_queries += 1;
                if matches!(outcome, OutcomeKind::Valid | OutcomeKind::Invalid) {
                    self.refresh(db, config);
                }
                let exhausted = self.inference_queries >= config.infer_budget;
                if self.pending.is_empty() || exhausted {
                    self.judge(db, config, exhausted, &mut effect);
                }
                if self.phase == Phase::Inference && exhausted {
                    self.inference_failed = true;
                    self.pending.clear();
                    effect.inference_failed = true;
                }
            }
            Phase::Inference | Phase::ValidGeneration => {}
        }
        effect
    }

    /// Re-proposes the best hypothesis; a changed hypothesis gets a fresh
    /// query batch.
    fn refresh(&mut self, db: &InputDatabase, config: &LearnerConfig) {
        let Ok(proposed) = propose_hypothesis(&self.history, db, config) else {
            return;
        };
        let changed = self
            .hypothesis
            .as_ref()
            .is_none_or(|h| h.categories != proposed.categories);
        self.hypothesis = Some(proposed);
        if changed {
            self.pending = self.build_queries(db, config);
        }
    }

    /// Called once the current batch is drained. While untested categories
    /// remain to query, the hypothesis is not judged yet; once none remain,
    /// or the budget is spent, it is accepted if it meets the thresholds.
    fn judge(&mut self, db: &InputDatabase, config: &LearnerConfig, exhausted: bool, effect: &mut UpdateEffect) {
        if !exhausted {
            let more = self.build_queries(db, config);
            if !more.is_empty() {
                self.pending = more;
                return;
            }
        }
        let evidence = self.evidence();
        let Some(h) = self.hypothesis.as_mut() else { return };
        if evidence >= config.min_evidence && accept(h, config) {
            h.accepted = true;
            self.phase = Phase::ValidGeneration;
            self.pending.clear();
            effect.entered = Some(Phase::ValidGeneration);
            effect.accepted = Some(h.categories.clone());
        }
    }

    /// Interleaves expect-valid queries (untested categories in or stronger
    /// than the hypothesis, by ascending id) with expect-invalid ones
    /// (untested near misses, closest first).
    pub fn build_queries(&self, db: &InputDatabase, config: &LearnerConfig) -> VecDeque<Query> {
        let Some(h) = &self.hypothesis else {
            return VecDeque::new();
        };
        // Random-phase records ran beside arbitrary partner arguments, so
        // only records from inference onwards count as tested.
        let tested = |c: CategoryId| self.history[self.inference_from..].iter().any(|e| e.category == c);
        let expect_valid: Vec<Query> = h
            .cover(db)
            .into_iter()
            .filter(|&c| !tested(c))
            .map(|c| Query {
                category: c,
                polarity: Polarity::ExpectValid,
                provenance: h.categories.iter().copied().find(|&m| m == c || db.is_weaker(m, c)),
            })
            .collect();
        let expect_invalid: Vec<Query> = near_misses(h, db)
            .into_iter()
            .filter(|(c, _)| !tested(*c))
            .map(|(c, d)| Query {
                category: c,
                polarity: Polarity::ExpectInvalid,
                provenance: Some(d),
            })
            .collect();
        let mut out = VecDeque::new();
        let (mut v, mut i) = (expect_valid.into_iter(), expect_invalid.into_iter());
        while out.len() < config.queries_per_hypothesis {
            match (v.next(), i.next()) {
                (None, None) => break,
                (a, b) => {
                    out.extend(a);
                    if out.len() < config.queries_per_hypothesis {
                        out.extend(b);
                    }
                }
            }
        }
        out
    }
}

/// Categories outside the hypothesis, each paired with the disjunct it
/// lacks the fewest (closed) properties of. Ordered by that count, then by
/// id, so categories one property short of a disjunct come first.
pub fn near_misses(h: &Hypothesis, db: &InputDatabase) -> Vec<(CategoryId, CategoryId)> {
    let mut out: Vec<(usize, CategoryId, CategoryId)> = (0..db.category_count())
        .filter(|&c| !h.covers(db, c))
        .filter_map(|c| {
            h.categories
                .iter()
                .map(|&d| (db.closed_props(d).difference_len(db.closed_props(c)), d))
                .min()
                .map(|(missing, d)| (missing, c, d))
        })
        .collect();
    out.sort_unstable();
    out.into_iter().map(|(_, c, d)| (c, d)).collect()
}

#[cfg(test)]
mod tests;
