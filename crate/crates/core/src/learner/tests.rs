use super::*;
use crate::fixtures::label_database;
use alloc::vec;
use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn entry(case_id: u64, category: CategoryId, outcome: OutcomeKind) -> HistoryEntry {
    HistoryEntry {
        case_id,
        category,
        polarity: Polarity::Exploratory,
        outcome,
    }
}

fn history(items: &[(CategoryId, OutcomeKind)]) -> Vec<HistoryEntry> {
    items.iter().enumerate().map(|(i, &(c, o))| entry(i as u64, c, o)).collect()
}

/// Four unrelated categories: {p1}, {p2}, {p3}, {p4}.
fn flat_db() -> InputDatabase {
    label_database(4, &[&[0], &[1], &[2], &[3]]).unwrap()
}

use OutcomeKind::{Crash, Invalid, Timeout, Valid};

#[test]
fn three_quarters_each() {
    let db = flat_db();
    // h = {0}: 3 valid + 1 invalid in category 0; 1 valid + 3 invalid outside.
    let hist = history(&[
        (0, Valid),
        (0, Valid),
        (0, Valid),
        (0, Invalid),
        (1, Valid),
        (1, Invalid),
        (2, Invalid),
        (3, Invalid),
    ]);
    let (p, r) = consistency(&Hypothesis::new(vec![0]), &hist, &db).unwrap();
    assert_eq!((p, r), (Ratio::new(3, 4), Ratio::new(3, 4)));
}

#[test]
fn perfect_consistency() {
    let db = flat_db();
    let hist = history(&[(0, Valid), (1, Valid), (2, Invalid), (3, Invalid)]);
    let (p, r) = consistency(&Hypothesis::new(vec![0, 1]), &hist, &db).unwrap();
    assert_eq!((p, r), (Ratio::from_integer(1), Ratio::from_integer(1)));
}

#[test]
fn half_and_quarter() {
    let db = flat_db();
    let mut items = vec![(0, Valid), (0, Valid), (0, Invalid), (0, Invalid)];
    items.extend([(1, Valid); 6]);
    items.push((2, Invalid));
    let (p, r) = consistency(&Hypothesis::new(vec![0]), &history(&items), &db).unwrap();
    assert_eq!((p, r), (Ratio::new(1, 2), Ratio::new(1, 4)));
}

#[test]
fn uncovered_precision_is_zero_and_empty_history_errors() {
    let db = flat_db();
    let hist = history(&[(1, Valid)]);
    let (p, r) = consistency(&Hypothesis::new(vec![0]), &hist, &db).unwrap();
    assert_eq!((p, r), (Ratio::from_integer(0), Ratio::from_integer(0)));
    let hist = history(&[(1, Invalid)]);
    let (_, r) = consistency(&Hypothesis::new(vec![0]), &hist, &db).unwrap();
    assert_eq!(r, Ratio::from_integer(1));
    assert!(consistency(&Hypothesis::new(vec![0]), &[], &db).is_err());
}

#[test]
fn crashes_and_timeouts_do_not_move_metrics() {
    let db = flat_db();
    let h = Hypothesis::new(vec![0]);
    let mut hist = history(&[(0, Valid), (1, Invalid), (0, Invalid)]);
    let before = consistency(&h, &hist, &db).unwrap();
    hist.push(entry(10, 0, Crash));
    hist.push(entry(11, 1, Timeout));
    hist.push(entry(12, 0, OutcomeKind::SetupError));
    assert_eq!(consistency(&h, &hist, &db).unwrap(), before);
}

#[test]
fn stronger_records_are_covered_weaker_ones_are_not() {
    // 0 = {p1}, 1 = {p1,p2} (stronger), 2 = {} (weaker)
    let db = label_database(2, &[&[0], &[0, 1], &[]]).unwrap();
    let hist = history(&[(1, Valid), (2, Valid)]);
    let (p, r) = consistency(&Hypothesis::new(vec![0]), &hist, &db).unwrap();
    assert_eq!((p, r), (Ratio::from_integer(1), Ratio::new(1, 2)));
}

fn scored(p: (u64, u64), r: (u64, u64)) -> Hypothesis {
    let mut h = Hypothesis::new(vec![0]);
    h.precision = Ratio::new(p.0, p.1);
    h.recall = Ratio::new(r.0, r.1);
    h
}

#[test]
fn acceptance_thresholds() {
    let config = LearnerConfig::default();
    assert!(accept(&scored((30, 100), (26, 100)), &config));
    assert!(!accept(&scored((24, 100), (90, 100)), &config));
    assert!(accept(&scored((1, 4), (1, 4)), &config));
    for t in [0.0, 0.25, 0.5, 0.99, 1.0] {
        let c = LearnerConfig {
            p_threshold: t,
            r_threshold: t,
            ..LearnerConfig::default()
        };
        assert!(accept(&scored((1, 1), (1, 1)), &c));
    }
}

#[test]
fn single_valid_record_yields_its_category() {
    let db = flat_db();
    let hist = history(&[(2, Valid), (0, Invalid), (1, Crash)]);
    let h = propose_hypothesis(&hist, &db, &LearnerConfig::default()).unwrap();
    assert_eq!(h.categories, vec![2]);
    let none = history(&[(0, Invalid)]);
    assert!(propose_hypothesis(&none, &db, &LearnerConfig::default()).is_err());
}

#[test]
fn union_typed_parameter_gets_a_disjunction() {
    // 0 = int sequence, 1 = int64 tensor, 2 = string, 3 = none
    let db = flat_db();
    let hist = history(&[(0, Valid), (1, Valid), (2, Invalid), (3, Invalid), (0, Valid), (1, Valid)]);
    let h = propose_hypothesis(&hist, &db, &LearnerConfig::default()).unwrap();
    assert_eq!(h.categories, vec![0, 1]);
    assert_eq!((h.precision, h.recall), (Ratio::from_integer(1), Ratio::from_integer(1)));
}

/// Independent brute force: all subsets of candidate categories up to `k`,
/// coverage via raw property-set inclusion (label catalogs have no
/// implications).
fn brute_force(hist: &[HistoryEntry], db: &InputDatabase, k: usize) -> Vec<CategoryId> {
    let mut candidates: Vec<CategoryId> = hist.iter().filter(|e| e.outcome == Valid).map(|e| e.category).collect();
    candidates.sort_unstable();
    candidates.dedup();
    let props = |c: CategoryId| &db.category(c).props;
    let mut best: Option<((i64, i64, usize), Vec<CategoryId>)> = None;
    for mask in 1u32..(1 << candidates.len()) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let subset: Vec<CategoryId> = (0..candidates.len()).filter(|i| mask & (1 << i) != 0).map(|i| candidates[i]).collect();
        let (mut cv, mut ci) = (0i64, 0i64);
        for e in hist {
            if subset.iter().any(|&m| props(m).is_subset(props(e.category))) {
                match e.outcome {
                    Valid => cv += 1,
                    Invalid => ci += 1,
                    _ => {}
                }
            }
        }
        let key = (-cv, ci, subset.len());
        if best.as_ref().is_none_or(|(bk, bs)| (key, &subset) < (*bk, bs)) {
            best = Some((key, subset));
        }
    }
    best.unwrap().1
}

fn random_fixture(
    sets: Vec<alloc::collections::BTreeSet<usize>>,
    outcomes: Vec<(usize, u8)>,
) -> (InputDatabase, Vec<HistoryEntry>) {
    let slices: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
    let refs: Vec<&[usize]> = slices.iter().map(|v| v.as_slice()).collect();
    let db = label_database(6, &refs).unwrap();
    let n = db.category_count();
    let hist = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, (c, o))| {
            let outcome = match o % 5 {
                0 | 1 => Valid,
                2 | 3 => Invalid,
                _ => Crash,
            };
            entry(i as u64, c % n, outcome)
        })
        .collect();
    (db, hist)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_brute_force(
        sets in proptest::collection::vec(proptest::collection::btree_set(0usize..6, 0..5), 1..16),
        outcomes in proptest::collection::vec((0usize..16, 0u8..5), 1..40),
        k in 1usize..=3,
    ) {
        let (db, hist) = random_fixture(sets, outcomes);
        prop_assume!(hist.iter().any(|e| e.outcome == Valid));
        let config = LearnerConfig { max_disjuncts: k, ..LearnerConfig::default() };
        let h = propose_hypothesis(&hist, &db, &config).unwrap();
        prop_assert_eq!(h.categories, brute_force(&hist, &db, k));
    }

    #[test]
    fn metrics_are_bounded_and_monotone_under_covered_valid(
        sets in proptest::collection::vec(proptest::collection::btree_set(0usize..6, 0..5), 1..10),
        outcomes in proptest::collection::vec((0usize..10, 0u8..5), 1..30),
        pick in 0usize..10,
    ) {
        let (db, mut hist) = random_fixture(sets, outcomes);
        let h = Hypothesis::new(vec![pick % db.category_count()]);
        let (p, r) = consistency(&h, &hist, &db).unwrap();
        let one = Ratio::from_integer(1);
        prop_assert!(p <= one && r <= one);
        hist.push(entry(999, h.categories[0], Valid));
        let (p2, r2) = consistency(&h, &hist, &db).unwrap();
        prop_assert!(p2 >= p && r2 >= r);
    }
}

#[test]
fn greedy_path_is_deterministic_and_reasonable() {
    // 20 singleton categories; valid records in 0..14 give 15 candidates.
    let sets: Vec<Vec<usize>> = (0..20).map(|i| vec![i % 9, 9 + i / 9]).collect();
    let refs: Vec<&[usize]> = sets.iter().map(|v| v.as_slice()).collect();
    let db = label_database(12, &refs).unwrap();
    let mut items = Vec::new();
    for c in 0..15 {
        for _ in 0..(c % 4 + 1) {
            items.push((c, Valid));
        }
        items.push((c, Invalid));
    }
    let hist = history(&items);
    let config = LearnerConfig::default();
    let a = propose_hypothesis(&hist, &db, &config).unwrap();
    let b = propose_hypothesis(&hist, &db, &config).unwrap();
    assert_eq!(a, b);
    assert!(a.categories.len() <= config.max_disjuncts);
    // Each candidate covers only itself: the three with 4 valid records, then
    // the smallest id among those with 3.
    assert_eq!(a.categories, vec![2, 3, 7, 11]);
}

#[test]
fn fresh_state_explores() {
    let db = flat_db();
    let mut s = LearnerState::new("f", 0);
    let q = s.next_query(&db, &LearnerConfig::default(), &mut ChaCha8Rng::seed_from_u64(1));
    assert_eq!(q.polarity, Polarity::Exploratory);
    assert_eq!(s.phase, Phase::Random);
}

/// Hand-enumerated near-miss fixture.
/// 0 = {p1,p2,p3}, 1 = {p1,p2}, 2 = {p1}, 3 = {p1,p2,p3,p4}, 4 = {p2,p3,p5}
fn near_miss_db() -> InputDatabase {
    label_database(5, &[&[0, 1, 2], &[0, 1], &[0], &[0, 1, 2, 3], &[1, 2, 4]]).unwrap()
}

#[test]
fn near_miss_enumeration() {
    let db = near_miss_db();
    let h = Hypothesis::new(vec![0]);
    // 1 lacks p3 only; 4 lacks p1 only; 2 lacks two; 3 is stronger.
    assert_eq!(near_misses(&h, &db), vec![(1, 0), (4, 0), (2, 0)]);
    assert_eq!(h.cover(&db), vec![0, 3]);
}

#[test]
fn inference_queries_alternate_and_include_near_misses() {
    let db = near_miss_db();
    let config = LearnerConfig::default();
    let mut s = LearnerState::new("f", 0);
    let q = Query::exploratory(0);
    let effect = s.update(&db, &config, 0, &q, Valid);
    assert_eq!(effect.entered, Some(Phase::Inference));
    assert_eq!(s.hypothesis.as_ref().unwrap().categories, vec![0]);
    let pending: Vec<(CategoryId, Polarity)> = s.pending.iter().map(|q| (q.category, q.polarity)).collect();
    assert_eq!(
        pending,
        vec![
            (3, Polarity::ExpectValid),
            (1, Polarity::ExpectInvalid),
            (4, Polarity::ExpectInvalid),
            (2, Polarity::ExpectInvalid)
        ]
    );
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = s.next_query(&db, &config, &mut rng);
    assert_eq!((q.category, q.polarity, q.provenance), (3, Polarity::ExpectValid, Some(0)));
}

#[test]
fn acceptance_moves_to_valid_generation_and_stays_in_cover() {
    // 0 = {p1}, stronger: 1 = {p1,p2}, 2 = {p1,p3}; unrelated: 3 = {p4}, 4 = {p5}
    let db = label_database(5, &[&[0], &[0, 1], &[0, 2], &[3], &[4]]).unwrap();
    let config = LearnerConfig::default();
    let mut s = LearnerState::new("f", 0);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let truth = |c: CategoryId| if c <= 2 { Valid } else { Invalid };
    let mut phases = vec![s.phase];
    for case in 0..200 {
        let q = s.next_query(&db, &config, &mut rng);
        s.update(&db, &config, case, &q, truth(q.category));
        if *phases.last().unwrap() != s.phase {
            phases.push(s.phase);
        }
        if s.phase == Phase::ValidGeneration {
            break;
        }
    }
    assert_eq!(phases, vec![Phase::Random, Phase::Inference, Phase::ValidGeneration]);
    let h = s.hypothesis.clone().unwrap();
    assert!(h.accepted);
    assert_eq!(h.categories, vec![0]);
    let mut seen = alloc::collections::BTreeSet::new();
    for _ in 0..100 {
        let q = s.next_query(&db, &config, &mut rng);
        assert!(q.category <= 2);
        assert_eq!(q.polarity, Polarity::ExpectValid);
        seen.insert(q.category);
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn repeat_window_is_respected() {
    let sets: Vec<Vec<usize>> = (0..9).map(|i| vec![i]).collect();
    let refs: Vec<&[usize]> = sets.iter().map(|v| v.as_slice()).collect();
    let db = label_database(9, &refs).unwrap();
    let config = LearnerConfig { no_repeat_window: 3, ..LearnerConfig::default() };
    let mut s = LearnerState::new("f", 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut emitted: Vec<CategoryId> = Vec::new();
    for case in 0..300 {
        let q = s.next_query(&db, &config, &mut rng);
        // The valid cover {0, 3, 6} leaves room for a window of 2 only.
        let window = if s.phase == Phase::ValidGeneration { 2 } else { 3 };
        let tail = &emitted[emitted.len().saturating_sub(window)..];
        assert!(!tail.contains(&q.category), "{:?} then {}", tail, q.category);
        emitted.push(q.category);
        s.update(&db, &config, case, &q, if q.category % 3 == 0 { Valid } else { Invalid });
    }
    assert_eq!(s.phase, Phase::ValidGeneration);
}

#[test]
fn budget_exhaustion_falls_back_to_exploration() {
    let db = flat_db();
    // Acceptance is out of reach within the budget.
    let config = LearnerConfig {
        infer_budget: 5,
        min_evidence: 100,
        ..LearnerConfig::default()
    };
    let mut s = LearnerState::new("f", 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    s.update(&db, &config, 0, &Query::exploratory(0), Valid);
    let mut failed = false;
    for case in 1..50 {
        let q = s.next_query(&db, &config, &mut rng);
        let effect = s.update(&db, &config, case, &q, Invalid);
        failed |= effect.inference_failed;
        if s.inference_failed {
            break;
        }
    }
    assert!(failed);
    assert_eq!(s.phase, Phase::Inference);
    assert_eq!(s.inference_queries(), 5);
    for _ in 0..10 {
        assert_eq!(s.next_query(&db, &config, &mut rng).polarity, Polarity::Exploratory);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phases_never_regress_and_streams_are_deterministic(
        sets in proptest::collection::vec(proptest::collection::btree_set(0usize..6, 0..5), 1..12),
        valid_mask in 0u64..4096,
        seed in 0u64..1000,
    ) {
        let slices: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let refs: Vec<&[usize]> = slices.iter().map(|v| v.as_slice()).collect();
        let db = label_database(6, &refs).unwrap();
        let config = LearnerConfig { infer_budget: 40, ..LearnerConfig::default() };
        let run = || {
            let mut s = LearnerState::new("f", 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut stream = Vec::new();
            let mut phases = vec![s.phase];
            for case in 0..120 {
                let q = s.next_query(&db, &config, &mut rng);
                if s.phase == Phase::ValidGeneration {
                    let h = s.hypothesis.as_ref().unwrap();
                    assert!(h.accepted && h.covers(&db, q.category));
                }
                let outcome = if valid_mask & (1 << (q.category % 12)) != 0 { Valid } else { Invalid };
                s.update(&db, &config, case, &q, outcome);
                stream.push(q);
                if *phases.last().unwrap() != s.phase {
                    phases.push(s.phase);
                }
            }
            (stream, phases)
        };
        let (a, phases) = run();
        let (b, _) = run();
        prop_assert_eq!(a, b);
        let order = [Phase::Random, Phase::Inference, Phase::ValidGeneration];
        prop_assert!(phases.len() <= 3);
        prop_assert_eq!(&phases[..], &order[..phases.len()]);
    }
}

#[test]
fn state_round_trips_through_json() {
    let db = near_miss_db();
    let config = LearnerConfig::default();
    let mut s = LearnerState::new("f", 1);
    s.update(&db, &config, 0, &Query::exploratory(0), Valid);
    let text = serde_json::to_string(&s).unwrap();
    let back: LearnerState = serde_json::from_str(&text).unwrap();
    assert_eq!(back, s);
}
