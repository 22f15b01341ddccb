use std::collections::HashSet;

use cdas_core::scheduler::alignment;
use cdas_core::{
    BaselineConfig, BaselineState, BaselineStrategy, CdasConfig, CdasState, PassRateObservation,
    ProblemId, ProblemRecord,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn records(n: u32) -> Vec<ProblemRecord> {
    (0..n).map(|i| ProblemRecord::new(ProblemId(i)).with_level((i % 5) as u8 + 1)).collect()
}

fn random_outcomes(ids: &[ProblemId], step: u64, rng: &mut ChaCha8Rng) -> Vec<PassRateObservation> {
    ids.iter()
        .map(|&problem_id| PassRateObservation {
            problem_id,
            pass_rate: f64::from(rng.random_range(0..=8u8)) / 8.0,
            step,
        })
        .collect()
}

fn distinct(ids: &[ProblemId]) -> bool {
    ids.iter().collect::<HashSet<_>>().len() == ids.len()
}

/// Checks the two-sided batch law against the state the batch was drawn from.
fn check_symmetric_law(before: &CdasState, batch: &[ProblemId]) -> Result<(), TestCaseError> {
    let c = before.competence().competence;
    let chosen: HashSet<ProblemId> = batch.iter().copied().collect();
    let (mut harder, mut easier) = (Vec::new(), Vec::new());
    for r in before.records() {
        let a = alignment(c, r.difficulty);
        let entry = (a, chosen.contains(&r.id));
        if r.difficulty > c {
            harder.push(entry);
        } else {
            easier.push(entry);
        }
    }
    let half = batch.len() / 2;
    if harder.len() >= half && easier.len() >= half {
        prop_assert_eq!(harder.iter().filter(|e| e.1).count(), half);
        prop_assert_eq!(easier.iter().filter(|e| e.1).count(), half);
    }
    for group in [&harder, &easier] {
        let worst_in = group.iter().filter(|e| e.1).map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        let best_out = group.iter().filter(|e| !e.1).map(|e| e.0).fold(f64::INFINITY, f64::min);
        prop_assert!(worst_in <= best_out, "{} > {}", worst_in, best_out);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_batches_split_and_dominate(n in 8u32..200, half in 1usize..20, seed: u64) {
        let batch = (2 * half).min(n as usize / 2 * 2);
        let config = CdasConfig { warmup: false, ..CdasConfig::default() };
        let mut state = CdasState::new(records(n), batch, &config, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for step in 1..=12 {
            let before = state.clone();
            let ids = state.select_batch(batch).unwrap();
            prop_assert_eq!(ids.len(), batch);
            prop_assert!(distinct(&ids));
            check_symmetric_law(&before, &ids)?;
            state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
        }
    }

    #[test]
    fn report_order_does_not_matter(n in 4u32..100, seed: u64) {
        let batch = (n as usize / 2) * 2;
        let config = CdasConfig { warmup: false, ..CdasConfig::default() };
        let mut a = CdasState::new(records(n), batch.min(16), &config, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Move away from the all-zero start first.
        let ids = a.select_batch(batch.min(16)).unwrap();
        a.report_outcomes(&random_outcomes(&ids, 1, &mut rng)).unwrap();

        let mut b = a.clone();
        let ids = a.select_batch(batch.min(16)).unwrap();
        prop_assert_eq!(&b.select_batch(batch.min(16)).unwrap(), &ids);
        let outcomes = random_outcomes(&ids, 2, &mut rng);
        let mut reversed = outcomes.clone();
        reversed.reverse();
        let k = seed as usize % reversed.len();
        reversed.rotate_left(k);
        a.report_outcomes(&outcomes).unwrap();
        b.report_outcomes(&reversed).unwrap();
        for (x, y) in a.records().iter().zip(b.records()) {
            prop_assert!((x.difficulty - y.difficulty).abs() <= 1e-12);
            prop_assert_eq!(x.t, y.t);
        }
        prop_assert!((a.competence().competence - b.competence().competence).abs() <= 1e-12);
    }

    #[test]
    fn warmup_visits_every_problem(n in 1u32..300, batch in 1usize..64, seed: u64) {
        let batch = batch.min(n as usize);
        let config = CdasConfig { symmetric: false, ..CdasConfig::default() };
        let mut state = CdasState::new(records(n), batch, &config, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for step in 1..=state.warmup_steps() as u64 {
            prop_assert!(state.in_warmup());
            let ids = state.select_batch(batch).unwrap();
            prop_assert!(distinct(&ids));
            state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
        }
        prop_assert!(!state.in_warmup());
        prop_assert!(state.records().iter().all(|r| r.t >= 1));
    }

    #[test]
    fn baselines_return_distinct_full_batches(n in 30u32..120, batch in 1usize..10, seed: u64) {
        for strategy in [BaselineStrategy::Random, BaselineStrategy::Curriculum, BaselineStrategy::Prioritized] {
            let config = BaselineConfig { curriculum_switch_step: 3, ..BaselineConfig::default() };
            let mut state = BaselineState::new(records(n), strategy, config, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for step in 1..=6 {
                let ids = state.select_batch(batch).unwrap();
                prop_assert_eq!(ids.len(), batch);
                prop_assert!(distinct(&ids));
                state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
            }
        }
    }

    #[test]
    fn prioritized_prefers_positive_weights(solved in 0usize..40, seed: u64) {
        let n = 40u32;
        let mut state =
            BaselineState::new(records(n), BaselineStrategy::Prioritized, BaselineConfig::default(), seed).unwrap();
        let all: Vec<ProblemId> = (0..n).map(ProblemId).collect();
        state.select_batch(n as usize).unwrap();
        let outcomes: Vec<_> = all
            .iter()
            .map(|&problem_id| PassRateObservation {
                problem_id,
                pass_rate: if (problem_id.0 as usize) < solved { 1.0 } else { 0.5 },
                step: 1,
            })
            .collect();
        state.report_outcomes(&outcomes).unwrap();
        let positive = n as usize - solved;
        for batch in [1, positive.max(1), 40] {
            let ids = state.select_batch(batch).unwrap();
            let zero_weight = ids.iter().filter(|id| (id.0 as usize) < solved).count();
            prop_assert_eq!(zero_weight, batch.saturating_sub(positive));
        }
    }

    #[test]
    fn dynamic_keeps_only_informative_problems(n in 20u32..120, batch in 1usize..10, seed: u64) {
        let mut state =
            BaselineState::new(records(n), BaselineStrategy::Dynamic, BaselineConfig::default(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        match state.dynamic_select_and_filter(batch, |problem_id| {
            Ok(PassRateObservation { problem_id, pass_rate: f64::from(rng.random_range(0..=4u8)) / 4.0, step: 1 })
        }) {
            Ok(picked) => {
                prop_assert_eq!(picked.ids.len(), batch);
                prop_assert!(distinct(&picked.ids));
                prop_assert_eq!(picked.kept + picked.padded, batch);
                prop_assert!(picked.rollouts_consumed >= batch);
                for o in &picked.observations[..picked.kept] {
                    prop_assert!(o.pass_rate > 0.0 && o.pass_rate < 1.0);
                }
            }
            Err(e) => prop_assert!(matches!(e, cdas_core::Error::Runtime(_))),
        }
    }
}

#[test]
fn seeded_cdas_runs_repeat_bit_for_bit() {
    let run = || {
        let mut state = CdasState::new(records(300), 32, &CdasConfig::default(), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut batches = Vec::new();
        for step in 1..=25 {
            let ids = state.select_batch(32).unwrap();
            state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
            batches.push(ids);
        }
        (batches, serde_json::to_string(&state).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn seeded_baselines_repeat() {
    for strategy in [BaselineStrategy::Random, BaselineStrategy::Curriculum, BaselineStrategy::Prioritized] {
        let run = || {
            let config = BaselineConfig { curriculum_switch_step: 4, ..BaselineConfig::default() };
            let mut state = BaselineState::new(records(100), strategy, config, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            (1..=8)
                .map(|step| {
                    let ids = state.select_batch(10).unwrap();
                    state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
                    ids
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run(), "{strategy:?}");
    }
}

#[test]
fn state_survives_json_round_trip() {
    let mut state = CdasState::new(records(50), 10, &CdasConfig::default(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for step in 1..=7 {
        let ids = state.select_batch(10).unwrap();
        state.report_outcomes(&random_outcomes(&ids, step, &mut rng)).unwrap();
    }
    let mut copy: CdasState = serde_json::from_str(&serde_json::to_string(&state).unwrap()).unwrap();
    assert_eq!(copy, state);
    assert_eq!(copy.select_batch(10).unwrap(), state.select_batch(10).unwrap());
}
