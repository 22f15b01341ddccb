use std::hint::black_box;

use cdas_core::{CdasConfig, CdasState, PassRateObservation, ProblemId, ProblemRecord};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn records(n: u32, rng: &mut ChaCha8Rng) -> Vec<ProblemRecord> {
    (0..n)
        .map(|i| ProblemRecord::new(ProblemId(i)).with_initial_difficulty(rng.random_range(-2.0..2.0)))
        .collect()
}

fn post_warmup_state(n: u32, batch: usize) -> CdasState {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let config = CdasConfig {
        warmup: false,
        ..CdasConfig::default()
    };
    CdasState::new(records(n, &mut rng), batch, &config, 7).unwrap()
}

fn select(c: &mut Criterion) {
    let mut group = c.benchmark_group("cdas_select");
    for n in [2_000u32, 7_500, 50_000] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let state = post_warmup_state(n, 128);
            b.iter_batched(
                || state.clone(),
                |mut s| black_box(s.select_batch(128).unwrap()),
                criterion::BatchSize::SmallInput,
            );
        });
    }
    group.finish();
}

fn select_and_report(c: &mut Criterion) {
    c.bench_function("cdas_step_n7500_b1024", |b| {
        let mut state = post_warmup_state(7_500, 1024);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut step = 0;
        b.iter(|| {
            step += 1;
            let ids = state.select_batch(1024).unwrap();
            let obs: Vec<_> = ids
                .iter()
                .map(|&problem_id| PassRateObservation {
                    problem_id,
                    pass_rate: f64::from(rng.random_range(0..=8u8)) / 8.0,
                    step,
                })
                .collect();
            state.report_outcomes(&obs).unwrap();
        });
    });
}

criterion_group!(benches, select, select_and_report);
criterion_main!(benches);
