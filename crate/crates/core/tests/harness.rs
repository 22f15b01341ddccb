use std::fs;

use cdas_core::harness::{self, write_comparison};
use cdas_core::{Checkpoint, Experiment, ExperimentConfig, Sampler, StrategyKind};

fn config(strategy: StrategyKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        strategy,
        seed,
        ..ExperimentConfig::default()
    }
}

#[test]
fn one_step_over_the_whole_bank() {
    let cfg = ExperimentConfig {
        n_problems: 64,
        batch_size: 64,
        total_steps: 1,
        strategy: StrategyKind::Random,
        ..ExperimentConfig::default()
    };
    let exp = harness::run(cfg).unwrap();
    assert_eq!(exp.metrics().len(), 1);
    let mut ids: Vec<u32> = exp.batches()[0].iter().map(|id| id.0).collect();
    ids.sort_unstable();
    assert_eq!(ids, (0..64).collect::<Vec<_>>());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let cfg = ExperimentConfig {
            total_steps: 40,
            seed: 17,
            ..ExperimentConfig::default()
        };
        harness::run(cfg).unwrap().write_outputs(d.path()).unwrap();
    }
    for name in ["metrics.csv", "batches.csv", "problems.csv", "checkpoint.json", "summary.json"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn warmup_rows_then_symmetric_rows() {
    let cfg = ExperimentConfig {
        n_problems: 1000,
        batch_size: 100,
        total_steps: 14,
        ..ExperimentConfig::default()
    };
    let mut exp = Experiment::new(cfg).unwrap();
    let Sampler::Cdas(state) = exp.sampler() else {
        panic!("expected a CDAS sampler")
    };
    assert_eq!(state.warmup_steps(), 10);
    let order = state.warmup_order().to_vec();
    for row in 1..=14 {
        let out = exp.step_once().unwrap();
        assert_eq!(out.was_warmup, row <= 10);
        if row <= 10 {
            assert_eq!(out.batch, order[(row - 1) * 100..row * 100]);
        }
    }
    let Sampler::Cdas(state) = exp.sampler() else { unreachable!() };
    assert!(state.records().iter().all(|r| r.t >= 1));
}

#[test]
fn reward_rises_right_after_warmup() {
    for seed in 0..10 {
        let cfg = ExperimentConfig {
            total_steps: 20,
            ..config(StrategyKind::Cdas, seed)
        };
        let window = cfg.warmup_window();
        let exp = harness::run(cfg).unwrap();
        let m = exp.metrics();
        assert!(
            m[window].mean_reward > m[window - 1].mean_reward,
            "seed {seed}: {} vs {}",
            m[window].mean_reward,
            m[window - 1].mean_reward
        );
    }
}

#[test]
fn strategies_share_bank_and_learner_start() {
    let reference = Experiment::new(config(StrategyKind::Cdas, 5)).unwrap();
    for k in StrategyKind::ALL {
        let exp = Experiment::new(config(k, 5)).unwrap();
        assert_eq!(exp.bank_hash(), reference.bank_hash(), "{k}");
        assert_eq!(exp.learner(), reference.learner(), "{k}");
    }
}

#[test]
fn sweep_bookkeeping_and_costs() {
    let base = ExperimentConfig {
        total_steps: 40,
        ..ExperimentConfig::default()
    };
    let results = harness::sweep(&base, &StrategyKind::ALL, &[0, 1, 2, 3]).unwrap();
    assert_eq!(results.len(), 20);
    for seed_runs in results.chunks(5) {
        let bank = &seed_runs[0].summary.bank_hash;
        assert!(seed_runs.iter().all(|r| &r.summary.bank_hash == bank));
        let dynamic = seed_runs
            .iter()
            .find(|r| r.summary.strategy == StrategyKind::Dynamic)
            .unwrap();
        for r in seed_runs {
            assert!(dynamic.summary.cumulative_rollouts >= r.summary.cumulative_rollouts);
            assert_eq!(r.rows.len(), 40);
            if r.summary.strategy != StrategyKind::Dynamic {
                assert_eq!(r.summary.cumulative_rollouts, 40 * 128);
                let mut total = 0;
                for row in &r.rows {
                    total += row.rollout_batches_consumed;
                    assert_eq!(total, row.step * 128);
                }
            }
            let abilities: Vec<f64> = r.rows.iter().map(|row| row.learner_ability).collect();
            assert!(abilities.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    let dir = tempfile::tempdir().unwrap();
    write_comparison(dir.path(), &results).unwrap();
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 21);
    let rows = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 20 * 40);
}

#[test]
fn compare_of_random_and_cdas_over_ten_seeds() {
    let base = ExperimentConfig {
        total_steps: 20,
        ..ExperimentConfig::default()
    };
    let results =
        harness::sweep(&base, &[StrategyKind::Random, StrategyKind::Cdas], &(0..10).collect::<Vec<_>>()).unwrap();
    assert_eq!(results.len(), 20);
}

#[test]
fn resume_from_midpoint_matches_uninterrupted_run() {
    let cfg = ExperimentConfig {
        total_steps: 100,
        strategy: StrategyKind::Dynamic,
        seed: 3,
        ..ExperimentConfig::default()
    };
    let full = harness::run(cfg.clone()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut first = Experiment::new(cfg).unwrap();
    first.run_until(50).unwrap();
    first.write_outputs(dir.path()).unwrap();
    let checkpoint = Checkpoint::read(&dir.path().join("checkpoint.json")).unwrap();
    assert_eq!(checkpoint.step, 50);
    let mut resumed = Experiment::from_checkpoint(checkpoint).unwrap();
    resumed.run_to_end().unwrap();
    assert_eq!(resumed.metrics()[50..], full.metrics()[50..]);
    assert_eq!(resumed.metrics_rows(), full.metrics_rows());
    assert_eq!(resumed.summary(), full.summary());
}

#[test]
fn completed_run_resumes_to_itself() {
    let cfg = ExperimentConfig {
        total_steps: 5,
        ..ExperimentConfig::default()
    };
    let exp = harness::run(cfg).unwrap();
    let mut again = Experiment::from_checkpoint(exp.checkpoint()).unwrap();
    assert!(again.is_finished());
    again.run_to_end().unwrap();
    assert_eq!(again.metrics(), exp.metrics());
}

#[test]
fn problems_csv_reports_sample_counts() {
    let cfg = ExperimentConfig {
        n_problems: 300,
        batch_size: 40,
        total_steps: 12,
        ..ExperimentConfig::default()
    };
    let exp = harness::run(cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    exp.write_outputs(dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("problems.csv")).unwrap();
    let mut total = 0u64;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        total += rec[2].parse::<u64>().unwrap();
        rows += 1;
    }
    assert_eq!(rows, 300);
    assert_eq!(total, 12 * 40);
}

#[test]
fn mean_reward_is_mean_pass_rate() {
    let cfg = ExperimentConfig {
        n_problems: 200,
        batch_size: 20,
        total_steps: 3,
        ..ExperimentConfig::default()
    };
    let mut exp = Experiment::new(cfg).unwrap();
    for _ in 0..3 {
        let out = exp.step_once().unwrap();
        let rates: Vec<f64> = exp
            .last_pass_rates()
            .iter()
            .enumerate()
            .filter(|(i, _)| out.batch.iter().any(|id| id.0 as usize == *i))
            .map(|(_, s)| s.unwrap())
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        assert!((out.metrics.mean_reward - mean).abs() <= 1e-12);
    }
}
