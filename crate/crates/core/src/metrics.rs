//! Per-step and per-run analysis quantities.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grpo::{group_advantages, RolloutGroup};
use crate::scheduler::ProblemId;
use crate::sampler::Sampler;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub mean_reward: f64,
    pub zero_gradient_fraction: f64,
    pub rollout_batches_consumed: u64,
    pub competence: f64,
    pub mean_sampled_difficulty: f64,
    pub learner_ability: f64,
}

/// One CSV row: a [`StepMetrics`] tagged with its run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub strategy: String,
    pub seed: u64,
    pub mean_reward: f64,
    pub zero_gradient_fraction: f64,
    pub rollout_batches_consumed: u64,
    pub competence: f64,
    pub mean_sampled_difficulty: f64,
    pub learner_ability: f64,
}

impl MetricsRow {
    pub fn new(m: &StepMetrics, strategy: &str, seed: u64) -> Self {
        Self {
            step: m.step,
            strategy: strategy.to_string(),
            seed,
            mean_reward: m.mean_reward,
            zero_gradient_fraction: m.zero_gradient_fraction,
            rollout_batches_consumed: m.rollout_batches_consumed,
            competence: m.competence,
            mean_sampled_difficulty: m.mean_sampled_difficulty,
            learner_ability: m.learner_ability,
        }
    }
}

pub const METRICS_HEADER: [&str; 9] = [
    "step",
    "strategy",
    "seed",
    "mean_reward",
    "zero_gradient_fraction",
    "rollout_batches_consumed",
    "competence",
    "mean_sampled_difficulty",
    "learner_ability",
];

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

/// Aggregates one step. `ability` is the learner's ability after training on
/// the batch.
pub fn summarize_step(
    step: u64,
    groups: &[RolloutGroup],
    rollouts_consumed: u64,
    sampler: &Sampler,
    ability: f64,
) -> Result<StepMetrics> {
    if groups.is_empty() {
        return Err(Error::Domain("cannot summarize an empty batch".into()));
    }
    let n = groups.len() as f64;
    let mut reward = 0.0;
    let mut zero = 0usize;
    let mut difficulty = 0.0;
    for g in groups {
        reward += g.pass_rate();
        if group_advantages(g)?.zero_gradient {
            zero += 1;
        }
        difficulty += sampler
            .record(g.problem_id)
            .ok_or_else(|| Error::Consistency(format!("unknown problem {}", g.problem_id)))?
            .difficulty;
    }
    Ok(StepMetrics {
        step,
        mean_reward: reward / n,
        zero_gradient_fraction: zero as f64 / n,
        rollout_batches_consumed: rollouts_consumed,
        competence: sampler.competence().competence,
        mean_sampled_difficulty: difficulty / n,
        learner_ability: ability,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRow {
    pub problem_id: ProblemId,
    pub t: u32,
    pub difficulty: f64,
    pub final_pass_rate: f64,
}

/// One row per problem that was sampled at least once and has an observed
/// pass rate. `final_pass_rates` is indexed like `sampler.records()`.
pub fn difficulty_passrate_table(sampler: &Sampler, final_pass_rates: &[Option<f64>]) -> Vec<DifficultyRow> {
    sampler
        .records()
        .iter()
        .zip(final_pass_rates)
        .filter(|(r, _)| r.t > 0)
        .filter_map(|(r, s)| {
            s.map(|s| DifficultyRow {
                problem_id: r.id,
                t: r.t,
                difficulty: r.difficulty,
                final_pass_rate: s,
            })
        })
        .collect()
}

/// Ranks starting at 1, ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation; `None` when either side is constant.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}
