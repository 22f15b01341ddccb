//! Synthetic student used in place of a policy model.
//!
//! Each rollout succeeds with probability `σ(a·(θ − b))` for latent ability
//! `θ`, discrimination `a` and the problem's latent difficulty `b`. Training
//! on a batch raises `θ` in proportion to the share of problems whose rollout
//! group carried a gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grpo::RolloutGroup;
use crate::scheduler::{logistic, ProblemId, ProblemRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DifficultyDistribution {
    /// `b ~ N(mean, std²)`; level tags are the quintile of `b`.
    Normal { mean: f64, std: f64 },
    /// Level drawn uniformly from `1..=5`, `b = (level − 3) · spacing`.
    Levels { spacing: f64 },
}

impl Default for DifficultyDistribution {
    fn default() -> Self {
        DifficultyDistribution::Normal { mean: 0.0, std: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BankConfig {
    pub n_problems: usize,
    pub seed: u64,
    pub distribution: DifficultyDistribution,
}

/// Problems with hidden latent difficulties, fixed for an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemBank {
    pub config: BankConfig,
    pub problems: Vec<ProblemRecord>,
}

impl ProblemBank {
    pub fn generate(config: &BankConfig) -> Result<Self> {
        if config.n_problems == 0 {
            return Err(Error::config("n_problems", "must be positive"));
        }
        if config.n_problems > u32::MAX as usize {
            return Err(Error::config("n_problems", "too many problems"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = config.n_problems;
        let problems = match config.distribution {
            DifficultyDistribution::Normal { mean, std } => {
                if !(std > 0.0) || !mean.is_finite() || !std.is_finite() {
                    return Err(Error::config("bank.distribution", "need finite mean and std > 0"));
                }
                let b: Vec<f64> = (0..n)
                    .map(|_| mean + std * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&i, &j| b[i].total_cmp(&b[j]).then(i.cmp(&j)));
                let mut level = vec![0u8; n];
                for (rank, &i) in order.iter().enumerate() {
                    level[i] = (1 + rank * 5 / n) as u8;
                }
                (0..n)
                    .map(|i| {
                        ProblemRecord::new(ProblemId(i as u32))
                            .with_level(level[i])
                            .with_true_difficulty(b[i])
                    })
                    .collect()
            }
            DifficultyDistribution::Levels { spacing } => {
                if !(spacing > 0.0) || !spacing.is_finite() {
                    return Err(Error::config("bank.distribution", "level spacing must be positive"));
                }
                (0..n)
                    .map(|i| {
                        let level: u8 = rng.random_range(1..=5);
                        ProblemRecord::new(ProblemId(i as u32))
                            .with_level(level)
                            .with_true_difficulty((f64::from(level) - 3.0) * spacing)
                    })
                    .collect()
            }
        };
        Ok(Self {
            config: config.clone(),
            problems,
        })
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn latent(&self) -> impl Iterator<Item = f64> + '_ {
        self.problems.iter().map(|p| p.true_difficulty.unwrap_or(0.0))
    }

    /// Records as a sampler may see them: latent difficulty stripped.
    pub fn sampler_view(&self) -> Vec<ProblemRecord> {
        self.problems
            .iter()
            .map(|p| ProblemRecord {
                true_difficulty: None,
                ..p.clone()
            })
            .collect()
    }

    /// Empirical quantile by nearest rank.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut b: Vec<f64> = self.latent().collect();
        b.sort_by(f64::total_cmp);
        let rank = (q.clamp(0.0, 1.0) * (b.len() - 1) as f64).round() as usize;
        b[rank]
    }

    /// SHA-256 of the serialized bank, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("bank serializes");
        hex_digest(&bytes)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub discrimination: f64,
    pub learn_rate: f64,
    /// `None` starts at the bank's 5th-percentile difficulty.
    pub initial_ability: Option<f64>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            discrimination: 1.0,
            learn_rate: 0.05,
            initial_ability: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerState {
    pub ability: f64,
    pub discrimination: f64,
    pub learn_rate: f64,
    pub rollouts_per_problem: usize,
    rng: ChaCha8Rng,
}

impl LearnerState {
    pub fn new(
        ability: f64,
        discrimination: f64,
        learn_rate: f64,
        rollouts_per_problem: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(discrimination > 0.0) || !discrimination.is_finite() {
            return Err(Error::config("learner.discrimination", "must be positive"));
        }
        if !(learn_rate >= 0.0) || !learn_rate.is_finite() {
            return Err(Error::config("learner.learn_rate", "must be non-negative"));
        }
        if rollouts_per_problem < 2 {
            return Err(Error::config("rollouts", "need at least 2 rollouts per problem"));
        }
        if !ability.is_finite() {
            return Err(Error::config("learner.initial_ability", "must be finite"));
        }
        Ok(Self {
            ability,
            discrimination,
            learn_rate,
            rollouts_per_problem,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn from_config(config: &LearnerConfig, bank: &ProblemBank, rollouts: usize, seed: u64) -> Result<Self> {
        let ability = config.initial_ability.unwrap_or_else(|| bank.quantile(0.05));
        Self::new(ability, config.discrimination, config.learn_rate, rollouts, seed)
    }

    pub fn success_probability(&self, true_difficulty: f64) -> f64 {
        logistic(self.discrimination * (self.ability - true_difficulty))
    }

    /// Draws `G` Bernoulli outcomes for one problem.
    pub fn rollout(&mut self, problem: &ProblemRecord) -> Result<RolloutGroup> {
        let b = problem.true_difficulty.ok_or_else(|| {
            Error::Domain(format!("problem {} has no latent difficulty", problem.id))
        })?;
        let p = self.success_probability(b);
        let rng = &mut self.rng;
        let outcomes: Vec<bool> = (0..self.rollouts_per_problem)
            .map(|_| rng.random::<f64>() < p)
            .collect();
        Ok(RolloutGroup::from_correctness(problem.id, outcomes))
    }

    /// Raises ability by `learn_rate` times the share of gradient-bearing
    /// problems. Each entry is `(pass_rate, zero_gradient)`.
    pub fn learn_step(&mut self, batch: &[(f64, bool)]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Domain("learn_step on an empty batch".into()));
        }
        let useful = batch.iter().filter(|(_, zero)| !zero).count();
        self.ability += self.learn_rate * useful as f64 / batch.len() as f64;
        Ok(())
    }

    /// Probability that a group of `G` rollouts on a problem of latent
    /// difficulty `b` is all-correct or all-wrong.
    pub fn zero_gradient_probability(&self, b: f64) -> f64 {
        let p = self.success_probability(b);
        let g = self.rollouts_per_problem as i32;
        p.powi(g) + (1.0 - p).powi(g)
    }

    /// Expected zero-gradient share of the whole bank for the current ability.
    pub fn bank_zero_gradient_fraction(&self, bank: &ProblemBank) -> f64 {
        let total: f64 = bank.latent().map(|b| self.zero_gradient_probability(b)).sum();
        total / bank.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(n: usize, seed: u64) -> ProblemBank {
        ProblemBank::generate(&BankConfig {
            n_problems: n,
            seed,
            distribution: DifficultyDistribution::default(),
        })
        .unwrap()
    }

    fn problem(b: f64) -> ProblemRecord {
        ProblemRecord::new(ProblemId(0)).with_true_difficulty(b)
    }

    #[test]
    fn bank_is_seeded_and_tagged() {
        let a = bank(500, 3);
        assert_eq!(a, bank(500, 3));
        assert_ne!(a.hash(), bank(500, 4).hash());
        for level in 1..=5u8 {
            assert_eq!(a.problems.iter().filter(|p| p.level_tag == Some(level)).count(), 100);
        }
        // Higher levels hold harder problems.
        let max_l1 = a.problems.iter().filter(|p| p.level_tag == Some(1)).map(|p| p.true_difficulty.unwrap()).fold(f64::MIN, f64::max);
        let min_l5 = a.problems.iter().filter(|p| p.level_tag == Some(5)).map(|p| p.true_difficulty.unwrap()).fold(f64::MAX, f64::min);
        assert!(max_l1 < min_l5);
        assert!(a.sampler_view().iter().all(|p| p.true_difficulty.is_none()));
    }

    #[test]
    fn level_bank_uses_equal_spacing() {
        let b = ProblemBank::generate(&BankConfig {
            n_problems: 200,
            seed: 1,
            distribution: DifficultyDistribution::Levels { spacing: 0.5 },
        })
        .unwrap();
        for p in &b.problems {
            let l = f64::from(p.level_tag.unwrap());
            assert_eq!(p.true_difficulty.unwrap(), (l - 3.0) * 0.5);
        }
    }

    #[test]
    fn learner_validation() {
        assert!(LearnerState::new(0.0, 0.0, 0.05, 8, 0).is_err());
        assert!(LearnerState::new(0.0, 1.0, -0.1, 8, 0).is_err());
        assert!(LearnerState::new(0.0, 1.0, 0.05, 1, 0).is_err());
    }

    #[test]
    fn rollout_at_symmetry_point_averages_half() {
        let mut l = LearnerState::new(0.3, 1.0, 0.05, 8, 11).unwrap();
        let trials = 20_000;
        let mean: f64 = (0..trials).map(|_| l.rollout(&problem(0.3)).unwrap().pass_rate()).sum::<f64>() / trials as f64;
        let se = (0.25 / (8.0 * trials as f64)).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn easy_problem_nearly_always_solved() {
        // σ(10)^8 ≈ 0.99964
        let oracle = (1.0 / (1.0 + (-10f64).exp())).powi(8);
        assert!(oracle >= 0.999);
        let mut l = LearnerState::new(10.0, 1.0, 0.05, 8, 2).unwrap();
        let solved = (0..10_000).filter(|_| l.rollout(&problem(0.0)).unwrap().pass_rate() == 1.0).count();
        assert!(solved as f64 / 10_000.0 >= 0.998);
    }

    #[test]
    fn rollouts_are_seeded() {
        let run = || {
            let mut l = LearnerState::new(0.0, 1.0, 0.05, 8, 5).unwrap();
            (0..50).map(|i| l.rollout(&problem(f64::from(i) / 25.0 - 1.0)).unwrap().pass_rate()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn calibration_with_many_rollouts() {
        let g = 10_000;
        let mut l = LearnerState::new(0.4, 1.3, 0.05, g, 8).unwrap();
        for b in [-1.0_f64, 0.0, 0.7, 2.0] {
            let p = 1.0 / (1.0 + (-1.3 * (0.4 - b)).exp());
            let s = l.rollout(&problem(b)).unwrap().pass_rate();
            let se = (p * (1.0 - p) / g as f64).sqrt();
            assert!((s - p).abs() < 3.0 * se, "b={b}: {s} vs {p}");
        }
    }

    #[test]
    fn response_decreases_with_difficulty() {
        let mut l = LearnerState::new(0.0, 1.0, 0.05, 8, 13).unwrap();
        let trials = 10_000;
        let mut mean_at = |b: f64| {
            (0..trials).map(|_| l.rollout(&problem(b)).unwrap().pass_rate()).sum::<f64>() / trials as f64
        };
        let (easy, hard) = (mean_at(0.0), mean_at(1.0));
        let se = ((0.25 + 0.25) / (8.0 * trials as f64)).sqrt();
        assert!(easy - hard > 3.0 * se);
    }

    #[test]
    fn learn_step_examples() {
        let mut l = LearnerState::new(0.0, 1.0, 0.05, 8, 0).unwrap();
        l.learn_step(&[(1.0, true), (0.0, true)]).unwrap();
        assert_eq!(l.ability, 0.0);
        l.learn_step(&[(0.5, false), (0.25, false)]).unwrap();
        assert!((l.ability - 0.05).abs() < 1e-15);
        l.learn_step(&[(0.5, false), (1.0, true)]).unwrap();
        assert!((l.ability - 0.075).abs() < 1e-15);
        assert!(l.learn_step(&[]).is_err());
    }

    #[test]
    fn initial_ability_is_weak() {
        let b = bank(2000, 0);
        let l = LearnerState::from_config(&LearnerConfig::default(), &b, 8, 0).unwrap();
        let below = b.latent().filter(|&x| x < l.ability).count();
        assert!((90..=110).contains(&below), "{below}");
    }
}
