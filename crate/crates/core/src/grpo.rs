//! Group statistics of GRPO: binary rewards, within-group advantage
//! normalization and zero-gradient detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{PassRateObservation, ProblemId};

/// Correct answers score 1, everything else 0. There is no format reward.
pub fn rule_reward(correct: bool) -> f64 {
    if correct {
        1.0
    } else {
        0.0
    }
}

/// Rewards of the `G` rollouts generated for one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub problem_id: ProblemId,
    pub rewards: Vec<f64>,
}

impl RolloutGroup {
    pub fn from_correctness(problem_id: ProblemId, correct: impl IntoIterator<Item = bool>) -> Self {
        Self {
            problem_id,
            rewards: correct.into_iter().map(rule_reward).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.rewards.len()
    }

    pub fn pass_rate(&self) -> f64 {
        if self.rewards.is_empty() {
            return 0.0;
        }
        self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
    }

    pub fn observation(&self, step: u64) -> PassRateObservation {
        PassRateObservation {
            problem_id: self.problem_id,
            pass_rate: self.pass_rate(),
            step,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupAdvantages {
    pub advantages: Vec<f64>,
    /// Every rollout earned the same reward, so the group carries no gradient.
    pub zero_gradient: bool,
}

/// `(r_i - mean) / std` with the population standard deviation.
pub fn group_advantages(group: &RolloutGroup) -> Result<GroupAdvantages> {
    let g = group.rewards.len();
    if g < 2 {
        return Err(Error::Domain(format!(
            "problem {}: group advantages need at least 2 rollouts, got {g}",
            group.problem_id
        )));
    }
    if group.rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain(format!("problem {}: non-finite reward", group.problem_id)));
    }
    let first = group.rewards[0];
    if group.rewards.iter().all(|&r| r == first) {
        return Ok(GroupAdvantages {
            advantages: vec![0.0; g],
            zero_gradient: true,
        });
    }
    let n = g as f64;
    let mean = group.rewards.iter().sum::<f64>() / n;
    let var = group.rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(GroupAdvantages {
        advantages: group.rewards.iter().map(|r| (r - mean) / std).collect(),
        zero_gradient: false,
    })
}
