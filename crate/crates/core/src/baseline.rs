//! Comparison strategies: uniform random, level-tag curriculum, pass-rate
//! prioritized, and oversample-then-filter dynamic sampling.
//!
//! Baselines do not use difficulty estimates to choose problems, but they
//! keep the same running difficulty and competence bookkeeping as CDAS so
//! that per-step metrics are comparable across strategies.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{
    apply_outcomes, resolve_outcomes, CompetenceState, PassRateObservation, ProblemId,
    ProblemRecord, ProblemSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineStrategy {
    Random,
    Curriculum,
    Prioritized,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub curriculum_switch_step: u64,
    pub curriculum_threshold: u8,
    /// Candidate sub-batch size as a multiple of the batch size.
    pub dynamic_oversample_factor: f64,
    pub dynamic_retry_cap: usize,
    /// Weight of problems with no recorded pass rate.
    pub prioritized_initial_weight: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            curriculum_switch_step: 0,
            curriculum_threshold: 4,
            dynamic_oversample_factor: 1.0,
            dynamic_retry_cap: 10,
            prioritized_initial_weight: 1.0,
        }
    }
}

/// Outcome of one dynamic-sampling step.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicBatch {
    /// Kept ids followed by padding, `batch_size` in total.
    pub ids: Vec<ProblemId>,
    /// The qualifying rollout of each id in `ids`, in the same order.
    pub observations: Vec<PassRateObservation>,
    pub kept: usize,
    pub padded: usize,
    /// Number of rollout invocations spent to assemble the batch.
    pub rollouts_consumed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineState {
    records: ProblemSet,
    strategy: BaselineStrategy,
    config: BaselineConfig,
    last_pass_rate: Vec<Option<f64>>,
    competence: CompetenceState,
    rng: ChaCha8Rng,
    /// Prioritized draws that found only zero weights and fell back to uniform.
    uniform_fallbacks: u64,
}

impl BaselineState {
    pub fn new(
        records: Vec<ProblemRecord>,
        strategy: BaselineStrategy,
        config: BaselineConfig,
        seed: u64,
    ) -> Result<Self> {
        let records = ProblemSet::new(records)?;
        if strategy == BaselineStrategy::Curriculum {
            if let Some(r) = records.as_slice().iter().find(|r| r.level_tag.is_none()) {
                return Err(Error::config(
                    "level_tag",
                    format!("curriculum sampling needs level tags; problem {} has none", r.id),
                ));
            }
            if !(1..=5).contains(&config.curriculum_threshold) {
                return Err(Error::config("curriculum_threshold", "must be in 1..=5"));
            }
        }
        if !(config.dynamic_oversample_factor >= 1.0) {
            return Err(Error::config("dynamic_oversample_factor", "must be at least 1"));
        }
        if config.dynamic_retry_cap == 0 {
            return Err(Error::config("dynamic_retry_cap", "must be positive"));
        }
        if !(config.prioritized_initial_weight >= 0.0) {
            return Err(Error::config("prioritized_initial_weight", "must be non-negative"));
        }
        let n = records.len();
        Ok(Self {
            records,
            strategy,
            config,
            last_pass_rate: vec![None; n],
            competence: CompetenceState::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            uniform_fallbacks: 0,
        })
    }

    pub fn strategy(&self) -> BaselineStrategy {
        self.strategy
    }

    pub fn records(&self) -> &[ProblemRecord] {
        self.records.as_slice()
    }

    pub fn record(&self, id: ProblemId) -> Option<&ProblemRecord> {
        self.records.get(id)
    }

    pub fn competence(&self) -> CompetenceState {
        self.competence
    }

    pub fn step(&self) -> u64 {
        self.competence.step
    }

    pub fn last_pass_rate(&self, id: ProblemId) -> Option<f64> {
        self.records.position(id).and_then(|i| self.last_pass_rate[i])
    }

    pub fn uniform_fallbacks(&self) -> u64 {
        self.uniform_fallbacks
    }

    pub fn config(&self) -> &BaselineConfig {
        &self.config
    }

    /// Dispatches to the strategy's selection rule. Dynamic sampling needs
    /// rollouts and must go through [`Self::dynamic_select_and_filter`].
    pub fn select_batch(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        match self.strategy {
            BaselineStrategy::Random => self.random_select(batch_size),
            BaselineStrategy::Curriculum => self.curriculum_select(batch_size),
            BaselineStrategy::Prioritized => self.prioritized_select(batch_size),
            BaselineStrategy::Dynamic => Err(Error::config(
                "strategy",
                "dynamic sampling selects through dynamic_select_and_filter",
            )),
        }
    }

    fn check_size(&self, batch_size: usize, pool: usize) -> Result<()> {
        if batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if batch_size > pool {
            return Err(Error::config(
                "batch_size",
                format!("batch size {batch_size} exceeds eligible pool of {pool}"),
            ));
        }
        Ok(())
    }

    fn uniform_from(&mut self, pool: &[usize], batch_size: usize) -> Vec<ProblemId> {
        index::sample(&mut self.rng, pool.len(), batch_size)
            .into_iter()
            .map(|i| self.records.as_slice()[pool[i]].id)
            .collect()
    }

    pub fn random_select(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        let n = self.records.len();
        self.check_size(batch_size, n)?;
        let pool: Vec<usize> = (0..n).collect();
        Ok(self.uniform_from(&pool, batch_size))
    }

    pub fn curriculum_select(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        let threshold = self.config.curriculum_threshold;
        let late = self.competence.step >= self.config.curriculum_switch_step;
        let mut pool = Vec::with_capacity(self.records.len());
        for (i, r) in self.records.as_slice().iter().enumerate() {
            let level = r.level_tag.ok_or_else(|| {
                Error::config("level_tag", format!("problem {} has no level tag", r.id))
            })?;
            if !late || level >= threshold {
                pool.push(i);
            }
        }
        self.check_size(batch_size, pool.len())?;
        Ok(self.uniform_from(&pool, batch_size))
    }

    fn priority(&self, index: usize) -> f64 {
        match self.last_pass_rate[index] {
            Some(s) => 1.0 - s,
            None => self.config.prioritized_initial_weight,
        }
    }

    /// Sequential weighted draws without replacement, weight `1 − s`.
    pub fn prioritized_select(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        let n = self.records.len();
        self.check_size(batch_size, n)?;
        let mut weights: Vec<f64> = (0..n).map(|i| self.priority(i)).collect();
        let mut taken = vec![false; n];
        let mut batch = Vec::with_capacity(batch_size);

        while batch.len() < batch_size {
            let total: f64 = weights.iter().sum();
            let pick = if total > 0.0 {
                let target = self.rng.random::<f64>() * total;
                let mut acc = 0.0;
                // Fall back to the last positive weight if rounding overshoots.
                let mut chosen = None;
                for (i, &w) in weights.iter().enumerate() {
                    if w > 0.0 {
                        acc += w;
                        chosen = Some(i);
                        if target < acc {
                            break;
                        }
                    }
                }
                chosen.expect("positive total implies a positive weight")
            } else {
                self.uniform_fallbacks += 1;
                let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
                free[self.rng.random_range(0..free.len())]
            };
            taken[pick] = true;
            weights[pick] = 0.0;
            batch.push(self.records.as_slice()[pick].id);
        }
        Ok(batch)
    }

    /// Draws candidate sub-batches uniformly from problems not yet tried this
    /// step and rolls each out, keeping those with a pass rate strictly
    /// between 0 and 1, until `batch_size` are kept or the retry cap is hit.
    /// A capped batch is padded with the most recently filtered candidates.
    pub fn dynamic_select_and_filter<F>(
        &mut self,
        batch_size: usize,
        mut rollout_fn: F,
    ) -> Result<DynamicBatch>
    where
        F: FnMut(ProblemId) -> Result<PassRateObservation>,
    {
        let n = self.records.len();
        self.check_size(batch_size, n)?;
        let round_size = ((batch_size as f64 * self.config.dynamic_oversample_factor).ceil()
            as usize)
            .clamp(batch_size, n);

        let mut untried: Vec<usize> = (0..n).collect();
        let mut kept: Vec<PassRateObservation> = Vec::with_capacity(batch_size);
        let mut filtered: Vec<PassRateObservation> = Vec::new();
        let mut consumed = 0usize;

        'rounds: for _ in 0..self.config.dynamic_retry_cap {
            if untried.is_empty() {
                break;
            }
            let take = round_size.min(untried.len());
            let mut picks: Vec<usize> = index::sample(&mut self.rng, untried.len(), take).into_vec();
            let candidates: Vec<usize> = picks.iter().map(|&p| untried[p]).collect();
            // Remove picked positions from the untried pool, highest first.
            picks.sort_unstable_by(|a, b| b.cmp(a));
            for p in picks {
                untried.swap_remove(p);
            }
            for idx in candidates {
                let id = self.records.as_slice()[idx].id;
                let obs = rollout_fn(id)?;
                consumed += 1;
                if obs.problem_id != id {
                    return Err(Error::Consistency(format!(
                        "rollout for problem {id} reported problem {}",
                        obs.problem_id
                    )));
                }
                if obs.pass_rate > 0.0 && obs.pass_rate < 1.0 {
                    kept.push(obs);
                    if kept.len() == batch_size {
                        break 'rounds;
                    }
                } else {
                    filtered.push(obs);
                }
            }
        }

        if kept.is_empty() {
            return Err(Error::Runtime(format!(
                "dynamic sampling kept no problem after {consumed} rollouts"
            )));
        }
        let kept_count = kept.len();
        let deficit = batch_size - kept_count;
        let mut observations = kept;
        observations.extend(filtered.iter().rev().take(deficit).copied());
        if observations.len() < batch_size {
            return Err(Error::Runtime(format!(
                "dynamic sampling assembled only {} of {batch_size} problems",
                observations.len()
            )));
        }
        Ok(DynamicBatch {
            ids: observations.iter().map(|o| o.problem_id).collect(),
            padded: batch_size - kept_count,
            kept: kept_count,
            rollouts_consumed: consumed,
            observations,
        })
    }

    /// Records the latest pass rate of every reported problem and advances
    /// the step counter.
    pub fn report_outcomes(&mut self, outcomes: &[PassRateObservation]) -> Result<()> {
        let indices = resolve_outcomes(&self.records, outcomes)?;
        let competence = apply_outcomes(
            &mut self.records,
            self.competence.competence,
            outcomes,
            &indices,
        )?;
        for (&idx, o) in indices.iter().zip(outcomes) {
            self.last_pass_rate[idx] = Some(o.pass_rate);
        }
        self.competence = CompetenceState {
            competence,
            step: self.competence.step + 1,
        };
        Ok(())
    }
}
