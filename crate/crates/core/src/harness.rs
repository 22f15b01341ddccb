//! Drives sampler, synthetic learner and metrics through a training run.
//!
//! Randomness is split into independent ChaCha streams: the bank is drawn
//! from the bank seed, and the learner and sampler streams are derived from
//! the run seed. Changing the strategy therefore never changes the bank or
//! the learner's starting point.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, BaselineState, BaselineStrategy};
use crate::cdas::{CdasConfig, CdasState};
use crate::error::{Error, Result};
use crate::grpo::{group_advantages, RolloutGroup};
use crate::learner::{hex_digest, BankConfig, DifficultyDistribution, LearnerConfig, LearnerState, ProblemBank};
use crate::metrics::{
    difficulty_passrate_table, spearman, summarize_step, write_metrics_csv, MetricsRow, StepMetrics,
};
use crate::sampler::Sampler;
use crate::scheduler::{PassRateObservation, ProblemId};

pub const CHECKPOINT_VERSION: u32 = 1;

const LEARNER_STREAM: u64 = 1;
const SAMPLER_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Random,
    Curriculum,
    Prioritized,
    Dynamic,
    Cdas,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Random,
        StrategyKind::Curriculum,
        StrategyKind::Prioritized,
        StrategyKind::Dynamic,
        StrategyKind::Cdas,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Curriculum => "curriculum",
            StrategyKind::Prioritized => "prioritized",
            StrategyKind::Dynamic => "dynamic",
            StrategyKind::Cdas => "cdas",
        }
    }

    fn baseline(self) -> Option<BaselineStrategy> {
        match self {
            StrategyKind::Random => Some(BaselineStrategy::Random),
            StrategyKind::Curriculum => Some(BaselineStrategy::Curriculum),
            StrategyKind::Prioritized => Some(BaselineStrategy::Prioritized),
            StrategyKind::Dynamic => Some(BaselineStrategy::Dynamic),
            StrategyKind::Cdas => None,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::config("strategy", format!("unknown strategy `{s}`")))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BankParams {
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub distribution: DifficultyDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_problems: usize,
    pub batch_size: usize,
    pub rollouts: usize,
    pub total_steps: usize,
    pub strategy: StrategyKind,
    pub symmetric: bool,
    pub warmup: bool,
    pub seed: u64,
    pub learner: LearnerConfig,
    pub bank: BankParams,
    /// Defaults to half of `total_steps`.
    pub curriculum_switch_step: Option<u64>,
    pub curriculum_threshold: u8,
    pub dynamic_retry_cap: usize,
    pub dynamic_oversample_factor: f64,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_problems: 2000,
            batch_size: 128,
            rollouts: 8,
            total_steps: 150,
            strategy: StrategyKind::Cdas,
            symmetric: true,
            warmup: true,
            seed: 0,
            learner: LearnerConfig::default(),
            bank: BankParams::default(),
            curriculum_switch_step: None,
            curriculum_threshold: 4,
            dynamic_retry_cap: 10,
            dynamic_oversample_factor: 1.0,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    pub fn bank_seed(&self) -> u64 {
        self.bank.seed.unwrap_or(self.seed)
    }

    pub fn bank_config(&self) -> BankConfig {
        BankConfig {
            n_problems: self.n_problems,
            seed: self.bank_seed(),
            distribution: self.bank.distribution.clone(),
        }
    }

    /// Steps treated as warm-up when comparing strategies: one epoch when
    /// warm-up is enabled.
    pub fn warmup_window(&self) -> usize {
        if self.warmup && self.batch_size > 0 {
            self.n_problems.div_ceil(self.batch_size)
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_problems == 0 {
            return Err(Error::config("n_problems", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if self.batch_size > self.n_problems {
            return Err(Error::config(
                "batch_size",
                format!("{} exceeds n_problems {}", self.batch_size, self.n_problems),
            ));
        }
        if self.strategy == StrategyKind::Cdas && self.symmetric && !self.batch_size.is_multiple_of(2) {
            return Err(Error::config("batch_size", "symmetric CDAS needs an even batch size"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("total_steps", "must be at least 1"));
        }
        if self.rollouts < 2 {
            return Err(Error::config("rollouts", "need at least 2 rollouts per problem"));
        }
        if !(1..=5).contains(&self.curriculum_threshold) {
            return Err(Error::config("curriculum_threshold", "must be in 1..=5"));
        }
        if self.dynamic_retry_cap == 0 {
            return Err(Error::config("dynamic_retry_cap", "must be positive"));
        }
        if !(self.dynamic_oversample_factor >= 1.0) {
            return Err(Error::config("dynamic_oversample_factor", "must be at least 1"));
        }
        Ok(())
    }

    /// SHA-256 over the configuration, ignoring the output location.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = None;
        hex_digest(&serde_json::to_vec(&canonical).expect("config serializes"))
    }
}

/// SplitMix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub metrics: StepMetrics,
    pub batch: Vec<ProblemId>,
    pub was_warmup: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub bank_seed: u64,
    pub bank_hash: String,
    pub config_hash: String,
    pub steps: usize,
    pub batch_size: usize,
    pub warmup_window: usize,
    pub final_ability: f64,
    pub mean_reward: f64,
    pub mean_zero_gradient_fraction_post_warmup: Option<f64>,
    pub cumulative_rollouts: u64,
    /// Expected zero-gradient share of the whole bank, averaged over steps.
    pub mean_bank_zero_gradient_fraction: f64,
    pub uniform_fallbacks: u64,
    pub spearman_difficulty_pass_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub bank_hash: String,
    pub config: ExperimentConfig,
    pub step: usize,
    pub sampler: Sampler,
    pub learner: LearnerState,
    pub metrics: Vec<StepMetrics>,
    pub batches: Vec<Vec<ProblemId>>,
    pub last_pass_rate: Vec<Option<f64>>,
    pub bank_zero_gradient: Vec<f64>,
}

impl Checkpoint {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// One training run in progress.
#[derive(Clone, Debug)]
pub struct Experiment {
    config: ExperimentConfig,
    bank: ProblemBank,
    bank_hash: String,
    sampler: Sampler,
    learner: LearnerState,
    metrics: Vec<StepMetrics>,
    batches: Vec<Vec<ProblemId>>,
    last_pass_rate: Vec<Option<f64>>,
    bank_zero_gradient: Vec<f64>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let bank = ProblemBank::generate(&config.bank_config())?;
        let learner = LearnerState::from_config(
            &config.learner,
            &bank,
            config.rollouts,
            derive_seed(config.seed, LEARNER_STREAM),
        )?;
        let sampler_seed = derive_seed(config.seed, SAMPLER_STREAM);
        let sampler = match config.strategy.baseline() {
            None => Sampler::Cdas(CdasState::new(
                bank.sampler_view(),
                config.batch_size,
                &CdasConfig {
                    symmetric: config.symmetric,
                    warmup: config.warmup,
                    ..CdasConfig::default()
                },
                sampler_seed,
            )?),
            Some(strategy) => Sampler::Baseline(BaselineState::new(
                bank.sampler_view(),
                strategy,
                BaselineConfig {
                    curriculum_switch_step: config
                        .curriculum_switch_step
                        .unwrap_or(config.total_steps as u64 / 2),
                    curriculum_threshold: config.curriculum_threshold,
                    dynamic_oversample_factor: config.dynamic_oversample_factor,
                    dynamic_retry_cap: config.dynamic_retry_cap,
                    prioritized_initial_weight: 1.0,
                },
                sampler_seed,
            )?),
        };
        let n = bank.len();
        Ok(Self {
            bank_hash: bank.hash(),
            config,
            bank,
            sampler,
            learner,
            metrics: Vec::new(),
            batches: Vec::new(),
            last_pass_rate: vec![None; n],
            bank_zero_gradient: Vec::new(),
        })
    }

    pub fn from_checkpoint(checkpoint: Checkpoint) -> Result<Self> {
        if checkpoint.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "written by format version {}, this build reads version {CHECKPOINT_VERSION}",
                checkpoint.version
            )));
        }
        let actual = checkpoint.config.hash();
        if actual != checkpoint.config_hash {
            return Err(Error::Checkpoint(format!(
                "config hash mismatch: recorded {}, config hashes to {actual}",
                checkpoint.config_hash
            )));
        }
        checkpoint.config.validate()?;
        let bank = ProblemBank::generate(&checkpoint.config.bank_config())?;
        let bank_hash = bank.hash();
        if bank_hash != checkpoint.bank_hash {
            return Err(Error::Checkpoint(format!(
                "bank hash mismatch: recorded {}, regenerated {bank_hash}",
                checkpoint.bank_hash
            )));
        }
        let step = checkpoint.step;
        if checkpoint.metrics.len() != step
            || checkpoint.batches.len() != step
            || checkpoint.bank_zero_gradient.len() != step
            || checkpoint.last_pass_rate.len() != bank.len()
        {
            return Err(Error::Checkpoint("step history does not match recorded step".into()));
        }
        Ok(Self {
            config: checkpoint.config,
            bank,
            bank_hash,
            sampler: checkpoint.sampler,
            learner: checkpoint.learner,
            metrics: checkpoint.metrics,
            batches: checkpoint.batches,
            last_pass_rate: checkpoint.last_pass_rate,
            bank_zero_gradient: checkpoint.bank_zero_gradient,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config_hash: self.config.hash(),
            bank_hash: self.bank_hash.clone(),
            config: self.config.clone(),
            step: self.step(),
            sampler: self.sampler.clone(),
            learner: self.learner.clone(),
            metrics: self.metrics.clone(),
            batches: self.batches.clone(),
            last_pass_rate: self.last_pass_rate.clone(),
            bank_zero_gradient: self.bank_zero_gradient.clone(),
        }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn bank(&self) -> &ProblemBank {
        &self.bank
    }

    pub fn bank_hash(&self) -> &str {
        &self.bank_hash
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn learner(&self) -> &LearnerState {
        &self.learner
    }

    pub fn metrics(&self) -> &[StepMetrics] {
        &self.metrics
    }

    pub fn batches(&self) -> &[Vec<ProblemId>] {
        &self.batches
    }

    pub fn bank_zero_gradient(&self) -> &[f64] {
        &self.bank_zero_gradient
    }

    pub fn last_pass_rates(&self) -> &[Option<f64>] {
        &self.last_pass_rate
    }

    pub fn step(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_finished(&self) -> bool {
        self.step() >= self.config.total_steps
    }

    fn problem_index(&self, id: ProblemId) -> Result<usize> {
        let idx = id.0 as usize;
        if idx < self.bank.len() {
            Ok(idx)
        } else {
            Err(Error::Consistency(format!("problem {id} not in bank")))
        }
    }

    /// Select, roll out, score, update sampler and learner, record metrics.
    pub fn step_once(&mut self) -> Result<StepOutcome> {
        let n = self.step() as u64 + 1;
        let batch_size = self.config.batch_size;
        let was_warmup = self.sampler.in_warmup();
        self.bank_zero_gradient
            .push(self.learner.bank_zero_gradient_fraction(&self.bank));

        let (batch, groups, consumed) = if self.sampler.is_dynamic() {
            let Sampler::Baseline(state) = &mut self.sampler else {
                unreachable!("dynamic sampling is a baseline strategy")
            };
            let learner = &mut self.learner;
            let bank = &self.bank;
            let mut rolled: HashMap<ProblemId, RolloutGroup> = HashMap::new();
            let picked = state.dynamic_select_and_filter(batch_size, |id| {
                let problem = bank
                    .problems
                    .get(id.0 as usize)
                    .ok_or_else(|| Error::Consistency(format!("problem {id} not in bank")))?;
                let group = learner.rollout(problem)?;
                let obs = group.observation(n);
                rolled.insert(id, group);
                Ok(obs)
            })?;
            let groups = picked
                .ids
                .iter()
                .map(|id| rolled.remove(id).expect("every returned id was rolled out"))
                .collect();
            (picked.ids, groups, picked.rollouts_consumed as u64)
        } else {
            let batch = self.sampler.select_batch(batch_size)?;
            let groups = batch
                .iter()
                .map(|&id| {
                    let idx = self.problem_index(id)?;
                    self.learner.rollout(&self.bank.problems[idx])
                })
                .collect::<Result<Vec<_>>>()?;
            (batch, groups, batch_size as u64)
        };

        let mut signals = Vec::with_capacity(groups.len());
        for g in &groups {
            signals.push((g.pass_rate(), group_advantages(g)?.zero_gradient));
        }
        let observations: Vec<PassRateObservation> = groups.iter().map(|g| g.observation(n)).collect();
        self.sampler.report_outcomes(&observations)?;
        self.learner.learn_step(&signals)?;
        for o in &observations {
            let idx = self.problem_index(o.problem_id)?;
            self.last_pass_rate[idx] = Some(o.pass_rate);
        }

        let metrics = summarize_step(n, &groups, consumed, &self.sampler, self.learner.ability)?;
        self.metrics.push(metrics.clone());
        self.batches.push(batch.clone());
        Ok(StepOutcome {
            metrics,
            batch,
            was_warmup,
        })
    }

    /// Runs until `step` steps have completed (capped at the configured total).
    pub fn run_until(&mut self, step: usize) -> Result<()> {
        let target = step.min(self.config.total_steps);
        while self.step() < target {
            self.step_once()?;
        }
        Ok(())
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        self.run_until(self.config.total_steps)
    }

    pub fn metrics_rows(&self) -> Vec<MetricsRow> {
        let strategy = self.config.strategy.as_str();
        self.metrics
            .iter()
            .map(|m| MetricsRow::new(m, strategy, self.config.seed))
            .collect()
    }

    pub fn summary(&self) -> RunSummary {
        let window = self.config.warmup_window();
        let post: Vec<f64> = self
            .metrics
            .iter()
            .filter(|m| m.step as usize > window)
            .map(|m| m.zero_gradient_fraction)
            .collect();
        let mean = |xs: &[f64]| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        let rewards: Vec<f64> = self.metrics.iter().map(|m| m.mean_reward).collect();
        let table = difficulty_passrate_table(&self.sampler, &self.last_pass_rate);
        let ds: Vec<f64> = table.iter().map(|r| r.difficulty).collect();
        let ss: Vec<f64> = table.iter().map(|r| r.final_pass_rate).collect();
        RunSummary {
            strategy: self.config.strategy,
            seed: self.config.seed,
            bank_seed: self.config.bank_seed(),
            bank_hash: self.bank_hash.clone(),
            config_hash: self.config.hash(),
            steps: self.step(),
            batch_size: self.config.batch_size,
            warmup_window: window,
            final_ability: self.learner.ability,
            mean_reward: mean(&rewards).unwrap_or(0.0),
            mean_zero_gradient_fraction_post_warmup: mean(&post),
            cumulative_rollouts: self.metrics.iter().map(|m| m.rollout_batches_consumed).sum(),
            mean_bank_zero_gradient_fraction: mean(&self.bank_zero_gradient).unwrap_or(0.0),
            uniform_fallbacks: self.sampler.uniform_fallbacks(),
            spearman_difficulty_pass_rate: spearman(&ds, &ss),
        }
    }

    /// Writes `metrics.csv`, `summary.json`, `checkpoint.json`,
    /// `problems.csv` and `batches.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let metrics_path = dir.join("metrics.csv");
        let file = fs::File::create(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        write_metrics_csv(BufWriter::new(file), &self.metrics_rows())?;
        write_json(&dir.join("summary.json"), &self.summary())?;
        self.checkpoint().write(&dir.join("checkpoint.json"))?;
        self.write_problems_csv(&dir.join("problems.csv"))?;
        self.write_batches_csv(&dir.join("batches.csv"))
    }

    fn write_problems_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["problem_id", "level_tag", "t", "difficulty", "final_pass_rate"])?;
        for (r, s) in self.sampler.records().iter().zip(&self.last_pass_rate) {
            w.write_record([
                r.id.to_string(),
                r.level_tag.map(|l| l.to_string()).unwrap_or_default(),
                r.t.to_string(),
                r.difficulty.to_string(),
                s.map(|s| s.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    fn write_batches_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(["step", "problem_ids"])?;
        for (i, batch) in self.batches.iter().enumerate() {
            let ids: Vec<String> = batch.iter().map(ToString::to_string).collect();
            w.write_record([(i + 1).to_string(), ids.join(" ")])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// A finished run: its summary and per-step rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub summary: RunSummary,
    pub rows: Vec<MetricsRow>,
}

pub fn run(config: ExperimentConfig) -> Result<Experiment> {
    let mut exp = Experiment::new(config)?;
    exp.run_to_end()?;
    Ok(exp)
}

fn strip_strategy(config: &ExperimentConfig) -> serde_json::Value {
    let mut c = config.clone();
    c.strategy = StrategyKind::Cdas;
    c.output = None;
    serde_json::to_value(c).expect("config serializes")
}

/// Runs every config on the same frozen bank. Configs must be identical
/// apart from their strategy.
pub fn compare(configs: &[ExperimentConfig]) -> Result<Vec<RunResult>> {
    let Some(first) = configs.first() else {
        return Err(Error::config("strategies", "nothing to compare"));
    };
    let reference = strip_strategy(first);
    for c in &configs[1..] {
        if c.bank_seed() != first.bank_seed() {
            return Err(Error::config(
                "bank.seed",
                format!("bank seeds differ: {} vs {}", first.bank_seed(), c.bank_seed()),
            ));
        }
        if strip_strategy(c) != reference {
            return Err(Error::config(
                "strategy",
                "compared configs may differ only in their strategy",
            ));
        }
    }
    configs
        .par_iter()
        .map(|c| {
            let exp = run(c.clone())?;
            Ok(RunResult {
                summary: exp.summary(),
                rows: exp.metrics_rows(),
            })
        })
        .collect()
}

/// One [`compare`] per seed; each seed gets its own bank.
pub fn sweep(base: &ExperimentConfig, strategies: &[StrategyKind], seeds: &[u64]) -> Result<Vec<RunResult>> {
    if strategies.is_empty() {
        return Err(Error::config("strategies", "at least one strategy is required"));
    }
    let groups = seeds
        .par_iter()
        .map(|&seed| {
            let configs: Vec<ExperimentConfig> = strategies
                .iter()
                .map(|&strategy| ExperimentConfig {
                    seed,
                    strategy,
                    bank: BankParams {
                        seed: None,
                        ..base.bank.clone()
                    },
                    ..base.clone()
                })
                .collect();
            compare(&configs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(groups.into_iter().flatten().collect())
}

/// Writes `comparison.csv` (all per-step rows), `summary.csv` and
/// `summary.json` into `dir`.
pub fn write_comparison(dir: &Path, results: &[RunResult]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("comparison.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let rows: Vec<MetricsRow> = results.iter().flat_map(|r| r.rows.iter().cloned()).collect();
    write_metrics_csv(BufWriter::new(file), &rows)?;

    let path = dir.join("summary.csv");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record([
        "strategy",
        "seed",
        "bank_hash",
        "final_ability",
        "mean_zero_gradient_fraction_post_warmup",
        "cumulative_rollouts",
        "mean_bank_zero_gradient_fraction",
    ])?;
    for r in results {
        let s = &r.summary;
        w.write_record([
            s.strategy.to_string(),
            s.seed.to_string(),
            s.bank_hash.clone(),
            s.final_ability.to_string(),
            s.mean_zero_gradient_fraction_post_warmup
                .map(|x| x.to_string())
                .unwrap_or_default(),
            s.cumulative_rollouts.to_string(),
            s.mean_bank_zero_gradient_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let summaries: Vec<&RunSummary> = results.iter().map(|r| &r.summary).collect();
    write_json(&dir.join("summary.json"), &summaries)
}
