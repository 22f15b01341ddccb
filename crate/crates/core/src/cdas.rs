//! Competence-difficulty alignment sampling.
//!
//! After an optional warm-up epoch that walks a fixed random permutation of
//! the problem set, each batch is drawn from the problems whose stable
//! difficulty sits closest to the current competence. In symmetric mode half
//! the batch comes from the slightly-harder side (`D > C`) and half from the
//! slightly-easier side (`D <= C`).

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{
    alignment, apply_outcomes, resolve_outcomes, CompetenceState, PassRateObservation, ProblemId,
    ProblemRecord, ProblemSet,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdasConfig {
    pub symmetric: bool,
    pub warmup: bool,
    /// Overrides the default warm-up length of one epoch.
    pub warmup_steps: Option<usize>,
    pub initial_difficulty: f64,
    pub initial_competence: f64,
}

impl Default for CdasConfig {
    fn default() -> Self {
        Self {
            symmetric: true,
            warmup: true,
            warmup_steps: None,
            initial_difficulty: 0.0,
            initial_competence: 0.0,
        }
    }
}

/// Which side of the competence line a problem falls on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `D > C`
    Harder,
    /// `D <= C`
    Easier,
}

pub fn side(competence: f64, difficulty: f64) -> Side {
    if difficulty > competence {
        Side::Harder
    } else {
        Side::Easier
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdasState {
    records: ProblemSet,
    competence: CompetenceState,
    warmup_steps: usize,
    symmetric: bool,
    rng: ChaCha8Rng,
    warmup_order: Vec<ProblemId>,
    batch_size: usize,
    /// Ids handed out by the most recent `select_batch`.
    pending: Vec<ProblemId>,
}

impl CdasState {
    pub fn new(
        records: Vec<ProblemRecord>,
        batch_size: usize,
        config: &CdasConfig,
        seed: u64,
    ) -> Result<Self> {
        let records = records
            .into_iter()
            .map(|r| ProblemRecord {
                t: 0,
                difficulty: config.initial_difficulty,
                ..r
            })
            .collect();
        let records = ProblemSet::new(records)?;
        let n = records.len();
        check_batch(n, batch_size, config.symmetric)?;
        if !config.initial_competence.is_finite() || !config.initial_difficulty.is_finite() {
            return Err(Error::config("initial_competence", "initial values must be finite"));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut warmup_order: Vec<ProblemId> = records.ids().collect();
        warmup_order.shuffle(&mut rng);

        let warmup_steps = match (config.warmup, config.warmup_steps) {
            (false, _) => 0,
            (true, Some(k)) => k,
            (true, None) => n.div_ceil(batch_size),
        };
        Ok(Self {
            records,
            competence: CompetenceState {
                competence: config.initial_competence,
                step: 0,
            },
            warmup_steps,
            symmetric: config.symmetric,
            rng,
            warmup_order,
            batch_size,
            pending: Vec::new(),
        })
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

    pub fn warmup_steps(&self) -> usize {
        self.warmup_steps
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn warmup_order(&self) -> &[ProblemId] {
        &self.warmup_order
    }

    pub fn in_warmup(&self) -> bool {
        (self.competence.step as usize) < self.warmup_steps
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Ids of the next batch. Does not mutate difficulty estimates.
    pub fn select_batch(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        check_batch(self.records.len(), batch_size, self.symmetric && !self.in_warmup())?;
        let batch = if self.in_warmup() {
            self.warmup_chunk(batch_size)
        } else if self.symmetric {
            self.symmetric_batch(batch_size)
        } else {
            let mut all = self.ranked(|_| true);
            all.truncate(batch_size);
            all
        };
        self.pending.clone_from(&batch);
        Ok(batch)
    }

    fn warmup_chunk(&self, batch_size: usize) -> Vec<ProblemId> {
        let n = self.warmup_order.len();
        // The last chunk of an epoch wraps into the start of the permutation.
        let start = (self.competence.step as usize * batch_size) % n;
        (0..batch_size)
            .map(|i| self.warmup_order[(start + i) % n])
            .collect()
    }

    /// Ids matching `keep`, ordered by alignment then ascending id.
    fn ranked(&self, keep: impl Fn(&ProblemRecord) -> bool) -> Vec<ProblemId> {
        let c = self.competence.competence;
        let mut scored: Vec<(f64, ProblemId)> = self
            .records
            .as_slice()
            .iter()
            .filter(|r| keep(r))
            .map(|r| (alignment(c, r.difficulty), r.id))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.into_iter().map(|(_, id)| id).collect()
    }

    fn symmetric_batch(&self, batch_size: usize) -> Vec<ProblemId> {
        let c = self.competence.competence;
        let half = batch_size / 2;
        let easier = self.ranked(|r| side(c, r.difficulty) == Side::Easier);
        let harder = self.ranked(|r| side(c, r.difficulty) == Side::Harder);

        let take_easier = half.min(easier.len());
        let take_harder = half.min(harder.len());
        let mut batch: Vec<ProblemId> = easier[..take_easier]
            .iter()
            .chain(&harder[..take_harder])
            .copied()
            .collect();

        // Shortfall on one side is filled with the best leftovers of the other.
        let deficit = batch_size - batch.len();
        if deficit > 0 {
            let mut rest: Vec<ProblemId> = easier[take_easier..]
                .iter()
                .chain(&harder[take_harder..])
                .copied()
                .collect();
            rest.sort_by(|a, b| self.cmp_alignment(*a, *b));
            batch.extend(rest.into_iter().take(deficit));
        }
        batch
    }

    fn cmp_alignment(&self, a: ProblemId, b: ProblemId) -> Ordering {
        let c = self.competence.competence;
        let da = self.records.get(a).map_or(f64::INFINITY, |r| alignment(c, r.difficulty));
        let db = self.records.get(b).map_or(f64::INFINITY, |r| alignment(c, r.difficulty));
        da.total_cmp(&db).then(a.cmp(&b))
    }

    /// Folds one batch of pass rates into the difficulty estimates and
    /// recomputes competence. All outcomes see the pre-update competence.
    pub fn report_outcomes(&mut self, outcomes: &[PassRateObservation]) -> Result<()> {
        let indices = resolve_outcomes(&self.records, outcomes)?;
        if let Some(stray) = outcomes.iter().find(|o| !self.pending.contains(&o.problem_id)) {
            return Err(Error::Consistency(format!(
                "problem {} was not in the most recent batch",
                stray.problem_id
            )));
        }
        let competence = apply_outcomes(
            &mut self.records,
            self.competence.competence,
            outcomes,
            &indices,
        )?;
        self.competence = CompetenceState {
            competence,
            step: self.competence.step + 1,
        };
        self.pending.clear();
        Ok(())
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }
}

fn check_batch(n: usize, batch_size: usize, needs_even: bool) -> Result<()> {
    if batch_size == 0 {
        return Err(Error::config("batch_size", "must be positive"));
    }
    if batch_size > n {
        return Err(Error::config(
            "batch_size",
            format!("batch size {batch_size} exceeds problem count {n}"),
        ));
    }
    if needs_even && !batch_size.is_multiple_of(2) {
        return Err(Error::config(
            "batch_size",
            format!("symmetric sampling needs an even batch size, got {batch_size}"),
        ));
    }
    Ok(())
}
