//! Competence and difficulty bookkeeping shared by every sampler.
//!
//! A problem's *instantaneous difficulty* at a step is the gap between the
//! pass rate the model was expected to reach, `σ(C − D)`, and the pass rate it
//! actually reached. Its *stable difficulty* is the running mean of those
//! gaps, and the model's *competence* is the negated mean stable difficulty
//! over the whole problem set. Everything here is a pure function.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Beyond this magnitude the logistic curve is reported as saturated.
pub const SIGMOID_SATURATION: f64 = 40.0;

/// Opaque identifier of a training problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProblemId(pub u32);

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One training problem together with its difficulty estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: ProblemId,
    /// Prior curriculum label in `1..=5`.
    pub level_tag: Option<u8>,
    /// Latent difficulty known only to the simulator.
    pub true_difficulty: Option<f64>,
    /// Number of times the problem has been sampled.
    pub t: u32,
    /// Running mean of instantaneous difficulties (`initial` while `t == 0`).
    pub difficulty: f64,
}

impl ProblemRecord {
    pub fn new(id: ProblemId) -> Self {
        Self {
            id,
            level_tag: None,
            true_difficulty: None,
            t: 0,
            difficulty: 0.0,
        }
    }

    pub fn with_level(mut self, level: u8) -> Self {
        self.level_tag = Some(level);
        self
    }

    pub fn with_true_difficulty(mut self, b: f64) -> Self {
        self.true_difficulty = Some(b);
        self
    }

    pub fn with_initial_difficulty(mut self, d0: f64) -> Self {
        self.difficulty = d0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(level) = self.level_tag {
            if !(1..=5).contains(&level) {
                return Err(Error::Domain(format!(
                    "problem {}: level tag {level} outside 1..=5",
                    self.id
                )));
            }
        }
        if !self.difficulty.is_finite() {
            return Err(Error::Domain(format!("problem {}: non-finite difficulty", self.id)));
        }
        Ok(())
    }
}

/// Scalar competence `C_n` and the number of completed update steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompetenceState {
    pub competence: f64,
    pub step: u64,
}

/// Observed pass rate of one problem at one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassRateObservation {
    pub problem_id: ProblemId,
    pub pass_rate: f64,
    pub step: u64,
}

/// Unchecked logistic function with the saturation convention applied.
#[inline]
pub(crate) fn logistic(z: f64) -> f64 {
    if z > SIGMOID_SATURATION {
        1.0 - f64::EPSILON
    } else if z < -SIGMOID_SATURATION {
        0.0
    } else if z >= 0.0 {
        (1.0 / (1.0 + (-z).exp())).min(1.0 - f64::EPSILON)
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {x}")))
    }
}

pub fn sigmoid(z: f64) -> Result<f64> {
    Ok(logistic(finite("sigmoid argument", z)?))
}

/// Probability with which a model of competence `competence` is expected to
/// solve a problem of stable difficulty `difficulty`.
pub fn expected_performance(competence: f64, difficulty: f64) -> Result<f64> {
    let c = finite("competence", competence)?;
    let d = finite("difficulty", difficulty)?;
    Ok(logistic(c - d))
}

/// Expected minus observed pass rate. Positive values mean the model did
/// worse on the problem than its current estimates predicted.
pub fn instantaneous_difficulty(competence: f64, difficulty: f64, pass_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pass_rate) {
        return Err(Error::Domain(format!("pass rate {pass_rate} outside [0, 1]")));
    }
    Ok(expected_performance(competence, difficulty)? - pass_rate)
}

/// Folds one more instantaneous difficulty into the record's running mean.
pub fn update_difficulty(record: &ProblemRecord, d_new: f64) -> Result<ProblemRecord> {
    if !(-1.0..=1.0).contains(&d_new) {
        return Err(Error::Domain(format!(
            "instantaneous difficulty {d_new} outside [-1, 1]"
        )));
    }
    let t = record.t.checked_add(1).ok_or_else(|| {
        Error::Domain(format!("problem {}: sampling count overflow", record.id))
    })?;
    let tf = f64::from(t);
    let mut next = record.clone();
    next.t = t;
    next.difficulty = (tf - 1.0) / tf * record.difficulty + d_new / tf;
    Ok(next)
}

/// Negated mean difficulty over every record, sampled or not.
pub fn update_competence(records: &[ProblemRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::Domain("competence of an empty problem set".into()));
    }
    let sum: f64 = records.iter().map(|r| r.difficulty).sum();
    Ok(-(sum / records.len() as f64))
}

#[inline]
pub fn alignment(competence: f64, difficulty: f64) -> f64 {
    (competence - difficulty).abs()
}

/// Records kept sorted by id so lookups stay deterministic and serializable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProblemSet {
    records: Vec<ProblemRecord>,
}

impl ProblemSet {
    pub fn new(mut records: Vec<ProblemRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::config("n_problems", "problem set is empty"));
        }
        records.sort_by_key(|r| r.id);
        for pair in records.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::config("problems", format!("duplicate id {}", pair[0].id)));
            }
        }
        for r in &records {
            r.validate()?;
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn as_slice(&self) -> &[ProblemRecord] {
        &self.records
    }

    pub fn position(&self, id: ProblemId) -> Option<usize> {
        self.records.binary_search_by_key(&id, |r| r.id).ok()
    }

    pub fn get(&self, id: ProblemId) -> Option<&ProblemRecord> {
        self.position(id).map(|i| &self.records[i])
    }

    pub(crate) fn replace(&mut self, index: usize, record: ProblemRecord) {
        debug_assert_eq!(self.records[index].id, record.id);
        self.records[index] = record;
    }

    pub fn ids(&self) -> impl Iterator<Item = ProblemId> + '_ {
        self.records.iter().map(|r| r.id)
    }
}

/// Resolves every observation to a record index, rejecting unknown and
/// repeated ids, and checks pass-rate ranges.
pub(crate) fn resolve_outcomes(
    set: &ProblemSet,
    outcomes: &[PassRateObservation],
) -> Result<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    outcomes
        .iter()
        .map(|o| {
            let idx = set.position(o.problem_id).ok_or_else(|| {
                Error::Consistency(format!("unknown problem id {}", o.problem_id))
            })?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Consistency(format!(
                    "problem {} reported twice in one batch",
                    o.problem_id
                )));
            }
            if !(0.0..=1.0).contains(&o.pass_rate) {
                return Err(Error::Domain(format!(
                    "problem {}: pass rate {} outside [0, 1]",
                    o.problem_id, o.pass_rate
                )));
            }
            Ok(idx)
        })
        .collect()
}

/// Applies one batch of observations with every instantaneous difficulty
/// computed against the same pre-update competence, then recomputes
/// competence once. Returns the new competence.
pub(crate) fn apply_outcomes(
    set: &mut ProblemSet,
    competence: f64,
    outcomes: &[PassRateObservation],
    indices: &[usize],
) -> Result<f64> {
    let updates = indices
        .iter()
        .zip(outcomes)
        .map(|(&idx, o)| {
            let record = &set.as_slice()[idx];
            let d = instantaneous_difficulty(competence, record.difficulty, o.pass_rate)?;
            Ok((idx, update_difficulty(record, d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    for (idx, record) in updates {
        set.replace(idx, record);
    }
    update_competence(set.as_slice())
}
