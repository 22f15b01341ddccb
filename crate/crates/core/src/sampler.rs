use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineState, BaselineStrategy};
use crate::cdas::CdasState;
use crate::error::Result;
use crate::scheduler::{CompetenceState, PassRateObservation, ProblemId, ProblemRecord};

/// Any of the sampling strategies behind one select/report surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "snake_case")]
pub enum Sampler {
    Cdas(CdasState),
    Baseline(BaselineState),
}

impl Sampler {
    pub fn records(&self) -> &[ProblemRecord] {
        match self {
            Sampler::Cdas(s) => s.records(),
            Sampler::Baseline(s) => s.records(),
        }
    }

    pub fn record(&self, id: ProblemId) -> Option<&ProblemRecord> {
        match self {
            Sampler::Cdas(s) => s.record(id),
            Sampler::Baseline(s) => s.record(id),
        }
    }

    pub fn competence(&self) -> CompetenceState {
        match self {
            Sampler::Cdas(s) => s.competence(),
            Sampler::Baseline(s) => s.competence(),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, Sampler::Baseline(s) if s.strategy() == BaselineStrategy::Dynamic)
    }

    pub fn in_warmup(&self) -> bool {
        matches!(self, Sampler::Cdas(s) if s.in_warmup())
    }

    pub fn select_batch(&mut self, batch_size: usize) -> Result<Vec<ProblemId>> {
        match self {
            Sampler::Cdas(s) => s.select_batch(batch_size),
            Sampler::Baseline(s) => s.select_batch(batch_size),
        }
    }

    pub fn report_outcomes(&mut self, outcomes: &[PassRateObservation]) -> Result<()> {
        match self {
            Sampler::Cdas(s) => s.report_outcomes(outcomes),
            Sampler::Baseline(s) => s.report_outcomes(outcomes),
        }
    }

    pub fn uniform_fallbacks(&self) -> u64 {
        match self {
            Sampler::Cdas(_) => 0,
            Sampler::Baseline(s) => s.uniform_fallbacks(),
        }
    }
}
