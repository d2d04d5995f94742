//! Perspicuity verdicts: normalize, translate, check soundness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{detect_blocks, BlockSummary};
use crate::eventlog::EventLog;
use crate::metrics::{session_metrics, MetricError, SessionMetrics};
use crate::normalize::{normalize, NormalizationOutcome, NormalizeError, Rejection};
use crate::replay::{final_model, ProcessModel};
use crate::soundness::{check_soundness, SoundnessReport, Verdict};
use crate::wfnet::{is_wf_structured, to_wfnet};

/// How far a model got through the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    MixedGateway,
    #[serde(rename = "NotWFStructured")]
    NotWfStructured,
    Unsound,
    StateSpaceExceeded,
    Sound,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::MixedGateway => "MixedGateway",
            Stage::NotWfStructured => "NotWFStructured",
            Stage::Unsound => "Unsound",
            Stage::StateSpaceExceeded => "StateSpaceExceeded",
            Stage::Sound => "Sound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerspicuityVerdict {
    pub perspicuous: bool,
    pub stage: Stage,
    pub normalization: NormalizationOutcome,
    pub soundness: Option<SoundnessReport>,
}

impl PerspicuityVerdict {
    fn new(stage: Stage, normalization: NormalizationOutcome, soundness: Option<SoundnessReport>) -> Self {
        PerspicuityVerdict { perspicuous: stage == Stage::Sound, stage, normalization, soundness }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Metrics(#[from] MetricError),
}

pub fn classify_model(model: &ProcessModel, max_states: usize) -> Result<PerspicuityVerdict, ClassifyError> {
    let outcome = normalize(model)?;
    let normalized = match outcome.rejection() {
        Some(Rejection::MixedGateway(_)) => return Ok(PerspicuityVerdict::new(Stage::MixedGateway, outcome, None)),
        Some(_) => return Ok(PerspicuityVerdict::new(Stage::NotWfStructured, outcome, None)),
        None => outcome.model().expect("accepted outcome carries a model"),
    };
    let net = match to_wfnet(normalized) {
        Ok(net) if is_wf_structured(&net).wf_structured => net,
        _ => return Ok(PerspicuityVerdict::new(Stage::NotWfStructured, outcome, None)),
    };
    let report = check_soundness(&net, max_states);
    let stage = match report.verdict {
        Verdict::Sound => Stage::Sound,
        Verdict::Unsound => Stage::Unsound,
        Verdict::Unknown => Stage::StateSpaceExceeded,
    };
    Ok(PerspicuityVerdict::new(stage, outcome, Some(report)))
}

/// Everything computed for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionReport {
    pub session_id: String,
    pub metrics: SessionMetrics,
    pub blocks: Vec<BlockSummary>,
    pub verdict: PerspicuityVerdict,
}

pub fn classify_session(log: &EventLog, max_states: usize) -> Result<SessionReport, ClassifyError> {
    if log.is_empty() {
        return Err(MetricError::EmptyLog.into());
    }
    let model = final_model(log).map_err(MetricError::from)?;
    let blocks = detect_blocks(&model, log).map_err(MetricError::from)?;
    let metrics = session_metrics(log, &blocks)?;
    let verdict = classify_model(&model, max_states)?;
    Ok(SessionReport {
        session_id: log.session_id().to_string(),
        metrics,
        blocks: blocks.iter().map(|b| BlockSummary::new(b, log)).collect(),
        verdict,
    })
}
