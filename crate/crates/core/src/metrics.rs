//! The six per-session measures of how a model was built.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blocks::{detect_blocks, max_simul_block, perc_blocks_as_whole, Block, BlockError};
use crate::eventlog::{EventClass, EventLog, ModelingEvent};
use crate::replay::{final_model, ReplayError};
use crate::{Measure, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MaxSimulBlock,
    PercNumBlockAsAWhole,
    AvgMoveOnMovedElements,
    PercNumElementsWithMoves,
    TotTime,
    TotCreateTime,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::MaxSimulBlock,
        Metric::PercNumBlockAsAWhole,
        Metric::AvgMoveOnMovedElements,
        Metric::PercNumElementsWithMoves,
        Metric::TotTime,
        Metric::TotCreateTime,
    ];

    /// Display name, e.g. `MaxSimulBlock`.
    pub fn name(self) -> &'static str {
        match self {
            Metric::MaxSimulBlock => "MaxSimulBlock",
            Metric::PercNumBlockAsAWhole => "PercNumBlockAsAWhole",
            Metric::AvgMoveOnMovedElements => "AvgMoveOnMovedElements",
            Metric::PercNumElementsWithMoves => "PercNumElementsWithMoves",
            Metric::TotTime => "TotTime",
            Metric::TotCreateTime => "TotCreateTime",
        }
    }

    /// JSON field name in session reports.
    pub fn key(self) -> &'static str {
        match self {
            Metric::MaxSimulBlock => "max_simul_block",
            Metric::PercNumBlockAsAWhole => "perc_num_block_as_a_whole",
            Metric::AvgMoveOnMovedElements => "avg_move_on_moved_elements",
            Metric::PercNumElementsWithMoves => "perc_num_elements_with_moves",
            Metric::TotTime => "tot_time",
            Metric::TotCreateTime => "tot_create_time",
        }
    }

    /// Conjecture the metric belongs to: structuring, movement or speed.
    pub fn conjecture(self) -> &'static str {
        match self {
            Metric::MaxSimulBlock | Metric::PercNumBlockAsAWhole => "C1",
            Metric::AvgMoveOnMovedElements | Metric::PercNumElementsWithMoves => "C2",
            Metric::TotTime | Metric::TotCreateTime => "C3",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || m.key() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("empty session: no events")]
    EmptyLog,
    #[error("empty session: no objects created")]
    EmptySession,
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Blocks(#[from] BlockError),
}

/// Durations are exact seconds at millisecond resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionMetrics {
    pub max_simul_block: u32,
    pub perc_num_block_as_a_whole: Measure,
    pub avg_move_on_moved_elements: Measure,
    pub perc_num_elements_with_moves: Rational,
    pub tot_time: Rational,
    pub tot_create_time: Rational,
}

impl SessionMetrics {
    pub fn get(&self, metric: Metric) -> Measure {
        match metric {
            Metric::MaxSimulBlock => Measure::Value(Rational::from_integer(self.max_simul_block as i64)),
            Metric::PercNumBlockAsAWhole => self.perc_num_block_as_a_whole,
            Metric::AvgMoveOnMovedElements => self.avg_move_on_moved_elements,
            Metric::PercNumElementsWithMoves => Measure::Value(self.perc_num_elements_with_moves),
            Metric::TotTime => Measure::Value(self.tot_time),
            Metric::TotCreateTime => Measure::Value(self.tot_create_time),
        }
    }
}

impl Serialize for SessionMetrics {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut out = s.serialize_map(Some(Metric::ALL.len()))?;
        out.serialize_entry(Metric::MaxSimulBlock.key(), &self.max_simul_block)?;
        for m in &Metric::ALL[1..] {
            out.serialize_entry(m.key(), &self.get(*m).to_f64())?;
        }
        out.end()
    }
}

fn is_move(e: &ModelingEvent) -> bool {
    e.class() == EventClass::Move
}

fn is_create(e: &ModelingEvent) -> bool {
    // A reconnect stands for a delete followed by a create.
    matches!(e.class(), EventClass::Create | EventClass::Reconnect)
}

/// Mean number of moves over the objects moved at least once.
pub fn avg_move_on_moved_elements(log: &EventLog) -> Measure {
    let mut per_object: BTreeMap<&str, i64> = BTreeMap::new();
    for e in log.events().iter().filter(|e| is_move(e)) {
        *per_object.entry(&e.object_id).or_default() += 1;
    }
    if per_object.is_empty() {
        return Measure::NotApplicable;
    }
    let moves: i64 = per_object.values().sum();
    Measure::Value(Rational::new(moves, per_object.len() as i64))
}

/// Moved objects over every object ever created, deleted ones included.
pub fn perc_num_elements_with_moves(log: &EventLog) -> Result<Rational, MetricError> {
    let created: BTreeSet<&str> = log.events().iter().filter(|e| is_create(e)).map(|e| e.object_id.as_str()).collect();
    if created.is_empty() {
        return Err(MetricError::EmptySession);
    }
    let moved: BTreeSet<&str> = log.events().iter().filter(|e| is_move(e)).map(|e| e.object_id.as_str()).collect();
    Ok(Rational::new(moved.len() as i64, created.len() as i64))
}

fn span_seconds<'a>(mut events: impl Iterator<Item = &'a ModelingEvent>) -> Option<Rational> {
    let first = events.next()?;
    let last = events.last().unwrap_or(first);
    Some(Rational::new(last.millis() - first.millis(), 1000))
}

/// Seconds between the first and the last action.
pub fn tot_time(log: &EventLog) -> Result<Rational, MetricError> {
    span_seconds(log.events().iter()).ok_or(MetricError::EmptyLog)
}

/// Seconds between the first and the last create action.
pub fn tot_create_time(log: &EventLog) -> Result<Rational, MetricError> {
    span_seconds(log.events().iter().filter(|e| is_create(e))).ok_or(MetricError::EmptySession)
}

/// Metrics for a session whose blocks are already known.
pub fn session_metrics(log: &EventLog, blocks: &[Block]) -> Result<SessionMetrics, MetricError> {
    Ok(SessionMetrics {
        max_simul_block: max_simul_block(blocks),
        perc_num_block_as_a_whole: perc_blocks_as_whole(blocks, log),
        avg_move_on_moved_elements: avg_move_on_moved_elements(log),
        perc_num_elements_with_moves: perc_num_elements_with_moves(log)?,
        tot_time: tot_time(log)?,
        tot_create_time: tot_create_time(log)?,
    })
}

pub fn compute_session_metrics(log: &EventLog) -> Result<SessionMetrics, MetricError> {
    if log.is_empty() {
        return Err(MetricError::EmptyLog);
    }
    let model = final_model(log)?;
    let blocks = detect_blocks(&model, log)?;
    session_metrics(log, &blocks)
}
