//! Analysis of recorded process-modeling sessions.
//!
//! The pipeline reads a modeling-event log ([`eventlog`]), rebuilds the model
//! by replay ([`replay`]), measures how the model was built ([`blocks`],
//! [`metrics`]), decides whether the resulting model is perspicuous
//! ([`normalize`], [`wfnet`], [`soundness`], [`classify`]) and compares
//! groups of sessions ([`stats`]). [`chart`] renders PPMCharts and
//! [`simulate`] produces synthetic sessions.

pub mod blocks;
pub mod chart;
pub mod classify;
pub mod eventlog;
pub mod metrics;
pub mod normalize;
pub mod replay;
pub mod simulate;
pub mod soundness;
pub mod stats;
pub mod wfnet;

use serde::{Serialize, Serializer};

/// Exact rational used for ratios and durations in seconds.
pub type Rational = num_rational::Ratio<i64>;

/// A metric value that may be undefined for a session (no blocks, no
/// moves). Serializes as a JSON number or `null`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    Value(Rational),
    NotApplicable,
}

impl Measure {
    pub fn value(self) -> Option<Rational> {
        match self {
            Measure::Value(v) => Some(v),
            Measure::NotApplicable => None,
        }
    }

    pub fn to_f64(self) -> Option<f64> {
        self.value().map(rational_to_f64)
    }

    pub fn is_applicable(self) -> bool {
        matches!(self, Measure::Value(_))
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_f64().serialize(s)
    }
}

pub fn rational_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
