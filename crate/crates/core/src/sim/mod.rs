//! Discrete-event engine, unit-disc topology and transmission accounting.
//!
//! The engine is generic over the packet type it carries and the timer tags
//! its owner schedules. Everything above it (the community protocol, the
//! services, the baseline comparator) drives one `Engine` per run.

mod counters;
mod engine;
mod topology;

pub use counters::TxCounters;
pub use engine::{
    Engine, Event, EventKind, LinkProfile, Mode, TraceAction, TraceRecord, TrafficClass, Transmit,
    TxOutcome,
};
pub use topology::Topology;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node identifier in `[0, N)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Simulation time with nanosecond resolution.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_nanos(nanos: u64) -> Self {
        SimTime(nanos)
    }

    /// Rounds to the nearest nanosecond. Negative and non-finite inputs clamp to zero.
    pub fn from_secs(secs: f64) -> Self {
        if !secs.is_finite() || secs <= 0.0 {
            return SimTime(0);
        }
        SimTime((secs * 1e9).round() as u64)
    }

    pub fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn saturating_add(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_add(other.0))
    }

    pub fn times(self, factor: u64) -> SimTime {
        SimTime(self.0.saturating_mul(factor))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;

    fn add(self, rhs: SimTime) -> SimTime {
        self.saturating_add(rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:09}", self.0 / 1_000_000_000, self.0 % 1_000_000_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("event at {event} scheduled before current time {now}")]
    CausalityViolation { now: SimTime, event: SimTime },
    #[error("{dest} is not a neighbor of {sender}")]
    NotAdjacent { sender: NodeId, dest: NodeId },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_rounds_to_nanos() {
        assert_eq!(SimTime::from_secs(2.99) + SimTime::from_secs(0.01), SimTime::from_secs(3.0));
        assert_eq!(SimTime::from_secs(1.5).to_string(), "1.500000000");
        assert_eq!(SimTime::from_secs(-1.0), SimTime::ZERO);
    }
}
