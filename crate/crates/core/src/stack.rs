//! Environment-driven protocol selection and the watchdog reputation add-on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::ids::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    /// Cooperative network with minimal threats.
    Closed,
    /// Uncooperative network where nodes may misbehave.
    Open,
}

impl FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "closed" => Ok(Environment::Closed),
            "open" => Ok(Environment::Open),
            other => Err(format!("unknown environment `{other}` (closed|open)")),
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Environment::Closed => "closed",
            Environment::Open => "open",
        })
    }
}

/// The declared environment wins; otherwise any flagged dropper makes it open.
pub fn classify_environment(
    declared: Option<Environment>,
    misbehaving: &BTreeSet<NodeId>,
) -> Environment {
    declared.unwrap_or(if misbehaving.is_empty() {
        Environment::Closed
    } else {
        Environment::Open
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ProtocolName {
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Addon {
    None,
    Watchdog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ProtocolConfig {
    pub name: ProtocolName,
    pub basic_routing_art: &'static str,
    pub addon: Addon,
}

pub fn select_protocol(env: Environment) -> ProtocolConfig {
    match env {
        Environment::Closed => ProtocolConfig {
            name: ProtocolName::P1,
            basic_routing_art: "DSR",
            addon: Addon::None,
        },
        Environment::Open => ProtocolConfig {
            name: ProtocolName::P2,
            basic_routing_art: "AODV",
            addon: Addon::Watchdog,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WatchdogParams {
    pub initial: f64,
    pub drop_penalty: f64,
    pub forward_reward: f64,
    pub threshold: f64,
}

impl Default for WatchdogParams {
    fn default() -> Self {
        WatchdogParams {
            initial: 1.0,
            drop_penalty: 0.2,
            forward_reward: 0.05,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub score: f64,
    /// This observation pushed the relay below the threshold.
    pub newly_excluded: bool,
}

/// Per-observer relay scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReputationTable {
    pub owner: NodeId,
    scores: BTreeMap<NodeId, f64>,
    params: WatchdogParams,
}

impl ReputationTable {
    pub fn new(owner: NodeId, params: WatchdogParams) -> Self {
        ReputationTable {
            owner,
            scores: BTreeMap::new(),
            params,
        }
    }

    pub fn score(&self, node: NodeId) -> f64 {
        self.scores.get(&node).copied().unwrap_or(self.params.initial)
    }

    pub fn is_excluded(&self, node: NodeId) -> bool {
        self.score(node) < self.params.threshold
    }

    pub fn excluded(&self) -> Vec<NodeId> {
        self.scores
            .keys()
            .copied()
            .filter(|n| self.is_excluded(*n))
            .collect()
    }

    pub fn observe(&mut self, relay: NodeId, forwarded: bool) -> Observation {
        let was_excluded = self.is_excluded(relay);
        let p = self.params;
        let score = self.scores.entry(relay).or_insert(p.initial);
        *score = if forwarded {
            (*score + p.forward_reward).min(1.0)
        } else {
            (*score - p.drop_penalty).max(0.0)
        };
        let score = *score;
        Observation {
            score,
            newly_excluded: !was_excluded && score < p.threshold,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn environment_selects_protocol_and_addon() {
        let p1 = select_protocol(Environment::Closed);
        assert_eq!((p1.name, p1.basic_routing_art, p1.addon), (ProtocolName::P1, "DSR", Addon::None));
        let p2 = select_protocol(Environment::Open);
        assert_eq!((p2.name, p2.basic_routing_art, p2.addon), (ProtocolName::P2, "AODV", Addon::Watchdog));
        assert_eq!(select_protocol(Environment::Open), p2);
    }

    #[test]
    fn environment_inference() {
        let none = BTreeSet::new();
        let one: BTreeSet<_> = [NodeId(2)].into();
        assert_eq!(classify_environment(Some(Environment::Closed), &one), Environment::Closed);
        assert_eq!(classify_environment(None, &one), Environment::Open);
        assert_eq!(classify_environment(None, &none), Environment::Closed);
    }

    #[test]
    fn three_drops_exclude() {
        let mut t = ReputationTable::new(NodeId(0), WatchdogParams::default());
        let relay = NodeId(1);
        assert!(!t.observe(relay, false).newly_excluded);
        assert!(!t.observe(relay, false).newly_excluded);
        let third = t.observe(relay, false);
        assert!(third.newly_excluded);
        // 1.0 - 3 * 0.2, up to float rounding
        assert!((third.score - 0.4).abs() < 1e-12);
        assert!(t.is_excluded(relay));
        assert_eq!(t.excluded(), [relay]);
    }

    #[test]
    fn good_relay_is_capped() {
        let mut t = ReputationTable::new(NodeId(0), WatchdogParams::default());
        for _ in 0..10 {
            t.observe(NodeId(1), true);
        }
        assert_eq!(t.score(NodeId(1)), 1.0);
        for _ in 0..10 {
            t.observe(NodeId(2), false);
        }
        assert_eq!(t.score(NodeId(2)), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn scores_stay_in_unit_interval(obs in proptest::collection::vec(proptest::bool::ANY, 0..64)) {
            let mut t = ReputationTable::new(NodeId(0), WatchdogParams::default());
            let mut drops = 0u32;
            for forwarded in obs {
                let was = t.is_excluded(NodeId(1));
                let o = t.observe(NodeId(1), forwarded);
                drops += u32::from(!forwarded);
                proptest::prop_assert!((0.0..=1.0).contains(&o.score));
                proptest::prop_assert_eq!(o.newly_excluded, !was && t.is_excluded(NodeId(1)));
                if drops < 3 {
                    proptest::prop_assert!(!t.is_excluded(NodeId(1)));
                }
            }
        }
    }
}
