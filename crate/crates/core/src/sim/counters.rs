use std::collections::BTreeMap;

use serde::Serialize;

use super::NodeId;

/// Global transmission accounting for one run.
///
/// A *transmission* is one radio send by one node (a broadcast counts once
/// regardless of fan-out). A *copy* is one sender→receiver instance of a
/// transmission; copies are either delivered or dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TxCounters {
    pub broadcasts: u64,
    pub unicasts: u64,
    pub control_tx: u64,
    pub data_tx: u64,
    pub friend_relays: u64,
    pub per_node_tx: BTreeMap<NodeId, u64>,
    pub per_node_rx: BTreeMap<NodeId, u64>,
    pub tx_by_kind: BTreeMap<&'static str, u64>,
    pub packets_transmitted: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
}

impl TxCounters {
    /// Both conservation laws the engine maintains.
    pub fn is_balanced(&self) -> bool {
        self.broadcasts + self.unicasts == self.control_tx + self.data_tx
            && self.packets_transmitted == self.packets_delivered + self.packets_dropped
    }

    pub fn node_tx(&self, node: NodeId) -> u64 {
        self.per_node_tx.get(&node).copied().unwrap_or(0)
    }

    pub fn node_rx(&self, node: NodeId) -> u64 {
        self.per_node_rx.get(&node).copied().unwrap_or(0)
    }

    pub fn kind_tx(&self, kind: &str) -> u64 {
        self.tx_by_kind.get(kind).copied().unwrap_or(0)
    }

    pub fn total_tx(&self) -> u64 {
        self.broadcasts + self.unicasts
    }
}
