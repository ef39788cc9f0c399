use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::Serialize;

use super::packet::Packet;
use super::table::{CommunityTable, SocietyTable};
use crate::ids::{Cid, Mid, NodeId, PktId};
use crate::model::Machine;
use crate::sim::SimTime;
use crate::stack::ReputationTable;

/// What a node learned from the first MCSTART copy it heard.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement {
    pub mc: String,
    pub si: NodeId,
    /// From this node back to the SI, following first-arrival parents.
    pub path_to_si: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MemberInfo {
    pub host: NodeId,
    pub gateway: bool,
}

/// A node's view of one community it has joined.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub cid: Cid,
    pub si: NodeId,
    pub machine: Machine,
    pub committed: bool,
    pub ct: CommunityTable,
    pub directory: BTreeMap<Mid, MemberInfo>,
    pub path_to_si: Vec<NodeId>,
}

impl Membership {
    pub fn mid(&self) -> Option<Mid> {
        self.machine.mid
    }

    pub fn mid_of_host(&self, host: NodeId) -> Option<Mid> {
        self.directory
            .iter()
            .find(|(_, m)| m.host == host)
            .map(|(mid, _)| *mid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Announced,
    Collecting,
    Committed,
}

/// SI-side bookkeeping for a community it started.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityState {
    pub cid: Cid,
    pub mc: String,
    pub si: NodeId,
    pub phase: Phase,
    pub members: Vec<(Mid, NodeId)>,
    pub join_deadline: SimTime,
    /// SI-rooted path to every joiner, reversed from its MCJOIN.
    pub reverse_routes: BTreeMap<NodeId, Vec<NodeId>>,
    pub join_order: Vec<NodeId>,
    pub gateways: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Recovery {
    pub id: PktId,
    pub replies: u32,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub gateway: bool,
    pub announcements: BTreeMap<Cid, Announcement>,
    pub memberships: BTreeMap<Cid, Membership>,
    pub hosting: BTreeMap<Cid, CommunityState>,
    pub society: SocietyTable,
    pub reputation: Option<ReputationTable>,
    pub(crate) next_seq: u32,
    pub(crate) next_cid: u32,
    pub(crate) seen: HashSet<PktId>,
    pub(crate) data_seen: HashSet<PktId>,
    pub(crate) overheard: BTreeSet<(PktId, NodeId)>,
    pub(crate) pending: BTreeMap<(Cid, Mid), Vec<Packet>>,
    pub(crate) outstanding: BTreeMap<(Cid, Mid), Recovery>,
}

impl NodeState {
    pub fn new(id: NodeId, gateway: bool) -> Self {
        NodeState {
            id,
            gateway,
            announcements: BTreeMap::new(),
            memberships: BTreeMap::new(),
            hosting: BTreeMap::new(),
            society: SocietyTable::default(),
            reputation: None,
            next_seq: 0,
            next_cid: 0,
            seen: HashSet::new(),
            data_seen: HashSet::new(),
            overheard: BTreeSet::new(),
            pending: BTreeMap::new(),
            outstanding: BTreeMap::new(),
        }
    }

    pub fn next_id(&mut self) -> PktId {
        let id = PktId {
            origin: self.id,
            seq: self.next_seq,
        };
        self.next_seq += 1;
        id
    }

    /// Committed membership of `cid`, if any.
    pub fn member(&self, cid: Cid) -> Option<&Membership> {
        self.memberships.get(&cid).filter(|m| m.committed)
    }

    pub fn member_mut(&mut self, cid: Cid) -> Option<&mut Membership> {
        self.memberships.get_mut(&cid).filter(|m| m.committed)
    }

    pub fn is_member(&self, cid: Cid) -> bool {
        self.member(cid).is_some()
    }

    pub fn is_excluded(&self, node: NodeId) -> bool {
        self.reputation.as_ref().is_some_and(|r| r.is_excluded(node))
    }

    /// Marks `id` as handled; false when it was already seen.
    pub(crate) fn first_sight(&mut self, id: PktId) -> bool {
        self.seen.insert(id)
    }
}
