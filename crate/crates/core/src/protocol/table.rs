use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::ids::{Cid, Mid, NodeId};

/// `(MID, CID, PATH)` row; `path` runs from the table owner to the member's host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommunityTableEntry {
    pub mid: Mid,
    pub cid: Cid,
    pub path: Vec<NodeId>,
}

impl CommunityTableEntry {
    pub fn host(&self) -> NodeId {
        *self.path.last().expect("paths are never empty")
    }

    pub fn hops(&self) -> usize {
        self.path.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommunityTable {
    owner: NodeId,
    cid: Cid,
    entries: BTreeMap<Mid, CommunityTableEntry>,
}

impl CommunityTable {
    pub fn new(owner: NodeId, cid: Cid) -> Self {
        CommunityTable {
            owner,
            cid,
            entries: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn get(&self, mid: Mid) -> Option<&CommunityTableEntry> {
        self.entries.get(&mid)
    }

    pub fn contains(&self, mid: Mid) -> bool {
        self.entries.contains_key(&mid)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &CommunityTableEntry> {
        self.entries.values()
    }

    /// Installs `path` for `mid` when no entry exists or the new path is
    /// strictly shorter. Paths must start at the owner, end elsewhere and not
    /// repeat nodes.
    pub fn offer(&mut self, mid: Mid, path: Vec<NodeId>) -> bool {
        if path.len() < 2 || path[0] != self.owner || has_repeat(&path) {
            return false;
        }
        match self.entries.get(&mid) {
            Some(e) if e.path.len() <= path.len() => false,
            _ => {
                self.entries.insert(
                    mid,
                    CommunityTableEntry {
                        mid,
                        cid: self.cid,
                        path,
                    },
                );
                true
            }
        }
    }

    pub fn remove(&mut self, mid: Mid) -> Option<CommunityTableEntry> {
        self.entries.remove(&mid)
    }

    /// Drops every entry whose path relays through `node`.
    pub fn purge_relay(&mut self, node: NodeId) -> usize {
        let before = self.entries.len();
        self.entries
            .retain(|_, e| !e.path[1..e.path.len() - 1].contains(&node));
        before - self.entries.len()
    }
}

/// `(CID, MC)` directory of the communities this node belongs to.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SocietyTable {
    entries: BTreeMap<Cid, String>,
}

impl SocietyTable {
    pub fn install(&mut self, cid: Cid, service: &str) {
        self.entries.insert(cid, service.to_owned());
    }

    pub fn get(&self, cid: Cid) -> Option<&str> {
        self.entries.get(&cid).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cid, &str)> {
        self.entries.iter().map(|(c, s)| (*c, s.as_str()))
    }
}

fn has_repeat(path: &[NodeId]) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(path.len());
    !path.iter().all(|n| seen.insert(*n))
}

/// Cuts every cycle out of a walk: when a node reappears, everything since its
/// first visit is discarded.
pub fn remove_loops(walk: impl IntoIterator<Item = NodeId>) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = Vec::new();
    let mut index: HashMap<NodeId, usize> = HashMap::new();
    for n in walk {
        if let Some(&i) = index.get(&n) {
            for dropped in out.drain(i + 1..) {
                index.remove(&dropped);
            }
        } else {
            index.insert(n, out.len());
            out.push(n);
        }
    }
    out
}

/// Joins `prefix` (ending at some node J) with `path` (starting at J) and
/// removes loops.
pub fn reroot(prefix: &[NodeId], path: &[NodeId]) -> Vec<NodeId> {
    debug_assert_eq!(prefix.last(), path.first());
    remove_loops(prefix.iter().chain(path.iter().skip(1)).copied())
}
