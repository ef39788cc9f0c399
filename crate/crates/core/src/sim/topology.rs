use std::collections::{BTreeSet, VecDeque};

use rand::Rng;

use super::{NodeId, SimError};

/// Stationary node placement under the unit-disc model: two nodes are
/// adjacent iff their Euclidean distance is at most the radio range.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    radio_range: f64,
    misbehaving: BTreeSet<NodeId>,
}

impl Topology {
    pub fn new(positions: Vec<(f64, f64)>, radio_range: f64) -> Self {
        assert!(
            radio_range.is_finite() && radio_range > 0.0,
            "radio range must be positive"
        );
        Topology {
            positions,
            radio_range,
            misbehaving: BTreeSet::new(),
        }
    }

    pub fn with_misbehaving(mut self, nodes: impl IntoIterator<Item = NodeId>) -> Self {
        self.misbehaving.extend(nodes);
        self
    }

    /// Uniformly places `n` nodes in a `side`×`side` square, retrying until the
    /// resulting unit-disc graph is connected.
    pub fn random_connected<R: Rng>(
        n: usize,
        side: f64,
        radio_range: f64,
        rng: &mut R,
        max_attempts: usize,
    ) -> Option<Self> {
        for _ in 0..max_attempts {
            let positions = (0..n)
                .map(|_| (rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
                .collect();
            let topo = Topology::new(positions, radio_range);
            if topo.is_connected(radio_range) {
                return Some(topo);
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn position(&self, node: NodeId) -> Result<(f64, f64), SimError> {
        self.positions
            .get(node.index())
            .copied()
            .ok_or(SimError::UnknownNode(node))
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node.index() < self.positions.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.positions.len() as u32).map(NodeId)
    }

    pub fn is_misbehaving(&self, node: NodeId) -> bool {
        self.misbehaving.contains(&node)
    }

    pub fn misbehaving(&self) -> &BTreeSet<NodeId> {
        &self.misbehaving
    }

    /// Nodes within the topology's own radio range.
    pub fn neighbors(&self, node: NodeId) -> Result<BTreeSet<NodeId>, SimError> {
        Ok(self
            .neighbors_within(node, self.radio_range)?
            .into_iter()
            .collect())
    }

    /// Nodes within `range` of `node`, ascending by id, excluding `node`.
    pub fn neighbors_within(&self, node: NodeId, range: f64) -> Result<Vec<NodeId>, SimError> {
        let origin = self.position(node)?;
        let r2 = range * range;
        Ok(self
            .positions
            .iter()
            .enumerate()
            .filter(|&(i, &p)| i != node.index() && dist2(origin, p) <= r2)
            .map(|(i, _)| NodeId(i as u32))
            .collect())
    }

    pub fn adjacent_within(&self, a: NodeId, b: NodeId, range: f64) -> bool {
        match (self.position(a), self.position(b)) {
            (Ok(pa), Ok(pb)) => a != b && dist2(pa, pb) <= range * range,
            _ => false,
        }
    }

    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacent_within(a, b, self.radio_range)
    }

    /// True when consecutive nodes of `path` are pairwise adjacent and no node repeats.
    pub fn is_valid_walk(&self, path: &[NodeId], range: f64) -> bool {
        let distinct: BTreeSet<_> = path.iter().collect();
        distinct.len() == path.len()
            && path.iter().all(|n| self.contains(*n))
            && path
                .windows(2)
                .all(|w| self.adjacent_within(w[0], w[1], range))
    }

    pub fn is_connected(&self, range: f64) -> bool {
        if self.positions.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.positions.len()];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for m in self.neighbors_within(n, range).unwrap_or_default() {
                if !seen[m.index()] {
                    seen[m.index()] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}
