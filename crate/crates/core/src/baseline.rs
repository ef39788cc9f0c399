//! Non-community comparator: every node periodically floods a routing
//! update to the whole network, whether or not anyone wants its services.

use serde::Serialize;

use crate::ids::{Cid, NodeId, PktId};
use crate::model::DEFAULT_HOP_DELAY;
use crate::protocol::{Packet, PacketKind};
use crate::sim::{Engine, EventKind, LinkProfile, Mode, SimTime, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRun {
    pub rounds: u64,
    pub control_tx: u64,
}

/// Update rounds at `0, interval, 2*interval, ...` strictly before `duration`;
/// at least one.
pub fn rounds(duration: f64, interval: f64) -> u64 {
    assert!(interval > 0.0, "interval must be positive");
    ((duration / interval).ceil() as u64).max(1)
}

/// Runs the flooding baseline on `topology` and counts its transmissions.
pub fn run_baseline(topology: &Topology, duration: f64, interval: f64, seed: u64) -> BaselineRun {
    let n = topology.len();
    let rounds = rounds(duration, interval);
    let link = LinkProfile {
        range: topology.radio_range(),
        hop_delay: SimTime::from_secs(DEFAULT_HOP_DELAY),
    };
    let mut engine: Engine<Packet, u32> = Engine::new(topology.clone(), seed, 0.0);
    for r in 0..rounds {
        let at = SimTime::from_secs(r as f64 * interval);
        for i in 0..n {
            engine
                .schedule_timer(at, NodeId(i as u32), r as u32)
                .expect("rounds are scheduled up front");
        }
    }
    let mut seen = std::collections::HashSet::new();
    while let Some(ev) = engine.pop() {
        let node = ev.target;
        let pkt = match ev.kind {
            EventKind::Timer(round) => {
                let id = PktId { origin: node, seq: round };
                let mut p = Packet::new(PacketKind::Update, id, Cid { si: node, counter: 0 });
                p.route_trace = vec![node];
                p
            }
            EventKind::Deliver { packet, .. } => packet,
        };
        if seen.insert((node, pkt.id)) {
            engine
                .transmit(node, pkt, Mode::Broadcast, link)
                .expect("broadcasts from known nodes succeed");
        }
    }
    BaselineRun {
        rounds,
        control_tx: engine.counters().control_tx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_count() {
        assert_eq!(rounds(100.0, 5.0), 20);
        assert_eq!(rounds(101.0, 5.0), 21);
        assert_eq!(rounds(3.0, 5.0), 1);
    }

    #[test]
    fn connected_graph_costs_n_squared_per_round() {
        let topo = Topology::new(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.0)], 1.2);
        let run = run_baseline(&topo, 10.0, 5.0, 1);
        assert_eq!(run, BaselineRun { rounds: 2, control_tx: 4 * 4 * 2 });
    }

    #[test]
    fn partitions_only_flood_their_component() {
        let topo = Topology::new(vec![(0.0, 0.0), (1.0, 0.0), (10.0, 0.0)], 1.2);
        // Components of size 2 and 1: 2*2 + 1*1 per round.
        assert_eq!(run_baseline(&topo, 5.0, 5.0, 0).control_tx, 5);
    }
}
