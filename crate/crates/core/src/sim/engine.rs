use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeId, SimError, SimTime, Topology, TxCounters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TrafficClass {
    Control,
    Data,
}

/// What the engine needs to know about a packet to account for it.
pub trait Transmit: Clone {
    fn class(&self) -> TrafficClass;
    /// Application data that a misbehaving sender silently discards.
    fn droppable(&self) -> bool;
    /// Subject to the per-link Bernoulli loss model.
    fn lossy(&self) -> bool;
    fn label(&self) -> &'static str;
    fn ident(&self) -> String;
}

/// Per-culture link behavior: effective disc radius and per-hop delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkProfile {
    pub range: f64,
    pub hop_delay: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TxOutcome {
    pub copies: usize,
    pub lost: usize,
    /// The sender is a data-dropper and swallowed the packet.
    pub withheld: bool,
}

impl TxOutcome {
    pub fn delivered(&self) -> usize {
        if self.withheld {
            0
        } else {
            self.copies - self.lost
        }
    }
}

#[derive(Debug, Clone)]
pub enum EventKind<P, T> {
    Deliver { from: NodeId, packet: P },
    Timer(T),
}

#[derive(Debug, Clone)]
pub struct Event<P, T> {
    pub time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub kind: EventKind<P, T>,
}

impl<P, T> PartialEq for Event<P, T> {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}

impl<P, T> Eq for Event<P, T> {}

impl<P, T> PartialOrd for Event<P, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P, T> Ord for Event<P, T> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceAction {
    Broadcast,
    Unicast(NodeId),
    Receive(NodeId),
    Lost(NodeId),
    Withheld,
    NoNeighbor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: &'static str,
    pub id: String,
    pub action: TraceAction,
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceAction::Broadcast => f.write_str("broadcast"),
            TraceAction::Unicast(to) => write!(f, "unicast->{to}"),
            TraceAction::Receive(from) => write!(f, "receive<-{from}"),
            TraceAction::Lost(to) => write!(f, "lost->{to}"),
            TraceAction::Withheld => f.write_str("withheld"),
            TraceAction::NoNeighbor => f.write_str("no-neighbor"),
        }
    }
}

/// `time node kind id action`, whitespace separated.
impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.time, self.node, self.kind, self.id, self.action)
    }
}

pub struct Engine<P, T> {
    now: SimTime,
    seq: u64,
    queue: BinaryHeap<Event<P, T>>,
    topology: Topology,
    counters: TxCounters,
    rng: ChaCha8Rng,
    loss_rate: f64,
    trace: Option<Vec<TraceRecord>>,
    processed: u64,
}

impl<P: Transmit, T> Engine<P, T> {
    pub fn new(topology: Topology, seed: u64, loss_rate: f64) -> Self {
        Engine {
            now: SimTime::ZERO,
            seq: 0,
            queue: BinaryHeap::new(),
            topology,
            counters: TxCounters::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            loss_rate: loss_rate.clamp(0.0, 1.0),
            trace: None,
            processed: 0,
        }
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.take().unwrap_or_default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn counters(&self) -> &TxCounters {
        &self.counters
    }

    pub fn counters_mut(&mut self) -> &mut TxCounters {
        &mut self.counters
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn schedule(
        &mut self,
        time: SimTime,
        target: NodeId,
        kind: EventKind<P, T>,
    ) -> Result<(), SimError> {
        if time < self.now {
            return Err(SimError::CausalityViolation {
                now: self.now,
                event: time,
            });
        }
        if !self.topology.contains(target) {
            return Err(SimError::UnknownNode(target));
        }
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Event {
            time,
            seq,
            target,
            kind,
        });
        Ok(())
    }

    pub fn schedule_timer(&mut self, time: SimTime, target: NodeId, tag: T) -> Result<(), SimError> {
        self.schedule(time, target, EventKind::Timer(tag))
    }

    pub fn timer_after(&mut self, delay: SimTime, target: NodeId, tag: T) {
        let at = self.now + delay;
        self.schedule_timer(at, target, tag)
            .expect("relative timers are never in the past");
    }

    /// Puts `packet` on the air from `sender`.
    ///
    /// Broadcasts fan out to every neighbor within `link.range`; unicasts go
    /// to `dest`, which must be one of them. Deliveries land at
    /// `now + link.hop_delay`.
    pub fn transmit(
        &mut self,
        sender: NodeId,
        packet: P,
        mode: Mode,
        link: LinkProfile,
    ) -> Result<TxOutcome, SimError> {
        let receivers = match mode {
            Mode::Broadcast => self.topology.neighbors_within(sender, link.range)?,
            Mode::Unicast(dest) => {
                if !self.topology.contains(dest) {
                    return Err(SimError::UnknownNode(dest));
                }
                if !self.topology.adjacent_within(sender, dest, link.range) {
                    return Err(SimError::NotAdjacent { sender, dest });
                }
                vec![dest]
            }
        };

        let c = &mut self.counters;
        match mode {
            Mode::Broadcast => c.broadcasts += 1,
            Mode::Unicast(_) => c.unicasts += 1,
        }
        match packet.class() {
            TrafficClass::Control => c.control_tx += 1,
            TrafficClass::Data => c.data_tx += 1,
        }
        *c.per_node_tx.entry(sender).or_default() += 1;
        *c.tx_by_kind.entry(packet.label()).or_default() += 1;

        let action = match mode {
            Mode::Broadcast => TraceAction::Broadcast,
            Mode::Unicast(d) => TraceAction::Unicast(d),
        };
        self.record(sender, &packet, action);

        let mut outcome = TxOutcome {
            copies: receivers.len(),
            ..TxOutcome::default()
        };
        if receivers.is_empty() {
            self.counters.packets_transmitted += 1;
            self.counters.packets_dropped += 1;
            self.record(sender, &packet, TraceAction::NoNeighbor);
            return Ok(outcome);
        }
        self.counters.packets_transmitted += receivers.len() as u64;
        if packet.droppable() && self.topology.is_misbehaving(sender) {
            outcome.withheld = true;
            self.counters.packets_dropped += receivers.len() as u64;
            self.record(sender, &packet, TraceAction::Withheld);
            return Ok(outcome);
        }

        let at = self.now + link.hop_delay;
        let lossy = packet.lossy() && self.loss_rate > 0.0;
        for r in receivers {
            if lossy && self.rng.gen::<f64>() < self.loss_rate {
                outcome.lost += 1;
                self.counters.packets_dropped += 1;
                self.record(sender, &packet, TraceAction::Lost(r));
                continue;
            }
            self.schedule(
                at,
                r,
                EventKind::Deliver {
                    from: sender,
                    packet: packet.clone(),
                },
            )?;
        }
        Ok(outcome)
    }

    /// Pops the next event in `(time, seq)` order and advances the clock.
    pub fn pop(&mut self) -> Option<Event<P, T>> {
        let ev = self.queue.pop()?;
        assert!(ev.time >= self.now, "event processed out of order");
        self.now = ev.time;
        self.processed += 1;
        if let EventKind::Deliver { from, packet } = &ev.kind {
            self.counters.packets_delivered += 1;
            *self.counters.per_node_rx.entry(ev.target).or_default() += 1;
            let (from, packet) = (*from, packet.clone());
            self.record(ev.target, &packet, TraceAction::Receive(from));
        }
        Some(ev)
    }

    /// Drains the queue through `handler`; returns the time of the last event.
    pub fn run_until_idle<F>(&mut self, mut handler: F) -> SimTime
    where
        F: FnMut(&mut Self, Event<P, T>),
    {
        while let Some(ev) = self.pop() {
            handler(self, ev);
        }
        self.now
    }

    fn record(&mut self, node: NodeId, packet: &P, action: TraceAction) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord {
                time: self.now,
                node,
                kind: packet.label(),
                id: packet.ident(),
                action,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Probe {
        data: bool,
    }

    impl Transmit for Probe {
        fn class(&self) -> TrafficClass {
            if self.data {
                TrafficClass::Data
            } else {
                TrafficClass::Control
            }
        }
        fn droppable(&self) -> bool {
            self.data
        }
        fn lossy(&self) -> bool {
            self.data
        }
        fn label(&self) -> &'static str {
            if self.data {
                "DATA"
            } else {
                "CTRL"
            }
        }
        fn ident(&self) -> String {
            String::new()
        }
    }

    const LINK: LinkProfile = LinkProfile {
        range: 1.2,
        hop_delay: SimTime(10_000_000),
    };

    fn four_node_engine() -> Engine<Probe, &'static str> {
        let topo = Topology::new(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.0)], 1.2);
        Engine::new(topo, 1, 0.0)
    }

    #[test]
    fn empty_queue_finishes_at_zero() {
        let mut e = four_node_engine();
        assert_eq!(e.run_until_idle(|_, _| {}), SimTime::ZERO);
    }

    #[test]
    fn same_time_events_keep_insertion_order() {
        let mut e = four_node_engine();
        let t = SimTime::from_secs(5.0);
        e.schedule_timer(t, NodeId(0), "A").unwrap();
        e.schedule_timer(t, NodeId(0), "B").unwrap();
        let mut seen = Vec::new();
        let end = e.run_until_idle(|_, ev| {
            if let EventKind::Timer(tag) = ev.kind {
                seen.push(tag);
            }
        });
        assert_eq!(seen, ["A", "B"]);
        assert_eq!(end, t);
    }

    #[test]
    fn scheduling_into_the_past_fails() {
        let mut e = four_node_engine();
        e.schedule_timer(SimTime::from_secs(2.0), NodeId(0), "x").unwrap();
        e.pop();
        let err = e
            .schedule_timer(SimTime::from_secs(1.0), NodeId(0), "y")
            .unwrap_err();
        assert!(matches!(err, SimError::CausalityViolation { .. }));
    }

    #[test]
    fn delivery_lands_after_hop_delay() {
        let mut e = four_node_engine();
        e.schedule_timer(SimTime::from_secs(2.99), NodeId(0), "send").unwrap();
        let mut arrivals = Vec::new();
        e.run_until_idle(|eng, ev| match ev.kind {
            EventKind::Timer(_) => {
                eng.transmit(ev.target, Probe { data: false }, Mode::Unicast(NodeId(1)), LINK)
                    .unwrap();
            }
            EventKind::Deliver { .. } => arrivals.push(ev.time),
        });
        assert_eq!(arrivals, [SimTime::from_secs(3.0)]);
    }

    #[test]
    fn broadcast_reaches_each_neighbor_once() {
        let mut e = four_node_engine();
        let out = e
            .transmit(NodeId(0), Probe { data: false }, Mode::Broadcast, LINK)
            .unwrap();
        assert_eq!(out.copies, 2);
        assert_eq!(e.counters().broadcasts, 1);
        let mut targets = Vec::new();
        e.run_until_idle(|_, ev| targets.push(ev.target));
        assert_eq!(targets, [NodeId(1), NodeId(2)]);
        assert!(e.counters().is_balanced());
    }

    #[test]
    fn unicast_to_non_neighbor_fails() {
        let mut e = four_node_engine();
        let err = e
            .transmit(NodeId(0), Probe { data: false }, Mode::Unicast(NodeId(3)), LINK)
            .unwrap_err();
        assert_eq!(
            err,
            SimError::NotAdjacent {
                sender: NodeId(0),
                dest: NodeId(3)
            }
        );
        assert_eq!(e.counters().unicasts, 0);
    }

    #[test]
    fn misbehaving_sender_withholds_data_but_is_counted() {
        let topo = Topology::new(vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, 0.0)], 1.2)
            .with_misbehaving([NodeId(1)]);
        let mut e: Engine<Probe, ()> = Engine::new(topo, 1, 0.0);
        let out = e
            .transmit(NodeId(1), Probe { data: true }, Mode::Unicast(NodeId(3)), LINK)
            .unwrap();
        assert!(out.withheld);
        assert_eq!(e.counters().unicasts, 1);
        assert_eq!(e.counters().data_tx, 1);
        assert_eq!(e.pending(), 0);
        // control traffic still flows
        e.transmit(NodeId(1), Probe { data: false }, Mode::Unicast(NodeId(3)), LINK)
            .unwrap();
        assert_eq!(e.pending(), 1);
        e.run_until_idle(|_, _| {});
        assert!(e.counters().is_balanced());
    }

    #[test]
    fn isolated_broadcast_is_a_dropped_copy() {
        let mut e: Engine<Probe, ()> = Engine::new(Topology::new(vec![(0.0, 0.0)], 1.0), 0, 0.0);
        let out = e
            .transmit(NodeId(0), Probe { data: false }, Mode::Broadcast, LINK)
            .unwrap();
        assert_eq!(out.delivered(), 0);
        assert_eq!(e.counters().packets_dropped, 1);
        assert!(e.counters().is_balanced());
    }

    #[test]
    fn loss_is_seeded() {
        let run = |seed| {
            let topo = Topology::new(vec![(0.0, 0.0), (1.0, 0.0)], 1.2);
            let mut e: Engine<Probe, ()> = Engine::new(topo, seed, 0.5);
            (0..64)
                .map(|_| {
                    e.transmit(NodeId(0), Probe { data: true }, Mode::Unicast(NodeId(1)), LINK)
                        .unwrap()
                        .lost
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        let lost: usize = run(9).iter().sum();
        assert!(lost > 0 && lost < 64);
    }
}
