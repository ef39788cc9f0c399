use std::collections::BTreeMap;

use serde::Serialize;

use super::packet::{Packet, PacketKind};
use super::state::{Membership, NodeState};
use super::table::CommunityTable;
use super::ProtocolError;
use crate::ids::{Cid, Mid, NodeId, PktId};
use crate::model::{CultureSpec, Registry};
use crate::sim::{Engine, Event, EventKind, LinkProfile, Mode, SimTime, Topology, TraceRecord, TxCounters, TxOutcome};
use crate::stack::{Addon, ProtocolConfig, WatchdogParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub seed: u64,
    pub loss_rate: f64,
    /// Seconds the SI collects MCJOINs before committing.
    pub join_window: f64,
    /// Proactive cultures re-send community tables this often (seconds).
    pub refresh_interval: f64,
    /// Periodic timers stop past this time (seconds).
    pub horizon: f64,
    pub flood_ttl: u8,
    pub rreq_ttl: u8,
    pub friend_ttl: u8,
    pub data_ttl: u8,
    pub max_retries: u32,
    pub protocol: ProtocolConfig,
    pub watchdog: WatchdogParams,
    pub trace: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            seed: 0,
            loss_rate: 0.0,
            join_window: 1.0,
            refresh_interval: 5.0,
            horizon: 100.0,
            flood_ttl: 32,
            rreq_ttl: 8,
            friend_ttl: 8,
            data_ttl: 32,
            max_retries: crate::services::ftp::MAX_RETRIES,
            protocol: crate::stack::select_protocol(crate::stack::Environment::Closed),
            watchdog: WatchdogParams::default(),
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeInfo {
    pub name: String,
    pub gateway: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommunityRef {
    Alias(String),
    Id(Cid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Mid(Mid),
    /// The member machine hosted on this node.
    Host(NodeId),
}

/// Scripted actions, executed at the node they are scheduled on.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Start {
        culture: String,
        alias: Option<String>,
    },
    Join {
        community: CommunityRef,
    },
    LateJoin {
        community: CommunityRef,
    },
    Send {
        community: CommunityRef,
        target: Target,
        op: String,
        payload: Vec<u8>,
    },
    Friend {
        community: CommunityRef,
        target: Target,
        op: String,
        payload: Vec<u8>,
    },
    Ftp {
        community: CommunityRef,
        target: Target,
        payload: Vec<u8>,
        chunk_size: usize,
        window: u32,
    },
    Register {
        community: CommunityRef,
        name: String,
        mid: Mid,
        of: Option<CommunityRef>,
    },
    Resolve {
        community: CommunityRef,
        name: String,
    },
    Cbr {
        community: CommunityRef,
        target: Target,
        count: u32,
        interval: f64,
        size: usize,
    },
    Telnet {
        community: CommunityRef,
        target: Target,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Timer {
    Command(Box<Command>),
    JoinDeadline(Cid),
    Refresh(Cid),
    RreqTimeout { cid: Cid, dst: Mid, id: PktId },
    FtpTimeout { cid: Cid, file_id: u32, gen: u64 },
    WatchCheck { pkt: PktId, relay: NodeId },
    CbrTick { cid: Cid, dst: Mid, remaining: u32, interval: SimTime, size: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunError {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: &'static str,
    pub message: String,
}

/// One hand-off of a payload to a machine's application handler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppDelivery {
    pub time: SimTime,
    pub host: NodeId,
    pub cid: Cid,
    pub op: String,
    pub src: Option<Mid>,
    pub dst: Mid,
    pub pkt: PktId,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstallSource {
    Commit,
    Ctable,
    Rrep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInstall {
    pub time: SimTime,
    pub owner: NodeId,
    pub cid: Cid,
    pub mid: Mid,
    pub path: Vec<NodeId>,
    pub source: InstallSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    pub time: SimTime,
    pub observer: NodeId,
    pub relay: NodeId,
    pub score: f64,
    /// Observations of this relay by this observer so far.
    pub drops: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    pub time: SimTime,
    pub requester: NodeId,
    pub name: String,
    pub mid: Option<Mid>,
    pub answered_by: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransferStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferLog {
    pub file_id: u32,
    pub src: NodeId,
    pub cid: Cid,
    pub dst: Mid,
    pub total_bytes: usize,
    pub chunks: u32,
    pub window: u32,
    pub acks: u64,
    pub hop_tx: u64,
    pub status: TransferStatus,
    pub completed_at: Option<SimTime>,
    pub content_match: Option<bool>,
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    pub errors: Vec<RunError>,
    pub deliveries: Vec<AppDelivery>,
    pub installs: Vec<PathInstall>,
    pub exclusions: Vec<Exclusion>,
    pub resolutions: Vec<Resolution>,
    pub transfers: BTreeMap<u32, TransferLog>,
    /// Flood initiations per packet kind.
    pub floods: BTreeMap<&'static str, u64>,
    pub participation: BTreeMap<Cid, BTreeMap<NodeId, u64>>,
    pub originated: u64,
    pub delivered: u64,
    pub rejected: u64,
    /// Payloads that reached a machine outside their community.
    pub isolation_violations: u64,
    pub watchdog_tables: u64,
    pub(crate) friend_open: BTreeMap<PktId, NodeId>,
    pub(crate) drops_seen: BTreeMap<(NodeId, NodeId), u32>,
}

impl RunLog {
    pub fn control_floods(&self) -> u64 {
        self.floods.values().sum()
    }

    pub fn delivery_ratio(&self) -> f64 {
        if self.originated == 0 {
            1.0
        } else {
            self.delivered as f64 / self.originated as f64
        }
    }
}

/// One simulated society: topology, registry, per-node protocol state and the
/// event engine driving them.
pub struct Network {
    pub(crate) registry: Registry,
    pub(crate) config: NetworkConfig,
    pub(crate) engine: Engine<Packet, Timer>,
    pub(crate) nodes: Vec<NodeState>,
    pub(crate) info: Vec<NodeInfo>,
    pub(crate) aliases: BTreeMap<String, Cid>,
    pub(crate) cultures: BTreeMap<Cid, String>,
    pub(crate) log: RunLog,
    pub(crate) next_file_id: u32,
    finished: bool,
}

impl Network {
    pub fn new(registry: Registry, topology: Topology, info: Vec<NodeInfo>, config: NetworkConfig) -> Self {
        assert_eq!(topology.len(), info.len(), "one NodeInfo per topology node");
        let nodes = info
            .iter()
            .enumerate()
            .map(|(i, n)| NodeState::new(NodeId(i as u32), n.gateway))
            .collect();
        let mut engine = Engine::new(topology, config.seed, config.loss_rate);
        if config.trace {
            engine.enable_trace();
        }
        Network {
            registry,
            config,
            engine,
            nodes,
            info,
            aliases: BTreeMap::new(),
            cultures: BTreeMap::new(),
            log: RunLog::default(),
            next_file_id: 1,
            finished: false,
        }
    }

    /// Queues `command` to run at `node` at time `at` (seconds).
    pub fn schedule(&mut self, at: f64, node: NodeId, command: Command) -> Result<(), ProtocolError> {
        self.engine
            .schedule_timer(SimTime::from_secs(at), node, Timer::Command(Box::new(command)))?;
        Ok(())
    }

    /// Processes every queued event; returns the final simulation time.
    pub fn run(&mut self) -> SimTime {
        while let Some(ev) = self.engine.pop() {
            self.dispatch(ev);
        }
        if !self.finished {
            self.finished = true;
            self.finish();
        }
        self.engine.now()
    }

    pub fn now(&self) -> SimTime {
        self.engine.now()
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn counters(&self) -> &TxCounters {
        self.engine.counters()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        self.engine.trace()
    }

    pub fn topology(&self) -> &Topology {
        self.engine.topology()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        self.info.get(id.index()).map_or("?", |i| i.name.as_str())
    }

    pub fn cid(&self, alias: &str) -> Option<Cid> {
        self.aliases.get(alias).copied()
    }

    pub fn aliases(&self) -> &BTreeMap<String, Cid> {
        &self.aliases
    }

    pub fn communities(&self) -> impl Iterator<Item = (Cid, &str)> {
        self.cultures.iter().map(|(c, m)| (*c, m.as_str()))
    }

    pub fn alias_of(&self, cid: Cid) -> String {
        self.aliases
            .iter()
            .find(|(_, c)| **c == cid)
            .map_or_else(|| cid.to_string(), |(a, _)| a.clone())
    }

    pub fn membership(&self, node: NodeId, cid: Cid) -> Option<&Membership> {
        self.nodes.get(node.index())?.memberships.get(&cid)
    }

    pub fn community_table(&self, node: NodeId, cid: Cid) -> Option<&CommunityTable> {
        self.membership(node, cid).map(|m| &m.ct)
    }

    pub(crate) fn watchdog_active(&self) -> bool {
        self.config.protocol.addon == Addon::Watchdog
    }

    pub(crate) fn culture_of(&self, cid: Cid) -> Option<&CultureSpec> {
        self.cultures.get(&cid).and_then(|m| self.registry.culture(m).ok())
    }

    pub(crate) fn link(&self, cid: Cid) -> LinkProfile {
        let base = self.engine.topology().radio_range();
        match self.culture_of(cid) {
            Some(c) => c.link_profile(base),
            None => LinkProfile {
                range: base,
                hop_delay: SimTime::from_secs(crate::model::DEFAULT_HOP_DELAY),
            },
        }
    }

    pub(crate) fn resolve(&self, community: &CommunityRef) -> Result<Cid, ProtocolError> {
        match community {
            CommunityRef::Id(cid) => Ok(*cid),
            CommunityRef::Alias(a) => self
                .aliases
                .get(a)
                .copied()
                .ok_or_else(|| ProtocolError::UnknownCommunity(a.clone())),
        }
    }

    pub(crate) fn fail(&mut self, node: NodeId, err: ProtocolError) {
        self.log.errors.push(RunError {
            time: self.engine.now(),
            node,
            kind: err.kind(),
            message: err.to_string(),
        });
    }

    /// Transmits and accounts a packet; engine refusals become run errors.
    pub(crate) fn tx(&mut self, from: NodeId, pkt: Packet, mode: Mode) -> Option<TxOutcome> {
        let link = self.link(pkt.cid);
        let cid = pkt.cid;
        let kind = pkt.kind;
        let file = ftp_file_of(&pkt);
        match self.engine.transmit(from, pkt, mode, link) {
            Ok(out) => {
                if kind != PacketKind::Update {
                    *self
                        .log
                        .participation
                        .entry(cid)
                        .or_default()
                        .entry(from)
                        .or_default() += 1;
                }
                if let Some(t) = file.and_then(|f| self.log.transfers.get_mut(&f)) {
                    t.hop_tx += 1;
                }
                Some(out)
            }
            Err(e) => {
                self.fail(from, e.into());
                None
            }
        }
    }

    pub(crate) fn after(&mut self, delay: SimTime, node: NodeId, timer: Timer) {
        self.engine.timer_after(delay, node, timer);
    }

    fn dispatch(&mut self, ev: Event<Packet, Timer>) {
        let node = ev.target;
        match ev.kind {
            EventKind::Deliver { from, packet } => self.on_packet(node, from, packet),
            EventKind::Timer(t) => self.on_timer(node, t),
        }
    }

    fn on_packet(&mut self, node: NodeId, from: NodeId, pkt: Packet) {
        match pkt.kind {
            PacketKind::McStart => self.on_mcstart(node, from, pkt),
            PacketKind::Rreq => self.on_rreq(node, from, pkt),
            PacketKind::Friend => self.on_friend(node, from, pkt),
            PacketKind::Update => {}
            PacketKind::McJoin
            | PacketKind::CTable
            | PacketKind::Rrep
            | PacketKind::Data
            | PacketKind::Ack => self.on_routed(node, from, pkt),
        }
    }

    fn on_timer(&mut self, node: NodeId, timer: Timer) {
        match timer {
            Timer::Command(cmd) => {
                if let Err(e) = self.execute(node, *cmd) {
                    self.fail(node, e);
                }
            }
            Timer::JoinDeadline(cid) => self.commit_community(node, cid),
            Timer::Refresh(cid) => self.refresh(node, cid),
            Timer::RreqTimeout { cid, dst, id } => self.rreq_timeout(node, cid, dst, id),
            Timer::FtpTimeout { cid, file_id, gen } => self.ftp_timeout(node, cid, file_id, gen),
            Timer::WatchCheck { pkt, relay } => self.watch_check(node, pkt, relay),
            Timer::CbrTick {
                cid,
                dst,
                remaining,
                interval,
                size,
            } => self.cbr_tick(node, cid, dst, remaining, interval, size),
        }
    }

    fn execute(&mut self, node: NodeId, cmd: Command) -> Result<(), ProtocolError> {
        match cmd {
            Command::Start { culture, alias } => {
                let cid = self.start_service(node, &culture)?;
                if let Some(a) = alias {
                    self.aliases.insert(a, cid);
                }
                Ok(())
            }
            Command::Join { community } => {
                let cid = self.resolve(&community)?;
                self.join_service(node, cid)
            }
            Command::LateJoin { community } => {
                let cid = self.resolve(&community)?;
                self.late_join(node, cid)
            }
            Command::Send {
                community,
                target,
                op,
                payload,
            } => {
                let cid = self.resolve(&community)?;
                let dst = self.target_mid(node, cid, target)?;
                self.route_data(node, cid, dst, &op, payload, PacketKind::Data)
            }
            Command::Friend {
                community,
                target,
                op,
                payload,
            } => {
                let cid = self.resolve(&community)?;
                let dst = self.target_mid(node, cid, target)?;
                self.friend_data(node, cid, dst, &op, payload)
            }
            Command::Ftp {
                community,
                target,
                payload,
                chunk_size,
                window,
            } => {
                let cid = self.resolve(&community)?;
                let dst = self.target_mid(node, cid, target)?;
                self.ftp_put(node, cid, dst, payload, chunk_size, window).map(|_| ())
            }
            Command::Register {
                community,
                name,
                mid,
                of,
            } => {
                let cid = self.resolve(&community)?;
                let of = match of {
                    Some(r) => self.resolve(&r)?,
                    None => cid,
                };
                self.name_register(node, cid, &name, mid, of)
            }
            Command::Resolve { community, name } => {
                let cid = self.resolve(&community)?;
                self.name_resolve(node, cid, &name)
            }
            Command::Cbr {
                community,
                target,
                count,
                interval,
                size,
            } => {
                let cid = self.resolve(&community)?;
                let dst = self.target_mid(node, cid, target)?;
                self.cbr_tick(node, cid, dst, count, SimTime::from_secs(interval), size);
                Ok(())
            }
            Command::Telnet {
                community,
                target,
                text,
            } => {
                let cid = self.resolve(&community)?;
                let dst = self.target_mid(node, cid, target)?;
                self.route_data(node, cid, dst, "login", Vec::new(), PacketKind::Data)?;
                self.route_data(node, cid, dst, "echo", text.into_bytes(), PacketKind::Data)
            }
        }
    }

    pub(crate) fn target_mid(&self, node: NodeId, cid: Cid, target: Target) -> Result<Mid, ProtocolError> {
        match target {
            Target::Mid(m) => Ok(m),
            Target::Host(host) => {
                let m = self.nodes[node.index()]
                    .member(cid)
                    .ok_or(ProtocolError::NotMember { node, cid })?;
                if host == node {
                    return m.mid().ok_or(ProtocolError::NotMember { node, cid });
                }
                m.mid_of_host(host)
                    .ok_or(ProtocolError::UnknownHost { cid, host })
            }
        }
    }

    fn finish(&mut self) {
        let open: Vec<(PktId, NodeId)> = std::mem::take(&mut self.log.friend_open).into_iter().collect();
        for (id, origin) in open {
            self.fail(origin, ProtocolError::FriendUndeliverable(id.to_string()));
        }
        let now = self.engine.now();
        for t in self.log.transfers.values_mut() {
            if t.status == TransferStatus::Running {
                self.log.errors.push(RunError {
                    time: now,
                    node: t.src,
                    kind: "TransferIncomplete",
                    message: format!("transfer {} still running at end of run", t.file_id),
                });
            }
        }
    }
}

/// File id of an FTP chunk or acknowledgement, possibly inside a FRIEND.
fn ftp_file_of(pkt: &Packet) -> Option<u32> {
    let p = pkt.inner.as_deref().unwrap_or(pkt);
    let is_ftp = matches!((p.kind, p.op.as_str()), (PacketKind::Data, "put") | (PacketKind::Ack, "ack"));
    if !is_ftp || p.payload.len() < 4 {
        return None;
    }
    Some(u32::from_be_bytes(p.payload[..4].try_into().unwrap()))
}
