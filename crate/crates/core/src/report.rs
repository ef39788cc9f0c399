//! Scenario runs and their JSON metrics.

use serde::Serialize;
use serde_json::{json, Value};

use crate::baseline::{run_baseline, BaselineRun};
use crate::protocol::Network;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::NodeId;

pub struct RunOutput {
    pub network: Network,
    pub report: Value,
}

impl RunOutput {
    /// Errors raised inside the simulation (the run itself completed).
    pub fn error_count(&self) -> usize {
        self.network.log().errors.len()
    }

    /// One line per traced radio event; empty unless tracing was on.
    pub fn trace_lines(&self) -> Vec<String> {
        self.network.trace().iter().map(ToString::to_string).collect()
    }
}

pub fn run_scenario(sc: &Scenario, seed: Option<u64>, trace: bool) -> Result<RunOutput, ScenarioError> {
    let mut network = sc.build(seed, trace)?;
    network.run();
    let report = metrics(sc, &network);
    Ok(RunOutput { network, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub nodes: usize,
    pub rounds: u64,
    pub baseline_control_tx: u64,
    pub humanistic_control_tx: u64,
    /// Baseline over humanistic control transmissions.
    pub ratio: f64,
}

/// Runs the scenario and the flooding baseline on the same topology.
pub fn compare(sc: &Scenario, seed: Option<u64>) -> Result<(RunOutput, Comparison), ScenarioError> {
    let out = run_scenario(sc, seed, false)?;
    let seed = seed.unwrap_or(sc.network.seed);
    let BaselineRun { rounds, control_tx } =
        run_baseline(&sc.topology(), sc.network.duration, sc.network.baseline_interval, seed);
    let ours = out.network.counters().control_tx;
    let ratio = if ours == 0 { f64::INFINITY } else { control_tx as f64 / ours as f64 };
    let cmp = Comparison {
        nodes: sc.nodes.len(),
        rounds,
        baseline_control_tx: control_tx,
        humanistic_control_tx: ours,
        ratio,
    };
    Ok((out, cmp))
}

/// Deterministic report; object keys come out sorted.
pub fn metrics(sc: &Scenario, net: &Network) -> Value {
    let name = |n: NodeId| net.node_name(n).to_owned();
    let path = |p: &[NodeId]| p.iter().map(|n| name(*n)).collect::<Vec<_>>().join("-");
    let c = net.counters();
    let log = net.log();

    let communities: Vec<Value> = net
        .communities()
        .map(|(cid, culture)| {
            let si = cid.si;
            let spec = net.registry().culture(culture).ok();
            let members: Vec<Value> = net
                .membership(si, cid)
                .map(|m| {
                    m.directory
                        .iter()
                        .map(|(mid, info)| json!({"mid": mid.0, "host": name(info.host), "gateway": info.gateway}))
                        .collect()
                })
                .unwrap_or_default();
            let mut tables = serde_json::Map::new();
            for node in net.nodes() {
                if let Some(m) = node.member(cid) {
                    let rows: Vec<Value> = m
                        .ct
                        .entries()
                        .map(|e| json!({"mid": e.mid.0, "cid": e.cid.to_string(), "host": name(e.host()), "path": path(&e.path)}))
                        .collect();
                    tables.insert(name(node.id), Value::Array(rows));
                }
            }
            let participation: serde_json::Map<String, Value> = log
                .participation
                .get(&cid)
                .map(|p| p.iter().map(|(n, k)| (name(*n), json!(k))).collect())
                .unwrap_or_default();
            json!({
                "alias": net.alias_of(cid),
                "cid": cid.to_string(),
                "culture": culture,
                "service": spec.map(|s| s.service.clone()),
                "proactive": spec.is_some_and(|s| s.is_proactive()),
                "si": name(si),
                "members": members,
                "tables": tables,
                "transmissions_by_node": participation,
            })
        })
        .collect();

    let transfers: Vec<Value> = log
        .transfers
        .values()
        .map(|t| {
            let session = net
                .membership(t.src, t.cid)
                .and_then(|m| m.machine.state.outbound.get(&t.file_id));
            json!({
                "file_id": t.file_id,
                "src": name(t.src),
                "community": net.alias_of(t.cid),
                "dst_mid": t.dst.0,
                "total_bytes": t.total_bytes,
                "chunks": t.chunks,
                "window": t.window,
                "chunk_sends": session.map(|s| s.window.sends),
                "retransmissions": session.map(|s| s.window.retransmissions),
                "max_in_flight": session.map(|s| s.max_in_flight),
                "acks_received": t.acks,
                "hop_transmissions": t.hop_tx,
                "status": t.status,
                "completed_at": t.completed_at.map(|x| x.as_secs()),
                "content_match": t.content_match,
            })
        })
        .collect();

    let mut energy = serde_json::Map::new();
    let mut total_energy = 0.0;
    for node in net.nodes() {
        let e = c.node_tx(node.id) as f64 * sc.network.tx_cost + c.node_rx(node.id) as f64 * sc.network.rx_cost;
        total_energy += e;
        energy.insert(name(node.id), json!(e));
    }

    let reputation: serde_json::Map<String, Value> = net
        .nodes()
        .iter()
        .filter_map(|n| {
            let r = n.reputation.as_ref()?;
            let scores: serde_json::Map<String, Value> = (0..net.nodes().len() as u32)
                .map(NodeId)
                .filter(|x| *x != n.id)
                .map(|x| (name(x), json!(r.score(x))))
                .collect();
            Some((name(n.id), Value::Object(scores)))
        })
        .collect();

    let config = net.config();
    json!({
        "seed": config.seed,
        "duration": sc.network.duration,
        "final_time": net.now().as_secs(),
        "nodes": sc.nodes.len(),
        "environment": sc.environment(),
        "protocol": config.protocol,
        "transmissions": {
            "total": c.total_tx(),
            "broadcasts": c.broadcasts,
            "unicasts": c.unicasts,
            "control": c.control_tx,
            "data": c.data_tx,
            "friend_relays": c.friend_relays,
            "by_kind": c.tx_by_kind,
            "copies_sent": c.packets_transmitted,
            "copies_delivered": c.packets_delivered,
            "copies_dropped": c.packets_dropped,
        },
        "control_floods": log.floods,
        "communities": communities,
        "data": {
            "originated": log.originated,
            "delivered": log.delivered,
            "delivery_ratio": log.delivery_ratio(),
            "rejected_ops": log.rejected,
            "isolation_violations": log.isolation_violations,
        },
        "transfers": transfers,
        "resolutions": log.resolutions.iter().map(|r| json!({
            "time": r.time.as_secs(),
            "requester": name(r.requester),
            "name": r.name,
            "mid": r.mid.map(|m| m.0),
            "answered_by": name(r.answered_by),
        })).collect::<Vec<_>>(),
        "watchdog": {
            "exclusions": log.exclusions.iter().map(|x| json!({
                "time": x.time.as_secs(),
                "observer": name(x.observer),
                "relay": name(x.relay),
                "score": x.score,
                "drops": x.drops,
            })).collect::<Vec<_>>(),
            "reputation": reputation,
        },
        "energy": {"total": total_energy, "per_node": energy},
        "society": net.nodes().iter().map(|n| (name(n.id), json!(n.society.iter().map(|(c, s)| json!({"cid": c.to_string(), "service": s})).collect::<Vec<_>>()))).collect::<serde_json::Map<_, _>>(),
        "errors": log.errors.iter().map(|e| json!({
            "time": e.time.as_secs(),
            "node": name(e.node),
            "kind": e.kind,
            "message": e.message,
        })).collect::<Vec<_>>(),
    })
}
