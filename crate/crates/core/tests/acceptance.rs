//! End-to-end acceptance checks. Runs as a plain binary so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use humanet::model::{InvokeArgs, ModelError, Registry};
use humanet::protocol::{Command, CommunityRef, Network, NetworkConfig, NodeInfo, Target};
use humanet::report::{compare, run_scenario};
use humanet::scenario::Scenario;
use humanet::sim::Topology;
use humanet::stack::{classify_environment, select_protocol, Addon, Environment, ProtocolName};
use humanet::{Mid, NodeId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn scenario(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name);
    Scenario::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_table_reproduction() -> Check {
    let out = run_scenario(&scenario("fig5.scenario"), None, false).map_err(|e| e.to_string())?;
    let net = &out.network;
    let cid = net.cid("C1").ok_or("community C1 missing")?;
    let table = net.community_table(NodeId(0), cid).ok_or("N1 has no table")?;
    let got: BTreeSet<(String, String, String)> = table
        .entries()
        .map(|e| {
            let path: Vec<&str> = e.path.iter().map(|n| net.node_name(*n)).collect();
            (net.node_name(e.host()).to_owned(), net.alias_of(e.cid), path.join("-"))
        })
        .collect();
    let want: BTreeSet<(String, String, String)> = [
        ("N2", "C1", "N1-N2"),
        ("N3", "C1", "N1-N3"),
        ("N4", "C1", "N1-N2-N4"),
    ]
    .iter()
    .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
    .collect();
    ensure(got == want, || format!("N1 table {got:?}"))?;
    Ok("N1 table matches exactly".into())
}

fn c2_single_flood() -> Check {
    let out = run_scenario(&scenario("fig5.scenario"), None, false).map_err(|e| e.to_string())?;
    let mcstart = out.network.counters().kind_tx("MCSTART");
    let floods = out.network.log().control_floods();
    ensure(mcstart == 4 && floods == 1, || format!("MCSTART tx {mcstart}, control floods {floods}"))?;
    Ok(format!("MCSTART transmissions {mcstart}, control floods {floods}"))
}

fn c3_overhead() -> Check {
    let sc = scenario("random20.scenario");
    ensure(sc.nodes.len() == 20 && sc.network.duration == 100.0, || "scenario shape".into())?;
    ensure(sc.topology().is_connected(sc.network.radio_range), || "topology not connected".into())?;
    let (out, cmp) = compare(&sc, None).map_err(|e| e.to_string())?;
    let cid = out.network.cid("C1").ok_or("C1 missing")?;
    let members = out.network.nodes().iter().filter(|n| n.is_member(cid)).count();
    ensure(members == 10, || format!("{members} members"))?;
    // Connected graph: every node's update reaches every node once per round.
    let expected_baseline = 20 * 20 * 20;
    ensure(cmp.baseline_control_tx == expected_baseline, || {
        format!("baseline {} != {expected_baseline}", cmp.baseline_control_tx)
    })?;
    ensure(cmp.ratio >= 5.0, || format!("ratio {:.2}", cmp.ratio))?;
    Ok(format!(
        "baseline {} vs humanistic {} control transmissions, ratio {:.1}",
        cmp.baseline_control_tx, cmp.humanistic_control_tx, cmp.ratio
    ))
}

/// Random connected topology with two overlapping communities and mixed
/// traffic, including sends aimed at arbitrary member ids and friend packets
/// from non-members.
fn isolation_run(seed: u64) -> Result<(u64, u64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(8..=16);
    let topo = Topology::random_connected(n, 4.0, 1.5, &mut rng, 1000).ok_or("no connected topology")?;
    let info = (0..n)
        .map(|i| NodeInfo { name: format!("N{}", i + 1), gateway: false })
        .collect();
    let cfg = NetworkConfig { seed, horizon: 20.0, ..Default::default() };
    let mut net = Network::new(Registry::standard(), topo, info, cfg);
    let mut ids: Vec<NodeId> = (0..n as u32).map(NodeId).collect();
    ids.shuffle(&mut rng);
    let (si_a, si_b) = (ids[0], ids[1]);
    net.schedule(0.0, si_a, Command::Start { culture: "F".into(), alias: Some("A".into()) }).unwrap();
    net.schedule(0.0, si_b, Command::Start { culture: "Culture 1".into(), alias: Some("B".into()) }).unwrap();
    let alias = |a: &str| CommunityRef::Alias(a.into());
    // Overlap: every node flips a coin for each community independently.
    for &node in &ids[2..] {
        for a in ["A", "B"] {
            if rng.gen_bool(0.5) {
                net.schedule(0.3, node, Command::Join { community: alias(a) }).unwrap();
            }
        }
    }
    for _ in 0..20 {
        let node = ids[rng.gen_range(0..n)];
        let a = if rng.gen_bool(0.5) { "A" } else { "B" };
        let target = if rng.gen_bool(0.5) {
            Target::Mid(Mid(rng.gen_range(0..8)))
        } else {
            Target::Host(ids[rng.gen_range(0..n)])
        };
        let t = rng.gen_range(2.0..15.0);
        let cmd = match rng.gen_range(0..3) {
            0 => Command::Friend { community: alias(a), target, op: "send".into(), payload: vec![1, 2, 3] },
            1 => Command::Ftp { community: alias(a), target, payload: vec![9; 3000], chunk_size: 1024, window: 4 },
            _ => Command::Send { community: alias(a), target, op: "send".into(), payload: vec![7] },
        };
        net.schedule(t, node, cmd).unwrap();
    }
    net.run();

    // Independent oracle: every handed-off payload landed on a committed
    // member of its own community, on the machine with the addressed id.
    let mut violations = 0;
    for d in &net.log().deliveries {
        let ok = net
            .membership(d.host, d.cid)
            .is_some_and(|m| m.committed && m.mid() == Some(d.dst));
        let culture_ok = net
            .communities()
            .any(|(cid, culture)| cid == d.cid && net.membership(d.host, d.cid).is_some_and(|m| m.machine.mc == culture));
        if !ok || !culture_ok {
            violations += 1;
        }
    }
    // Non-members never hold state for a community they did not join.
    for node in net.nodes() {
        for (cid, m) in &node.memberships {
            if m.machine.host != node.id || net.communities().all(|(c, _)| c != *cid) {
                violations += 1;
            }
        }
    }
    violations += net.log().isolation_violations;
    Ok((violations, net.log().deliveries.len() as u64))
}

fn c4_isolation() -> Check {
    let mut total = 0;
    let mut deliveries = 0;
    for seed in 0..100 {
        let (v, d) = isolation_run(seed)?;
        total += v;
        deliveries += d;
    }
    ensure(total == 0, || format!("{total} isolation violations"))?;
    ensure(deliveries > 0, || "no deliveries at all".into())?;
    Ok(format!("100 runs, {deliveries} application deliveries, 0 violations"))
}

fn c5_mapping() -> Check {
    let got: BTreeSet<_> = [Environment::Closed, Environment::Open]
        .into_iter()
        .map(|e| {
            let p = select_protocol(classify_environment(Some(e), &BTreeSet::new()));
            (p.name, p.addon)
        })
        .collect();
    let want: BTreeSet<_> = [(ProtocolName::P1, Addon::None), (ProtocolName::P2, Addon::Watchdog)].into();
    ensure(got == want, || format!("{got:?}"))?;
    let undeclared = classify_environment(None, &[NodeId(3)].into());
    ensure(undeclared == Environment::Open, || "dropper did not open the environment".into())?;
    Ok("Closed->(P1, none), Open->(P2, watchdog)".into())
}

fn c6_watchdog() -> Check {
    let open = scenario("watchdog.scenario");
    ensure(open.environment() == Environment::Open, || "scenario should classify open".into())?;
    let mut closed = open.clone();
    closed.network.environment = Some(Environment::Closed);
    let p2 = run_scenario(&open, None, false).map_err(|e| e.to_string())?;
    let p1 = run_scenario(&closed, None, false).map_err(|e| e.to_string())?;
    let x = NodeId(1);
    let log = p2.network.log();
    let excl = log
        .exclusions
        .iter()
        .find(|e| e.relay == x)
        .ok_or("dropper never excluded")?;
    ensure(excl.drops == 3, || format!("excluded after {} drops", excl.drops))?;
    let late: Vec<_> = log.installs.iter().filter(|i| i.time >= excl.time).collect();
    ensure(late.iter().all(|i| !i.path.contains(&x)), || "dropper on a later path".into())?;
    ensure(!late.is_empty(), || "no replacement path installed".into())?;
    let (r1, r2) = (p1.network.log().delivery_ratio(), log.delivery_ratio());
    ensure(r2 >= r1, || format!("P2 {r2} < P1 {r1}"))?;
    Ok(format!(
        "excluded after 3 drops, {} later installs avoid it, delivery P2 {r2:.2} >= P1 {r1:.2}",
        late.len()
    ))
}

fn expected_file(len: usize) -> Vec<u8> {
    // Fibonacci-hashing byte pattern, written out independently of the library.
    let mut out = Vec::with_capacity(len);
    let mut acc: u64 = 0;
    for _ in 0..len {
        out.push((acc >> 56) as u8);
        acc = acc.wrapping_add(0x9E37_79B9_7F4A_7C15);
    }
    out
}

fn c7_transfer() -> Check {
    let sc = scenario("ftp.scenario");
    ensure(sc.network.loss_rate == 0.1, || "scenario loss rate".into())?;
    let out = run_scenario(&sc, None, false).map_err(|e| e.to_string())?;
    let net = &out.network;
    let t = net.log().transfers.values().next().ok_or("no transfer")?;
    ensure(t.total_bytes == 65536 && t.chunks == 64 && t.window == 4, || format!("{t:?}"))?;
    let cid = t.cid;
    let host = net
        .membership(t.src, cid)
        .and_then(|m| m.directory.get(&t.dst))
        .ok_or("sink unknown")?
        .host;
    let got = net
        .membership(host, cid)
        .and_then(|m| m.machine.state.files.get(&t.file_id))
        .ok_or("file never reassembled")?;
    ensure(*got == expected_file(65536), || "reassembled bytes differ".into())?;
    let s = net.membership(t.src, cid).unwrap().machine.state.outbound.get(&t.file_id).unwrap();
    ensure(s.max_in_flight <= 4, || format!("in flight {}", s.max_in_flight))?;
    ensure(net.counters().packets_dropped > 0, || "no loss happened".into())?;
    Ok(format!(
        "64 KiB byte-exact, {} retransmitted chunks, {} copies lost",
        s.window.retransmissions,
        net.counters().packets_dropped
    ))
}

fn c8_gate() -> Check {
    let reg = Registry::standard();
    let f = reg.culture("F").map_err(|e| e.to_string())?;
    // FTP application plus the TCP transport and DSDV routing arts.
    let allowed: BTreeSet<&str> = ["put", "get", "ack", "connect", "send", "close", "route", "refresh"].into();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let pool = [
        "put", "get", "ack", "connect", "send", "close", "route", "refresh", "Put", "GET", "put ", "acks", "emit",
        "login", "echo", "register", "resolve", "answer", "discover", "observe", "", "refresh\0",
    ];
    let mut machine = reg.instantiate_machine("F", NodeId(0)).map_err(|e| e.to_string())?;
    let mut violations = 0;
    let mut rejected = 0;
    for _ in 0..1000 {
        let op: String = if rng.gen_bool(0.5) {
            pool[rng.gen_range(0..pool.len())].to_owned()
        } else {
            let len = rng.gen_range(0..10);
            (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
        };
        let payload: Vec<u8> = (0..rng.gen_range(0..12)).map(|_| rng.gen()).collect();
        let before = machine.fingerprint();
        let res = machine.invoke(f, &op, &InvokeArgs { from: Some(Mid(1)), payload });
        let gated = matches!(res, Err(ModelError::OpNotExposed(_)));
        if gated {
            rejected += 1;
        }
        if gated == allowed.contains(op.as_str()) {
            violations += 1;
        }
        if res.is_err() && machine.fingerprint() != before {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!("1000 names, {rejected} rejected, 0 violations"))
}

fn c9_determinism() -> Check {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".scenario"))
        .collect();
    names.sort();
    for name in &names {
        let sc = scenario(name);
        let a = run_scenario(&sc, None, true).map_err(|e| e.to_string())?;
        let b = run_scenario(&sc, None, true).map_err(|e| e.to_string())?;
        let (ra, rb) = (
            serde_json::to_vec(&a.report).unwrap(),
            serde_json::to_vec(&b.report).unwrap(),
        );
        ensure(ra == rb, || format!("{name}: reports differ"))?;
        ensure(a.trace_lines() == b.trace_lines(), || format!("{name}: traces differ"))?;
        ensure(!a.trace_lines().is_empty(), || format!("{name}: empty trace"))?;
    }
    Ok(format!("{} bundled scenarios identical across runs", names.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("community table reproduction", Duration::from_secs(1), c1_table_reproduction),
        ("single announcement flood", Duration::from_secs(1), c2_single_flood),
        ("overhead dominance", Duration::from_secs(10), c3_overhead),
        ("community isolation", Duration::from_secs(60), c4_isolation),
        ("environment to protocol mapping", Duration::from_secs(1), c5_mapping),
        ("watchdog efficacy", Duration::from_secs(5), c6_watchdog),
        ("transfer fidelity", Duration::from_secs(5), c7_transfer),
        ("operation gate fuzzing", Duration::from_secs(5), c8_gate),
        ("determinism", Duration::from_secs(30), c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match res {
            Ok(_) if took > *budget => Err(format!("took {took:.2?}, budget {budget:?}")),
            r => r,
        };
        match res {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {took:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({why}; {took:.2?})", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
