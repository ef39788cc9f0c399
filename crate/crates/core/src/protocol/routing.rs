use super::network::{Exclusion, InstallSource, Network, PathInstall, Timer};
use super::packet::{DigestEntry, Packet, PacketKind, TableDigest};
use super::state::{MemberInfo, Recovery};
use super::table::reroot;
use super::ProtocolError;
use crate::ids::{Cid, Mid, NodeId, PktId};
use crate::sim::{Mode, SimTime, TxOutcome};
use crate::stack::ReputationTable;

impl Network {
    /// Hands a source-routed packet to the next node of its trace.
    pub(crate) fn send_routed(&mut self, node: NodeId, pkt: Packet) -> Option<TxOutcome> {
        let pos = pkt.route_trace.iter().position(|n| *n == node)?;
        let next = *pkt.route_trace.get(pos + 1)?;
        let watch = self.watchdog_active()
            && pkt.kind == PacketKind::Data
            && pos + 2 < pkt.route_trace.len();
        let id = pkt.id;
        let hop = self.link(pkt.cid).hop_delay;
        let out = self.tx(node, pkt, Mode::Unicast(next))?;
        if watch {
            self.after(hop.times(2), node, Timer::WatchCheck { pkt: id, relay: next });
        }
        Some(out)
    }

    /// MCJOIN, CTABLE, RREP, DATA and ACK: forward along the trace or consume.
    pub(crate) fn on_routed(&mut self, node: NodeId, from: NodeId, mut pkt: Packet) {
        let Some(pos) = pkt.route_trace.iter().position(|n| *n == node) else {
            return;
        };
        if pos + 1 == pkt.route_trace.len() {
            match pkt.kind {
                PacketKind::McJoin => self.on_join_at_si(node, pkt),
                PacketKind::CTable => self.on_ctable(node, pkt),
                PacketKind::Rrep => self.on_rrep(node, pkt),
                _ => self.deliver_app(node, pkt),
            }
            return;
        }
        if pkt.ttl == 0 {
            let id = pkt.id.to_string();
            self.fail(node, ProtocolError::TtlExpired(id));
            return;
        }
        pkt.ttl -= 1;
        let (kind, id) = (pkt.kind, pkt.id);
        let out = self.send_routed(node, pkt);
        if kind == PacketKind::Data && out.is_some_and(|o| !o.withheld) && self.watchdog_active() {
            // The previous hop overhears the forward as it happens.
            self.nodes[from.index()].overheard.insert((id, node));
        }
    }

    /// Routes an application payload to `dst` within `cid`.
    pub(crate) fn route_data(
        &mut self,
        node: NodeId,
        cid: Cid,
        dst: Mid,
        op: &str,
        payload: Vec<u8>,
        kind: PacketKind,
    ) -> Result<(), ProtocolError> {
        let state = &mut self.nodes[node.index()];
        let m = state.member(cid).ok_or(ProtocolError::NotMember { node, cid })?;
        let (own, mc) = (m.mid(), m.machine.mc.clone());
        let mut pkt = Packet::new(kind, state.next_id(), cid);
        pkt.mc = mc;
        pkt.src_mid = own;
        pkt.dst_mid = Some(dst);
        pkt.ttl = self.config.data_ttl;
        pkt.op = op.to_owned();
        pkt.payload = payload;
        if kind == PacketKind::Data {
            self.log.originated += 1;
        }
        if own == Some(dst) {
            pkt.route_trace = vec![node];
            self.deliver_app(node, pkt);
            return Ok(());
        }
        self.dispatch_member(node, pkt);
        Ok(())
    }

    /// Sends `pkt` (owned by a member) over its table, or queues it behind a
    /// route request.
    fn dispatch_member(&mut self, node: NodeId, mut pkt: Packet) {
        let cid = pkt.cid;
        let dst = pkt.dst_mid.expect("member traffic is addressed");
        let entry = self.nodes[node.index()]
            .member(cid)
            .and_then(|m| m.ct.get(dst))
            .map(|e| e.path.clone());
        match entry {
            Some(path) => {
                pkt.route_trace = path;
                self.send_routed(node, pkt);
            }
            None => {
                self.nodes[node.index()]
                    .pending
                    .entry((cid, dst))
                    .or_default()
                    .push(pkt);
                self.request_route(node, cid, dst);
            }
        }
    }

    /// Sends queued packets whose destinations now have table entries.
    pub(crate) fn flush_pending(&mut self, node: NodeId, cid: Cid) {
        loop {
            let state = &mut self.nodes[node.index()];
            let Some(m) = state.member(cid) else {
                return;
            };
            let ready = state
                .pending
                .keys()
                .find(|(c, mid)| *c == cid && m.ct.contains(*mid))
                .copied();
            let Some(key) = ready else {
                return;
            };
            state.outstanding.remove(&key);
            let pkts = state.pending.remove(&key).unwrap_or_default();
            for p in pkts {
                self.dispatch_member(node, p);
            }
        }
    }

    fn request_route(&mut self, node: NodeId, cid: Cid, dst: Mid) {
        let rreq_ttl = self.config.rreq_ttl;
        let hop = self.link(cid).hop_delay;
        let state = &mut self.nodes[node.index()];
        if state.outstanding.contains_key(&(cid, dst)) {
            return;
        }
        let Some(m) = state.member(cid) else {
            return;
        };
        let (own, mc) = (m.mid(), m.machine.mc.clone());
        let avoid = state.reputation.as_ref().map(|r| r.excluded()).unwrap_or_default();
        let mut pkt = Packet::new(PacketKind::Rreq, state.next_id(), cid);
        state.first_sight(pkt.id);
        state.outstanding.insert((cid, dst), Recovery { id: pkt.id, replies: 0 });
        pkt.mc = mc;
        pkt.src_mid = own;
        pkt.dst_mid = Some(dst);
        pkt.ttl = rreq_ttl;
        pkt.route_trace = vec![node];
        pkt.avoid = avoid;
        let id = pkt.id;
        *self.log.floods.entry(PacketKind::Rreq.label()).or_default() += 1;
        self.tx(node, pkt, Mode::Broadcast);
        let wait = hop.times(4 * u64::from(rreq_ttl).max(1)).max(SimTime::from_secs(1.0));
        self.after(wait, node, Timer::RreqTimeout { cid, dst, id });
    }

    pub(crate) fn rreq_timeout(&mut self, node: NodeId, cid: Cid, dst: Mid, id: PktId) {
        let state = &mut self.nodes[node.index()];
        match state.outstanding.get(&(cid, dst)) {
            Some(r) if r.id == id => {}
            _ => return,
        }
        state.outstanding.remove(&(cid, dst));
        if state.member(cid).is_some_and(|m| m.ct.contains(dst)) {
            return self.flush_pending(node, cid);
        }
        let dropped = state.pending.remove(&(cid, dst)).unwrap_or_default();
        if !dropped.is_empty() {
            self.fail(node, ProtocolError::RecoveryFailed { cid, mid: dst });
        }
    }

    pub(crate) fn on_rreq(&mut self, node: NodeId, from: NodeId, mut pkt: Packet) {
        if pkt.avoid.contains(&from) || pkt.avoid.contains(&node) || pkt.route_trace.contains(&node) {
            return;
        }
        let state = &mut self.nodes[node.index()];
        if !state.first_sight(pkt.id) {
            return;
        }
        pkt.route_trace.push(node);
        let cid = pkt.cid;
        let dst = pkt.dst_mid;
        let answer = state.member(cid).and_then(|m| {
            let own = m.mid()?;
            let knows = Some(own) == dst
                || dst
                    .and_then(|d| m.ct.get(d))
                    .is_some_and(|e| !e.path.iter().any(|n| pkt.avoid.contains(n)));
            knows.then(|| {
                let mut entries = vec![DigestEntry {
                    mid: own,
                    host: node,
                    gateway: m.machine.gateway,
                    path: vec![node],
                }];
                for e in m.ct.entries() {
                    if e.path.iter().any(|n| pkt.avoid.contains(n)) {
                        continue;
                    }
                    let info = m.directory.get(&e.mid);
                    entries.push(DigestEntry {
                        mid: e.mid,
                        host: e.host(),
                        gateway: info.is_some_and(|i| i.gateway),
                        path: e.path.clone(),
                    });
                }
                (own, TableDigest { full: false, entries })
            })
        });
        if let Some((own, digest)) = answer {
            let mut rrep = Packet::new(PacketKind::Rrep, state.next_id(), cid);
            rrep.mc = pkt.mc;
            rrep.src_mid = Some(own);
            rrep.dst_mid = pkt.src_mid;
            rrep.ttl = self.config.data_ttl;
            rrep.route_trace = pkt.route_trace.iter().rev().copied().collect();
            rrep.payload = digest.encode();
            self.send_routed(node, rrep);
            return;
        }
        if pkt.ttl == 0 {
            return;
        }
        pkt.ttl -= 1;
        if !state.is_member(cid) {
            self.engine.counters_mut().friend_relays += 1;
        }
        self.tx(node, pkt, Mode::Broadcast);
    }

    fn on_rrep(&mut self, node: NodeId, pkt: Packet) {
        let cid = pkt.cid;
        let Ok(digest) = TableDigest::decode(&pkt.payload) else {
            return;
        };
        let Some(m) = self.nodes[node.index()].member_mut(cid) else {
            return;
        };
        for e in &digest.entries {
            m.directory.entry(e.mid).or_insert(MemberInfo {
                host: e.host,
                gateway: e.gateway,
            });
        }
        if let Some(r) = self.nodes[node.index()]
            .outstanding
            .values_mut()
            .find(|r| r.id.origin == node)
        {
            r.replies += 1;
        }
        let to_responder: Vec<NodeId> = pkt.route_trace.iter().rev().copied().collect();
        for e in digest.entries {
            if e.host == node {
                continue;
            }
            let path = reroot(&to_responder, &e.path);
            if path.len() >= 2 {
                self.install(node, cid, e.mid, path, InstallSource::Rrep);
            }
        }
        self.flush_pending(node, cid);
    }

    /// Offers `path` to `node`'s table for `cid`, refusing excluded relays.
    pub(crate) fn install(&mut self, node: NodeId, cid: Cid, mid: Mid, path: Vec<NodeId>, source: InstallSource) -> bool {
        let state = &mut self.nodes[node.index()];
        if path.iter().skip(1).any(|n| state.is_excluded(*n)) {
            return false;
        }
        let Some(m) = state.memberships.get_mut(&cid) else {
            return false;
        };
        if !m.ct.offer(mid, path.clone()) {
            return false;
        }
        self.log.installs.push(PathInstall {
            time: self.engine.now(),
            owner: node,
            cid,
            mid,
            path,
            source,
        });
        true
    }

    /// Carries a payload to `dst` through non-members until some member of
    /// `cid` takes it over.
    pub(crate) fn friend_data(&mut self, node: NodeId, cid: Cid, dst: Mid, op: &str, payload: Vec<u8>) -> Result<(), ProtocolError> {
        let friend_ttl = self.config.friend_ttl;
        let data_ttl = self.config.data_ttl;
        let state = &mut self.nodes[node.index()];
        let mc = match state.member(cid) {
            Some(m) => m.machine.mc.clone(),
            None => state
                .announcements
                .get(&cid)
                .map(|a| a.mc.clone())
                .ok_or(ProtocolError::NotAnnounced { node, cid })?,
        };
        let mut inner = Packet::new(PacketKind::Data, state.next_id(), cid);
        inner.mc = mc.clone();
        inner.src_mid = state.member(cid).and_then(|m| m.mid());
        inner.dst_mid = Some(dst);
        inner.ttl = data_ttl;
        inner.op = op.to_owned();
        inner.payload = payload;
        self.log.originated += 1;
        if state.is_member(cid) {
            return {
                self.dispatch_member(node, inner);
                Ok(())
            };
        }
        let mut outer = Packet::new(PacketKind::Friend, state.next_id(), cid);
        state.first_sight(outer.id);
        outer.mc = mc;
        outer.ttl = friend_ttl;
        outer.route_trace = vec![node];
        outer.inner = Some(Box::new(inner));
        self.log.friend_open.insert(outer.id, node);
        *self.log.floods.entry(PacketKind::Friend.label()).or_default() += 1;
        self.tx(node, outer, Mode::Broadcast);
        Ok(())
    }

    pub(crate) fn on_friend(&mut self, node: NodeId, _from: NodeId, mut pkt: Packet) {
        let state = &mut self.nodes[node.index()];
        if !state.first_sight(pkt.id) {
            return;
        }
        let cid = pkt.cid;
        if let Some(m) = state.member(cid) {
            let own = m.mid();
            let Some(inner) = pkt.inner.take() else {
                return;
            };
            self.log.friend_open.remove(&pkt.id);
            let mut inner = *inner;
            match inner.kind {
                PacketKind::Data | PacketKind::Ack if inner.dst_mid == own => {
                    inner.route_trace = vec![node];
                    self.deliver_app(node, inner);
                }
                PacketKind::Data | PacketKind::Ack if inner.dst_mid.is_some() => {
                    self.dispatch_member(node, inner);
                }
                _ => {}
            }
            return;
        }
        if pkt.ttl == 0 || pkt.route_trace.contains(&node) {
            return;
        }
        pkt.ttl -= 1;
        pkt.route_trace.push(node);
        self.engine.counters_mut().friend_relays += 1;
        self.tx(node, pkt, Mode::Broadcast);
    }

    /// Scores `relay` on whether it was heard forwarding `pkt`.
    pub(crate) fn watch_check(&mut self, node: NodeId, pkt: PktId, relay: NodeId) {
        let params = self.config.watchdog;
        let state = &mut self.nodes[node.index()];
        let forwarded = state.overheard.remove(&(pkt, relay));
        if state.reputation.is_none() {
            state.reputation = Some(ReputationTable::new(node, params));
            self.log.watchdog_tables += 1;
        }
        let obs = state
            .reputation
            .as_mut()
            .expect("just created")
            .observe(relay, forwarded);
        if !forwarded {
            *self.log.drops_seen.entry((node, relay)).or_default() += 1;
        }
        if !obs.newly_excluded {
            return;
        }
        for m in state.memberships.values_mut() {
            m.ct.purge_relay(relay);
        }
        self.log.exclusions.push(Exclusion {
            time: self.engine.now(),
            observer: node,
            relay,
            score: obs.score,
            drops: self.log.drops_seen.get(&(node, relay)).copied().unwrap_or(0),
        });
    }
}
