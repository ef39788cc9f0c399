use super::network::{InstallSource, Network, Timer};
use super::packet::{DigestEntry, Packet, PacketKind, TableDigest};
use super::state::{Announcement, CommunityState, MemberInfo, Membership, Phase};
use super::table::{reroot, CommunityTable};
use super::ProtocolError;
use crate::ids::{Cid, Mid, NodeId};
use crate::sim::{Mode, SimTime};

impl Network {
    /// Instantiates `culture` at `node`, makes it the SI of a new community
    /// and floods the announcement.
    pub(crate) fn start_service(&mut self, node: NodeId, culture: &str) -> Result<Cid, ProtocolError> {
        let spec = self.registry.culture(culture)?.clone();
        self.ensure_unique_machine(node, &spec.name)?;
        let mut machine = self.registry.instantiate_machine(&spec.name, node)?;
        let gateway = self.nodes[node.index()].gateway;
        machine.gateway = gateway;

        let state = &mut self.nodes[node.index()];
        let cid = Cid {
            si: node,
            counter: state.next_cid,
        };
        state.next_cid += 1;
        let deadline = self.engine.now() + SimTime::from_secs(self.config.join_window);
        state.hosting.insert(
            cid,
            CommunityState {
                cid,
                mc: spec.name.clone(),
                si: node,
                phase: Phase::Collecting,
                members: vec![(Mid(0), node)],
                join_deadline: deadline,
                reverse_routes: Default::default(),
                join_order: Vec::new(),
                gateways: if gateway { [node].into() } else { Default::default() },
            },
        );
        state.memberships.insert(
            cid,
            Membership {
                cid,
                si: node,
                machine,
                committed: false,
                ct: CommunityTable::new(node, cid),
                directory: [(Mid(0), MemberInfo { host: node, gateway })].into(),
                path_to_si: vec![node],
            },
        );
        state.society.install(cid, &spec.service);
        self.cultures.insert(cid, spec.name.clone());

        let mut pkt = Packet::new(PacketKind::McStart, state.next_id(), cid);
        state.first_sight(pkt.id);
        pkt.mc = spec.name;
        pkt.ttl = self.config.flood_ttl;
        pkt.route_trace = vec![node];
        *self.log.floods.entry(PacketKind::McStart.label()).or_default() += 1;
        self.tx(node, pkt, Mode::Broadcast);
        self.engine.schedule_timer(deadline, node, Timer::JoinDeadline(cid))?;
        Ok(cid)
    }

    fn ensure_unique_machine(&self, node: NodeId, culture: &str) -> Result<(), ProtocolError> {
        if self.nodes[node.index()]
            .memberships
            .values()
            .any(|m| m.machine.mc == culture)
        {
            return Err(ProtocolError::DuplicateMachine {
                node,
                culture: culture.to_owned(),
            });
        }
        Ok(())
    }

    pub(crate) fn on_mcstart(&mut self, node: NodeId, _from: NodeId, mut pkt: Packet) {
        let state = &mut self.nodes[node.index()];
        if !state.first_sight(pkt.id) {
            return;
        }
        let mut path_to_si: Vec<NodeId> = pkt.route_trace.iter().rev().copied().collect();
        path_to_si.insert(0, node);
        let service = self
            .registry
            .culture(&pkt.mc)
            .map_or_else(|_| pkt.mc.clone(), |c| c.service.clone());
        state.society.install(pkt.cid, &service);
        state.announcements.entry(pkt.cid).or_insert(Announcement {
            mc: pkt.mc.clone(),
            si: pkt.cid.si,
            path_to_si,
        });
        if pkt.ttl == 0 {
            return;
        }
        pkt.ttl -= 1;
        pkt.route_trace.push(node);
        self.tx(node, pkt, Mode::Broadcast);
    }

    /// Sends MCJOIN towards the SI along the reverse announcement path.
    pub(crate) fn join_service(&mut self, node: NodeId, cid: Cid) -> Result<(), ProtocolError> {
        let ann = self.nodes[node.index()]
            .announcements
            .get(&cid)
            .cloned()
            .ok_or(ProtocolError::NotAnnounced { node, cid })?;
        if self.nodes[node.index()].memberships.contains_key(&cid) {
            return Err(ProtocolError::DuplicateMachine { node, culture: ann.mc });
        }
        if ann.path_to_si.len() < 2 {
            return Err(ProtocolError::JoinFailed { node, cid });
        }
        self.ensure_unique_machine(node, &ann.mc)?;
        let mut machine = self.registry.instantiate_machine(&ann.mc, node)?;
        let state = &mut self.nodes[node.index()];
        machine.gateway = state.gateway;
        state.memberships.insert(
            cid,
            Membership {
                cid,
                si: ann.si,
                machine,
                committed: false,
                ct: CommunityTable::new(node, cid),
                directory: Default::default(),
                path_to_si: ann.path_to_si.clone(),
            },
        );
        let mut pkt = Packet::new(PacketKind::McJoin, state.next_id(), cid);
        pkt.mc = ann.mc;
        pkt.ttl = self.config.data_ttl;
        pkt.payload = vec![u8::from(state.gateway)];
        pkt.route_trace = ann.path_to_si;
        self.send_routed(node, pkt);
        Ok(())
    }

    /// Joins after the SI committed; the SI extends the community in place.
    pub(crate) fn late_join(&mut self, node: NodeId, cid: Cid) -> Result<(), ProtocolError> {
        self.join_service(node, cid)
    }

    pub(crate) fn on_join_at_si(&mut self, si: NodeId, pkt: Packet) {
        let cid = pkt.cid;
        let joiner = pkt.route_trace[0];
        let gateway = pkt.payload.first() == Some(&1);
        let back: Vec<NodeId> = pkt.route_trace.iter().rev().copied().collect();
        let Some(cs) = self.nodes[si.index()].hosting.get_mut(&cid) else {
            return;
        };
        if cs.join_order.contains(&joiner) {
            return;
        }
        cs.join_order.push(joiner);
        cs.reverse_routes.insert(joiner, back.clone());
        if gateway {
            cs.gateways.insert(joiner);
        }
        if cs.phase != Phase::Committed {
            return;
        }
        let mid = Mid(cs.members.len() as u32);
        cs.members.push((mid, joiner));
        let m = self.nodes[si.index()]
            .memberships
            .get_mut(&cid)
            .expect("SI keeps its own membership");
        m.directory.insert(mid, MemberInfo { host: joiner, gateway });
        self.install(si, cid, mid, back, InstallSource::Commit);

        let full = self.digest(si, cid, true, None);
        let delta = self.digest(si, cid, false, Some(mid));
        self.send_ctable(si, cid, mid, full);
        let others: Vec<Mid> = self.nodes[si.index()].hosting[&cid]
            .members
            .iter()
            .map(|(m, _)| *m)
            .filter(|m| *m != Mid(0) && *m != mid)
            .collect();
        for other in others {
            self.send_ctable(si, cid, other, delta.clone());
        }
    }

    /// Join window closed: number the joiners and hand out tables.
    pub(crate) fn commit_community(&mut self, si: NodeId, cid: Cid) {
        let state = &mut self.nodes[si.index()];
        let Some(cs) = state.hosting.get_mut(&cid) else {
            return;
        };
        if cs.phase == Phase::Committed {
            return;
        }
        cs.phase = Phase::Committed;
        for (i, host) in cs.join_order.iter().enumerate() {
            cs.members.push((Mid(i as u32 + 1), *host));
        }
        let members = cs.members.clone();
        let routes = cs.reverse_routes.clone();
        let gateways = cs.gateways.clone();
        let m = state.memberships.get_mut(&cid).expect("SI keeps its own membership");
        m.committed = true;
        m.machine.mid = Some(Mid(0));
        for (mid, host) in &members {
            m.directory.insert(
                *mid,
                MemberInfo {
                    host: *host,
                    gateway: gateways.contains(host),
                },
            );
        }
        for (mid, host) in &members[1..] {
            self.install(si, cid, *mid, routes[host].clone(), InstallSource::Commit);
        }
        let full = self.digest(si, cid, true, None);
        for (mid, _) in &members[1..] {
            self.send_ctable(si, cid, *mid, full.clone());
        }
        let proactive = self.culture_of(cid).is_some_and(|c| c.is_proactive());
        if proactive {
            self.schedule_refresh(si, cid);
        }
    }

    fn schedule_refresh(&mut self, si: NodeId, cid: Cid) {
        let interval = SimTime::from_secs(self.config.refresh_interval);
        if interval == SimTime::ZERO {
            return;
        }
        let at = self.engine.now() + interval;
        if at <= SimTime::from_secs(self.config.horizon) {
            self.engine.timer_after(interval, si, Timer::Refresh(cid));
        }
    }

    pub(crate) fn refresh(&mut self, si: NodeId, cid: Cid) {
        let Some(cs) = self.nodes[si.index()].hosting.get(&cid) else {
            return;
        };
        let mids: Vec<Mid> = cs.members.iter().skip(1).map(|(m, _)| *m).collect();
        let full = self.digest(si, cid, true, None);
        for mid in mids {
            self.send_ctable(si, cid, mid, full.clone());
        }
        self.schedule_refresh(si, cid);
    }

    /// SI-rooted member rows; `only` limits the digest to one member.
    fn digest(&self, si: NodeId, cid: Cid, full: bool, only: Option<Mid>) -> TableDigest {
        let cs = &self.nodes[si.index()].hosting[&cid];
        let entries = cs
            .members
            .iter()
            .filter(|(m, _)| only.is_none_or(|o| o == *m))
            .map(|(mid, host)| DigestEntry {
                mid: *mid,
                host: *host,
                gateway: cs.gateways.contains(host),
                path: if *host == si {
                    vec![si]
                } else {
                    cs.reverse_routes[host].clone()
                },
            })
            .collect();
        TableDigest { full, entries }
    }

    fn send_ctable(&mut self, si: NodeId, cid: Cid, mid: Mid, digest: TableDigest) {
        let state = &self.nodes[si.index()];
        let cs = &state.hosting[&cid];
        let Some(&(_, host)) = cs.members.iter().find(|(m, _)| *m == mid) else {
            return;
        };
        let route = state
            .memberships
            .get(&cid)
            .and_then(|m| m.ct.get(mid))
            .map(|e| e.path.clone())
            .unwrap_or_else(|| cs.reverse_routes[&host].clone());
        let mc = cs.mc.clone();
        let mut pkt = Packet::new(PacketKind::CTable, self.nodes[si.index()].next_id(), cid);
        pkt.mc = mc;
        pkt.src_mid = Some(Mid(0));
        pkt.dst_mid = Some(mid);
        pkt.ttl = self.config.data_ttl;
        pkt.route_trace = route;
        pkt.payload = digest.encode();
        self.send_routed(si, pkt);
    }

    pub(crate) fn on_ctable(&mut self, node: NodeId, pkt: Packet) {
        let cid = pkt.cid;
        let Ok(digest) = TableDigest::decode(&pkt.payload) else {
            return;
        };
        let Some(m) = self.nodes[node.index()].memberships.get_mut(&cid) else {
            return;
        };
        if let Some(mid) = pkt.dst_mid {
            m.machine.mid = Some(mid);
        }
        m.committed = true;
        m.path_to_si = pkt.route_trace.iter().rev().copied().collect();
        let prefix = m.path_to_si.clone();
        let own = m.machine.mid;
        for e in &digest.entries {
            m.directory.insert(
                e.mid,
                MemberInfo {
                    host: e.host,
                    gateway: e.gateway,
                },
            );
        }
        for e in digest.entries {
            if Some(e.mid) == own || e.host == node {
                continue;
            }
            let path = reroot(&prefix, &e.path);
            self.install(node, cid, e.mid, path, InstallSource::Ctable);
        }
        self.flush_pending(node, cid);
    }
}
