use super::network::{AppDelivery, Network, Resolution, Timer, TransferLog, TransferStatus};
use super::packet::{Packet, PacketKind};
use super::ProtocolError;
use crate::ids::{Cid, Mid, NodeId};
use crate::model::{InvokeArgs, Outcome};
use crate::services::ftp::FtpSession;
use crate::services::names::{encode_query, NameRecord, RegisterArgs};
use crate::sim::SimTime;

impl Network {
    /// Hands a DATA or ACK payload that reached its destination host to the
    /// addressed machine.
    pub(crate) fn deliver_app(&mut self, node: NodeId, pkt: Packet) {
        let state = &mut self.nodes[node.index()];
        if !state.data_seen.insert(pkt.id) {
            return;
        }
        if pkt.kind == PacketKind::Data {
            self.log.delivered += 1;
        }
        let cid = pkt.cid;
        let addressed = state
            .member(cid)
            .filter(|m| m.machine.mc == pkt.mc && m.mid() == pkt.dst_mid);
        let Some(m) = addressed else {
            self.log.isolation_violations += 1;
            let msg = format!("{} for {} reached {node}", pkt.id, cid);
            self.fail(node, ProtocolError::Isolation(msg));
            return;
        };
        let dst = m.mid().expect("committed members are numbered");
        let Some(culture) = self.registry.culture(&pkt.mc).ok() else {
            return;
        };
        let m = state.member_mut(cid).expect("checked above");
        let args = InvokeArgs {
            from: pkt.src_mid,
            payload: pkt.payload,
        };
        let result = m.machine.invoke(culture, &pkt.op, &args);
        self.log.deliveries.push(AppDelivery {
            time: self.engine.now(),
            host: node,
            cid,
            op: pkt.op.clone(),
            src: pkt.src_mid,
            dst,
            pkt: pkt.id,
            accepted: result.is_ok(),
        });
        let outcome = match result {
            Ok(o) => o,
            Err(_) => {
                self.log.rejected += 1;
                return;
            }
        };
        match outcome {
            Outcome::Reply { op, payload } => {
                let Some(back) = pkt.src_mid else {
                    return;
                };
                let kind = if op == "ack" { PacketKind::Ack } else { PacketKind::Data };
                if let Err(e) = self.route_data(node, cid, back, op, payload, kind) {
                    self.fail(node, e);
                }
            }
            Outcome::AckProgress {
                file_id,
                advanced,
                complete,
            } => self.ftp_progress(node, cid, file_id, advanced, complete),
            Outcome::Answer(a) => self.log.resolutions.push(Resolution {
                time: self.engine.now(),
                requester: node,
                name: a.name,
                mid: a.mid,
                answered_by: pkt.id.origin,
            }),
            Outcome::Accepted | Outcome::FileCompleted { .. } | Outcome::File(_) => {}
        }
    }

    /// Starts a windowed transfer of `payload` to `dst`; returns the file id.
    pub(crate) fn ftp_put(
        &mut self,
        node: NodeId,
        cid: Cid,
        dst: Mid,
        payload: Vec<u8>,
        chunk_size: usize,
        window: u32,
    ) -> Result<u32, ProtocolError> {
        let max_retries = self.config.max_retries;
        let file_id = self.next_file_id;
        let m = self.nodes[node.index()]
            .member_mut(cid)
            .ok_or(ProtocolError::NotMember { node, cid })?;
        self.next_file_id += 1;
        let total_bytes = payload.len();
        let session = FtpSession::new(file_id, dst, payload, chunk_size, window.max(1), max_retries);
        let chunks = session.window.total();
        m.machine.state.outbound.insert(file_id, session);
        self.log.transfers.insert(
            file_id,
            TransferLog {
                file_id,
                src: node,
                cid,
                dst,
                total_bytes,
                chunks,
                window: window.max(1),
                acks: 0,
                hop_tx: 0,
                status: TransferStatus::Running,
                completed_at: None,
                content_match: None,
            },
        );
        if chunks == 0 {
            self.ftp_progress(node, cid, file_id, false, true);
        } else {
            self.ftp_pump(node, cid, file_id, false);
        }
        Ok(file_id)
    }

    fn session(&mut self, node: NodeId, cid: Cid, file_id: u32) -> Option<&mut FtpSession> {
        self.nodes[node.index()]
            .member_mut(cid)?
            .machine
            .state
            .outbound
            .get_mut(&file_id)
    }

    /// Sends whatever the window allows; re-arms the timer when anything was
    /// sent or `rearm` is set and chunks remain outstanding.
    fn ftp_pump(&mut self, node: NodeId, cid: Cid, file_id: u32, rearm: bool) {
        let Some(s) = self.session(node, cid, file_id) else {
            return;
        };
        let range = s.window.take_sendable();
        s.max_in_flight = s.max_in_flight.max(s.window.in_flight());
        let segs: Vec<Vec<u8>> = range.clone().map(|q| s.segment(q).encode()).collect();
        let dst = s.dst;
        for seg in segs {
            if let Err(e) = self.route_data(node, cid, dst, "put", seg, PacketKind::Data) {
                self.fail(node, e);
            }
        }
        if !range.is_empty() || rearm {
            self.arm_ftp_timer(node, cid, file_id);
        }
    }

    fn arm_ftp_timer(&mut self, node: NodeId, cid: Cid, file_id: u32) {
        let rto = self.ftp_rto(node, cid, file_id);
        let Some(s) = self.session(node, cid, file_id) else {
            return;
        };
        if s.window.in_flight() == 0 {
            return;
        }
        s.timer_gen += 1;
        let gen = s.timer_gen;
        self.after(rto, node, Timer::FtpTimeout { cid, file_id, gen });
    }

    /// Four times the one-way delay of the current path to the sink.
    fn ftp_rto(&self, node: NodeId, cid: Cid, file_id: u32) -> SimTime {
        let hop = self.link(cid).hop_delay;
        let m = self.nodes[node.index()].member(cid);
        let hops = m
            .and_then(|m| {
                let dst = m.machine.state.outbound.get(&file_id)?.dst;
                m.ct.get(dst).map(|e| e.hops() as u64)
            })
            .unwrap_or(u64::from(self.config.data_ttl));
        hop.times(4 * hops.max(1))
    }

    pub(crate) fn ftp_timeout(&mut self, node: NodeId, cid: Cid, file_id: u32, gen: u64) {
        let Some(s) = self.session(node, cid, file_id) else {
            return;
        };
        if s.timer_gen != gen || s.window.is_complete() {
            return;
        }
        match s.window.on_timeout() {
            Ok(range) => {
                let segs: Vec<Vec<u8>> = range.map(|q| s.segment(q).encode()).collect();
                let dst = s.dst;
                for seg in segs {
                    if let Err(e) = self.route_data(node, cid, dst, "put", seg, PacketKind::Data) {
                        self.fail(node, e);
                    }
                }
                self.arm_ftp_timer(node, cid, file_id);
            }
            Err(ex) => {
                if let Some(t) = self.log.transfers.get_mut(&file_id) {
                    t.status = TransferStatus::Failed;
                }
                self.fail(node, ProtocolError::TransferFailed { file_id, chunk: ex.chunk });
            }
        }
    }

    fn ftp_progress(&mut self, node: NodeId, cid: Cid, file_id: u32, advanced: bool, complete: bool) {
        let now = self.engine.now();
        if let Some(t) = self.log.transfers.get_mut(&file_id) {
            t.acks += 1;
        }
        if !complete {
            if advanced {
                self.ftp_pump(node, cid, file_id, true);
            }
            return;
        }
        let Some(t) = self.log.transfers.get(&file_id) else {
            return;
        };
        if t.status != TransferStatus::Running {
            return;
        }
        let sent = self.nodes[node.index()]
            .member(cid)
            .and_then(|m| m.machine.state.outbound.get(&file_id))
            .map(|s| s.payload.clone());
        let host = self.nodes[node.index()]
            .member(cid)
            .and_then(|m| m.directory.get(&t.dst))
            .map(|i| i.host);
        let received = host
            .and_then(|h| self.nodes[h.index()].member(cid))
            .and_then(|m| m.machine.state.files.get(&file_id));
        let matched = match (sent, received) {
            (Some(a), Some(b)) => a == *b,
            _ => false,
        };
        let t = self.log.transfers.get_mut(&file_id).expect("checked above");
        t.status = TransferStatus::Completed;
        t.completed_at = Some(now);
        t.content_match = Some(matched);
    }

    /// Gateway members of `cid` known to `node`, nearest first.
    fn gateways(&self, node: NodeId, cid: Cid) -> Result<Vec<Mid>, ProtocolError> {
        let m = self.nodes[node.index()]
            .member(cid)
            .ok_or(ProtocolError::NotMember { node, cid })?;
        if !m.directory.get(&Mid(0)).is_some_and(|i| i.gateway) {
            return Err(ProtocolError::GatewayMissing);
        }
        let mut gws: Vec<(usize, Mid)> = m
            .directory
            .iter()
            .filter(|(_, i)| i.gateway)
            .map(|(mid, i)| {
                let hops = if i.host == node {
                    0
                } else {
                    m.ct.get(*mid).map_or(usize::MAX, |e| e.hops())
                };
                (hops, *mid)
            })
            .collect();
        gws.sort();
        Ok(gws.into_iter().map(|(_, mid)| mid).collect())
    }

    pub(crate) fn name_register(&mut self, node: NodeId, cid: Cid, name: &str, mid: Mid, of: Cid) -> Result<(), ProtocolError> {
        let gws = self.gateways(node, cid)?;
        let payload = RegisterArgs(NameRecord {
            name: name.to_owned(),
            mid,
            cid: of,
        })
        .encode();
        for gw in gws {
            self.route_data(node, cid, gw, "register", payload.clone(), PacketKind::Data)?;
        }
        Ok(())
    }

    pub(crate) fn name_resolve(&mut self, node: NodeId, cid: Cid, name: &str) -> Result<(), ProtocolError> {
        let gw = self.gateways(node, cid)?[0];
        self.route_data(node, cid, gw, "resolve", encode_query(name), PacketKind::Data)
    }

    pub(crate) fn cbr_tick(&mut self, node: NodeId, cid: Cid, dst: Mid, remaining: u32, interval: SimTime, size: usize) {
        if remaining == 0 {
            return;
        }
        if let Err(e) = self.route_data(node, cid, dst, "emit", vec![0; size], PacketKind::Data) {
            self.fail(node, e);
            return;
        }
        if remaining > 1 {
            self.after(
                interval,
                node,
                Timer::CbrTick {
                    cid,
                    dst,
                    remaining: remaining - 1,
                    interval,
                    size,
                },
            );
        }
    }
}
