use std::fmt;

use crate::codec::{DecodeError, Reader, Writer};
use crate::ids::{Cid, Mid, NodeId, PktId};
use crate::sim::{TrafficClass, Transmit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum PacketKind {
    McStart = 1,
    McJoin = 2,
    CTable = 3,
    Rreq = 4,
    Rrep = 5,
    Friend = 6,
    Data = 7,
    Ack = 8,
    /// Periodic whole-network table advertisement of the flooding baseline.
    Update = 9,
}

impl PacketKind {
    pub const ALL: [PacketKind; 9] = [
        PacketKind::McStart,
        PacketKind::McJoin,
        PacketKind::CTable,
        PacketKind::Rreq,
        PacketKind::Rrep,
        PacketKind::Friend,
        PacketKind::Data,
        PacketKind::Ack,
        PacketKind::Update,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PacketKind::McStart => "MCSTART",
            PacketKind::McJoin => "MCJOIN",
            PacketKind::CTable => "CTABLE",
            PacketKind::Rreq => "RREQ",
            PacketKind::Rrep => "RREP",
            PacketKind::Friend => "FRIEND",
            PacketKind::Data => "DATA",
            PacketKind::Ack => "ACK",
            PacketKind::Update => "UPDATE",
        }
    }

    fn from_u8(tag: u8) -> Result<Self, DecodeError> {
        PacketKind::ALL
            .into_iter()
            .find(|k| *k as u8 == tag)
            .ok_or(DecodeError::BadTag { field: "kind", tag })
    }

    /// Kinds a FRIEND wrapper may carry.
    pub fn friend_wrappable(self) -> bool {
        matches!(self, PacketKind::Data | PacketKind::Ack | PacketKind::Rreq)
    }
}

impl fmt::Display for PacketKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Protocol packet.
///
/// # Wire layout
///
/// All integers big-endian. Strings carry a u16 byte-length prefix, byte
/// strings a u32 prefix, node lists a u16 count followed by u32 ids,
/// optional u32 values a 0/1 tag byte.
///
/// | field         | encoding                                   |
/// |---------------|--------------------------------------------|
/// | version       | u8, currently `1` (outermost packet only)  |
/// | kind          | u8 (`PacketKind` discriminant)             |
/// | pkt_id        | origin u32, seq u32                        |
/// | cid           | si u32, counter u32                        |
/// | mc            | string                                     |
/// | src_mid       | optional u32                               |
/// | dst_mid       | optional u32                               |
/// | ttl           | u8                                         |
/// | route_trace   | node list                                  |
/// | payload       | byte string                                |
/// | inner         | u8 presence tag, then a nested packet without version byte |
/// | op            | string                                     |
/// | avoid         | node list                                  |
///
/// Only FRIEND carries `inner`, and only one level deep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketKind,
    pub id: PktId,
    pub cid: Cid,
    pub mc: String,
    pub src_mid: Option<Mid>,
    pub dst_mid: Option<Mid>,
    pub ttl: u8,
    pub route_trace: Vec<NodeId>,
    pub payload: Vec<u8>,
    pub inner: Option<Box<Packet>>,
    /// Operation the destination machine is asked to run (DATA/ACK).
    pub op: String,
    /// Nodes whose copies a route request must not travel through.
    pub avoid: Vec<NodeId>,
}

pub const WIRE_VERSION: u8 = 1;

impl Packet {
    pub fn new(kind: PacketKind, id: PktId, cid: Cid) -> Self {
        Packet {
            kind,
            id,
            cid,
            mc: String::new(),
            src_mid: None,
            dst_mid: None,
            ttl: 0,
            route_trace: Vec::new(),
            payload: Vec::new(),
            inner: None,
            op: String::new(),
            avoid: Vec::new(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(WIRE_VERSION);
        self.write(&mut w);
        w.finish()
    }

    fn write(&self, w: &mut Writer) {
        w.u8(self.kind as u8)
            .u32(self.id.origin.0)
            .u32(self.id.seq)
            .u32(self.cid.si.0)
            .u32(self.cid.counter)
            .str(&self.mc)
            .opt_u32(self.src_mid.map(|m| m.0))
            .opt_u32(self.dst_mid.map(|m| m.0))
            .u8(self.ttl)
            .nodes(&self.route_trace)
            .bytes(&self.payload);
        match &self.inner {
            None => {
                w.u8(0);
            }
            Some(inner) => {
                w.u8(1);
                inner.write(w);
            }
        }
        w.str(&self.op).nodes(&self.avoid);
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        match r.u8()? {
            WIRE_VERSION => {}
            tag => return Err(DecodeError::BadTag { field: "version", tag }),
        }
        let pkt = Packet::read(&mut r, 0)?;
        r.finish()?;
        Ok(pkt)
    }

    fn read(r: &mut Reader<'_>, depth: u8) -> Result<Self, DecodeError> {
        let kind = PacketKind::from_u8(r.u8()?)?;
        let id = PktId {
            origin: NodeId(r.u32()?),
            seq: r.u32()?,
        };
        let cid = Cid {
            si: NodeId(r.u32()?),
            counter: r.u32()?,
        };
        let mc = r.str()?;
        let src_mid = r.opt_u32("src_mid")?.map(Mid);
        let dst_mid = r.opt_u32("dst_mid")?.map(Mid);
        let ttl = r.u8()?;
        let route_trace = r.nodes()?;
        let payload = r.bytes()?;
        let inner = match r.u8()? {
            0 => None,
            1 if depth == 0 && kind == PacketKind::Friend => {
                let inner = Packet::read(r, depth + 1)?;
                if !inner.kind.friend_wrappable() {
                    return Err(DecodeError::Invalid("FRIEND may only wrap DATA, ACK or RREQ"));
                }
                Some(Box::new(inner))
            }
            1 => return Err(DecodeError::Invalid("only a top-level FRIEND carries an inner packet")),
            tag => return Err(DecodeError::BadTag { field: "inner", tag }),
        };
        if kind == PacketKind::Friend && inner.is_none() {
            return Err(DecodeError::Invalid("FRIEND without inner packet"));
        }
        let op = r.str()?;
        let avoid = r.nodes()?;
        let mut seen = std::collections::BTreeSet::new();
        if !route_trace.iter().all(|n| seen.insert(*n)) {
            return Err(DecodeError::Invalid("route trace repeats a node"));
        }
        Ok(Packet {
            kind,
            id,
            cid,
            mc,
            src_mid,
            dst_mid,
            ttl,
            route_trace,
            payload,
            inner,
            op,
            avoid,
        })
    }
}

impl Transmit for Packet {
    fn class(&self) -> TrafficClass {
        match self.kind {
            PacketKind::Data | PacketKind::Ack => TrafficClass::Data,
            PacketKind::Friend => self
                .inner
                .as_ref()
                .map_or(TrafficClass::Control, |p| p.class()),
            _ => TrafficClass::Control,
        }
    }

    fn droppable(&self) -> bool {
        self.kind == PacketKind::Data
    }

    fn lossy(&self) -> bool {
        matches!(self.kind, PacketKind::Data | PacketKind::Ack)
    }

    fn label(&self) -> &'static str {
        self.kind.label()
    }

    fn ident(&self) -> String {
        self.id.to_string()
    }
}

/// One member row carried by CTABLE and RREP payloads. Paths are rooted at
/// the packet's originator (the SI for CTABLE, the responder for RREP).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestEntry {
    pub mid: Mid,
    pub host: NodeId,
    pub gateway: bool,
    pub path: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableDigest {
    /// Complete member list rather than an incremental addition.
    pub full: bool,
    pub entries: Vec<DigestEntry>,
}

impl TableDigest {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.full as u8);
        w.u16(u16::try_from(self.entries.len()).expect("digest too large"));
        for e in &self.entries {
            w.u32(e.mid.0).u32(e.host.0).u8(e.gateway as u8).nodes(&e.path);
        }
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let full = match r.u8()? {
            0 => false,
            1 => true,
            tag => return Err(DecodeError::BadTag { field: "full", tag }),
        };
        let n = r.u16()?;
        let mut entries = Vec::with_capacity(usize::from(n).min(r.remaining() / 11));
        for _ in 0..n {
            let mid = Mid(r.u32()?);
            let host = NodeId(r.u32()?);
            let gateway = match r.u8()? {
                0 => false,
                1 => true,
                tag => return Err(DecodeError::BadTag { field: "gateway", tag }),
            };
            let path = r.nodes()?;
            if path.last() != Some(&host) {
                return Err(DecodeError::Invalid("digest path must end at the member host"));
            }
            entries.push(DigestEntry {
                mid,
                host,
                gateway,
                path,
            });
        }
        r.finish()?;
        let root = entries.first().map(|e| e.path[0]);
        if entries.iter().any(|e| Some(e.path[0]) != root) {
            return Err(DecodeError::Invalid("digest paths must share one root"));
        }
        Ok(TableDigest { full, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Packet {
        let mut p = Packet::new(
            PacketKind::Data,
            PktId { origin: NodeId(0), seq: 4 },
            Cid { si: NodeId(0), counter: 1 },
        );
        p.src_mid = Some(Mid(0));
        p.dst_mid = Some(Mid(3));
        p.ttl = 7;
        p.route_trace = vec![NodeId(0), NodeId(1), NodeId(3)];
        p.payload = b"abc".to_vec();
        p.op = "emit".into();
        p
    }

    #[test]
    fn layout_is_stable() {
        let bytes = sample().encode();
        let expected: Vec<u8> = [
            &[1u8, 7][..],                 // version, kind
            &[0, 0, 0, 0, 0, 0, 0, 4],     // pkt id
            &[0, 0, 0, 0, 0, 0, 0, 1],     // cid
            &[0, 0],                       // mc
            &[1, 0, 0, 0, 0],              // src
            &[1, 0, 0, 0, 3],              // dst
            &[7],                          // ttl
            &[0, 3, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 3],
            &[0, 0, 0, 3, b'a', b'b', b'c'],
            &[0],                          // no inner
            &[0, 4, b'e', b'm', b'i', b't'],
            &[0, 0],                       // avoid
        ]
        .concat();
        assert_eq!(bytes, expected);
        assert_eq!(Packet::decode(&bytes), Ok(sample()));
    }

    #[test]
    fn friend_wraps_one_level() {
        let mut f = Packet::new(PacketKind::Friend, PktId { origin: NodeId(2), seq: 0 }, sample().cid);
        f.inner = Some(Box::new(sample()));
        assert_eq!(Packet::decode(&f.encode()), Ok(f.clone()));

        let mut nested = f.clone();
        nested.inner = Some(Box::new(f.clone()));
        assert!(Packet::decode(&nested.encode()).is_err());

        let mut bad = f.clone();
        let mut inner = sample();
        inner.kind = PacketKind::McJoin;
        bad.inner = Some(Box::new(inner));
        assert!(Packet::decode(&bad.encode()).is_err());
    }

    #[test]
    fn class_follows_inner() {
        let mut f = Packet::new(PacketKind::Friend, PktId::default(), Cid::default());
        f.inner = Some(Box::new(sample()));
        assert_eq!(f.class(), TrafficClass::Data);
        assert!(!f.droppable());
    }

    #[test]
    fn truncation_is_an_error() {
        let bytes = sample().encode();
        for cut in 0..bytes.len() {
            assert!(Packet::decode(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    fn arb_packet() -> impl Strategy<Value = Packet> {
        (
            1u8..=9,
            any::<(u32, u32, u32, u32)>(),
            "[a-zA-Z ]{0,8}",
            any::<(Option<u32>, Option<u32>, u8)>(),
            proptest::collection::btree_set(0u32..64, 0..6),
            proptest::collection::vec(any::<u8>(), 0..32),
            "[a-z]{0,6}",
            proptest::collection::vec(0u32..64, 0..4),
        )
            .prop_map(|(k, (o, s, si, c), mc, (src, dst, ttl), trace, payload, op, avoid)| {
                let kind = PacketKind::from_u8(k).unwrap();
                let kind = if kind == PacketKind::Friend { PacketKind::Data } else { kind };
                Packet {
                    kind,
                    id: PktId { origin: NodeId(o), seq: s },
                    cid: Cid { si: NodeId(si), counter: c },
                    mc,
                    src_mid: src.map(Mid),
                    dst_mid: dst.map(Mid),
                    ttl,
                    route_trace: trace.into_iter().map(NodeId).collect(),
                    payload,
                    inner: None,
                    op,
                    avoid: avoid.into_iter().map(NodeId).collect(),
                }
            })
    }

    proptest! {
        #[test]
        fn packets_round_trip(p in arb_packet()) {
            prop_assert_eq!(Packet::decode(&p.encode()), Ok(p));
        }

        #[test]
        fn decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..128)) {
            let _ = Packet::decode(&bytes);
            let _ = TableDigest::decode(&bytes);
        }
    }

    #[test]
    fn digest_round_trip_and_root_check() {
        let d = TableDigest {
            full: true,
            entries: vec![
                DigestEntry { mid: Mid(0), host: NodeId(0), gateway: false, path: vec![NodeId(0)] },
                DigestEntry { mid: Mid(3), host: NodeId(3), gateway: true, path: vec![NodeId(0), NodeId(1), NodeId(3)] },
            ],
        };
        assert_eq!(TableDigest::decode(&d.encode()), Ok(d.clone()));
        let mut bad = d;
        bad.entries[1].path = vec![NodeId(2), NodeId(3)];
        assert!(TableDigest::decode(&bad.encode()).is_err());
    }
}
