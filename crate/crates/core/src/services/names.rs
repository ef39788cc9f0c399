use std::collections::BTreeMap;

use serde::Serialize;

use crate::codec::{DecodeError, Reader, Writer};
use crate::ids::{Cid, Mid, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NameRecord {
    pub name: String,
    pub mid: Mid,
    pub cid: Cid,
}

/// Gateway-held name database; one record per name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NameTable {
    records: BTreeMap<String, NameRecord>,
}

impl NameTable {
    /// Inserts or replaces the record for `record.name`.
    pub fn register(&mut self, record: NameRecord) {
        self.records.insert(record.name.clone(), record);
    }

    pub fn resolve(&self, name: &str) -> Option<&NameRecord> {
        self.records.get(name)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterArgs(pub NameRecord);

impl RegisterArgs {
    pub fn encode(&self) -> Vec<u8> {
        let r = &self.0;
        let mut w = Writer::new();
        w.str(&r.name).u32(r.mid.0).u32(r.cid.si.0).u32(r.cid.counter);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let name = r.str()?;
        let mid = Mid(r.u32()?);
        let cid = Cid {
            si: NodeId(r.u32()?),
            counter: r.u32()?,
        };
        r.finish()?;
        if name.is_empty() {
            return Err(DecodeError::Invalid("empty name"));
        }
        Ok(RegisterArgs(NameRecord { name, mid, cid }))
    }
}

pub fn encode_query(name: &str) -> Vec<u8> {
    let mut w = Writer::new();
    w.str(name);
    w.finish()
}

pub fn decode_query(buf: &[u8]) -> Result<String, DecodeError> {
    let mut r = Reader::new(buf);
    let name = r.str()?;
    r.finish()?;
    Ok(name)
}

/// Gateway reply to a resolve: the record's machine id, or none.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Answer {
    pub name: String,
    pub mid: Option<Mid>,
}

impl Answer {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.str(&self.name).opt_u32(self.mid.map(|m| m.0));
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let name = r.str()?;
        let mid = r.opt_u32("answer.mid")?.map(Mid);
        r.finish()?;
        Ok(Answer { name, mid })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_then_resolve() {
        let mut t = NameTable::default();
        let cid = Cid { si: NodeId(0), counter: 1 };
        t.register(NameRecord { name: "printer".into(), mid: Mid(3), cid });
        assert_eq!(t.resolve("printer").map(|r| r.mid), Some(Mid(3)));
        assert!(t.resolve("scanner").is_none());
    }

    #[test]
    fn codecs_reject_garbage() {
        assert!(RegisterArgs::decode(b"\x00").is_err());
        assert!(Answer::decode(&[0, 1, b'a', 7]).is_err());
        let a = Answer { name: "x".into(), mid: Some(Mid(2)) };
        assert_eq!(Answer::decode(&a.encode()), Ok(a));
    }
}
