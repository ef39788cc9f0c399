use std::collections::BTreeMap;

use serde::Serialize;

use super::{CultureSpec, ModelError};
use crate::ids::{Mid, NodeId};
use crate::services::ftp::{AckSegment, FtpSession, GbnReceiver, Segment};
use crate::services::names::{self, Answer, NameTable, RegisterArgs};

/// Service state owned by one machine. Only reachable through [`Machine::invoke`].
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MachineState {
    pub calls: BTreeMap<String, u64>,
    pub inbound: BTreeMap<u32, GbnReceiver>,
    pub files: BTreeMap<u32, Vec<u8>>,
    pub outbound: BTreeMap<u32, FtpSession>,
    pub names: NameTable,
    pub answers: Vec<Answer>,
    pub logins: u64,
    pub echoes: u64,
    pub emitted: u64,
}

/// Running instance of a culture: `M(mc, mid)` hosted on `host`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Machine {
    pub mc: String,
    /// `None` while provisional, assigned when the community commits.
    pub mid: Option<Mid>,
    pub host: NodeId,
    pub gateway: bool,
    pub state: MachineState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvokeArgs {
    pub from: Option<Mid>,
    pub payload: Vec<u8>,
}

impl InvokeArgs {
    pub fn payload(payload: Vec<u8>) -> Self {
        InvokeArgs {
            from: None,
            payload,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    /// The handler wants `payload` sent back to the caller under `op`.
    Reply { op: &'static str, payload: Vec<u8> },
    AckProgress {
        file_id: u32,
        advanced: bool,
        complete: bool,
    },
    FileCompleted { file_id: u32 },
    File(Vec<u8>),
    Answer(Answer),
}

impl Machine {
    pub fn new(mc: &str, host: NodeId) -> Self {
        Machine {
            mc: mc.to_owned(),
            mid: None,
            host,
            gateway: false,
            state: MachineState::default(),
        }
    }

    /// Serialized state, for byte-level comparisons.
    pub fn fingerprint(&self) -> Vec<u8> {
        serde_json::to_vec(&self.state).expect("machine state serializes")
    }

    /// Runs `op` iff some art of `culture` declares it; anything else is
    /// refused before the state is touched.
    pub fn invoke(
        &mut self,
        culture: &CultureSpec,
        op: &str,
        args: &InvokeArgs,
    ) -> Result<Outcome, ModelError> {
        debug_assert_eq!(culture.name, self.mc);
        let art = culture
            .owner_of(op)
            .ok_or_else(|| ModelError::OpNotExposed(op.to_owned()))?;
        let outcome = match art.name.as_str() {
            "FTP" => self.ftp(op, args)?,
            "Telnet" => self.telnet(op, args),
            "CBR" => {
                self.state.emitted += 1;
                Outcome::Accepted
            }
            "NameService" => self.name_service(op, args)?,
            _ => Outcome::Accepted,
        };
        *self.state.calls.entry(op.to_owned()).or_default() += 1;
        Ok(outcome)
    }

    fn ftp(&mut self, op: &str, args: &InvokeArgs) -> Result<Outcome, ModelError> {
        let bad = |reason: String| ModelError::BadArgs {
            op: op.to_owned(),
            reason,
        };
        match op {
            "put" => {
                let seg = Segment::decode(&args.payload).map_err(|e| bad(e.to_string()))?;
                if let Some(rx) = self.state.inbound.get(&seg.file_id) {
                    if rx.total() != seg.total {
                        return Err(bad(format!(
                            "file {} has {} chunks, segment claims {}",
                            seg.file_id,
                            rx.total(),
                            seg.total
                        )));
                    }
                }
                let rx = self
                    .state
                    .inbound
                    .entry(seg.file_id)
                    .or_insert_with(|| GbnReceiver::new(seg.total));
                let (fresh, next) = rx.accept(seg.seq, &seg.data);
                if fresh && rx.is_complete() {
                    let data = rx.data().to_vec();
                    self.state.files.insert(seg.file_id, data);
                }
                Ok(Outcome::Reply {
                    op: "ack",
                    payload: AckSegment {
                        file_id: seg.file_id,
                        next,
                    }
                    .encode(),
                })
            }
            "ack" => {
                let ack = AckSegment::decode(&args.payload).map_err(|e| bad(e.to_string()))?;
                let session = self
                    .state
                    .outbound
                    .get_mut(&ack.file_id)
                    .ok_or_else(|| bad(format!("no outbound transfer {}", ack.file_id)))?;
                let advanced = session.window.on_ack(ack.next);
                Ok(Outcome::AckProgress {
                    file_id: ack.file_id,
                    advanced,
                    complete: session.window.is_complete(),
                })
            }
            "get" => {
                let id: [u8; 4] = args
                    .payload
                    .as_slice()
                    .try_into()
                    .map_err(|_| bad("expected a 4-byte file id".into()))?;
                let id = u32::from_be_bytes(id);
                let file = self
                    .state
                    .files
                    .get(&id)
                    .ok_or_else(|| bad(format!("no completed file {id}")))?;
                Ok(Outcome::File(file.clone()))
            }
            _ => Ok(Outcome::Accepted),
        }
    }

    fn telnet(&mut self, op: &str, args: &InvokeArgs) -> Outcome {
        match op {
            "login" => {
                self.state.logins += 1;
                Outcome::Accepted
            }
            "echo" => Outcome::Reply {
                op: "reply",
                payload: args.payload.clone(),
            },
            _ => {
                self.state.echoes += 1;
                Outcome::Accepted
            }
        }
    }

    fn name_service(&mut self, op: &str, args: &InvokeArgs) -> Result<Outcome, ModelError> {
        let bad = |reason: String| ModelError::BadArgs {
            op: op.to_owned(),
            reason,
        };
        match op {
            "register" => {
                let RegisterArgs(record) =
                    RegisterArgs::decode(&args.payload).map_err(|e| bad(e.to_string()))?;
                if !self.gateway {
                    return Err(bad("host is not an internet gateway".into()));
                }
                self.state.names.register(record);
                Ok(Outcome::Accepted)
            }
            "resolve" => {
                let name = names::decode_query(&args.payload).map_err(|e| bad(e.to_string()))?;
                if !self.gateway {
                    return Err(bad("host is not an internet gateway".into()));
                }
                let mid = self.state.names.resolve(&name).map(|r| r.mid);
                Ok(Outcome::Reply {
                    op: "answer",
                    payload: Answer { name, mid }.encode(),
                })
            }
            _ => {
                let answer = Answer::decode(&args.payload).map_err(|e| bad(e.to_string()))?;
                self.state.answers.push(answer.clone());
                Ok(Outcome::Answer(answer))
            }
        }
    }
}
