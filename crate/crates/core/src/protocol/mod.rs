//! Community lifecycle and routing.
//!
//! A service initiator (SI) floods one MCSTART; nodes that want the service
//! answer with MCJOIN along the reverse path they learned from the flood.
//! When the join window closes the SI assigns member ids and sends each
//! member a CTABLE from which it derives its community table. Data follows
//! community-table paths; a missing entry triggers a route request that
//! non-members relay but only members answer, and friend packets let
//! non-members carry community traffic to the nearest member.

mod apps;
mod membership;
mod network;
pub mod packet;
mod routing;
mod state;
pub mod table;

pub use network::{
    AppDelivery, Command, CommunityRef, Exclusion, InstallSource, Network, NetworkConfig,
    NodeInfo, PathInstall, Resolution, RunError, RunLog, Target, TransferLog, TransferStatus,
};
pub use packet::{DigestEntry, Packet, PacketKind, TableDigest};
pub use state::{Announcement, CommunityState, MemberInfo, Membership, NodeState, Phase};
pub use table::{remove_loops, reroot, CommunityTable, CommunityTableEntry, SocietyTable};

use thiserror::Error;

use crate::ids::{Cid, Mid, NodeId};
use crate::model::ModelError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no community named `{0}`")]
    UnknownCommunity(String),
    #[error("{node} never heard MCSTART for {cid}")]
    NotAnnounced { node: NodeId, cid: Cid },
    #[error("{node} cannot reach the SI of {cid}")]
    JoinFailed { node: NodeId, cid: Cid },
    #[error("{node} is not a committed member of {cid}")]
    NotMember { node: NodeId, cid: Cid },
    #[error("{node} already runs a `{culture}` machine")]
    DuplicateMachine { node: NodeId, culture: String },
    #[error("{mid} is not a member of {cid}")]
    UnknownMember { cid: Cid, mid: Mid },
    #[error("no member host {host} in {cid}")]
    UnknownHost { cid: Cid, host: NodeId },
    #[error("packet {0} ran out of hops")]
    TtlExpired(String),
    #[error("route request for {mid} in {cid} reached no member")]
    RecoveryFailed { cid: Cid, mid: Mid },
    #[error("friend packet {0} never reached a member")]
    FriendUndeliverable(String),
    #[error("name service needs an internet gateway at the initiator")]
    GatewayMissing,
    #[error("transfer {file_id} gave up on chunk {chunk}")]
    TransferFailed { file_id: u32, chunk: u32 },
    #[error("isolation violated: {0}")]
    Isolation(String),
}

impl ProtocolError {
    pub fn kind(&self) -> &'static str {
        match self {
            ProtocolError::Model(_) => "Model",
            ProtocolError::Sim(_) => "Sim",
            ProtocolError::UnknownCommunity(_) => "UnknownCommunity",
            ProtocolError::NotAnnounced { .. } => "NotAnnounced",
            ProtocolError::JoinFailed { .. } => "JoinFailed",
            ProtocolError::NotMember { .. } => "NotMember",
            ProtocolError::DuplicateMachine { .. } => "DuplicateMachine",
            ProtocolError::UnknownMember { .. } => "UnknownMember",
            ProtocolError::UnknownHost { .. } => "UnknownHost",
            ProtocolError::TtlExpired(_) => "TtlExpired",
            ProtocolError::RecoveryFailed { .. } => "RecoveryFailed",
            ProtocolError::FriendUndeliverable(_) => "FriendUndeliverable",
            ProtocolError::GatewayMissing => "GatewayMissing",
            ProtocolError::TransferFailed { .. } => "TransferFailed",
            ProtocolError::Isolation(_) => "Isolation",
        }
    }
}
