//! Deterministic simulator for community-scoped MANET services.
//!
//! Services are composed from *arts* into *cultures* and run as *machines*.
//! A service initiator floods one announcement, interested nodes join, and the
//! resulting community routes its traffic over community tables, falling back
//! to route requests and friend relays through non-members.

pub mod baseline;
pub mod codec;
pub mod ids;
pub mod model;
pub mod protocol;
pub mod report;
pub mod scenario;
pub mod services;
pub mod sim;
pub mod stack;

pub use ids::{Cid, Mid, NodeId, PktId};
