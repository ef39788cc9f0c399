//! Service composition: arts (capabilities occupying a layer slot), cultures
//! (validated five-layer stacks of arts) and machines (running instances of a
//! culture on a host, reachable only through the operations their arts declare).

mod art;
mod catalog;
mod culture;
mod machine;

pub use art::{ArtSpec, Category, Slot};
pub use culture::{CultureSpec, Registry, DEFAULT_HOP_DELAY};
pub use machine::{InvokeArgs, Machine, MachineState, Outcome};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("art `{0}` is already defined")]
    DuplicateArt(String),
    #[error("art `{name}`: {reason}")]
    BadCategory { name: String, reason: String },
    #[error("art `{0}` declares no operations")]
    EmptyOps(String),
    #[error("unknown art `{0}`")]
    UnknownArt(String),
    #[error("culture `{culture}` has no {slot} art")]
    IncompleteStack { culture: String, slot: Slot },
    #[error("culture `{culture}` has two {slot} arts: `{first}` and `{second}`")]
    SlotConflict {
        culture: String,
        slot: Slot,
        first: String,
        second: String,
    },
    #[error("culture `{culture}`: operation `{op}` declared by more than one art")]
    DuplicateOp { culture: String, op: String },
    #[error("culture `{0}` is already defined")]
    DuplicateCulture(String),
    #[error("unknown culture `{0}`")]
    UnknownCulture(String),
    #[error("operation `{0}` is not exposed by this machine")]
    OpNotExposed(String),
    #[error("bad arguments for `{op}`: {reason}")]
    BadArgs { op: String, reason: String },
}
