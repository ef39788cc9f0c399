//! Application arts: go-back-N file transfer, gateway-backed name resolution,
//! and the trivial CBR/Telnet traffic generators.

pub mod ftp;
pub mod names;

pub use ftp::{AckSegment, FtpSession, GbnReceiver, GbnSender, Segment, TransferReport};
pub use names::{Answer, NameRecord, NameTable, RegisterArgs};
