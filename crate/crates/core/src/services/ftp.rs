use std::ops::Range;

use serde::Serialize;

use crate::codec::{DecodeError, Reader, Writer};
use crate::ids::Mid;

pub const DEFAULT_CHUNK_SIZE: usize = 1024;
pub const DEFAULT_WINDOW: u32 = 4;
pub const MAX_RETRIES: u32 = 16;

/// One chunk of a transfer, carried as the payload of a `put`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub file_id: u32,
    pub seq: u32,
    pub total: u32,
    pub data: Vec<u8>,
}

impl Segment {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.file_id).u32(self.seq).u32(self.total).bytes(&self.data);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let seg = Segment {
            file_id: r.u32()?,
            seq: r.u32()?,
            total: r.u32()?,
            data: r.bytes()?,
        };
        r.finish()?;
        if seg.seq >= seg.total {
            return Err(DecodeError::Invalid("segment index beyond total"));
        }
        Ok(seg)
    }
}

/// Cumulative acknowledgement: every chunk below `next` has arrived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckSegment {
    pub file_id: u32,
    pub next: u32,
}

impl AckSegment {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u32(self.file_id).u32(self.next);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(buf);
        let ack = AckSegment {
            file_id: r.u32()?,
            next: r.u32()?,
        };
        r.finish()?;
        Ok(ack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetriesExhausted {
    pub chunk: u32,
}

/// Go-back-N sender window over chunk indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GbnSender {
    total: u32,
    window: u32,
    base: u32,
    next_seq: u32,
    base_retries: u32,
    max_retries: u32,
    pub sends: u64,
    pub retransmissions: u64,
}

impl GbnSender {
    pub fn new(total: u32, window: u32, max_retries: u32) -> Self {
        assert!(window > 0, "window must be positive");
        GbnSender {
            total,
            window,
            base: 0,
            next_seq: 0,
            base_retries: 0,
            max_retries,
            sends: 0,
            retransmissions: 0,
        }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn next_seq(&self) -> u32 {
        self.next_seq
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn in_flight(&self) -> u32 {
        self.next_seq - self.base
    }

    pub fn is_complete(&self) -> bool {
        self.base == self.total
    }

    /// New chunks the window allows now; marks them sent.
    pub fn take_sendable(&mut self) -> Range<u32> {
        let end = (self.base + self.window).min(self.total);
        let range = self.next_seq..end.max(self.next_seq);
        self.next_seq = range.end;
        self.sends += u64::from(range.end - range.start);
        debug_assert!(self.in_flight() <= self.window);
        range
    }

    /// Applies a cumulative ack. Returns whether the window slid.
    pub fn on_ack(&mut self, next: u32) -> bool {
        if next <= self.base || next > self.next_seq {
            return false;
        }
        self.base = next;
        self.base_retries = 0;
        true
    }

    /// Go-back-N: everything outstanding is resent.
    pub fn on_timeout(&mut self) -> Result<Range<u32>, RetriesExhausted> {
        if self.in_flight() == 0 {
            return Ok(self.base..self.base);
        }
        self.base_retries += 1;
        if self.base_retries > self.max_retries {
            return Err(RetriesExhausted { chunk: self.base });
        }
        let range = self.base..self.next_seq;
        let n = u64::from(range.end - range.start);
        self.sends += n;
        self.retransmissions += n;
        Ok(range)
    }
}

/// In-order sink: accepts only the next expected chunk, drops everything else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GbnReceiver {
    total: u32,
    expected: u32,
    data: Vec<u8>,
    pub duplicates: u64,
}

impl GbnReceiver {
    pub fn new(total: u32) -> Self {
        GbnReceiver {
            total,
            expected: 0,
            data: Vec::new(),
            duplicates: 0,
        }
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn expected(&self) -> u32 {
        self.expected
    }

    pub fn is_complete(&self) -> bool {
        self.expected == self.total
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Returns `(newly_accepted, cumulative_ack)`.
    pub fn accept(&mut self, seq: u32, chunk: &[u8]) -> (bool, u32) {
        if seq == self.expected && seq < self.total {
            self.data.extend_from_slice(chunk);
            self.expected += 1;
            (true, self.expected)
        } else {
            self.duplicates += 1;
            (false, self.expected)
        }
    }
}

/// Sender-side state of one `ftp_put`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtpSession {
    pub file_id: u32,
    pub dst: Mid,
    pub chunk_size: usize,
    pub payload: Vec<u8>,
    pub window: GbnSender,
    pub timer_gen: u64,
    pub max_in_flight: u32,
}

impl FtpSession {
    pub fn new(file_id: u32, dst: Mid, payload: Vec<u8>, chunk_size: usize, window: u32, max_retries: u32) -> Self {
        let chunk_size = chunk_size.max(1);
        let total = payload.len().div_ceil(chunk_size) as u32;
        FtpSession {
            file_id,
            dst,
            chunk_size,
            payload,
            window: GbnSender::new(total, window, max_retries),
            timer_gen: 0,
            max_in_flight: 0,
        }
    }

    pub fn segment(&self, seq: u32) -> Segment {
        let start = seq as usize * self.chunk_size;
        let end = (start + self.chunk_size).min(self.payload.len());
        Segment {
            file_id: self.file_id,
            seq,
            total: self.window.total(),
            data: self.payload[start..end].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferReport {
    pub file_id: u32,
    pub src: String,
    pub dst_mid: u32,
    pub community: String,
    pub total_bytes: usize,
    pub chunks: u32,
    pub chunk_sends: u64,
    pub retransmissions: u64,
    pub acks_received: u64,
    pub hop_transmissions: u64,
    pub max_in_flight: u32,
    pub window: u32,
    pub status: String,
    pub completed_at: Option<f64>,
    pub content_match: Option<bool>,
}
