//! Phase-structured I/O traces.
//!
//! A trace is a list of phases executed one after another with a barrier in
//! between. Each phase holds a set of *streams*, each an ordered op list.
//! Under [`Dispatch::Static`] stream `i` is the whole work of task `i`; under
//! [`Dispatch::Queue`] streams are work units handed to a fixed number of
//! workers in stream order as workers become free.

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IoKind {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoOp {
    /// Task (static dispatch) or work unit (queue dispatch) that owns the op.
    pub task_id: u32,
    pub phase_id: u32,
    pub kind: IoKind,
    pub offset: u64,
    pub length: u64,
    /// Position, within the same stream, of an op that must complete before
    /// this one may start. Always earlier than the op itself.
    pub after: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dispatch {
    Static,
    Queue { workers: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub label: String,
    pub dispatch: Dispatch,
    pub streams: Vec<Vec<IoOp>>,
}

impl Phase {
    pub fn bytes(&self) -> u64 {
        self.ops().map(|op| op.length).sum()
    }

    pub fn op_count(&self) -> usize {
        self.streams.iter().map(Vec::len).sum()
    }

    pub fn ops(&self) -> impl Iterator<Item = &IoOp> {
        self.streams.iter().flatten()
    }

    /// Number of concurrently running tasks.
    pub fn workers(&self) -> usize {
        match self.dispatch {
            Dispatch::Static => self.streams.len(),
            Dispatch::Queue { workers } => workers as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IoTrace {
    pub workload: String,
    pub variant: String,
    pub phases: Vec<Phase>,
}

impl IoTrace {
    pub fn total_bytes(&self) -> u64 {
        self.phases.iter().map(Phase::bytes).sum()
    }

    pub fn op_count(&self) -> usize {
        self.phases.iter().map(Phase::op_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.op_count() == 0 {
            return Err(Error::EmptyTrace);
        }
        for (p, phase) in self.phases.iter().enumerate() {
            if let Dispatch::Queue { workers: 0 } = phase.dispatch {
                return Err(Error::InvalidSpec(alloc::format!("phase {p} has a queue with no workers")));
            }
            for stream in &phase.streams {
                for (i, op) in stream.iter().enumerate() {
                    if op.length == 0 {
                        return Err(Error::InvalidSpec(alloc::format!("zero-length op in phase {p}")));
                    }
                    if op.after.is_some_and(|a| a as usize >= i) {
                        return Err(Error::InvalidSpec(alloc::format!("op dependency in phase {p} points forward")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Ops covering `[start, start + len)` in `chunk`-sized pieces (last one
/// shorter). With `depth = 1` every op waits for the previous one; larger
/// depths keep up to `depth` ops of the stream in flight.
pub fn sequential_stream(
    task_id: u32,
    phase_id: u32,
    kind: IoKind,
    start: u64,
    len: u64,
    chunk: u64,
    depth: u32,
) -> Vec<IoOp> {
    assert!(chunk > 0 && depth > 0);
    let mut ops = Vec::with_capacity(len.div_ceil(chunk) as usize);
    let end = start + len;
    let mut pos = start;
    while pos < end {
        let n = ops.len() as u32;
        let length = chunk.min(end - pos);
        ops.push(IoOp { task_id, phase_id, kind, offset: pos, length, after: n.checked_sub(depth) });
        pos += length;
    }
    ops
}

/// `(start, len)` of part `i` when `total` bytes are split into `parts`
/// near-equal contiguous spans.
pub fn even_span(total: u64, parts: u64, i: u64) -> (u64, u64) {
    let lo = (u128::from(total) * u128::from(i) / u128::from(parts)) as u64;
    let hi = (u128::from(total) * u128::from(i + 1) / u128::from(parts)) as u64;
    (lo, hi - lo)
}
