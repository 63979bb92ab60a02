//! Synthetic netflow records and the two-phase analysis trace.
//!
//! # Record format
//!
//! Records are self-delimiting and stored back to back. All integers are
//! big-endian (network byte order).
//!
//! | offset | size | field                                  |
//! |-------:|-----:|----------------------------------------|
//! | 0      | 2    | `total_length`, whole record in bytes  |
//! | 2      | 1    | format version, always `1`             |
//! | 3      | 1    | IP protocol number                     |
//! | 4      | 4    | `src_ip` (the internal host)           |
//! | 8      | 4    | `dst_ip`                               |
//! | 12     | 2    | `src_port`                             |
//! | 14     | 2    | `dst_port`                             |
//! | 16     | 8    | `start_time`, ms since the epoch       |
//! | 24     | 8    | `end_time`, ms since the epoch         |
//! | 32     | 8    | `byte_count`                           |
//! | 40     | 8    | `packet_count`                         |
//! | 48     | n    | payload descriptor, `total_length - 48` bytes |
//!
//! The analysis builds one model per internal host, so the flow key of a
//! record is its `src_ip`.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::size::{KIB, MIB};
use crate::trace::{even_span, sequential_stream, Dispatch, IoKind, IoOp, IoTrace, Phase};
use crate::{Error, Result};

pub const HEADER_LEN: usize = 48;
pub const FORMAT_VERSION: u8 = 1;
/// Internal hosts are numbered up from 10.0.0.0.
pub const INTERNAL_BASE: u32 = 0x0a00_0000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetflowRecord {
    pub protocol: u8,
    pub src_ip: u32,
    pub dst_ip: u32,
    pub src_port: u16,
    pub dst_port: u16,
    pub start_time: u64,
    pub end_time: u64,
    pub byte_count: u64,
    pub packet_count: u64,
    pub payload: Vec<u8>,
}

impl NetflowRecord {
    pub fn total_length(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn flow_key(&self) -> u32 {
        self.src_ip
    }

    pub fn encode(&self, out: &mut Vec<u8>) -> Result<()> {
        let len = u16::try_from(self.total_length())
            .map_err(|_| Error::MalformedRecord("record longer than 65535 bytes".to_string()))?;
        out.extend_from_slice(&len.to_be_bytes());
        out.push(FORMAT_VERSION);
        out.push(self.protocol);
        out.extend_from_slice(&self.src_ip.to_be_bytes());
        out.extend_from_slice(&self.dst_ip.to_be_bytes());
        out.extend_from_slice(&self.src_port.to_be_bytes());
        out.extend_from_slice(&self.dst_port.to_be_bytes());
        out.extend_from_slice(&self.start_time.to_be_bytes());
        out.extend_from_slice(&self.end_time.to_be_bytes());
        out.extend_from_slice(&self.byte_count.to_be_bytes());
        out.extend_from_slice(&self.packet_count.to_be_bytes());
        out.extend_from_slice(&self.payload);
        Ok(())
    }

    /// Reads the record length from the leading field without parsing the
    /// rest.
    pub fn peek_length(buf: &[u8]) -> Option<usize> {
        Some(u16::from_be_bytes([*buf.first()?, *buf.get(1)?]) as usize)
    }

    /// Decodes one record from the front of `buf`, returning it and its
    /// length.
    pub fn decode(buf: &[u8]) -> Result<(NetflowRecord, usize)> {
        let bad = |m: &str| Error::MalformedRecord(m.to_string());
        let len = Self::peek_length(buf).ok_or_else(|| bad("truncated length field"))?;
        if len < HEADER_LEN {
            return Err(bad("length shorter than header"));
        }
        if buf.len() < len {
            return Err(bad("truncated record"));
        }
        if buf[2] != FORMAT_VERSION {
            return Err(bad("unknown format version"));
        }
        let u16_at = |i: usize| u16::from_be_bytes([buf[i], buf[i + 1]]);
        let u32_at = |i: usize| u32::from_be_bytes(buf[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_be_bytes(buf[i..i + 8].try_into().unwrap());
        let rec = NetflowRecord {
            protocol: buf[3],
            src_ip: u32_at(4),
            dst_ip: u32_at(8),
            src_port: u16_at(12),
            dst_port: u16_at(14),
            start_time: u64_at(16),
            end_time: u64_at(24),
            byte_count: u64_at(32),
            packet_count: u64_at(40),
            payload: buf[HEADER_LEN..len].to_vec(),
        };
        Ok((rec, len))
    }
}

/// Location and key of one record in a netflow data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexEntry {
    pub offset: u64,
    pub length: u32,
    pub key: u32,
}

/// Record length distribution, in bytes. Lengths are clamped to at least the
/// header size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthDist {
    Fixed(u16),
    /// Inclusive bounds.
    Uniform { min: u16, max: u16 },
}

impl LengthDist {
    fn min(&self) -> u16 {
        match *self {
            LengthDist::Fixed(l) => l,
            LengthDist::Uniform { min, .. } => min,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u16 {
        let l = match *self {
            LengthDist::Fixed(l) => l,
            LengthDist::Uniform { min, max } => rng.gen_range(min..=max),
        };
        l.max(HEADER_LEN as u16)
    }
}

/// How records are spread over the models (internal hosts).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelDist {
    Uniform,
    /// Host `i` of `n` has weight `n - i`: a few busy hosts, a long tail.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Static, equal partitions per task, phase barrier.
    Sync,
    /// Work queue of fixed-size chunks (phase 1) or whole models (phase 2).
    Async,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sync => "sync",
            Variant::Async => "async",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetflowSpec {
    pub total_bytes: u64,
    pub record_len: LengthDist,
    pub seed: u64,
    pub num_tasks: u32,
    pub variant: Variant,
    pub async_chunk_size: u64,
    /// Phase 1 read size.
    pub read_size: u64,
    pub num_models: u32,
    pub model_dist: ModelDist,
}

impl Default for NetflowSpec {
    fn default() -> Self {
        NetflowSpec {
            total_bytes: 55 * MIB,
            record_len: LengthDist::Uniform { min: 256, max: 2048 },
            seed: 0,
            num_tasks: 128,
            variant: Variant::Sync,
            async_chunk_size: 256 * KIB,
            read_size: 64 * KIB,
            num_models: 1024,
            model_dist: ModelDist::Uniform,
        }
    }
}

impl NetflowSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.num_tasks == 0 {
            return bad("num_tasks must be positive");
        }
        if self.num_models == 0 {
            return bad("num_models must be positive");
        }
        if self.read_size == 0 {
            return bad("read_size must be positive");
        }
        if self.variant == Variant::Async && self.async_chunk_size == 0 {
            return bad("async variant needs a positive chunk size");
        }
        if let LengthDist::Uniform { min, max } = self.record_len {
            if min > max {
                return bad("record length min exceeds max");
            }
        }
        Ok(())
    }
}

/// Deterministic stream of synthetic records for a spec. Stops before the
/// first record that would push the data past `total_bytes`.
pub struct NetflowSynth {
    rng: ChaCha8Rng,
    record_len: LengthDist,
    model_cdf: Vec<u64>,
    remaining: u64,
    produced: u64,
}

impl NetflowSynth {
    pub fn new(spec: &NetflowSpec) -> Result<Self> {
        spec.validate()?;
        let n = u64::from(spec.num_models);
        let mut acc = 0;
        let model_cdf = (0..n)
            .map(|i| {
                acc += match spec.model_dist {
                    ModelDist::Uniform => 1,
                    ModelDist::Linear => n - i,
                };
                acc
            })
            .collect();
        Ok(NetflowSynth {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            record_len: spec.record_len,
            model_cdf,
            remaining: spec.total_bytes,
            produced: 0,
        })
    }
}

impl Iterator for NetflowSynth {
    type Item = NetflowRecord;

    fn next(&mut self) -> Option<NetflowRecord> {
        if self.remaining < u64::from(self.record_len.min().max(HEADER_LEN as u16)) {
            return None;
        }
        let len = self.record_len.sample(&mut self.rng);
        if u64::from(len) > self.remaining {
            self.remaining = 0;
            return None;
        }
        self.remaining -= u64::from(len);
        let total = *self.model_cdf.last().unwrap();
        let pick = self.rng.gen_range(0..total);
        let model = self.model_cdf.partition_point(|&c| c <= pick) as u32;
        let start_time = 1_400_000_000_000 + self.produced * 7 + self.rng.gen_range(0..1000);
        let packets = self.rng.gen_range(1..10_000u64);
        let protocol = if self.rng.gen_bool(0.8) { 6 } else { 17 };
        let k = self.produced;
        self.produced += 1;
        Some(NetflowRecord {
            protocol,
            src_ip: INTERNAL_BASE + model,
            dst_ip: self.rng.gen(),
            src_port: self.rng.gen_range(1024..=u16::MAX),
            dst_port: [22, 53, 80, 443, 8080][self.rng.gen_range(0..5)],
            start_time,
            end_time: start_time + self.rng.gen_range(0..600_000),
            byte_count: packets * self.rng.gen_range(40..1500u64),
            packet_count: packets,
            payload: (0..usize::from(len) - HEADER_LEN).map(|j| (k as usize + j) as u8 ^ protocol).collect(),
        })
    }
}

/// Index of the data file the spec describes, without materialising it.
pub fn netflow_index(spec: &NetflowSpec) -> Result<Vec<IndexEntry>> {
    let mut offset = 0u64;
    Ok(NetflowSynth::new(spec)?
        .map(|r| {
            let e = IndexEntry { offset, length: r.total_length() as u32, key: r.flow_key() };
            offset += u64::from(e.length);
            e
        })
        .collect())
}

/// Two-phase trace: phase 1 scans the data file, phase 2 reads every indexed
/// record once, grouped by model.
pub fn gen_netflow_trace(spec: &NetflowSpec, index: &[IndexEntry]) -> Result<IoTrace> {
    spec.validate()?;
    if index.is_empty() {
        return Err(Error::InvalidSpec("netflow index is empty".to_string()));
    }
    let data_len = index.iter().map(|e| e.offset + u64::from(e.length)).max().unwrap();
    let tasks = u64::from(spec.num_tasks);

    let phase1 = match spec.variant {
        Variant::Sync => Phase {
            label: "phase1".to_string(),
            dispatch: Dispatch::Static,
            streams: (0..tasks)
                .map(|t| {
                    let (start, len) = even_span(data_len, tasks, t);
                    sequential_stream(t as u32, 0, IoKind::Read, start, len, spec.read_size, 1)
                })
                .collect(),
        },
        Variant::Async => Phase {
            label: "phase1".to_string(),
            dispatch: Dispatch::Queue { workers: spec.num_tasks },
            streams: (0..data_len.div_ceil(spec.async_chunk_size))
                .map(|u| {
                    let start = u * spec.async_chunk_size;
                    let len = spec.async_chunk_size.min(data_len - start);
                    sequential_stream(u as u32, 0, IoKind::Read, start, len, spec.read_size, 1)
                })
                .collect(),
        },
    };

    let mut by_model: Vec<IndexEntry> = index.to_vec();
    by_model.sort_by_key(|e| (e.key, e.offset));
    let read = |owner: u32, i: usize, e: &IndexEntry| IoOp {
        task_id: owner,
        phase_id: 1,
        kind: IoKind::Read,
        offset: e.offset,
        length: u64::from(e.length),
        after: i.checked_sub(1).map(|p| p as u32),
    };
    let phase2 = match spec.variant {
        Variant::Sync => Phase {
            label: "phase2".to_string(),
            dispatch: Dispatch::Static,
            streams: (0..tasks)
                .map(|t| {
                    let (start, len) = even_span(by_model.len() as u64, tasks, t);
                    by_model[start as usize..(start + len) as usize]
                        .iter()
                        .enumerate()
                        .map(|(i, e)| read(t as u32, i, e))
                        .collect()
                })
                .collect(),
        },
        Variant::Async => {
            let streams = by_model
                .chunk_by(|a, b| a.key == b.key)
                .enumerate()
                .map(|(u, model)| model.iter().enumerate().map(|(i, e)| read(u as u32, i, e)).collect())
                .collect();
            Phase { label: "phase2".to_string(), dispatch: Dispatch::Queue { workers: spec.num_tasks }, streams }
        }
    };

    Ok(IoTrace {
        workload: "netflow".to_string(),
        variant: spec.variant.name().to_string(),
        phases: alloc::vec![phase1, phase2],
    })
}
