//! Scan-then-random-read workload: a sequence database is scanned end to end
//! for seeds, then hits are extended with scattered reads.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::size::{KIB, MIB};
use crate::trace::{even_span, sequential_stream, Dispatch, IoKind, IoOp, IoTrace, Phase};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeDist {
    Fixed(u64),
    /// Inclusive bounds.
    Uniform { min: u64, max: u64 },
}

impl SizeDist {
    fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        match *self {
            SizeDist::Fixed(s) => s,
            SizeDist::Uniform { min, max } => rng.gen_range(min..=max),
        }
    }
}

/// Where random reads land in the database.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locality {
    Uniform,
    /// `clusters` hot spots placed uniformly; each read picks one and lands
    /// within `spread` bytes of it.
    Clustered { clusters: u32, spread: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanRandomSpec {
    pub db_size: u64,
    pub num_tasks: u32,
    pub scan_chunk: u64,
    pub num_random_reads: u64,
    pub read_size: SizeDist,
    pub locality: Locality,
    pub seed: u64,
}

impl Default for ScanRandomSpec {
    fn default() -> Self {
        ScanRandomSpec {
            db_size: 79 * MIB,
            num_tasks: 64,
            scan_chunk: 256 * KIB,
            num_random_reads: 6400,
            read_size: SizeDist::Uniform { min: 4 * KIB, max: 64 * KIB },
            locality: Locality::Clustered { clusters: 79, spread: 256 * KIB },
            seed: 0,
        }
    }
}

impl ScanRandomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.db_size == 0 || self.num_tasks == 0 || self.scan_chunk == 0 {
            return bad("db_size, num_tasks and scan_chunk must be positive");
        }
        match self.read_size {
            SizeDist::Fixed(0) => return bad("random read size must be positive"),
            SizeDist::Uniform { min, max } if min == 0 || min > max => return bad("invalid random read size range"),
            _ => {}
        }
        if let Locality::Clustered { clusters: 0, .. } = self.locality {
            return bad("clustered locality needs at least one cluster");
        }
        Ok(())
    }
}

pub fn gen_scan_random(spec: &ScanRandomSpec) -> Result<IoTrace> {
    spec.validate()?;
    let tasks = u64::from(spec.num_tasks);
    let scan = Phase {
        label: "scan".to_string(),
        dispatch: Dispatch::Static,
        streams: (0..tasks)
            .map(|t| {
                let (start, len) = even_span(spec.db_size, tasks, t);
                sequential_stream(t as u32, 0, IoKind::Read, start, len, spec.scan_chunk, 1)
            })
            .collect(),
    };
    let mut phases = alloc::vec![scan];

    if spec.num_random_reads > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let centers: Vec<u64> = match spec.locality {
            Locality::Uniform => Vec::new(),
            Locality::Clustered { clusters, .. } => (0..clusters).map(|_| rng.gen_range(0..spec.db_size)).collect(),
        };
        let mut streams: Vec<Vec<IoOp>> = (0..tasks).map(|_| Vec::new()).collect();
        for i in 0..spec.num_random_reads {
            let size = spec.read_size.sample(&mut rng).min(spec.db_size);
            let last_start = spec.db_size - size;
            let offset = match spec.locality {
                Locality::Uniform => rng.gen_range(0..=last_start),
                Locality::Clustered { spread, .. } => {
                    let c = centers[rng.gen_range(0..centers.len())];
                    let lo = c.saturating_sub(spread);
                    let hi = c.saturating_add(spread);
                    rng.gen_range(lo..=hi).min(last_start)
                }
            };
            let task = (i % tasks) as usize;
            let stream = &mut streams[task];
            let after = stream.len().checked_sub(1).map(|p| p as u32);
            stream.push(IoOp { task_id: task as u32, phase_id: 1, kind: IoKind::Read, offset, length: size, after });
        }
        phases.push(Phase { label: "random".to_string(), dispatch: Dispatch::Static, streams });
    }

    Ok(IoTrace { workload: "scan-random".to_string(), variant: "default".to_string(), phases })
}
