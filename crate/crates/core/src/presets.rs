//! The named experiment matrix: 6 IOR, 6 netflow and 18 blast layouts.
//!
//! Every preset has a full-size form and a desk-scale form. Desk scale
//! divides every data size and watermark by 1024 (TiB become GiB, GiB become
//! MiB); stripe widths stay as they are.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::composite::{CompositeLayout, DirectoryType, Watermark};
use crate::layout::OstPool;
use crate::sim::{simulate, ClusterModel, SimResult};
use crate::size::{GIB, KIB, MIB, TIB};
use crate::workloads::netflow::{LengthDist, ModelDist};
use crate::workloads::{IorSpec, Locality, NetflowSpec, ScanRandomSpec, SizeDist, Variant, WorkloadSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scale {
    Paper,
    Desk,
}

impl Scale {
    pub const DESK_DIVISOR: u64 = 1024;

    pub fn apply(self, full_bytes: u64) -> u64 {
        match self {
            Scale::Paper => full_bytes,
            Scale::Desk => full_bytes / Self::DESK_DIVISOR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(Error::InvalidSpec(alloc::format!("unknown scale `{s}`, expected paper or desk"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Ior,
    Netflow,
    Blast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub family: Family,
    /// Directory type of each segment, first to last.
    pub letters: &'static [DirectoryType],
    /// Full-size watermarks in bytes.
    pub watermarks: &'static [u64],
}

macro_rules! preset {
    ($name:literal, $family:ident, [$($l:ident),+], [$($w:expr),*]) => {
        Preset {
            name: $name,
            family: Family::$family,
            letters: &[$(DirectoryType::$l),+],
            watermarks: &[$($w),*],
        }
    };
}

static PRESETS: [Preset; 30] = [
    preset!("IOR.1", Ior, [A], []),
    preset!("IOR.2", Ior, [B], []),
    preset!("IOR.3", Ior, [C], []),
    preset!("IOR.4", Ior, [A, B], [TIB]),
    preset!("IOR.5", Ior, [A, C], [TIB]),
    preset!("IOR.6", Ior, [A, B, C], [TIB, 2 * TIB]),
    preset!("netflow.1", Netflow, [A], []),
    preset!("netflow.2", Netflow, [B], []),
    preset!("netflow.3", Netflow, [C], []),
    preset!("netflow.4", Netflow, [A, B], [10 * GIB]),
    preset!("netflow.5", Netflow, [A, C], [10 * GIB]),
    preset!("netflow.6", Netflow, [A, B, C], [10 * GIB, 20 * GIB]),
    preset!("blast.1", Blast, [A], []),
    preset!("blast.2", Blast, [C], []),
    preset!("blast.3", Blast, [D], []),
    preset!("blast.4", Blast, [E], []),
    preset!("blast.5", Blast, [F], []),
    preset!("blast.6", Blast, [G], []),
    preset!("blast.7", Blast, [H], []),
    preset!("blast.8", Blast, [I], []),
    preset!("blast.9", Blast, [J], []),
    preset!("blast.10", Blast, [A, E, H], [26 * GIB, 52 * GIB]),
    preset!("blast.11", Blast, [C, F, I], [26 * GIB, 52 * GIB]),
    preset!("blast.12", Blast, [D, G, J], [26 * GIB, 52 * GIB]),
    preset!("blast.13", Blast, [A, C, D], [26 * GIB, 52 * GIB]),
    preset!("blast.14", Blast, [E, F, G], [26 * GIB, 52 * GIB]),
    preset!("blast.15", Blast, [H, I, J], [26 * GIB, 52 * GIB]),
    preset!("blast.16", Blast, [A, F, J], [26 * GIB, 52 * GIB]),
    preset!("blast.17", Blast, [A, F, J], [20 * GIB, 40 * GIB]),
    preset!("blast.18", Blast, [A, F, J], [8 * GIB, 28 * GIB]),
];

pub fn experiment_presets() -> &'static [Preset] {
    &PRESETS
}

/// Finds a preset by name, ignoring ASCII case.
pub fn lookup(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

impl Preset {
    pub fn watermarks(&self, scale: Scale) -> Vec<Watermark> {
        self.watermarks.iter().map(|&w| Watermark(scale.apply(w))).collect()
    }

    pub fn layout(&self, scale: Scale) -> CompositeLayout {
        let configs: Vec<_> = self.letters.iter().map(|d| d.config()).collect();
        CompositeLayout::build(&self.watermarks(scale), &configs).expect("preset table is well formed")
    }

    /// Client node count used for this family's runs.
    pub fn nodes(&self) -> u32 {
        match self.family {
            Family::Ior | Family::Netflow => 16,
            Family::Blast => 8,
        }
    }

    /// Human-readable striping pattern, e.g. `0-1TiB in A, remainder in B`.
    pub fn pattern(&self) -> String {
        if self.letters.len() == 1 {
            return alloc::format!("entire file in {}", self.letters[0]);
        }
        let mut out = String::new();
        let mut prev = 0;
        for (i, &w) in self.watermarks.iter().enumerate() {
            out.push_str(&alloc::format!("{}-{} in {}, ", human(prev), human(w), self.letters[i]));
            prev = w;
        }
        out.push_str(&alloc::format!("remainder in {}", self.letters.last().unwrap()));
        out
    }

    /// Workload variants run for this preset. Netflow runs both the
    /// synchronous and asynchronous designs.
    pub fn workloads(&self, scale: Scale, seed: u64) -> Vec<WorkloadSpec> {
        match self.family {
            Family::Ior => alloc::vec![WorkloadSpec::Ior(IorSpec {
                num_tasks: 64,
                block_size: scale.apply(64 * GIB),
                transfer_size: MIB,
                do_write: true,
                do_read: true,
                queue_depth: 8,
            })],
            Family::Netflow => [Variant::Sync, Variant::Async]
                .into_iter()
                .map(|variant| {
                    WorkloadSpec::Netflow(NetflowSpec {
                        total_bytes: scale.apply(55 * GIB),
                        // Mean 844 bytes: 55 GiB of records is about 70 million reads.
                        record_len: LengthDist::Uniform { min: 256, max: 1432 },
                        seed,
                        num_tasks: 128,
                        variant,
                        async_chunk_size: scale.apply(256 * MIB),
                        read_size: match scale {
                            Scale::Paper => MIB,
                            Scale::Desk => 64 * KIB,
                        },
                        num_models: match scale {
                            Scale::Paper => 65_536,
                            Scale::Desk => 1024,
                        },
                        model_dist: ModelDist::Uniform,
                    })
                })
                .collect(),
            Family::Blast => alloc::vec![WorkloadSpec::ScanRandom(ScanRandomSpec {
                db_size: scale.apply(79 * GIB),
                num_tasks: 64,
                scan_chunk: match scale {
                    Scale::Paper => MIB,
                    Scale::Desk => 256 * KIB,
                },
                num_random_reads: scale.apply(6_553_600),
                read_size: SizeDist::Uniform { min: 4 * KIB, max: 64 * KIB },
                locality: Locality::Clustered { clusters: 79, spread: scale.apply(256 * MIB) },
                seed,
            })],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10} {}", self.name, self.pattern())
    }
}

fn human(bytes: u64) -> String {
    if bytes >= TIB && bytes.is_multiple_of(TIB) {
        alloc::format!("{}TiB", bytes / TIB)
    } else if bytes >= GIB && bytes.is_multiple_of(GIB) {
        alloc::format!("{}GiB", bytes / GIB)
    } else if bytes >= MIB && bytes.is_multiple_of(MIB) {
        alloc::format!("{}MiB", bytes / MIB)
    } else {
        alloc::format!("{bytes}B")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub experiment: String,
    pub variant: String,
    pub result: SimResult,
}

/// Simulates every workload variant of the named presets, in order. The
/// cluster's client count is replaced by each preset's node count.
pub fn sweep(cluster: &ClusterModel, pool: &OstPool, names: &[&str], scale: Scale, seed: u64) -> Result<Vec<SweepEntry>> {
    let presets = names.iter().map(|n| lookup(n)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for preset in presets {
        let cluster = cluster.with_clients(preset.nodes());
        let layout = preset.layout(scale);
        for workload in preset.workloads(scale, seed) {
            let trace = workload.trace()?;
            let result = simulate(&cluster, pool, &layout, &trace, seed)?;
            out.push(SweepEntry { experiment: preset.name.to_string(), variant: workload.variant().to_string(), result });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DirectoryType::*;

    #[test]
    fn thirty_unique_presets() {
        let names: std::collections::BTreeSet<_> = PRESETS.iter().map(|p| p.name).collect();
        assert_eq!(names.len(), 30);
        for p in &PRESETS {
            assert_eq!(p.letters.len(), p.watermarks.len() + 1, "{}", p.name);
            p.layout(Scale::Paper);
            p.layout(Scale::Desk);
        }
    }

    #[test]
    fn ior6_layout() {
        let p = lookup("IOR.6").unwrap();
        assert_eq!(p.letters, [A, B, C]);
        assert_eq!(p.watermarks(Scale::Paper), [Watermark(TIB), Watermark(2 * TIB)]);
        assert_eq!(p.pattern(), "0B-1TiB in A, 1TiB-2TiB in B, remainder in C");
    }

    #[test]
    fn blast1_is_static_a() {
        let l = lookup("blast.1").unwrap().layout(Scale::Paper);
        assert_eq!(l, CompositeLayout::single(A.config()));
    }

    #[test]
    fn netflow6_desk_watermarks() {
        assert_eq!(lookup("netflow.6").unwrap().watermarks(Scale::Desk), [Watermark(10 * MIB), Watermark(20 * MIB)]);
    }

    #[test]
    fn lookup_is_case_insensitive_and_rejects_unknown() {
        assert_eq!(lookup("ior.3").unwrap().name, "IOR.3");
        assert_eq!(lookup("IOR.7"), Err(Error::UnknownExperiment("IOR.7".into())));
    }

    #[test]
    fn netflow_desk_read_count_near_seventy_thousand() {
        let WorkloadSpec::Netflow(spec) = &lookup("netflow.1").unwrap().workloads(Scale::Desk, 0)[0] else { panic!() };
        let n = crate::workloads::netflow_index(spec).unwrap().len();
        assert!((63_000..=77_000).contains(&n), "{n}");
    }

    #[test]
    fn empty_sweep() {
        let c = ClusterModel::default();
        assert!(sweep(&c, &c.pool().unwrap(), &[], Scale::Desk, 0).unwrap().is_empty());
        assert!(sweep(&c, &c.pool().unwrap(), &["nope"], Scale::Desk, 0).is_err());
    }
}
