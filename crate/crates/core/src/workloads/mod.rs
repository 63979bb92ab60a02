//! Trace generators for the three benchmark workloads.

mod ior;
pub mod netflow;
mod scan;

pub use ior::{gen_ior, IorSpec};
pub use netflow::{gen_netflow_trace, netflow_index, IndexEntry, NetflowRecord, NetflowSpec, Variant};
pub use scan::{gen_scan_random, Locality, ScanRandomSpec, SizeDist};

use crate::trace::IoTrace;
use crate::Result;

/// Any of the supported workload descriptions.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadSpec {
    Ior(IorSpec),
    Netflow(NetflowSpec),
    ScanRandom(ScanRandomSpec),
}

impl WorkloadSpec {
    /// Builds the trace. Netflow traces are derived from the synthetic
    /// record index the spec describes.
    pub fn trace(&self) -> Result<IoTrace> {
        match self {
            WorkloadSpec::Ior(s) => gen_ior(s),
            WorkloadSpec::Netflow(s) => gen_netflow_trace(s, &netflow_index(s)?),
            WorkloadSpec::ScanRandom(s) => gen_scan_random(s),
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            WorkloadSpec::Netflow(s) => s.variant.name(),
            _ => "default",
        }
    }
}
