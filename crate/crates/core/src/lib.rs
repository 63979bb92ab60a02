//! Watermark-based dynamic striping for parallel file systems.
//!
//! A file laid out with dynamic striping is split at fixed byte offsets
//! (watermarks) into contiguous segments, and every segment carries its own
//! stripe count and stripe width. This crate holds the pure, allocation-only
//! parts of that model:
//!
//! - [`layout`]: round-robin striping arithmetic for a single configuration.
//! - [`composite`]: watermark layouts and resolution of offsets to segments.
//! - [`trace`]: phase-structured I/O traces.
//! - [`workloads`]: IOR, netflow and scan-then-random trace generators.
//! - [`sim`]: a fluid max-min fair cost model of a striped storage cluster.
//! - [`presets`]: the named IOR, netflow and blast experiment matrix.
//!
//! File-backed storage, the netflow file format and the benchmark CLI live in
//! the `dynstripe` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod composite;
mod error;
pub mod layout;
pub mod presets;
pub mod sim;
pub mod size;
pub mod trace;
pub mod workloads;

pub use composite::{CompositeLayout, DirectoryType, SegmentFragment, SegmentSpec, SubRange, Watermark};
pub use error::Error;
pub use layout::{ChunkAddress, Fragment, OstPool, StripingConfig};
pub use sim::{ClusterModel, SimResult};
pub use trace::{Dispatch, IoKind, IoOp, IoTrace, Phase};

pub type Result<T, E = Error> = core::result::Result<T, E>;
