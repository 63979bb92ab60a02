//! File-backed side of dynstripe: the segment store, netflow data files,
//! cluster config loading and the benchmark runner behind the `dynstripe`
//! command.

pub mod bench;
pub mod config;
pub mod manifest;
pub mod netflow_io;
pub mod store;

pub use manifest::{Manifest, ManifestEntry};
pub use store::{LogicalFile, StoreError, StripeHook};
