use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("stripe count must be at least 1")]
    ZeroStripeCount,
    #[error("stripe width must be at least 1 byte")]
    ZeroStripeWidth,
    #[error("OST pool is empty")]
    EmptyPool,
    #[error("OST {0} appears more than once in the pool")]
    DuplicateOst(u32),
    #[error("stripe count {count} exceeds pool size {pool}")]
    PoolTooSmall { count: u32, pool: usize },
    #[error("watermarks must be positive and strictly ascending")]
    WatermarksNotAscending,
    #[error("{watermarks} watermarks need {} striping configs, got {configs}", watermarks + 1)]
    ConfigCountMismatch { watermarks: usize, configs: usize },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("cluster does not match pool: {0}")]
    ClusterMismatch(String),
    #[error("invalid cluster model: {0}")]
    InvalidCluster(String),
    #[error("trace has no operations")]
    EmptyTrace,
    #[error("cannot parse size `{0}`")]
    InvalidSize(String),
    #[error("malformed netflow record: {0}")]
    MalformedRecord(String),
}
