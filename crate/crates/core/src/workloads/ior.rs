use alloc::string::ToString;
use alloc::vec::Vec;

use crate::size::MIB;
use crate::trace::{sequential_stream, Dispatch, IoKind, IoTrace, Phase};
use crate::{Error, Result};

/// Segmented IOR: task `t` owns `[t * block_size, (t + 1) * block_size)` and
/// moves it in `transfer_size` ops, first writing then reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IorSpec {
    pub num_tasks: u32,
    pub block_size: u64,
    pub transfer_size: u64,
    pub do_write: bool,
    pub do_read: bool,
    /// Ops each task keeps in flight. 1 is strictly synchronous I/O; larger
    /// values stand in for client readahead and write-behind.
    pub queue_depth: u32,
}

impl Default for IorSpec {
    fn default() -> Self {
        IorSpec {
            num_tasks: 64,
            block_size: 64 * MIB,
            transfer_size: MIB,
            do_write: true,
            do_read: true,
            queue_depth: 8,
        }
    }
}

impl IorSpec {
    pub fn file_size(&self) -> u64 {
        u64::from(self.num_tasks) * self.block_size
    }

    pub fn ops_per_phase(&self) -> u64 {
        u64::from(self.num_tasks) * (self.block_size / self.transfer_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if self.num_tasks == 0 {
            return bad("num_tasks must be positive");
        }
        if self.transfer_size == 0 || self.block_size == 0 {
            return bad("block and transfer sizes must be positive");
        }
        if !self.block_size.is_multiple_of(self.transfer_size) {
            return bad("block_size must be a multiple of transfer_size");
        }
        if !self.do_write && !self.do_read {
            return bad("IOR run must write, read, or both");
        }
        if self.queue_depth == 0 {
            return bad("queue_depth must be positive");
        }
        Ok(())
    }
}

pub fn gen_ior(spec: &IorSpec) -> Result<IoTrace> {
    spec.validate()?;
    let mut phases = Vec::new();
    let mut kinds = Vec::new();
    if spec.do_write {
        kinds.push((IoKind::Write, "write"));
    }
    if spec.do_read {
        kinds.push((IoKind::Read, "read"));
    }
    for (phase_id, (kind, label)) in kinds.into_iter().enumerate() {
        let streams = (0..spec.num_tasks)
            .map(|t| {
                sequential_stream(
                    t,
                    phase_id as u32,
                    kind,
                    u64::from(t) * spec.block_size,
                    spec.block_size,
                    spec.transfer_size,
                    spec.queue_depth,
                )
            })
            .collect();
        phases.push(Phase { label: label.to_string(), dispatch: Dispatch::Static, streams });
    }
    Ok(IoTrace { workload: "ior".to_string(), variant: "default".to_string(), phases })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::size::{GIB, TIB};

    #[test]
    fn full_scale_file_is_four_tib() {
        let spec = IorSpec { block_size: 64 * GIB, ..IorSpec::default() };
        spec.validate().unwrap();
        assert_eq!(spec.file_size(), 4 * TIB);
    }

    #[test]
    fn one_task_one_transfer() {
        let spec = IorSpec { num_tasks: 1, block_size: 4096, transfer_size: 4096, queue_depth: 1, ..IorSpec::default() };
        let t = gen_ior(&spec).unwrap();
        assert_eq!(t.op_count(), 2);
        assert_eq!(t.phases[0].streams[0][0].kind, IoKind::Write);
        assert_eq!(t.phases[1].streams[0][0].kind, IoKind::Read);
    }

    #[test]
    fn desk_preset_op_counts() {
        let spec = IorSpec::default();
        let t = gen_ior(&spec).unwrap();
        assert_eq!(spec.file_size(), 4 * GIB);
        for p in &t.phases {
            assert_eq!(p.op_count(), 4096);
            assert_eq!(p.bytes(), 64 * 64 * MIB);
        }
        // Task 5's block.
        let s = &t.phases[1].streams[5];
        assert_eq!(s[0].offset, 5 * 64 * MIB);
        assert_eq!(s.last().unwrap().offset + s.last().unwrap().length, 6 * 64 * MIB);
    }

    #[test]
    fn ops_chain_by_queue_depth() {
        let spec = IorSpec { num_tasks: 2, block_size: 4 * MIB, queue_depth: 1, ..IorSpec::default() };
        let t = gen_ior(&spec).unwrap();
        let deps: Vec<_> = t.phases[0].streams[1].iter().map(|o| o.after).collect();
        assert_eq!(deps, [None, Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn invalid_specs() {
        let ok = IorSpec::default();
        assert!(gen_ior(&IorSpec { num_tasks: 0, ..ok.clone() }).is_err());
        assert!(gen_ior(&IorSpec { transfer_size: 3 * MIB, ..ok.clone() }).is_err());
        assert!(gen_ior(&IorSpec { do_read: false, do_write: false, ..ok.clone() }).is_err());
        assert!(gen_ior(&IorSpec { queue_depth: 0, ..ok }).is_err());
    }
}
