//! Round-robin (RAID-0 style) striping of one file over a set of OSTs.
//!
//! Logical byte `o` of a file striped with `count` OSTs and stripe unit
//! `width` lives in stripe unit `o / width`. Stripe units are dealt out to the
//! OSTs in order, so unit `u` goes to ordinal `u % count`, and lands in that
//! OST's object at row `u / count`.

use alloc::vec::Vec;
use core::fmt;

use crate::size::MIB;
use crate::{Error, Result};

/// Stripe count and stripe width of a single striping configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StripingConfig {
    stripe_count: u32,
    stripe_width: u64,
}

impl StripingConfig {
    pub fn new(stripe_count: u32, stripe_width: u64) -> Result<Self> {
        if stripe_count == 0 {
            return Err(Error::ZeroStripeCount);
        }
        if stripe_width == 0 {
            return Err(Error::ZeroStripeWidth);
        }
        Ok(StripingConfig { stripe_count, stripe_width })
    }

    /// Shorthand for widths given in whole MiB. Panics on zero arguments.
    pub const fn mib(stripe_count: u32, width_mib: u64) -> Self {
        assert!(stripe_count > 0 && width_mib > 0);
        StripingConfig { stripe_count, stripe_width: width_mib * MIB }
    }

    pub fn stripe_count(&self) -> u32 {
        self.stripe_count
    }

    pub fn stripe_width(&self) -> u64 {
        self.stripe_width
    }

    /// Bytes in one full row of stripe units (one unit on every OST).
    pub fn row_size(&self) -> u64 {
        self.stripe_width * u64::from(self.stripe_count)
    }

    /// Directory label for this configuration, e.g. `4ost-1mb`.
    ///
    /// Widths that are not whole MiB fall back to a byte count (`4ost-4096b`).
    pub fn dir_label(&self) -> alloc::string::String {
        if self.stripe_width.is_multiple_of(MIB) {
            alloc::format!("{}ost-{}mb", self.stripe_count, self.stripe_width / MIB)
        } else {
            alloc::format!("{}ost-{}b", self.stripe_count, self.stripe_width)
        }
    }

    pub fn check_pool(&self, pool: &OstPool) -> Result<()> {
        if self.stripe_count as usize > pool.len() {
            return Err(Error::PoolTooSmall { count: self.stripe_count, pool: pool.len() });
        }
        Ok(())
    }

    /// Maps a logical offset to `(ost_ordinal, object_offset)`.
    pub fn map_offset(&self, offset: u64) -> (u32, u64) {
        let unit = offset / self.stripe_width;
        let count = u64::from(self.stripe_count);
        let ordinal = (unit % count) as u32;
        let object_offset = (unit / count) * self.stripe_width + offset % self.stripe_width;
        (ordinal, object_offset)
    }

    /// Splits `[offset, offset + length)` into per-stripe-unit fragments in
    /// logical order. Fragments are never coalesced across stripe units, even
    /// when two consecutive units land on the same OST (count = 1).
    pub fn decompose_extent(&self, offset: u64, length: u64) -> Vec<Fragment> {
        let mut out = Vec::new();
        self.for_each_fragment(offset, length, |f| out.push(f));
        out
    }

    /// Non-allocating form of [`decompose_extent`](Self::decompose_extent).
    pub fn for_each_fragment(&self, offset: u64, length: u64, mut f: impl FnMut(Fragment)) {
        let end = offset + length;
        let mut pos = offset;
        while pos < end {
            let unit_end = (pos / self.stripe_width + 1) * self.stripe_width;
            let len = unit_end.min(end) - pos;
            let (ost_ordinal, object_offset) = self.map_offset(pos);
            f(Fragment {
                logical_offset: pos,
                chunk: ChunkAddress { ost_ordinal, object_offset, length: len },
            });
            pos += len;
        }
    }
}

impl fmt::Display for StripingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.stripe_count, self.stripe_width)
    }
}

/// A contiguous piece of one OST object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChunkAddress {
    /// Index into the configuration's OST assignment, `0..stripe_count`.
    pub ost_ordinal: u32,
    pub object_offset: u64,
    pub length: u64,
}

/// A chunk together with the logical offset of its first byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fragment {
    pub logical_offset: u64,
    pub chunk: ChunkAddress,
}

/// Ordered set of distinct OST identifiers available for striping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OstPool {
    ost_ids: Vec<u32>,
}

impl OstPool {
    pub fn new(ost_ids: Vec<u32>) -> Result<Self> {
        if ost_ids.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut sorted = ost_ids.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateOst(w[0]));
        }
        Ok(OstPool { ost_ids })
    }

    /// OSTs `0..n` in numeric order.
    pub fn sequential(n: u32) -> Result<Self> {
        Self::new((0..n).collect())
    }

    /// OSTs of `num_oss` servers with `osts_per_oss` each, where OST `id` sits
    /// on server `id / osts_per_oss`. Pool order alternates between servers,
    /// so any `k` consecutive pool entries spread over `min(k, num_oss)`
    /// servers.
    pub fn interleaved(num_oss: u32, osts_per_oss: u32) -> Result<Self> {
        let mut ids = Vec::with_capacity((num_oss * osts_per_oss) as usize);
        for local in 0..osts_per_oss {
            for oss in 0..num_oss {
                ids.push(oss * osts_per_oss + local);
            }
        }
        Self::new(ids)
    }

    pub fn len(&self) -> usize {
        self.ost_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ost_ids.is_empty()
    }

    pub fn ids(&self) -> &[u32] {
        &self.ost_ids
    }

    /// OST id serving `ordinal` for an assignment that begins at pool
    /// position `start`, wrapping around the end of the pool.
    pub fn ost_id(&self, start: usize, ordinal: u32) -> u32 {
        self.ost_ids[(start + ordinal as usize) % self.ost_ids.len()]
    }
}
