//! Composite (per-segment) layouts built from watermarks.
//!
//! A layout is a list of half-open, contiguous segments `[start, end)` that
//! begins at byte 0 and whose last segment is unbounded. Each segment is
//! stored as its own object set with its own [`StripingConfig`].
//!
//! Segment `i` takes its OSTs from the pool starting at position
//! `sum(stripe_count of segments 0..i)`, wrapping around. This is how a
//! round-robin allocator places files created one after another; a
//! one-segment layout therefore always starts at pool position 0.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::layout::{ChunkAddress, OstPool, StripingConfig};
use crate::{Error, Result};

/// Exclusive upper bound of a segment, in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Watermark(pub u64);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentSpec {
    pub start: u64,
    /// `None` for the final, unbounded segment.
    pub end: Option<u64>,
    pub config: StripingConfig,
    pub dir_label: String,
}

impl SegmentSpec {
    pub fn contains(&self, offset: u64) -> bool {
        offset >= self.start && self.end.is_none_or(|e| offset < e)
    }

    pub fn span(&self) -> Option<u64> {
        self.end.map(|e| e - self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeLayout {
    segments: Vec<SegmentSpec>,
    /// Pool position of each segment's ordinal 0.
    ost_starts: Vec<usize>,
}

/// Part of an extent that falls inside one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubRange {
    pub segment: usize,
    pub offset_within: u64,
    pub length: u64,
}

/// One stripe-unit fragment of a composite extent. `chunk.object_offset` is
/// relative to the segment's own objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentFragment {
    pub segment: usize,
    pub logical_offset: u64,
    pub chunk: ChunkAddress,
}

impl CompositeLayout {
    /// Builds a layout with `watermarks.len() + 1` segments; segment `i` spans
    /// `[w[i-1], w[i])` with an implicit `w[-1] = 0`.
    pub fn build(watermarks: &[Watermark], configs: &[StripingConfig]) -> Result<Self> {
        if configs.len() != watermarks.len() + 1 {
            return Err(Error::ConfigCountMismatch { watermarks: watermarks.len(), configs: configs.len() });
        }
        let mut prev = 0;
        for w in watermarks {
            if w.0 <= prev {
                return Err(Error::WatermarksNotAscending);
            }
            prev = w.0;
        }
        let segments = configs
            .iter()
            .enumerate()
            .map(|(i, &config)| SegmentSpec {
                start: if i == 0 { 0 } else { watermarks[i - 1].0 },
                end: watermarks.get(i).map(|w| w.0),
                config,
                dir_label: config.dir_label(),
            })
            .collect();
        Self::from_segments(segments)
    }

    /// Static striping: one unbounded segment.
    pub fn single(config: StripingConfig) -> Self {
        Self::build(&[], &[config]).expect("one config, no watermarks")
    }

    /// Validates explicit segments (e.g. read back from a manifest).
    pub fn from_segments(segments: Vec<SegmentSpec>) -> Result<Self> {
        let Some(first) = segments.first() else {
            return Err(Error::InvalidLayout("no segments".into()));
        };
        if first.start != 0 {
            return Err(Error::InvalidLayout("first segment must start at 0".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            let last = i + 1 == segments.len();
            match (seg.end, last) {
                (None, true) => {}
                (None, false) => return Err(Error::InvalidLayout("only the last segment may be unbounded".into())),
                (Some(_), true) => return Err(Error::InvalidLayout("last segment must be unbounded".into())),
                (Some(end), false) => {
                    if end <= seg.start {
                        return Err(Error::InvalidLayout(alloc::format!("segment {i} is empty")));
                    }
                    if segments[i + 1].start != end {
                        return Err(Error::InvalidLayout(alloc::format!("gap or overlap after segment {i}")));
                    }
                }
            }
        }
        let mut ost_starts = Vec::with_capacity(segments.len());
        let mut next = 0usize;
        for seg in &segments {
            ost_starts.push(next);
            next += seg.config.stripe_count() as usize;
        }
        Ok(CompositeLayout { segments, ost_starts })
    }

    pub fn segments(&self) -> &[SegmentSpec] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn watermarks(&self) -> Vec<Watermark> {
        self.segments.iter().filter_map(|s| s.end).map(Watermark).collect()
    }

    pub fn configs(&self) -> Vec<StripingConfig> {
        self.segments.iter().map(|s| s.config).collect()
    }

    /// Fails if any segment is wider than the pool.
    pub fn check_pool(&self, pool: &OstPool) -> Result<()> {
        self.segments.iter().try_for_each(|s| s.config.check_pool(pool))
    }

    /// OST id that serves `ordinal` of `segment`.
    pub fn ost_id(&self, pool: &OstPool, segment: usize, ordinal: u32) -> u32 {
        pool.ost_id(self.ost_starts[segment], ordinal)
    }

    /// Segment containing `offset` and the offset relative to its start.
    pub fn resolve(&self, offset: u64) -> (usize, u64) {
        let idx = self.segments.partition_point(|s| s.start <= offset) - 1;
        (idx, offset - self.segments[idx].start)
    }

    /// Cuts `[offset, offset + length)` at segment boundaries.
    pub fn split_range(&self, offset: u64, length: u64) -> Vec<SubRange> {
        let mut out = Vec::new();
        if length == 0 {
            return out;
        }
        let end = offset + length;
        let (mut idx, _) = self.resolve(offset);
        let mut pos = offset;
        while pos < end {
            let seg = &self.segments[idx];
            let stop = seg.end.map_or(end, |e| e.min(end));
            out.push(SubRange { segment: idx, offset_within: pos - seg.start, length: stop - pos });
            pos = stop;
            idx += 1;
        }
        out
    }

    /// [`split_range`](Self::split_range) followed by per-segment stripe
    /// decomposition.
    pub fn full_decompose(&self, offset: u64, length: u64) -> Vec<SegmentFragment> {
        let mut out = Vec::new();
        self.for_each_fragment(offset, length, |f| out.push(f));
        out
    }

    pub fn for_each_fragment(&self, offset: u64, length: u64, mut f: impl FnMut(SegmentFragment)) {
        for sub in self.split_range(offset, length) {
            let seg = &self.segments[sub.segment];
            seg.config.for_each_fragment(sub.offset_within, sub.length, |frag| {
                f(SegmentFragment {
                    segment: sub.segment,
                    logical_offset: seg.start + frag.logical_offset,
                    chunk: frag.chunk,
                })
            });
        }
    }
}

impl fmt::Display for CompositeLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match s.end {
                Some(e) => write!(f, "[{}, {})@{}", s.start, e, s.dir_label)?,
                None => write!(f, "[{}, inf)@{}", s.start, s.dir_label)?,
            }
        }
        Ok(())
    }
}

/// The ten directory types used throughout the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectoryType {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
}

impl DirectoryType {
    pub const ALL: [DirectoryType; 10] = {
        use DirectoryType::*;
        [A, B, C, D, E, F, G, H, I, J]
    };

    pub fn config(self) -> StripingConfig {
        use DirectoryType::*;
        match self {
            A => StripingConfig::mib(4, 1),
            B => StripingConfig::mib(8, 1),
            C => StripingConfig::mib(16, 1),
            D => StripingConfig::mib(64, 1),
            E => StripingConfig::mib(4, 2),
            F => StripingConfig::mib(16, 2),
            G => StripingConfig::mib(64, 2),
            H => StripingConfig::mib(4, 4),
            I => StripingConfig::mib(16, 4),
            J => StripingConfig::mib(64, 4),
        }
    }

    pub fn letter(self) -> char {
        (b'A' + Self::ALL.iter().position(|&d| d == self).unwrap() as u8) as char
    }

    pub fn from_letter(c: char) -> Option<Self> {
        let i = (c.to_ascii_uppercase() as u32).checked_sub('A' as u32)? as usize;
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for DirectoryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::size::{GIB, MIB};
    use std::vec;

    fn three_tier() -> CompositeLayout {
        CompositeLayout::build(
            &[Watermark(GIB), Watermark(10 * GIB)],
            &[StripingConfig::mib(4, 1), StripingConfig::mib(8, 2), StripingConfig::mib(16, 4)],
        )
        .unwrap()
    }

    #[test]
    fn three_tier_segments() {
        let l = three_tier();
        let s = l.segments();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].start, s[0].end, s[0].dir_label.as_str()), (0, Some(GIB), "4ost-1mb"));
        assert_eq!((s[1].start, s[1].end, s[1].dir_label.as_str()), (GIB, Some(10 * GIB), "8ost-2mb"));
        assert_eq!((s[2].start, s[2].end, s[2].dir_label.as_str()), (10 * GIB, None, "16ost-4mb"));
    }

    #[test]
    fn no_watermarks_is_one_segment() {
        let l = CompositeLayout::build(&[], &[StripingConfig::mib(4, 1)]).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.segments()[0].end, None);
        assert_eq!(l, CompositeLayout::single(StripingConfig::mib(4, 1)));
    }

    #[test]
    fn netflow_six_pattern() {
        use DirectoryType::*;
        let l = CompositeLayout::build(&[Watermark(10 * GIB), Watermark(20 * GIB)], &[A.config(), B.config(), C.config()])
            .unwrap();
        let labels: Vec<_> = l.segments().iter().map(|s| s.dir_label.as_str()).collect();
        assert_eq!(labels, ["4ost-1mb", "8ost-1mb", "16ost-1mb"]);
        assert_eq!(l.watermarks(), [Watermark(10 * GIB), Watermark(20 * GIB)]);
    }

    #[test]
    fn build_rejects_bad_input() {
        let c = StripingConfig::mib(4, 1);
        assert_eq!(
            CompositeLayout::build(&[Watermark(10), Watermark(5)], &[c, c, c]),
            Err(Error::WatermarksNotAscending)
        );
        assert_eq!(CompositeLayout::build(&[Watermark(0)], &[c, c]), Err(Error::WatermarksNotAscending));
        assert_eq!(
            CompositeLayout::build(&[Watermark(10)], &[c]),
            Err(Error::ConfigCountMismatch { watermarks: 1, configs: 1 })
        );
        assert!(CompositeLayout::build(&[], &[]).is_err());
    }

    #[test]
    fn from_segments_checks_contiguity() {
        let c = StripingConfig::mib(4, 1);
        let seg = |start, end| SegmentSpec { start, end, config: c, dir_label: c.dir_label() };
        assert!(CompositeLayout::from_segments(vec![seg(0, Some(10)), seg(10, None)]).is_ok());
        assert!(CompositeLayout::from_segments(vec![seg(0, Some(10)), seg(11, None)]).is_err());
        assert!(CompositeLayout::from_segments(vec![seg(1, None)]).is_err());
        assert!(CompositeLayout::from_segments(vec![seg(0, Some(10))]).is_err());
        assert!(CompositeLayout::from_segments(vec![seg(0, None), seg(0, None)]).is_err());
    }

    #[test]
    fn resolve_boundaries() {
        let l = three_tier();
        assert_eq!(l.resolve(0), (0, 0));
        assert_eq!(l.resolve(GIB - 1), (0, GIB - 1));
        assert_eq!(l.resolve(GIB), (1, 0));
        assert_eq!(l.resolve(10 * GIB), (2, 0));
        assert_eq!(l.resolve(u64::MAX / 2), (2, u64::MAX / 2 - 10 * GIB));
    }

    #[test]
    fn split_fourteen_gib() {
        let lens: Vec<_> = three_tier().split_range(0, 14 * GIB).iter().map(|s| s.length).collect();
        assert_eq!(lens, [GIB, 9 * GIB, 4 * GIB]);
    }

    #[test]
    fn split_inside_one_segment() {
        let l = three_tier();
        assert_eq!(l.split_range(2 * GIB, 77), [SubRange { segment: 1, offset_within: GIB, length: 77 }]);
        assert!(l.split_range(5, 0).is_empty());
    }

    #[test]
    fn split_across_watermark_matches_per_byte_resolve() {
        let l = three_tier();
        let (start, len) = (GIB - 512, 1024);
        let got = l.split_range(start, len);
        assert_eq!(
            got,
            [SubRange { segment: 0, offset_within: GIB - 512, length: 512 }, SubRange {
                segment: 1,
                offset_within: 0,
                length: 512
            }]
        );
        // Every byte's resolve agrees with the sub-range it was assigned to.
        let mut o = start;
        for sub in &got {
            for k in 0..sub.length {
                assert_eq!(l.resolve(o), (sub.segment, sub.offset_within + k));
                o += 1;
            }
        }
    }

    #[test]
    fn full_decompose_single_segment_equals_decompose_extent() {
        let cfg = StripingConfig::mib(8, 2);
        let l = CompositeLayout::single(cfg);
        let a: Vec<_> = l.full_decompose(3 * MIB + 5, 40 * MIB).iter().map(|f| (f.logical_offset, f.chunk)).collect();
        let b: Vec<_> = cfg.decompose_extent(3 * MIB + 5, 40 * MIB).iter().map(|f| (f.logical_offset, f.chunk)).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn full_decompose_across_first_watermark() {
        let l = three_tier();
        let frags = l.full_decompose(GIB - MIB, 2 * MIB);
        // Segment 0 (4 x 1 MiB): last MiB of the first GiB is stripe unit 1023 -> ordinal 3, row 255.
        // Segment 1 (8 x 2 MiB): its first MiB is half of unit 0 -> ordinal 0, object offset 0.
        assert_eq!(
            frags,
            [
                SegmentFragment {
                    segment: 0,
                    logical_offset: GIB - MIB,
                    chunk: ChunkAddress { ost_ordinal: 3, object_offset: 255 * MIB, length: MIB },
                },
                SegmentFragment {
                    segment: 1,
                    logical_offset: GIB,
                    chunk: ChunkAddress { ost_ordinal: 0, object_offset: 0, length: MIB },
                },
            ]
        );
    }

    #[test]
    fn segment_ost_placement_rotates() {
        use DirectoryType::*;
        let pool = OstPool::sequential(64).unwrap();
        let l = CompositeLayout::build(&[Watermark(10), Watermark(20)], &[A.config(), B.config(), C.config()]).unwrap();
        assert_eq!(l.ost_id(&pool, 0, 0), 0);
        assert_eq!(l.ost_id(&pool, 1, 0), 4);
        assert_eq!(l.ost_id(&pool, 2, 15), 27);
        let wrap = CompositeLayout::build(&[Watermark(10)], &[D.config(), A.config()]).unwrap();
        assert_eq!(wrap.ost_id(&pool, 1, 0), 0);
    }

    #[test]
    fn directory_types_match_table() {
        let expect = [(4, 1), (8, 1), (16, 1), (64, 1), (4, 2), (16, 2), (64, 2), (4, 4), (16, 4), (64, 4)];
        for (d, (count, width)) in DirectoryType::ALL.iter().zip(expect) {
            assert_eq!(d.config(), StripingConfig::mib(count, width));
            assert_eq!(DirectoryType::from_letter(d.letter()), Some(*d));
        }
        assert_eq!("ABCDEFGHIJ", DirectoryType::ALL.iter().map(|d| d.letter()).collect::<String>());
        assert_eq!(DirectoryType::from_letter('k'), None);
        assert_eq!(DirectoryType::from_letter('a'), Some(DirectoryType::A));
    }
}
