//! On-disk description of a segmented logical file.
//!
//! The manifest is plain text, one record per line:
//!
//! ```text
//! dynstripe-manifest v1
//! name=<name>
//! logical_size=<bytes>
//! segment path=<relative path> start=<bytes> end=<bytes or -> stripe_count=<n> stripe_width=<bytes>
//! ...
//! ```
//!
//! Segment lines appear in layout order. `end=-` marks the unbounded last
//! segment. Paths are relative to the store root and never contain spaces.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use dynstripe_core::{CompositeLayout, SegmentSpec, StripingConfig};

use crate::store::StoreError;

pub const MANIFEST_HEADER: &str = "dynstripe-manifest v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub start: u64,
    pub end: Option<u64>,
    pub stripe_count: u32,
    pub stripe_width: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub name: String,
    pub logical_size: u64,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn from_layout(name: &str, layout: &CompositeLayout, logical_size: u64) -> Manifest {
        let entries = layout
            .segments()
            .iter()
            .enumerate()
            .map(|(i, s)| ManifestEntry {
                path: segment_rel_path(&s.dir_label, name, i),
                start: s.start,
                end: s.end,
                stripe_count: s.config.stripe_count(),
                stripe_width: s.config.stripe_width(),
            })
            .collect();
        Manifest { name: name.to_string(), logical_size, entries }
    }

    /// Rebuilds the layout. Directory labels come from the entry paths.
    pub fn layout(&self) -> Result<CompositeLayout, StoreError> {
        let segments = self
            .entries
            .iter()
            .map(|e| {
                let config = StripingConfig::new(e.stripe_count, e.stripe_width)?;
                let dir_label = e.path.split_once('/').map_or(e.path.as_str(), |(d, _)| d).to_string();
                Ok(SegmentSpec { start: e.start, end: e.end, config, dir_label })
            })
            .collect::<Result<Vec<_>, StoreError>>()?;
        Ok(CompositeLayout::from_segments(segments)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MANIFEST_HEADER}").unwrap();
        writeln!(out, "name={}", self.name).unwrap();
        writeln!(out, "logical_size={}", self.logical_size).unwrap();
        for e in &self.entries {
            let end = e.end.map_or_else(|| "-".to_string(), |v| v.to_string());
            writeln!(
                out,
                "segment path={} start={} end={} stripe_count={} stripe_width={}",
                e.path, e.start, end, e.stripe_count, e.stripe_width
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Manifest, StoreError> {
        let bad = |line: usize, msg: &str| StoreError::Manifest { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, MANIFEST_HEADER)) => {}
            Some((n, _)) => return Err(bad(n, "unsupported manifest header")),
            None => return Err(bad(1, "empty manifest")),
        }
        let mut name = None;
        let mut logical_size = None;
        let mut entries = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(v) = line.strip_prefix("name=") {
                name = Some(v.to_string());
            } else if let Some(v) = line.strip_prefix("logical_size=") {
                logical_size = Some(v.parse().map_err(|_| bad(n, "bad logical_size"))?);
            } else if let Some(rest) = line.strip_prefix("segment ") {
                entries.push(parse_entry(rest).ok_or_else(|| bad(n, "bad segment record"))?);
            } else {
                return Err(bad(n, "unknown record"));
            }
        }
        Ok(Manifest {
            name: name.ok_or_else(|| bad(0, "missing name"))?,
            logical_size: logical_size.ok_or_else(|| bad(0, "missing logical_size"))?,
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Manifest, StoreError> {
        let text = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
        Manifest::parse(&text)
    }

    /// Writes to a sibling temp file, syncs it, then renames over `path`.
    pub fn store_atomic(&self, path: &Path) -> Result<(), StoreError> {
        let tmp = path.with_extension("manifest.tmp");
        let mut f = fs::File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
        f.write_all(self.to_text().as_bytes()).and_then(|_| f.sync_all()).map_err(|e| StoreError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))
    }
}

fn parse_entry(rest: &str) -> Option<ManifestEntry> {
    let mut fields = rest.split(' ');
    let mut take = |key: &str| fields.next()?.strip_prefix(key)?.strip_prefix('=');
    let path = take("path")?.to_string();
    let start = take("start")?.parse().ok()?;
    let end = match take("end")? {
        "-" => None,
        v => Some(v.parse().ok()?),
    };
    let stripe_count = take("stripe_count")?.parse().ok()?;
    let stripe_width = take("stripe_width")?.parse().ok()?;
    if fields.next().is_some() {
        return None;
    }
    Some(ManifestEntry { path, start, end, stripe_count, stripe_width })
}

/// `<dir_label>/<name>.part-NN`, relative to the store root.
pub fn segment_rel_path(dir_label: &str, name: &str, index: usize) -> String {
    format!("{dir_label}/{name}.part-{index:02}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use dynstripe_core::size::MIB;
    use dynstripe_core::Watermark;

    fn three_tier() -> CompositeLayout {
        CompositeLayout::build(
            &[Watermark(MIB), Watermark(10 * MIB)],
            &[StripingConfig::mib(4, 1), StripingConfig::mib(8, 2), StripingConfig::mib(16, 4)],
        )
        .unwrap()
    }

    #[test]
    fn text_is_stable() {
        let m = Manifest::from_layout("data", &three_tier(), 42);
        assert_eq!(
            m.to_text(),
            "dynstripe-manifest v1\nname=data\nlogical_size=42\n\
             segment path=4ost-1mb/data.part-00 start=0 end=1048576 stripe_count=4 stripe_width=1048576\n\
             segment path=8ost-2mb/data.part-01 start=1048576 end=10485760 stripe_count=8 stripe_width=2097152\n\
             segment path=16ost-4mb/data.part-02 start=10485760 end=- stripe_count=16 stripe_width=4194304\n"
        );
    }

    #[test]
    fn round_trips_with_layout() {
        let m = Manifest::from_layout("data", &three_tier(), 14 * MIB);
        let back = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.layout().unwrap(), three_tier());
    }

    #[test]
    fn rejects_garbage() {
        assert!(Manifest::parse("").is_err());
        assert!(Manifest::parse("dynstripe-manifest v2\n").is_err());
        assert!(Manifest::parse("dynstripe-manifest v1\nname=x\n").is_err());
        let e = Manifest::parse("dynstripe-manifest v1\nname=x\nlogical_size=0\nsegment path=a start=0\n").unwrap_err();
        assert!(matches!(e, StoreError::Manifest { line: 4, .. }), "{e}");
    }
}
