//! A logical file stored as one real file per layout segment.
//!
//! Segment `i` lives at `<root>/<dir_label>/<name>.part-NN`, where the
//! directory label names the striping configuration (`4ost-1mb`). On a Lustre
//! mount the directories can be given real striping through a hook command;
//! elsewhere the striping is only recorded in the manifest.
//!
//! Segment files are created on first write. Regions below the logical size
//! that were never written read back as zeros.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use dynstripe_core::CompositeLayout;

use crate::manifest::{segment_rel_path, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("refusing to overwrite existing manifest {}", .0.display())]
    AlreadyExists(PathBuf),
    #[error("corrupt logical file: segment {} is missing", .0.display())]
    MissingSegment(PathBuf),
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("invalid logical file name `{0}`")]
    InvalidName(String),
    #[error("striping hook `{command}` failed: {status}")]
    Hook { command: String, status: String },
    #[error(transparent)]
    Layout(#[from] dynstripe_core::Error),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        StoreError::Io { path: path.to_path_buf(), source }
    }
}

/// Shell command run once per newly created segment directory. `{dir}`,
/// `{count}` and `{width}` are replaced by the directory path, stripe count
/// and stripe width in bytes, e.g. `lfs setstripe -c {count} -S {width} {dir}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeHook(pub String);

impl StripeHook {
    pub fn command_for(&self, dir: &Path, count: u32, width: u64) -> String {
        self.0
            .replace("{dir}", &dir.display().to_string())
            .replace("{count}", &count.to_string())
            .replace("{width}", &width.to_string())
    }

    fn run(&self, dir: &Path, count: u32, width: u64) -> Result<(), StoreError> {
        let command = self.command_for(dir, count, width);
        let status = Command::new("sh").arg("-c").arg(&command).status().map_err(|e| StoreError::io(dir, e))?;
        if !status.success() {
            return Err(StoreError::Hook { command, status: status.to_string() });
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct LogicalFile {
    root: PathBuf,
    name: String,
    layout: CompositeLayout,
    segment_paths: Vec<PathBuf>,
    handles: Vec<OnceLock<File>>,
    logical_size: AtomicU64,
}

pub fn manifest_path(root: &Path, name: &str) -> PathBuf {
    root.join(format!("{name}.manifest"))
}

fn check_name(name: &str) -> Result<(), StoreError> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && !name.contains(|c: char| c == '/' || c == '\\' || c.is_whitespace() || c.is_control());
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidName(name.to_string()))
    }
}

impl LogicalFile {
    pub fn create(root: &Path, name: &str, layout: &CompositeLayout) -> Result<LogicalFile, StoreError> {
        Self::create_with_hook(root, name, layout, None)
    }

    /// Creates the segment directories and writes an empty-file manifest.
    /// Fails if a manifest with this name already exists under `root`.
    pub fn create_with_hook(
        root: &Path,
        name: &str,
        layout: &CompositeLayout,
        hook: Option<&StripeHook>,
    ) -> Result<LogicalFile, StoreError> {
        check_name(name)?;
        let mpath = manifest_path(root, name);
        if mpath.exists() {
            return Err(StoreError::AlreadyExists(mpath));
        }
        for seg in layout.segments() {
            let dir = root.join(&seg.dir_label);
            let fresh = !dir.exists();
            fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
            if let (true, Some(hook)) = (fresh, hook) {
                hook.run(&dir, seg.config.stripe_count(), seg.config.stripe_width())?;
            }
        }
        Manifest::from_layout(name, layout, 0).store_atomic(&mpath)?;
        Ok(Self::assemble(root, name, layout.clone(), 0))
    }

    /// Opens an existing logical file. The size is the larger of the
    /// manifest's value and the extent implied by the segment files on disk,
    /// so writes made since the last [`sync`](Self::sync) are not lost.
    pub fn open(root: &Path, name: &str) -> Result<LogicalFile, StoreError> {
        check_name(name)?;
        let manifest = Manifest::load(&manifest_path(root, name))?;
        let layout = manifest.layout()?;
        let mut size = manifest.logical_size;
        for (seg, entry) in layout.segments().iter().zip(&manifest.entries) {
            let path = root.join(&entry.path);
            match fs::metadata(&path) {
                Ok(m) => size = size.max(seg.start + m.len()),
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(StoreError::io(&path, e)),
            }
        }
        Ok(Self::assemble(root, name, layout, size))
    }

    fn assemble(root: &Path, name: &str, layout: CompositeLayout, size: u64) -> LogicalFile {
        let segment_paths: Vec<PathBuf> = layout
            .segments()
            .iter()
            .enumerate()
            .map(|(i, s)| root.join(segment_rel_path(&s.dir_label, name, i)))
            .collect();
        LogicalFile {
            root: root.to_path_buf(),
            name: name.to_string(),
            handles: segment_paths.iter().map(|_| OnceLock::new()).collect(),
            segment_paths,
            layout,
            logical_size: AtomicU64::new(size),
        }
    }

    /// Deletes the manifest and every segment file of `name`. Missing files
    /// are ignored; directories are left in place.
    pub fn remove(root: &Path, name: &str) -> Result<(), StoreError> {
        let file = Self::open(root, name)?;
        for path in file.segment_paths.iter().chain([&manifest_path(root, name)]) {
            match fs::remove_file(path) {
                Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(StoreError::io(path, e)),
                _ => {}
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &CompositeLayout {
        &self.layout
    }

    pub fn segment_paths(&self) -> &[PathBuf] {
        &self.segment_paths
    }

    pub fn logical_size(&self) -> u64 {
        self.logical_size.load(Ordering::Acquire)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest::from_layout(&self.name, &self.layout, self.logical_size())
    }

    /// Records the current logical size in the manifest.
    pub fn sync(&self) -> Result<(), StoreError> {
        self.manifest().store_atomic(&manifest_path(&self.root, &self.name))
    }

    fn handle(&self, segment: usize, create: bool) -> Result<Option<&File>, StoreError> {
        if let Some(f) = self.handles[segment].get() {
            return Ok(Some(f));
        }
        let path = &self.segment_paths[segment];
        match OpenOptions::new().read(true).write(true).create(create).truncate(false).open(path) {
            Ok(f) => {
                // Another thread may have won the race; either handle works.
                let _ = self.handles[segment].set(f);
                Ok(self.handles[segment].get())
            }
            Err(e) if !create && e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(StoreError::io(path, e)),
        }
    }

    /// Writes `buf` at logical `offset`, splitting it across segment files.
    /// Safe to call from several threads at once.
    pub fn write_at(&self, offset: u64, buf: &[u8]) -> Result<usize, StoreError> {
        if buf.is_empty() {
            return Ok(0);
        }
        let mut done = 0usize;
        for sub in self.layout.split_range(offset, buf.len() as u64) {
            let file = self.handle(sub.segment, true)?.expect("created on demand");
            let part = &buf[done..done + sub.length as usize];
            file.write_all_at(part, sub.offset_within).map_err(|e| StoreError::io(&self.segment_paths[sub.segment], e))?;
            done += part.len();
        }
        self.logical_size.fetch_max(offset + buf.len() as u64, Ordering::AcqRel);
        Ok(done)
    }

    /// Reads up to `len` bytes at `offset`. Returns `None` when `offset` is
    /// at or past the logical size.
    pub fn read_at(&self, offset: u64, len: u64) -> Result<Option<Vec<u8>>, StoreError> {
        let size = self.logical_size();
        if offset >= size {
            return Ok(None);
        }
        let n = len.min(size - offset);
        let mut out = vec![0u8; n as usize];
        let mut done = 0usize;
        for sub in self.layout.split_range(offset, n) {
            let dst = &mut out[done..done + sub.length as usize];
            if let Some(file) = self.handle(sub.segment, false)? {
                read_full_at(file, dst, sub.offset_within).map_err(|e| StoreError::io(&self.segment_paths[sub.segment], e))?;
            }
            done += dst.len();
        }
        Ok(Some(out))
    }

    /// Splits `source` into segment files of a new logical file. A source
    /// shorter than the first watermark produces only `part-00`.
    pub fn import_split(source: &Path, root: &Path, name: &str, layout: &CompositeLayout) -> Result<LogicalFile, StoreError> {
        Self::import_split_with_hook(source, root, name, layout, None)
    }

    pub fn import_split_with_hook(
        source: &Path,
        root: &Path,
        name: &str,
        layout: &CompositeLayout,
        hook: Option<&StripeHook>,
    ) -> Result<LogicalFile, StoreError> {
        let mut src = File::open(source).map_err(|e| StoreError::io(source, e))?;
        let total = src.metadata().map_err(|e| StoreError::io(source, e))?.len();
        let file = Self::create_with_hook(root, name, layout, hook)?;
        for (seg, path) in layout.segments().iter().zip(&file.segment_paths) {
            if seg.start >= total && seg.start > 0 {
                break;
            }
            let want = seg.end.unwrap_or(u64::MAX).min(total) - seg.start;
            let mut dst = File::create(path).map_err(|e| StoreError::io(path, e))?;
            let copied = io::copy(&mut (&mut src).take(want), &mut dst).map_err(|e| StoreError::io(path, e))?;
            if copied != want {
                let e = io::Error::new(io::ErrorKind::UnexpectedEof, "source shrank during import");
                return Err(StoreError::io(source, e));
            }
        }
        file.logical_size.store(total, Ordering::Release);
        file.sync()?;
        Ok(file)
    }

    /// Concatenates the segment files into `dest`. Every segment that holds
    /// bytes below the logical size must exist.
    pub fn export_merge(&self, dest: &Path) -> Result<(), StoreError> {
        let size = self.logical_size();
        let mut out = File::create(dest).map_err(|e| StoreError::io(dest, e))?;
        for (seg, path) in self.layout.segments().iter().zip(&self.segment_paths) {
            if seg.start >= size {
                break;
            }
            let want = seg.end.unwrap_or(u64::MAX).min(size) - seg.start;
            let src = match File::open(path) {
                Ok(f) => f,
                Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::MissingSegment(path.clone())),
                Err(e) => return Err(StoreError::io(path, e)),
            };
            let copied = io::copy(&mut src.take(want), &mut out).map_err(|e| StoreError::io(dest, e))?;
            // A segment shorter than its share ends in a hole.
            io::copy(&mut io::repeat(0).take(want - copied), &mut out).map_err(|e| StoreError::io(dest, e))?;
        }
        out.sync_all().map_err(|e| StoreError::io(dest, e))
    }
}

/// Fills `buf` from `offset`, stopping early at end of file. The unread tail
/// is left untouched.
fn read_full_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> io::Result<usize> {
    let mut total = 0;
    while !buf.is_empty() {
        match file.read_at(buf, offset) {
            Ok(0) => break,
            Ok(n) => {
                total += n;
                offset += n as u64;
                buf = &mut buf[n..];
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(total)
}
