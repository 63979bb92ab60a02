//! Netflow data files and their record index files.
//!
//! A data file is a plain concatenation of encoded records. An index file is
//! the 8-byte magic `DSNFIDX1`, a big-endian `u64` entry count, then one
//! 16-byte entry per record: `u64` offset, `u32` length, `u32` flow key, all
//! big-endian.

use std::io::{self, BufRead, Read, Write};

use dynstripe_core::workloads::netflow::{NetflowSynth, HEADER_LEN};
use dynstripe_core::workloads::{IndexEntry, NetflowRecord, NetflowSpec};

pub const INDEX_MAGIC: &[u8; 8] = b"DSNFIDX1";

#[derive(Debug, thiserror::Error)]
pub enum NetflowIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("record at offset {offset}: {source}")]
    Record { offset: u64, source: dynstripe_core::Error },
    #[error("not a netflow index file")]
    BadMagic,
    #[error(transparent)]
    Spec(#[from] dynstripe_core::Error),
}

/// Streams the synthetic data file for `spec` into `sink` and returns its
/// index.
pub fn write_data<W: Write>(spec: &NetflowSpec, mut sink: W) -> Result<Vec<IndexEntry>, NetflowIoError> {
    let mut index = Vec::new();
    let mut buf = Vec::with_capacity(64 * 1024);
    let mut offset = 0u64;
    for rec in NetflowSynth::new(spec)? {
        let start = buf.len();
        rec.encode(&mut buf)?;
        let length = (buf.len() - start) as u32;
        index.push(IndexEntry { offset, length, key: rec.flow_key() });
        offset += u64::from(length);
        if buf.len() >= 60 * 1024 {
            sink.write_all(&buf)?;
            buf.clear();
        }
    }
    sink.write_all(&buf)?;
    sink.flush()?;
    Ok(index)
}

/// Rebuilds the index by parsing every record of a data stream.
pub fn scan_data<R: Read>(reader: R) -> Result<Vec<IndexEntry>, NetflowIoError> {
    let mut reader = io::BufReader::with_capacity(256 * 1024, reader);
    let mut index = Vec::new();
    let mut offset = 0u64;
    let mut rec = Vec::with_capacity(HEADER_LEN);
    loop {
        if reader.fill_buf()?.is_empty() {
            return Ok(index);
        }
        let mut len_field = [0u8; 2];
        reader.read_exact(&mut len_field)?;
        let len = NetflowRecord::peek_length(&len_field).unwrap_or(0);
        rec.clear();
        rec.extend_from_slice(&len_field);
        rec.resize(len.max(2), 0);
        reader.read_exact(&mut rec[2..])?;
        let (parsed, n) = NetflowRecord::decode(&rec).map_err(|source| NetflowIoError::Record { offset, source })?;
        index.push(IndexEntry { offset, length: n as u32, key: parsed.flow_key() });
        offset += n as u64;
    }
}

pub fn write_index<W: Write>(index: &[IndexEntry], mut sink: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(&mut sink);
    out.write_all(INDEX_MAGIC)?;
    out.write_all(&(index.len() as u64).to_be_bytes())?;
    for e in index {
        out.write_all(&e.offset.to_be_bytes())?;
        out.write_all(&e.length.to_be_bytes())?;
        out.write_all(&e.key.to_be_bytes())?;
    }
    out.flush()
}

pub fn read_index<R: Read>(reader: R) -> Result<Vec<IndexEntry>, NetflowIoError> {
    let mut r = io::BufReader::new(reader);
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[..8] != INDEX_MAGIC {
        return Err(NetflowIoError::BadMagic);
    }
    let n = u64::from_be_bytes(head[8..].try_into().unwrap());
    let mut out = Vec::with_capacity(n.min(1 << 24) as usize);
    let mut e = [0u8; 16];
    for _ in 0..n {
        r.read_exact(&mut e)?;
        out.push(IndexEntry {
            offset: u64::from_be_bytes(e[..8].try_into().unwrap()),
            length: u32::from_be_bytes(e[8..12].try_into().unwrap()),
            key: u32::from_be_bytes(e[12..].try_into().unwrap()),
        });
    }
    Ok(out)
}
