//! Binary byte units.
//!
//! All "MB"/"GB"/"TB" quantities are binary (MiB/GiB/TiB), the usual storage
//! convention.

use alloc::string::ToString;

use crate::{Error, Result};

pub const KIB: u64 = 1 << 10;
pub const MIB: u64 = 1 << 20;
pub const GIB: u64 = 1 << 30;
pub const TIB: u64 = 1 << 40;

/// Parses `"4096"`, `"64KiB"`, `"1MB"`, `"10 GiB"`, `"1t"`. Suffixes are
/// case-insensitive and always binary.
pub fn parse_size(text: &str) -> Result<u64> {
    let s = text.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (digits, suffix) = s.split_at(split);
    if digits.is_empty() {
        return Err(Error::InvalidSize(text.to_string()));
    }
    let value: u64 = digits.parse().map_err(|_| Error::InvalidSize(text.to_string()))?;
    let unit = match suffix.trim().to_ascii_lowercase().as_str() {
        "" | "b" => 1,
        "k" | "kb" | "kib" => KIB,
        "m" | "mb" | "mib" => MIB,
        "g" | "gb" | "gib" => GIB,
        "t" | "tb" | "tib" => TIB,
        _ => return Err(Error::InvalidSize(text.to_string())),
    };
    value.checked_mul(unit).ok_or_else(|| Error::InvalidSize(text.to_string()))
}
