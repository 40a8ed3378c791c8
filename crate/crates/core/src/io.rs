//! On-disk formats: binary and text timetag streams, truth-tag sidecars,
//! and small helpers for atomically written artifacts.
//!
//! # Binary stream format (`FTS1`)
//!
//! Little-endian, in order:
//!
//! | field        | type      | contents                          |
//! |--------------|-----------|-----------------------------------|
//! | magic        | 4 bytes   | `FTS1`                            |
//! | channel      | u16       | 0 = signal, 1 = idler             |
//! | reserved     | u16       | 0                                 |
//! | duration_ps  | u64       | acquisition span                  |
//! | count        | u64       | number of timestamps              |
//! | timestamps   | count*u64 | ascending, ps                     |
//!
//! # Text stream format
//!
//! One decimal timestamp (ps) per line, ascending; blank lines and lines
//! starting with `#` are ignored. [`read_stream`] auto-detects the format
//! from the magic bytes.

use crate::error::{CoreError, Result};
use crate::stream::{Channel, Event, Origin, TimestampStream};
use std::fs;
use std::io::Write as _;
use std::path::Path;

pub const STREAM_MAGIC: [u8; 4] = *b"FTS1";

fn format_err(path: &Path, reason: impl Into<String>) -> CoreError {
    CoreError::StreamFormat { path: path.display().to_string(), reason: reason.into() }
}

/// Write bytes to `path` atomically (write to a sibling temp file, then
/// rename), so readers never observe a partial artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp-partial");
    let attempt = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        fs::rename(&tmp, path)
    };
    attempt().map_err(|e| CoreError::io_at(path, e))
}

fn check_writable(stream: &TimestampStream, path: &Path) -> Result<()> {
    if !stream.is_sorted() {
        return Err(format_err(path, "refusing to write an unsorted stream"));
    }
    if stream.events.first().map_or(false, |e| e.t_ps < 0) {
        return Err(format_err(path, "refusing to write negative timestamps"));
    }
    Ok(())
}

/// Write a stream in the binary `FTS1` format.
pub fn write_stream(path: &Path, stream: &TimestampStream) -> Result<()> {
    check_writable(stream, path)?;
    let mut buf = Vec::with_capacity(24 + 8 * stream.events.len());
    buf.extend_from_slice(&STREAM_MAGIC);
    buf.extend_from_slice(&stream.channel.code().to_le_bytes());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&stream.duration_ps.to_le_bytes());
    buf.extend_from_slice(&(stream.events.len() as u64).to_le_bytes());
    for e in &stream.events {
        buf.extend_from_slice(&(e.t_ps as u64).to_le_bytes());
    }
    atomic_write(path, &buf)
}

/// Write a stream as plain text, one timestamp per line.
pub fn write_stream_text(path: &Path, stream: &TimestampStream) -> Result<()> {
    check_writable(stream, path)?;
    let mut text = String::with_capacity(stream.events.len() * 14 + 64);
    for e in &stream.events {
        text.push_str(&e.t_ps.to_string());
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Write the truth-tag sidecar: one line per event, aligned with the stream
/// (`pair:<id>`, `background`, `dark`, or `unknown`).
pub fn write_origins(path: &Path, stream: &TimestampStream) -> Result<()> {
    let mut text = String::with_capacity(stream.events.len() * 8 + 64);
    for e in &stream.events {
        match e.origin {
            Origin::Pair(id) => {
                text.push_str("pair:");
                text.push_str(&id.to_string());
            }
            Origin::Background => text.push_str("background"),
            Origin::Dark => text.push_str("dark"),
            Origin::Unknown => text.push_str("unknown"),
        }
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}

/// Read a stream file, auto-detecting binary (`FTS1` magic) vs text.
/// Loaded events carry [`Origin::Unknown`].
pub fn read_stream(path: &Path) -> Result<TimestampStream> {
    let bytes = fs::read(path).map_err(|e| CoreError::io_at(path, e))?;
    if bytes.len() >= 4 && bytes[..4] == STREAM_MAGIC {
        read_stream_binary(path, &bytes)
    } else {
        read_stream_text(path, &bytes)
    }
}

fn read_stream_binary(path: &Path, bytes: &[u8]) -> Result<TimestampStream> {
    if bytes.len() < 24 {
        return Err(format_err(path, format!("truncated header: {} bytes", bytes.len())));
    }
    let u16_at = |o: usize| u16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let channel = Channel::from_code(u16_at(4))
        .ok_or_else(|| format_err(path, format!("unknown channel code {}", u16_at(4))))?;
    if u16_at(6) != 0 {
        return Err(format_err(path, "reserved field must be zero"));
    }
    let duration_ps = u64_at(8);
    let count = u64_at(16) as usize;
    let expected = 24 + 8 * count;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes for {count} timestamps, found {}", bytes.len()),
        ));
    }
    let mut events = Vec::with_capacity(count);
    let mut prev: Option<u64> = None;
    for i in 0..count {
        let t = u64_at(24 + 8 * i);
        if prev.map_or(false, |p| t < p) {
            return Err(format_err(path, format!("timestamps not ascending at index {i}")));
        }
        prev = Some(t);
        events.push(Event { t_ps: t as i64, origin: Origin::Unknown });
    }
    Ok(TimestampStream { channel, duration_ps, events })
}

fn read_stream_text(path: &Path, bytes: &[u8]) -> Result<TimestampStream> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| format_err(path, "not valid UTF-8 (nor an FTS1 binary)"))?;
    let mut events = Vec::new();
    let mut prev: Option<i64> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: i64 = line
            .parse()
            .map_err(|_| format_err(path, format!("line {}: not a timestamp", lineno + 1)))?;
        if t < 0 {
            return Err(format_err(path, format!("line {}: negative timestamp", lineno + 1)));
        }
        if prev.map_or(false, |p| t < p) {
            return Err(format_err(path, format!("line {}: timestamps not ascending", lineno + 1)));
        }
        prev = Some(t);
        events.push(Event { t_ps: t, origin: Origin::Unknown });
    }
    let duration_ps = events.last().map_or(0, |e| e.t_ps as u64);
    Ok(TimestampStream { channel: Channel::Signal, duration_ps, events })
}

/// Format a float for CSV output: fixed six decimal places for ordinary
/// magnitudes, falling back to scientific notation where fixed-point would
/// lose the value entirely (very small rates) or bloat the line (very large
/// ones). Equal inputs always yield identical text.
pub fn fmt_f64(x: f64) -> String {
    let mag = x.abs();
    if x == 0.0 || (1e-3..1e9).contains(&mag) {
        format!("{x:.6}")
    } else {
        format!("{x:.6e}")
    }
}

/// Write a CSV file atomically from a header and preformatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    atomic_write(path, text.as_bytes())
}
