//! CSI interchange CSV: header `timestamp_us,source_id,a0,...,a{N-1}`, one
//! frame per `\n`-terminated row.

use super::{CsiError, CsiFrame, CsiSequence, SubcarrierLayout};

pub fn parse_csi_file(bytes: &[u8]) -> Result<CsiSequence, CsiError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CsiError::MalformedRow { line: 1, reason: format!("invalid UTF-8: {e}") })?;
    let mut lines = text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l));
    let header = match lines.next() {
        Some(h) if !h.trim().is_empty() => h,
        _ => return Err(CsiError::EmptyFile),
    };
    let width = parse_header(header)?;

    let mut frames = Vec::new();
    let mut prev: Option<i64> = None;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let frame = parse_row(line, width, line_no)?;
        if prev.is_some_and(|p| frame.timestamp_us < p) {
            return Err(CsiError::NonMonotonicTimestamp { line: line_no, timestamp_us: frame.timestamp_us });
        }
        prev = Some(frame.timestamp_us);
        frames.push(frame);
    }
    CsiSequence::new(SubcarrierLayout::unselected(width), frames)
}

fn parse_header(header: &str) -> Result<usize, CsiError> {
    let bad = |reason: String| CsiError::MalformedRow { line: 1, reason };
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 3 || fields[0] != "timestamp_us" || fields[1] != "source_id" {
        return Err(bad("header must start with timestamp_us,source_id and name at least one amplitude".into()));
    }
    for (k, name) in fields[2..].iter().enumerate() {
        if *name != format!("a{k}") {
            return Err(bad(format!("expected column a{k}, found {name:?}")));
        }
    }
    Ok(fields.len() - 2)
}

fn parse_row(line: &str, width: usize, line_no: usize) -> Result<CsiFrame, CsiError> {
    let bad = |reason: String| CsiError::MalformedRow { line: line_no, reason };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != width + 2 {
        return Err(bad(format!("expected {} fields, found {}", width + 2, fields.len())));
    }
    let timestamp_us = fields[0].parse::<i64>().map_err(|e| bad(format!("timestamp {:?}: {e}", fields[0])))?;
    let amplitudes = fields[2..]
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
            Ok(v) => Err(bad(format!("amplitude {v} must be finite and non-negative"))),
            Err(e) => Err(bad(format!("amplitude {f:?}: {e}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CsiFrame { timestamp_us, source_id: fields[1].to_string(), amplitudes })
}

/// Inverse of [`parse_csi_file`]; `Display` for `f64` prints the shortest
/// representation that parses back to the same bits.
pub fn write_csi_file(seq: &CsiSequence) -> Vec<u8> {
    use std::fmt::Write;
    let width = seq.width();
    let mut out = String::with_capacity(32 + seq.len() * (width * 8 + 24));
    out.push_str("timestamp_us,source_id");
    for k in 0..width {
        let _ = write!(out, ",a{k}");
    }
    out.push('\n');
    for f in seq.frames() {
        let _ = write!(out, "{},{}", f.timestamp_us, f.source_id);
        for a in &f.amplitudes {
            let _ = write!(out, ",{a}");
        }
        out.push('\n');
    }
    out.into_bytes()
}
