use crate::model::{CsiSequence, Matrix, Sample};

use super::{PreprocessError, SegmentationConfig};

/// What happened to a window during segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentAction {
    Discarded,
    Interpolated,
    Resampled,
    PassedThrough,
}

impl SegmentAction {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentAction::Discarded => "discarded",
            SegmentAction::Interpolated => "interpolated",
            SegmentAction::Resampled => "resampled",
            SegmentAction::PassedThrough => "passthrough",
        }
    }
}

/// Cuts `seq` into consecutive fixed-length windows anchored at the first
/// frame and brings each surviving window to exactly `n_norm` rows.
///
/// Every returned sample carries `window_index`, `window_start_us`, `frames`
/// (raw count), `action` and `device` metadata.
pub fn segment(seq: &CsiSequence, cfg: &SegmentationConfig) -> Result<Vec<Sample>, PreprocessError> {
    cfg.validate()?;
    let frames = seq.frames();
    let first = frames.first().ok_or(PreprocessError::EmptySequence)?;
    let t0 = first.timestamp_us;
    let window_us = ((cfg.window_seconds * 1e6).round() as i64).max(1);
    let min_rows = cfg.discard_threshold_fraction * cfg.n_norm as f64;

    let mut out = Vec::new();
    let mut start = 0;
    while start < frames.len() {
        let index = (frames[start].timestamp_us - t0) / window_us;
        let end = start + frames[start..].iter().take_while(|f| (f.timestamp_us - t0) / window_us == index).count();
        let window = &frames[start..end];
        start = end;

        let n = window.len();
        let action = if (n as f64) < min_rows || n < 2 {
            SegmentAction::Discarded
        } else if n < cfg.n_norm {
            SegmentAction::Interpolated
        } else if n > cfg.n_norm {
            SegmentAction::Resampled
        } else {
            SegmentAction::PassedThrough
        };
        let raw = Matrix::from_rows(&window.iter().map(|f| f.amplitudes.clone()).collect::<Vec<_>>());
        let values = match action {
            SegmentAction::Discarded => continue,
            SegmentAction::PassedThrough => raw,
            SegmentAction::Interpolated => interpolate_rows(&raw, cfg.n_norm)?,
            SegmentAction::Resampled => resample_rows(&raw, &strictly_increasing_times(window.iter().map(|f| f.timestamp_us)), cfg.n_norm)?,
        };
        out.push(
            Sample::new(values, None)
                .with_meta("window_index", index)
                .with_meta("window_start_us", t0 + index * window_us)
                .with_meta("frames", n)
                .with_meta("action", action.as_str())
                .with_meta("device", &window[0].source_id),
        );
    }
    Ok(out)
}

/// Frames may share a timestamp; nudge repeats forward by a nanosecond so the
/// resampling grid stays well defined.
fn strictly_increasing_times(ts: impl Iterator<Item = i64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for t in ts {
        let t = t as f64;
        let v = match out.last() {
            Some(&p) if t <= p => p + 1e-3,
            _ => t,
        };
        out.push(v);
    }
    out
}

/// Linear interpolation of every column onto `target` evenly spaced row
/// positions over `[0, N-1]`. First and last rows are preserved exactly.
pub fn interpolate_rows(m: &Matrix, target: usize) -> Result<Matrix, PreprocessError> {
    let n = m.rows();
    if n < 2 {
        return Err(PreprocessError::TooFewRows(n));
    }
    if target < n {
        return Err(PreprocessError::InvalidTarget { rows: n, target });
    }
    let mut out = Matrix::zeros(target, m.cols());
    for k in 0..target {
        let pos = (k * (n - 1)) as f64 / (target - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        let row = out.row_mut(k);
        if lo >= n - 1 {
            row.copy_from_slice(m.row(n - 1));
        } else if frac == 0.0 {
            row.copy_from_slice(m.row(lo));
        } else {
            for ((o, a), b) in row.iter_mut().zip(m.row(lo)).zip(m.row(lo + 1)) {
                *o = a + (b - a) * frac;
            }
        }
    }
    Ok(out)
}

/// Evaluates the piecewise-linear interpolant through `(timestamps[i], row i)`
/// at `target` evenly spaced times spanning `[t_first, t_last]`.
pub fn resample_rows(m: &Matrix, timestamps: &[f64], target: usize) -> Result<Matrix, PreprocessError> {
    let n = m.rows();
    if timestamps.len() != n {
        return Err(PreprocessError::InvalidConfig(format!("{} timestamps for {n} rows", timestamps.len())));
    }
    if n < 2 {
        return Err(PreprocessError::TooFewRows(n));
    }
    if target < 2 {
        return Err(PreprocessError::InvalidTarget { rows: n, target });
    }
    if timestamps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(PreprocessError::NonIncreasingTimestamps);
    }
    let (t_first, t_last) = (timestamps[0], timestamps[n - 1]);
    let step = (t_last - t_first) / (target - 1) as f64;
    let mut out = Matrix::zeros(target, m.cols());
    let mut seg = 0;
    for k in 0..target {
        let row = out.row_mut(k);
        if k == target - 1 {
            row.copy_from_slice(m.row(n - 1));
            continue;
        }
        let t = t_first + step * k as f64;
        while seg + 1 < n - 1 && timestamps[seg + 1] <= t {
            seg += 1;
        }
        let (ta, tb) = (timestamps[seg], timestamps[seg + 1]);
        if t == ta {
            row.copy_from_slice(m.row(seg));
            continue;
        }
        let frac = (t - ta) / (tb - ta);
        for ((o, a), b) in row.iter_mut().zip(m.row(seg)).zip(m.row(seg + 1)) {
            *o = a + (b - a) * frac;
        }
    }
    Ok(out)
}
