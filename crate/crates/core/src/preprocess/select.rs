use crate::model::{CsiFrame, CsiSequence, SubcarrierLayout};

use super::PreprocessError;

/// Keeps the non-excluded subcarriers of every frame, order preserved.
/// `seq` must be unselected (width equal to `layout.total_subcarriers()`).
pub fn select_subcarriers(seq: &CsiSequence, layout: &SubcarrierLayout) -> Result<CsiSequence, PreprocessError> {
    if seq.width() != layout.total_subcarriers() {
        return Err(PreprocessError::LayoutMismatch { expected: layout.total_subcarriers(), found: seq.width() });
    }
    let keep = layout.retained_columns();
    let frames = seq
        .frames()
        .iter()
        .map(|f| CsiFrame {
            timestamp_us: f.timestamp_us,
            source_id: f.source_id.clone(),
            amplitudes: keep.iter().map(|&c| f.amplitudes[c]).collect(),
        })
        .collect();
    Ok(CsiSequence::new(layout.clone(), frames)?)
}

/// Sum of squared first differences over total variation about the mean.
/// Zero for constant or single-sample columns.
pub fn high_frequency_fraction(column: &[f64]) -> f64 {
    if column.len() < 2 {
        return 0.0;
    }
    let mean = column.iter().sum::<f64>() / column.len() as f64;
    let total: f64 = column.iter().map(|x| (x - mean).powi(2)).sum();
    if total == 0.0 {
        return 0.0;
    }
    column.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / total
}

/// Linear-interpolated percentile (`p` in [0, 100]) of unsorted values.
fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Extends `layout` with the retained subcarriers whose high-frequency energy
/// fraction over a silence calibration capture exceeds the `percentile`-th
/// percentile of all retained columns. `calibration` must be unselected.
pub fn burr_noise_exclusions(calibration: &CsiSequence, layout: &SubcarrierLayout, percentile_rank: f64) -> Result<SubcarrierLayout, PreprocessError> {
    if calibration.width() != layout.total_subcarriers() {
        return Err(PreprocessError::LayoutMismatch { expected: layout.total_subcarriers(), found: calibration.width() });
    }
    if !(0.0..=100.0).contains(&percentile_rank) {
        return Err(PreprocessError::InvalidConfig(format!("percentile {percentile_rank} outside [0, 100]")));
    }
    let columns = layout.retained_columns();
    if calibration.is_empty() {
        return Ok(layout.clone());
    }
    let fractions: Vec<f64> = columns
        .iter()
        .map(|&c| high_frequency_fraction(&calibration.frames().iter().map(|f| f.amplitudes[c]).collect::<Vec<_>>()))
        .collect();
    let cut = percentile(&fractions, percentile_rank);
    let noisy = columns.iter().zip(&fractions).filter(|(_, &h)| h > cut).map(|(&c, _)| layout.index_of_column(c));
    Ok(layout.with_excluded(noisy)?)
}
