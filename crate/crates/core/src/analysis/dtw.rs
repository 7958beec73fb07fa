use crate::model::Matrix;

use super::AnalysisError;

/// Classic DTW between two 1-D series: absolute-difference local cost,
/// symmetric (1,0)/(0,1)/(1,1) steps, no warping band.
pub fn dtw_columns(a: &[f64], b: &[f64]) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &x in a {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// Per-subcarrier DTW averaged over subcarriers. Inputs are expected to be
/// column-normalized already; row counts may differ.
pub fn dtw_distance(a: &Matrix, b: &Matrix) -> Result<f64, AnalysisError> {
    if a.cols() != b.cols() {
        return Err(AnalysisError::WidthMismatch(a.cols(), b.cols()));
    }
    if a.rows() == 0 || b.rows() == 0 || a.cols() == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let mut total = 0.0;
    for c in 0..a.cols() {
        total += dtw_columns(&a.column(c), &b.column(c))?;
    }
    Ok(total / a.cols() as f64)
}
