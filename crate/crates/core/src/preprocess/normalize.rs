use crate::model::Sample;

/// Z-scores every column (population standard deviation). Constant columns
/// map to all zeros.
pub fn normalize_sample(s: &Sample) -> Sample {
    let mut out = s.clone();
    let rows = s.values.rows();
    if rows == 0 {
        return out;
    }
    for c in 0..s.values.cols() {
        let col = s.values.column(c);
        let mean = col.iter().sum::<f64>() / rows as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / rows as f64;
        let sd = var.sqrt();
        let z: Vec<f64> = if sd == 0.0 || sd <= 1e-12 * mean.abs() {
            vec![0.0; rows]
        } else {
            col.iter().map(|x| (x - mean) / sd).collect()
        };
        out.values.set_column(c, &z);
    }
    out
}
