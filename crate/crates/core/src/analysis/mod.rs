//! Similarity analytics over amplitude matrices: Pearson correlation,
//! temporal (between subcarriers) and spatial (between measurements)
//! correlation matrices, cross-sequence mean correlation and DTW distance.

mod dtw;

use thiserror::Error;

use crate::model::Matrix;

pub use dtw::{dtw_columns, dtw_distance};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("inputs differ in subcarrier width ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
}

/// Pearson correlation coefficient. Zero when either vector is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(AnalysisError::TooShort(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationAxis {
    /// Between subcarriers (columns), each viewed over time.
    Temporal,
    /// Between CSI measurements (rows), each viewed across subcarriers.
    Spatial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub axis: CorrelationAxis,
    pub values: Matrix,
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.values.rows()
    }
}

fn corr_matrix(vectors: &[Vec<f64>], axis: CorrelationAxis) -> Result<CorrelationMatrix, AnalysisError> {
    let d = vectors.len();
    if d < 2 {
        return Err(AnalysisError::TooShort(d));
    }
    let mut values = Matrix::zeros(d, d);
    for i in 0..d {
        values.set(i, i, pearson(&vectors[i], &vectors[i])?);
        for j in i + 1..d {
            let c = pearson(&vectors[i], &vectors[j])?;
            values.set(i, j, c);
            values.set(j, i, c);
        }
    }
    Ok(CorrelationMatrix { axis, values })
}

/// `N_s x N_s` matrix of pairwise subcarrier correlations.
pub fn temporal_corr_matrix(s: &Matrix) -> Result<CorrelationMatrix, AnalysisError> {
    let cols: Vec<Vec<f64>> = (0..s.cols()).map(|c| s.column(c)).collect();
    corr_matrix(&cols, CorrelationAxis::Temporal)
}

/// `N_t x N_t` matrix of pairwise measurement correlations.
pub fn spatial_corr_matrix(s: &Matrix) -> Result<CorrelationMatrix, AnalysisError> {
    let rows: Vec<Vec<f64>> = (0..s.rows()).map(|r| s.row(r).to_vec()).collect();
    corr_matrix(&rows, CorrelationAxis::Spatial)
}

/// Mean of each column, leaving out the diagonal entry.
pub fn column_mean_profile(m: &CorrelationMatrix) -> Vec<f64> {
    let d = m.dim();
    if d < 2 {
        return vec![1.0; d];
    }
    (0..d).map(|j| (0..d).filter(|&i| i != j).map(|i| m.values.get(i, j)).sum::<f64>() / (d - 1) as f64).collect()
}

/// Mean Pearson correlation over every (row of `a`, row of `b`) pair.
pub fn cross_mean_pcc(a: &Matrix, b: &Matrix) -> Result<f64, AnalysisError> {
    if a.rows() == 0 || b.rows() == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    if a.cols() != b.cols() {
        return Err(AnalysisError::WidthMismatch(a.cols(), b.cols()));
    }
    let mut total = 0.0;
    for p in 0..a.rows() {
        for q in 0..b.rows() {
            total += pearson(a.row(p), b.row(q))?;
        }
    }
    Ok(total / (a.rows() * b.rows()) as f64)
}
