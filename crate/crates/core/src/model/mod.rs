//! Core domain types: CSI frames and sequences, subcarrier layouts, fixed-size
//! samples, datasets and model checkpoints.

mod checkpoint;
mod csi_csv;
mod dataset_io;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointKind, ModelCheckpoint, NamedTensor, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use csi_csv::{parse_csi_file, write_csi_file};
pub use dataset_io::{read_dataset, read_matrix_csv, write_dataset, write_matrix_csv, MANIFEST_FILE};

/// Default class count: digits 0-9 plus silence.
pub const DEFAULT_NUM_CLASSES: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum CsiError {
    #[error("empty CSI file")]
    EmptyFile,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamp at line {line} ({timestamp_us}) precedes the previous frame")]
    NonMonotonicTimestamp { line: usize, timestamp_us: i64 },
    #[error("frame {index} has {found} amplitudes, layout expects {expected}")]
    WidthMismatch { index: usize, expected: usize, found: usize },
    #[error("frame {index} has a negative or non-finite amplitude")]
    InvalidAmplitude { index: usize },
    #[error("frame {index} source id contains a separator")]
    InvalidSourceId { index: usize },
    #[error("invalid subcarrier layout: {0}")]
    InvalidLayout(String),
    #[error("checkpoint version {found} not supported (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("corrupt checkpoint: {0}")]
    CorruptPayload(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CsiError {
    fn from(e: std::io::Error) -> Self {
        CsiError::Io(e.to_string())
    }
}

/// One timestamped CSI measurement. Only amplitudes are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    pub timestamp_us: i64,
    pub source_id: String,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bandwidth {
    /// 20 MHz OFDM, 64 subcarriers indexed -32..=31.
    Bw20,
    /// Width taken from the data itself (no channel plan known).
    Unspecified,
}

/// Which subcarriers of a capture are kept. Indices are centered: column `j`
/// of a raw frame with `total` subcarriers is index `j - total/2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubcarrierLayout {
    bandwidth: Bandwidth,
    total_subcarriers: usize,
    excluded: BTreeSet<i32>,
}

pub const BW20_GUARD: [i32; 7] = [-32, -31, -30, -29, 29, 30, 31];
pub const BW20_DC: i32 = 0;
pub const BW20_PILOTS: [i32; 4] = [-21, -7, 7, 21];

impl SubcarrierLayout {
    pub fn new(bandwidth: Bandwidth, total_subcarriers: usize, excluded: impl IntoIterator<Item = i32>) -> Result<Self, CsiError> {
        if total_subcarriers == 0 {
            return Err(CsiError::InvalidLayout("zero subcarriers".into()));
        }
        if bandwidth == Bandwidth::Bw20 && total_subcarriers != 64 {
            return Err(CsiError::InvalidLayout(format!("BW20 has 64 subcarriers, got {total_subcarriers}")));
        }
        let half = (total_subcarriers / 2) as i32;
        let lo = -half;
        let hi = total_subcarriers as i32 - half - 1;
        let excluded: BTreeSet<i32> = excluded.into_iter().collect();
        if let Some(bad) = excluded.iter().find(|&&i| i < lo || i > hi) {
            return Err(CsiError::InvalidLayout(format!("index {bad} outside [{lo}, {hi}]")));
        }
        if excluded.len() >= total_subcarriers {
            return Err(CsiError::InvalidLayout("every subcarrier excluded".into()));
        }
        Ok(Self { bandwidth, total_subcarriers, excluded })
    }

    /// BW20 with guard bands and DC removed (56 retained).
    pub fn bw20_default() -> Self {
        Self::new(Bandwidth::Bw20, 64, BW20_GUARD.iter().copied().chain([BW20_DC])).expect("static layout")
    }

    /// BW20 default plus the four pilot subcarriers (52 retained).
    pub fn bw20_without_pilots() -> Self {
        Self::bw20_default().with_excluded(BW20_PILOTS).expect("static layout")
    }

    /// A layout that keeps every one of `n` columns.
    pub fn unselected(n: usize) -> Self {
        Self { bandwidth: Bandwidth::Unspecified, total_subcarriers: n.max(1), excluded: BTreeSet::new() }
    }

    pub fn with_excluded(&self, more: impl IntoIterator<Item = i32>) -> Result<Self, CsiError> {
        Self::new(self.bandwidth, self.total_subcarriers, self.excluded.iter().copied().chain(more))
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    pub fn total_subcarriers(&self) -> usize {
        self.total_subcarriers
    }

    pub fn excluded_indices(&self) -> &BTreeSet<i32> {
        &self.excluded
    }

    pub fn retained_count(&self) -> usize {
        self.total_subcarriers - self.excluded.len()
    }

    pub fn index_of_column(&self, column: usize) -> i32 {
        column as i32 - (self.total_subcarriers / 2) as i32
    }

    pub fn column_of_index(&self, index: i32) -> usize {
        (index + (self.total_subcarriers / 2) as i32) as usize
    }

    /// Raw column positions that survive selection, ascending.
    pub fn retained_columns(&self) -> Vec<usize> {
        (0..self.total_subcarriers).filter(|&c| !self.excluded.contains(&self.index_of_column(c))).collect()
    }
}

/// Ordered series of frames. Every frame carries `layout.retained_count()`
/// amplitudes; timestamps never decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSequence {
    layout: SubcarrierLayout,
    frames: Vec<CsiFrame>,
}

impl CsiSequence {
    pub fn new(layout: SubcarrierLayout, frames: Vec<CsiFrame>) -> Result<Self, CsiError> {
        let width = layout.retained_count();
        let mut prev = i64::MIN;
        for (index, f) in frames.iter().enumerate() {
            if f.amplitudes.len() != width {
                return Err(CsiError::WidthMismatch { index, expected: width, found: f.amplitudes.len() });
            }
            if f.amplitudes.iter().any(|a| !a.is_finite() || *a < 0.0) {
                return Err(CsiError::InvalidAmplitude { index });
            }
            if f.source_id.contains([',', '\n', '\r']) {
                return Err(CsiError::InvalidSourceId { index });
            }
            if f.timestamp_us < prev {
                return Err(CsiError::NonMonotonicTimestamp { line: index + 2, timestamp_us: f.timestamp_us });
            }
            prev = f.timestamp_us;
        }
        Ok(Self { layout, frames })
    }

    pub fn layout(&self) -> &SubcarrierLayout {
        &self.layout
    }

    pub fn frames(&self) -> &[CsiFrame] {
        &self.frames
    }

    pub fn width(&self) -> usize {
        self.layout.retained_count()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<CsiFrame> {
        self.frames
    }
}

/// Dense row-major matrix of 64-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, values: &[f64]) {
        assert_eq!(values.len(), self.rows);
        for (r, v) in values.iter().enumerate() {
            self.set(r, c, *v);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }
}

/// Fixed-size amplitude matrix (rows = CSI measurements, columns = subcarriers).
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub values: Matrix,
    pub label: Option<usize>,
    pub meta: BTreeMap<String, String>,
}

impl Sample {
    pub fn new(values: Matrix, label: Option<usize>) -> Self {
        Self { values, label, meta: BTreeMap::new() }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn default_class_names() -> Vec<String> {
    (0..10).map(|d| d.to_string()).chain(std::iter::once("silence".to_string())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, class_names: Vec<String>) -> Result<Self, CsiError> {
        if class_names.is_empty() {
            return Err(CsiError::InvalidDataset("no class names".into()));
        }
        if let Some(first) = samples.first() {
            let shape = first.shape();
            for (i, s) in samples.iter().enumerate() {
                if s.shape() != shape {
                    return Err(CsiError::InvalidDataset(format!("sample {i} has shape {:?}, expected {:?}", s.shape(), shape)));
                }
                if let Some(l) = s.label {
                    if l >= class_names.len() {
                        return Err(CsiError::InvalidDataset(format!("sample {i} label {l} >= {} classes", class_names.len())));
                    }
                }
                if s.values.as_slice().iter().any(|v| !v.is_finite()) {
                    return Err(CsiError::InvalidDataset(format!("sample {i} has non-finite values")));
                }
            }
        }
        Ok(Self { samples, class_names })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(N_t, N_s)` of the samples, if any.
    pub fn sample_shape(&self) -> Option<(usize, usize)> {
        self.samples.first().map(Sample::shape)
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    /// Samples per class id; unlabeled samples are not counted.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for l in self.samples.iter().filter_map(|s| s.label) {
            counts[l] += 1;
        }
        counts
    }

    /// Subset by sample indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset { samples: indices.iter().map(|&i| self.samples[i].clone()).collect(), class_names: self.class_names.clone() }
    }

    /// Stratified split into (train, test). Every class with at least two
    /// samples contributes at least one sample to each side.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let (train, test) = self.stratified_split_indices(test_fraction, seed);
        (self.subset(&train), self.subset(&test))
    }

    /// Sample indices of [`Dataset::stratified_split`], each side ascending.
    pub fn stratified_split_indices(&self, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut by_class: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            by_class.entry(s.label).or_default().push(i);
        }
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (_, mut idx) in by_class {
            idx.shuffle(&mut rng);
            let mut n_test = (idx.len() as f64 * test_fraction).round() as usize;
            if idx.len() >= 2 && test_fraction > 0.0 {
                n_test = n_test.clamp(1, idx.len() - 1);
            }
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        (train, test)
    }
}
