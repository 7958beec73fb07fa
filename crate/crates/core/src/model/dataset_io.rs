//! On-disk dataset layout:
//!
//! ```text
//! <dir>/manifest.csv      file,label,device,distance,volume
//! <dir>/classes.txt       one class name per line, in class-id order
//! <dir>/sample_00000.csv  header s0..s{N_s-1}, then N_t rows
//! ```
//!
//! An empty `label` field marks an unlabeled sample. Metadata keys other than
//! device/distance/volume are not persisted.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CsiError, Dataset, Matrix, Sample};

pub const MANIFEST_FILE: &str = "manifest.csv";
const CLASSES_FILE: &str = "classes.txt";
const META_COLUMNS: [&str; 3] = ["device", "distance", "volume"];

pub fn write_matrix_csv(m: &Matrix, header_prefix: &str) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.cols()).map(|c| format!("{header_prefix}{c}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a matrix written by [`write_matrix_csv`] (first line is a header).
pub fn read_matrix_csv(text: &str) -> Result<Matrix, CsiError> {
    let mut lines = text.lines();
    let cols = lines.next().ok_or(CsiError::EmptyFile)?.split(',').count();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(CsiError::MalformedRow { line: i + 2, reason: format!("expected {cols} fields, found {}", fields.len()) });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|e| CsiError::MalformedRow { line: i + 2, reason: format!("{f:?}: {e}") })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Matrix::from_vec(rows, cols, data))
}

pub fn write_dataset(dir: &Path, dataset: &Dataset) -> Result<(), CsiError> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::from("file,label,device,distance,volume\n");
    for (i, s) in dataset.samples().iter().enumerate() {
        let file = format!("sample_{i:05}.csv");
        fs::write(dir.join(&file), write_matrix_csv(&s.values, "s"))?;
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        let meta: Vec<&str> = META_COLUMNS.iter().map(|k| s.meta.get(*k).map_or("", String::as_str)).collect();
        let _ = writeln!(manifest, "{file},{label},{}", meta.join(","));
    }
    fs::write(dir.join(MANIFEST_FILE), manifest)?;
    let mut classes = dataset.class_names().join("\n");
    classes.push('\n');
    fs::write(dir.join(CLASSES_FILE), classes)?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, CsiError> {
    let classes = fs::read_to_string(dir.join(CLASSES_FILE))?;
    let class_names: Vec<String> = classes.lines().filter(|l| !l.is_empty()).map(str::to_string).collect();
    let manifest = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut lines = manifest.lines();
    if lines.next() != Some("file,label,device,distance,volume") {
        return Err(CsiError::InvalidDataset("manifest header must be file,label,device,distance,volume".into()));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CsiError::MalformedRow { line: i + 2, reason: "manifest rows have 5 fields".into() });
        }
        if fields[0].contains(['/', '\\']) || fields[0].starts_with('.') {
            return Err(CsiError::InvalidDataset(format!("sample path {:?} escapes the dataset directory", fields[0])));
        }
        let label = match fields[1] {
            "" => None,
            l => Some(l.parse::<usize>().map_err(|e| CsiError::MalformedRow { line: i + 2, reason: format!("label {l:?}: {e}") })?),
        };
        let values = read_matrix_csv(&fs::read_to_string(dir.join(fields[0]))?)?;
        let mut sample = Sample::new(values, label);
        for (k, v) in META_COLUMNS.iter().zip(&fields[2..]) {
            if !v.is_empty() {
                sample.meta.insert(k.to_string(), v.to_string());
            }
        }
        samples.push(sample);
    }
    Dataset::new(samples, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_class_names;

    #[test]
    fn dataset_round_trip() {
        let dir = std::env::temp_dir().join(format!("csi2dig-ds-{}", std::process::id()));
        let a = Sample::new(Matrix::from_rows(&[vec![0.1, -2.5], vec![1e-17, 3.0]]), Some(10)).with_meta("device", "phone1");
        let b = Sample::new(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]), None).with_meta("volume", "60");
        let ds = Dataset::new(vec![a, b], default_class_names()).unwrap();
        write_dataset(&dir, &ds).unwrap();
        let back = read_dataset(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, ds);
    }
}
