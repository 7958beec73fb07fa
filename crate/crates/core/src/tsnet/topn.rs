use crate::model::{Dataset, Sample};
use crate::neural::{softmax, Scalar};

use super::{TsNet, TsNetError};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Class ids by descending score, ties by ascending id.
    pub ranked_classes: Vec<usize>,
}

impl Prediction {
    /// Ranks on the logits themselves so that two classes tie exactly when
    /// their logits do, independent of rounding inside the softmax.
    pub fn from_logits(logits: &[f64]) -> Self {
        Self { probabilities: softmax(logits, logits.len()), ranked_classes: rank_classes(logits) }
    }

    pub fn top(&self, n: usize) -> &[usize] {
        &self.ranked_classes[..n.min(self.ranked_classes.len())]
    }
}

/// Indices sorted by descending score; equal scores keep ascending order.
pub fn rank_classes(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// The `n` most probable classes for one sample, evaluated in `Eval` mode.
pub fn predict_topn<T: Scalar>(net: &TsNet<T>, sample: &Sample, n: usize) -> Result<Vec<usize>, TsNetError> {
    let classes = net.config.num_classes;
    if n == 0 || n > classes {
        return Err(TsNetError::BadN { n, classes });
    }
    let logits: Vec<f64> = net.logits(&[sample])?.iter().map(|v| v.as_f64()).collect();
    Ok(Prediction::from_logits(&logits).top(n).to_vec())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopNReport {
    /// `p[k]` is the fraction of samples whose label is among the first `k+1`
    /// ranked classes.
    pub p: Vec<f64>,
    /// Same per true class; `None` for classes without samples.
    pub per_class: Vec<Option<Vec<f64>>>,
    pub class_counts: Vec<usize>,
    pub total: usize,
}

/// Top-N accuracy from precomputed logits (`labels.len() x classes`).
pub fn evaluate_logits(logits: &[f64], labels: &[usize], classes: usize, n_max: usize) -> Result<TopNReport, TsNetError> {
    if n_max == 0 || n_max > classes {
        return Err(TsNetError::BadN { n: n_max, classes });
    }
    if labels.is_empty() {
        return Err(TsNetError::EmptyDataset);
    }
    if logits.len() != labels.len() * classes {
        return Err(TsNetError::ShapeMismatch(format!("{} logits for {} samples of {} classes", logits.len(), labels.len(), classes)));
    }
    let mut hits = vec![0usize; n_max];
    let mut class_hits = vec![vec![0usize; n_max]; classes];
    let mut class_counts = vec![0usize; classes];
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(TsNetError::ShapeMismatch(format!("label {label} outside {classes} classes")));
        }
        let ranked = rank_classes(&logits[i * classes..(i + 1) * classes]);
        let rank = ranked.iter().position(|&c| c == label).expect("ranking is a permutation");
        class_counts[label] += 1;
        for k in rank..n_max {
            hits[k] += 1;
            class_hits[label][k] += 1;
        }
    }
    let total = labels.len();
    Ok(TopNReport {
        p: hits.iter().map(|&h| h as f64 / total as f64).collect(),
        per_class: class_hits.iter().zip(&class_counts).map(|(h, &c)| (c > 0).then(|| h.iter().map(|&v| v as f64 / c as f64).collect())).collect(),
        class_counts,
        total,
    })
}

pub fn evaluate_topn<T: Scalar>(net: &TsNet<T>, dataset: &Dataset, n_max: usize) -> Result<TopNReport, TsNetError> {
    let labels: Vec<usize> = dataset.samples().iter().enumerate().map(|(i, s)| s.label.ok_or(TsNetError::UnlabeledSample(i))).collect::<Result<_, _>>()?;
    if labels.is_empty() {
        return Err(TsNetError::EmptyDataset);
    }
    let refs: Vec<&Sample> = dataset.samples().iter().collect();
    let logits: Vec<f64> = net.logits(&refs)?.iter().map(|v| v.as_f64()).collect();
    evaluate_logits(&logits, &labels, net.config.num_classes, n_max)
}
