use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::pearson;
use crate::model::{Dataset, Sample};
use crate::neural::{adam_step, NeuralError, Scalar, TrainConfig};

use super::{pair_batch_loss, AeConfig, AeError, Autoencoder};

#[derive(Debug, Clone, PartialEq)]
pub struct AeEpochRecord {
    pub epoch: usize,
    pub reconstruction: f64,
    pub contrastive: f64,
}

impl AeEpochRecord {
    pub fn total(&self) -> f64 {
        self.reconstruction + self.contrastive
    }
}

#[derive(Debug, Clone)]
pub struct AeOutcome {
    pub autoencoder: Autoencoder<f32>,
    pub history: Vec<AeEpochRecord>,
}

/// Mean Pearson correlation between reconstructions of same-class and of
/// different-class sample pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationStats {
    pub same_class_mean: f64,
    pub cross_class_mean: f64,
    pub same_pairs: usize,
    pub cross_pairs: usize,
}

fn labels_of(dataset: &Dataset) -> Result<Vec<usize>, AeError> {
    dataset.samples().iter().enumerate().map(|(i, s)| s.label.ok_or(AeError::UnlabeledSample(i))).collect()
}

/// Draws `count` pairs, alternating same-class and different-class.
fn draw_pairs(by_class: &[Vec<usize>], count: usize, rng: &mut impl Rng) -> Vec<(usize, usize, bool)> {
    let multi: Vec<&Vec<usize>> = by_class.iter().filter(|c| c.len() >= 2).collect();
    let present: Vec<usize> = (0..by_class.len()).filter(|&c| !by_class[c].is_empty()).collect();
    (0..count)
        .map(|k| {
            if k % 2 == 0 {
                let class = multi.choose(rng).expect("checked by caller");
                let i = rng.random_range(0..class.len());
                let mut j = rng.random_range(0..class.len() - 1);
                if j >= i {
                    j += 1;
                }
                (class[i], class[j], true)
            } else {
                let a = rng.random_range(0..present.len());
                let mut b = rng.random_range(0..present.len() - 1);
                if b >= a {
                    b += 1;
                }
                let pick = |c: usize, rng: &mut dyn rand::RngCore| *by_class[present[c]].choose(rng).expect("non-empty");
                (pick(a, rng), pick(b, rng), false)
            }
        })
        .collect()
}

/// Adam on reconstruction plus contrastive loss over balanced random pairs,
/// 32-bit parameters; 16 pairs (32 samples) per step when `batch_size` is 32.
pub fn train_autoencoder(dataset: &Dataset, cfg: &AeConfig, tc: &TrainConfig) -> Result<AeOutcome, AeError> {
    cfg.validate()?;
    tc.validate()?;
    let labels = labels_of(dataset)?;
    let (n_t, n_s) = dataset.sample_shape().ok_or(AeError::InsufficientPairs)?;
    let classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let present = by_class.iter().filter(|c| !c.is_empty()).count();
    if present < 2 || by_class.iter().all(|c| c.len() < 2) {
        return Err(AeError::InsufficientPairs);
    }
    let mut ae = Autoencoder::<f32>::new(cfg.clone(), n_t, n_s, tc.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x4165_5061_6972_0002);
    let pairs_per_epoch = cfg.pairs_per_epoch.unwrap_or(dataset.len().div_ceil(2));
    let pairs_per_step = (tc.batch_size / 2).max(1);
    let d = n_t * n_s;
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        let pairs = draw_pairs(&by_class, pairs_per_epoch, &mut rng);
        let (mut recon_sum, mut contrast_sum) = (0.0, 0.0);
        for chunk in pairs.chunks(pairs_per_step) {
            let samples: Vec<&Sample> = chunk.iter().flat_map(|&(a, b, _)| [&dataset.samples()[a], &dataset.samples()[b]]).collect();
            let same: Vec<bool> = chunk.iter().map(|p| p.2).collect();
            let x = ae.flatten(&samples)?;
            let cache = ae.forward(&x, samples.len())?;
            let (recon, contrast, grad) = pair_batch_loss(cfg, &x, cache.output(), &same, d);
            if !(recon + contrast).is_finite() {
                return Err(NeuralError::NumericFailure(format!("autoencoder loss became non-finite in epoch {}", epoch + 1)).into());
            }
            recon_sum += recon * chunk.len() as f64;
            contrast_sum += contrast * chunk.len() as f64;
            ae.params.zero_grad();
            ae.backward(&cache, &grad);
            adam_step(&mut ae.params, tc);
        }
        if !ae.params.all_finite() {
            return Err(NeuralError::NumericFailure(format!("autoencoder parameters became non-finite in epoch {}", epoch + 1)).into());
        }
        let n = pairs.len() as f64;
        history.push(AeEpochRecord { epoch: epoch + 1, reconstruction: recon_sum / n, contrastive: contrast_sum / n });
    }
    Ok(AeOutcome { autoencoder: ae, history })
}

/// Correlation statistics over every unordered pair of reconstructions.
/// Pairs involving a constant reconstruction are skipped.
pub fn output_correlation_stats<T: Scalar>(ae: &Autoencoder<T>, dataset: &Dataset) -> Result<CorrelationStats, AeError> {
    let labels = labels_of(dataset)?;
    let refs: Vec<&Sample> = dataset.samples().iter().collect();
    let outs: Vec<Vec<f64>> = ae.reconstruct_all(&refs)?.into_iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect();
    let (mut same, mut cross) = ((0.0, 0usize), (0.0, 0usize));
    for i in 0..outs.len() {
        for j in i + 1..outs.len() {
            let Ok(c) = pearson(&outs[i], &outs[j]) else { continue };
            let acc = if labels[i] == labels[j] { &mut same } else { &mut cross };
            acc.0 += c;
            acc.1 += 1;
        }
    }
    let mean = |(s, n): (f64, usize)| if n == 0 { f64::NAN } else { s / n as f64 };
    Ok(CorrelationStats { same_class_mean: mean(same), cross_class_mean: mean(cross), same_pairs: same.1, cross_pairs: cross.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_class_names, Matrix};

    fn dataset(labels: &[usize]) -> Dataset {
        let samples = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Sample::new(Matrix::from_vec(4, 5, (0..20).map(|k| ((k * (l + 2)) as f64 * 0.41).sin() + 0.05 * ((i * 7 + k) as f64).cos()).collect()), Some(l)))
            .collect();
        Dataset::new(samples, default_class_names()).unwrap()
    }

    fn cfg() -> AeConfig {
        AeConfig { layer_widths_encoder: [16, 8, 4], ..Default::default() }
    }

    #[test]
    fn pairs_alternate_and_respect_labels() {
        let by_class = vec![vec![0, 1, 2], vec![3], vec![4, 5]];
        let labels = [0, 0, 0, 1, 2, 2];
        let pairs = draw_pairs(&by_class, 200, &mut ChaCha8Rng::seed_from_u64(3));
        for (k, &(a, b, same)) in pairs.iter().enumerate() {
            assert_eq!(same, k % 2 == 0);
            assert_ne!(a, b);
            assert_eq!(labels[a] == labels[b], same);
        }
    }

    #[test]
    fn single_class_has_no_pairs() {
        let tc = TrainConfig { epochs: 1, ..Default::default() };
        assert_eq!(train_autoencoder(&dataset(&[1, 1, 1]), &cfg(), &tc).unwrap_err(), AeError::InsufficientPairs);
        assert_eq!(train_autoencoder(&dataset(&[0, 1, 2]), &cfg(), &tc).unwrap_err(), AeError::InsufficientPairs);
    }

    #[test]
    fn training_reduces_loss_and_is_reproducible() {
        let ds = dataset(&[0, 0, 0, 1, 1, 1, 2, 2, 2]);
        let tc = TrainConfig { epochs: 60, batch_size: 8, weight_decay: 0.0, learning_rate: 0.003, seed: 4, ..Default::default() };
        let c = AeConfig { pairs_per_epoch: Some(16), ..cfg() };
        let a = train_autoencoder(&ds, &c, &tc).unwrap();
        let b = train_autoencoder(&ds, &c, &tc).unwrap();
        assert_eq!(a.autoencoder.params.to_named_tensors(), b.autoencoder.params.to_named_tensors());
        assert_eq!(a.history, b.history);
        assert!(a.history.last().unwrap().total() < a.history[0].total());
    }

    #[test]
    fn literal_variant_stays_finite() {
        let ds = dataset(&[0, 0, 1, 1, 2, 2]);
        let tc = TrainConfig { epochs: 20, batch_size: 4, seed: 1, ..Default::default() };
        let c = AeConfig { loss_variant: super::super::LossVariant::PaperLiteral, ..cfg() };
        let out = train_autoencoder(&ds, &c, &tc).unwrap();
        assert!(out.history.iter().all(|r| r.total().is_finite()));
        assert!(out.autoencoder.params.all_finite());
    }

    #[test]
    fn stats_count_every_pair() {
        let ds = dataset(&[0, 0, 1, 1, 1]);
        let ae = Autoencoder::<f64>::new(cfg(), 4, 5, 0).unwrap();
        let s = output_correlation_stats(&ae, &ds).unwrap();
        assert_eq!(s.same_pairs + s.cross_pairs, 10);
        assert_eq!(s.same_pairs, 4);
        assert!(s.same_class_mean.abs() <= 1.0 && s.cross_class_mean.abs() <= 1.0);
    }
}
