use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Dataset, Sample};
use crate::neural::{adam_step, one_hot, softmax_cross_entropy, Mode, NeuralError, TrainConfig};

use super::topn::{evaluate_topn, rank_classes};
use super::{DropoutPlan, TsNet, TsNetConfig, TsNetError};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches (weighted by batch size).
    pub loss: f64,
    /// Top-1 accuracy of the training-mode predictions seen during the epoch.
    pub train_top1: f64,
    /// Eval-mode top-1 on the evaluation set, when a snapshot was taken.
    pub eval_top1: Option<f64>,
}

#[derive(Default)]
pub struct TrainOptions<'a> {
    pub eval_set: Option<&'a Dataset>,
    /// Snapshot every this many epochs (and after the last); 0 disables.
    pub eval_every: usize,
    pub progress: Option<&'a dyn Fn(&EpochRecord)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: TsNet<f32>,
    pub history: Vec<EpochRecord>,
}

/// Splits a shuffled order into batches, folding a trailing single sample
/// into the previous batch (batch normalization needs two samples).
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = (start + size).min(order.len());
        if order.len() - end == 1 {
            end = order.len();
        }
        out.push(&order[start..end]);
        start = end;
    }
    out
}

/// Mini-batch Adam on mean cross-entropy, 32-bit parameters.
pub fn train_tsnet(dataset: &Dataset, cfg: &TsNetConfig, tc: &TrainConfig, opts: &TrainOptions) -> Result<TrainOutcome, TsNetError> {
    tc.validate()?;
    cfg.validate()?;
    let (n_t, n_s) = dataset.sample_shape().ok_or(TsNetError::EmptyDataset)?;
    let labels: Vec<usize> = dataset.samples().iter().enumerate().map(|(i, s)| s.label.ok_or(TsNetError::UnlabeledSample(i))).collect::<Result<_, _>>()?;
    if let Some(&l) = labels.iter().find(|&&l| l >= cfg.num_classes) {
        return Err(TsNetError::ShapeMismatch(format!("label {l} outside the model's {} classes", cfg.num_classes)));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(TsNetError::SingleClass);
    }
    let mut net = TsNet::<f32>::new(cfg.clone(), n_t, n_s, tc.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed ^ 0x7453_4e65_7400_0001);
    let classes = cfg.num_classes;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(tc.epochs);
    for epoch in 0..tc.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0f64, 0usize);
        for idx in batches(&order, tc.batch_size) {
            let b = idx.len();
            let samples: Vec<&Sample> = idx.iter().map(|&i| &dataset.samples()[i]).collect();
            let x = net.batch_input(&samples)?;
            let plan = DropoutPlan { p: tc.dropout_p, seed: tc.seed, step: net.params.step() };
            let (logits, cache) = net.forward(&x, b, Mode::Train, plan)?;
            let batch_labels: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let (loss, dlogits) = softmax_cross_entropy(&logits, &one_hot(&batch_labels, classes), classes)?;
            if !loss.is_finite() {
                return Err(NeuralError::NumericFailure(format!("training loss became {loss} in epoch {}", epoch + 1)).into());
            }
            loss_sum += loss as f64 * b as f64;
            for (r, &l) in batch_labels.iter().enumerate() {
                let row: Vec<f64> = logits[r * classes..(r + 1) * classes].iter().map(|&v| v as f64).collect();
                if rank_classes(&row)[0] == l {
                    correct += 1;
                }
            }
            net.params.zero_grad();
            net.backward(&cache, &dlogits);
            net.update_running_stats(&cache);
            adam_step(&mut net.params, tc);
        }
        if !net.params.all_finite() {
            return Err(NeuralError::NumericFailure(format!("parameters became non-finite in epoch {}", epoch + 1)).into());
        }
        let snapshot = opts.eval_every > 0 && ((epoch + 1) % opts.eval_every == 0 || epoch + 1 == tc.epochs);
        let eval_top1 = match opts.eval_set {
            Some(ds) if snapshot && !ds.is_empty() => Some(evaluate_topn(&net, ds, 1)?.p[0]),
            _ => None,
        };
        let rec = EpochRecord { epoch: epoch + 1, loss: loss_sum / dataset.len() as f64, train_top1: correct as f64 / dataset.len() as f64, eval_top1 };
        if let Some(cb) = opts.progress {
            cb(&rec);
        }
        history.push(rec);
    }
    Ok(TrainOutcome { net, history })
}
