use csi2dig_core::autoencoder::{train_autoencoder, AeConfig, Autoencoder};
use csi2dig_core::model::{load_checkpoint, save_checkpoint, Dataset};
use csi2dig_core::neural::TrainConfig;
use csi2dig_core::synth::{generate, make_fixture_dataset, SynthSpec};
use csi2dig_core::tsnet::{evaluate_topn, predict_topn, train_tsnet, TrainOptions, TsNet, TsNetConfig};

fn small_fixture(reps: usize) -> Dataset {
    make_fixture_dataset(&SynthSpec { repetitions: reps, seed: 21, ..Default::default() }, 200).unwrap().0
}

fn small_net() -> TsNetConfig {
    TsNetConfig { lstm_hidden: 12, fusion_dim: 12, conv_channels: [8, 8, 8], ..Default::default() }
}

#[test]
fn classifier_learns_fixture_and_survives_checkpointing() {
    let ds = small_fixture(6);
    let (train, test) = ds.stratified_split(0.3, 2);
    let tc = TrainConfig { epochs: 40, seed: 4, ..Default::default() };
    let out = train_tsnet(&train, &small_net(), &tc, &TrainOptions::default()).unwrap();
    assert!(out.history.last().unwrap().loss < out.history[0].loss);
    let report = evaluate_topn(&out.net, &test, 11).unwrap();
    assert!(report.p.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(report.p[10], 1.0);
    assert!(report.p[0] > 0.5, "top-1 {}", report.p[0]);

    let back = TsNet::<f32>::from_checkpoint(&load_checkpoint(&save_checkpoint(&out.net.to_checkpoint())).unwrap()).unwrap();
    assert_eq!(evaluate_topn(&back, &test, 11).unwrap(), report);
    let top3 = predict_topn(&back, &test.samples()[0], 3).unwrap();
    assert_eq!(top3.len(), 3);
}

#[test]
fn plain_autoencoder_reconstruction_improves() {
    let ds = small_fixture(3);
    let cfg = AeConfig { layer_widths_encoder: [64, 32, 16], contrastive_weight: 0.0, ..Default::default() };
    let tc = TrainConfig { epochs: 10, seed: 1, learning_rate: 1e-3, ..Default::default() };
    let out = train_autoencoder(&ds, &cfg, &tc).unwrap();
    let recon: Vec<f64> = out.history.iter().map(|r| r.reconstruction).collect();
    assert!(recon.windows(2).all(|w| w[1] < w[0]), "{recon:?}");
    assert!(out.history.iter().all(|r| r.contrastive == 0.0));
}

#[test]
fn trained_autoencoder_reconstructs_held_out_samples() {
    let ds = small_fixture(4);
    let (train, test) = ds.stratified_split(0.25, 3);
    let cfg = AeConfig { layer_widths_encoder: [64, 32, 16], ..Default::default() };
    let tc = TrainConfig { epochs: 30, seed: 2, ..Default::default() };
    let ae = train_autoencoder(&train, &cfg, &tc).unwrap().autoencoder;
    let ae = Autoencoder::<f32>::from_checkpoint(&load_checkpoint(&save_checkpoint(&ae.to_checkpoint())).unwrap()).unwrap();
    let mut mse = 0.0;
    for s in test.samples() {
        let r = ae.denoise(s).unwrap();
        assert_eq!(r.label, s.label);
        mse += r.values.as_slice().iter().zip(s.values.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / s.values.as_slice().len() as f64;
    }
    mse /= test.len() as f64;
    // normalized columns have unit variance
    assert!(mse < 1.0, "held-out reconstruction MSE {mse}");
}

#[test]
fn generator_is_deterministic_and_seed_sensitive() {
    let spec = SynthSpec { repetitions: 2, ..Default::default() };
    assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    let (a, ra) = make_fixture_dataset(&spec, 200).unwrap();
    let (b, rb) = make_fixture_dataset(&spec, 200).unwrap();
    assert_eq!((a, ra), (b, rb));
}
