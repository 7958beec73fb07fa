//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in `KNOWN_UNMET`.
//!
//! Reference values come from deliberately naive oracles written here
//! (path enumeration, textbook double loops), never from the library itself.

use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use csi2dig_cli::dispatch;
use csi2dig_core::analysis::{cross_mean_pcc, dtw_columns, dtw_distance, spatial_corr_matrix, temporal_corr_matrix};
use csi2dig_core::autoencoder::{output_correlation_stats, pair_batch_loss, train_autoencoder, AeConfig, Autoencoder, LossVariant};
use csi2dig_core::model::{CsiFrame, CsiSequence, Dataset, Matrix, Sample, SubcarrierLayout};
use csi2dig_core::neural::{grad_check, grad_check_against, one_hot, softmax_cross_entropy, GradCheckOptions, GradCheckReport, Mode, NeuralError, ParamSet, TrainConfig};
use csi2dig_core::preprocess::{dwt, idwt, normalize_sample, segment, wavelet_denoise, wavelet_denoise_with_threshold, SegmentationConfig, WaveletConfig};
use csi2dig_core::synth::{make_fixture_dataset, SynthSpec};
use csi2dig_core::tsnet::{evaluate_logits, evaluate_topn, train_tsnet, DropoutPlan, TopNReport, TrainOptions, TsNet, TsNetConfig};

/// Criteria that are reported as failing under the fixed protocol below.
const KNOWN_UNMET: &[usize] = &[8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_matrix(r: &mut ChaCha8Rng, rows: RangeInclusive<usize>, cols: RangeInclusive<usize>) -> Matrix {
    let (rows, cols) = (r.random_range(rows), r.random_range(cols));
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| r.random_range(-3.0..3.0)).collect())
}

// ---------------------------------------------------------------- criterion 1

fn tsnet_grad_reports(seed: u64, cfg: TsNetConfig, (nt, ns): (usize, usize), opts: &GradCheckOptions) -> (GradCheckReport, GradCheckReport) {
    let mut r = rng(seed);
    let x: Vec<f64> = (0..2 * nt * ns).map(|_| r.random_range(-1.5f32..1.5) as f64).collect();
    let classes = cfg.num_classes;
    let labels = one_hot(&[2, 7], classes);
    let net64 = TsNet::<f64>::new(cfg, nt, ns, seed).unwrap();
    let loss = |net: &TsNet<f64>| {
        let (x, labels, mut net) = (x.clone(), labels.clone(), net.clone());
        move |ps: &mut ParamSet<f64>, grad: bool| -> Result<f64, NeuralError> {
            net.params = ps.clone();
            let (z, cache) = net.forward(&x, 2, Mode::Train, DropoutPlan::OFF).map_err(|e| NeuralError::ShapeMismatch(e.to_string()))?;
            let (l, dz) = softmax_cross_entropy(&z, &labels, classes)?;
            if grad {
                net.params.zero_grad();
                net.backward(&cache, &dz);
                *ps = net.params.clone();
            }
            Ok(l)
        }
    };
    let mut ps = net64.params.clone();
    let r64 = grad_check(&mut ps, loss(&net64), opts).unwrap();

    let mut net32 = net64.cast::<f32>();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let (z, cache) = net32.forward(&x32, 2, Mode::Train, DropoutPlan::OFF).unwrap();
    let (_, dz) = softmax_cross_entropy(&z, &one_hot(&[2, 7], classes), classes).unwrap();
    net32.params.zero_grad();
    net32.backward(&cache, &dz);
    let mut reference = net32.params.cast::<f64>();
    let r32 = grad_check_against(&net32.params, &mut reference, loss(&net32.cast::<f64>()), &GradCheckOptions { tolerance: 1e-3, ..opts.clone() }).unwrap();
    (r64, r32)
}

fn ae_grad_reports(seed: u64, cfg: AeConfig, (nt, ns): (usize, usize), same: bool, opts: &GradCheckOptions) -> (GradCheckReport, GradCheckReport) {
    let mut r = rng(seed);
    let x: Vec<f64> = (0..2 * nt * ns).map(|_| r.random_range(-1.5f32..1.5) as f64).collect();
    let d = nt * ns;
    let mut ae64 = Autoencoder::<f64>::new(cfg.clone(), nt, ns, seed).unwrap();
    // zero initial biases put whole layers exactly on the ReLU kink when the
    // bottleneck is dead for a sample; check at a generic point instead
    let ids: Vec<_> = ae64.params.ids().filter(|&id| ae64.params.name(id).ends_with(".b")).collect();
    for id in ids {
        ae64.params.value_mut(id).iter_mut().for_each(|v| *v = r.random_range(-0.2f32..0.2) as f64);
    }
    let loss = |ae: &Autoencoder<f64>| {
        let (x, cfg, mut ae) = (x.clone(), cfg.clone(), ae.clone());
        move |ps: &mut ParamSet<f64>, grad: bool| -> Result<f64, NeuralError> {
            ae.params = ps.clone();
            let cache = ae.forward(&x, 2).map_err(|e| NeuralError::ShapeMismatch(e.to_string()))?;
            let (rl, cl, g) = pair_batch_loss(&cfg, &x, cache.output(), &[same], d);
            if grad {
                ae.params.zero_grad();
                ae.backward(&cache, &g);
                *ps = ae.params.clone();
            }
            Ok(rl + cl)
        }
    };
    let mut ps = ae64.params.clone();
    let r64 = grad_check(&mut ps, loss(&ae64), opts).unwrap();

    let mut ae32 = ae64.cast::<f32>();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let cache = ae32.forward(&x32, 2).unwrap();
    let (_, _, g) = pair_batch_loss(&cfg, &x32, cache.output(), &[same], d);
    ae32.params.zero_grad();
    ae32.backward(&cache, &g);
    let mut reference = ae32.params.cast::<f64>();
    let r32 = grad_check_against(&ae32.params, &mut reference, loss(&ae32.cast::<f64>()), &GradCheckOptions { tolerance: 1e-3, ..opts.clone() }).unwrap();
    (r64, r32)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut worst64, mut worst32, mut all) = (0.0f64, 0.0f64, true);
    let mut note = |r64: GradCheckReport, r32: GradCheckReport| {
        worst64 = worst64.max(r64.max_rel_error);
        worst32 = worst32.max(r32.max_rel_error);
        all &= r64.passed && r32.passed;
    };
    // every entry of every tensor is checked, so widths are kept small; the
    // layer stack is the same as the default networks
    let every = GradCheckOptions::default();
    let small_net = TsNetConfig { lstm_hidden: 8, conv_channels: [4, 6, 4], fusion_dim: 6, ..Default::default() };
    for seed in 1..=3 {
        let (a, b) = tsnet_grad_reports(seed, small_net.clone(), (10, 16), &every);
        note(a, b);
        for variant in [LossVariant::CorrectedDistance, LossVariant::PaperLiteral] {
            for same in [true, false] {
                let cfg = AeConfig { layer_widths_encoder: [16, 8, 4], loss_variant: variant, xi: 0.2, ..Default::default() };
                let (a, b) = ae_grad_reports(seed, cfg, (4, 5), same, &every);
                note(a, b);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(all && worst64 < 1e-6 && worst32 < 1e-3 && secs < 60.0, format!("max rel err f64 {worst64:.2e} (< 1e-6), f32 {worst32:.2e} (< 1e-3), {secs:.1} s (< 60 s)"))
}

// ---------------------------------------------------------------- criterion 2

/// Minimum cost over every monotone alignment path, enumerated one by one.
fn dtw_by_enumeration(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n, m) = (r.random_range(1..=6), r.random_range(1..=6));
        let a: Vec<f64> = (0..n).map(|_| r.random_range(-5.0..5.0)).collect();
        let b: Vec<f64> = (0..m).map(|_| r.random_range(-5.0..5.0)).collect();
        worst = worst.max((dtw_columns(&a, &b).unwrap() - dtw_by_enumeration(&a, &b)).abs());
    }
    let mut self_max = 0.0f64;
    for _ in 0..100 {
        let s = random_matrix(&mut r, 1..=30, 1..=8);
        self_max = self_max.max(dtw_distance(&s, &s).unwrap().abs());
    }
    outcome(worst <= 1e-12 && self_max == 0.0, format!("200 pairs max |dp - enumeration| {worst:.1e} (<= 1e-12); max dtw(S,S) over 100 S = {self_max}"))
}

// ---------------------------------------------------------------- criterion 3

fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..x.len() {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..x.len() {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let mut worst = 0.0f64;
    let mut props = true;
    for _ in 0..100 {
        let m = random_matrix(&mut r, 2..=12, 2..=10);
        let cols: Vec<Vec<f64>> = (0..m.cols()).map(|c| m.column(c)).collect();
        let rows: Vec<Vec<f64>> = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
        for (got, vectors) in [(temporal_corr_matrix(&m).unwrap().values, &cols), (spatial_corr_matrix(&m).unwrap().values, &rows)] {
            let d = vectors.len();
            props &= got.shape() == (d, d);
            for i in 0..d {
                props &= (got.get(i, i) - 1.0).abs() <= 1e-12;
                for j in 0..d {
                    let v = got.get(i, j);
                    worst = worst.max((v - naive_pearson(&vectors[i], &vectors[j])).abs());
                    props &= (-1.0..=1.0).contains(&v) && v == got.get(j, i);
                }
            }
        }
        let other = random_matrix(&mut r, 2..=12, m.cols()..=m.cols());
        let mut sum = 0.0;
        for p in 0..m.rows() {
            for q in 0..other.rows() {
                sum += naive_pearson(m.row(p), other.row(q));
            }
        }
        let expected = sum / (m.rows() * other.rows()) as f64;
        worst = worst.max((cross_mean_pcc(&m, &other).unwrap() - expected).abs());
    }
    outcome(worst <= 1e-12 && props, format!("max deviation from double loops {worst:.1e} (<= 1e-12); range/symmetry/unit diagonal {}", if props { "hold" } else { "violated" }))
}

// ---------------------------------------------------------------- criterion 4

fn one_window_sequence(n: usize, r: &mut ChaCha8Rng) -> CsiSequence {
    let step = 2_000_000 / n as i64;
    let frames = (0..n)
        .map(|k| CsiFrame { timestamp_us: k as i64 * step, source_id: "ap".into(), amplitudes: (0..4).map(|_| r.random_range(10.0..30.0)).collect() })
        .collect();
    CsiSequence::new(SubcarrierLayout::unselected(4), frames).unwrap()
}

fn criterion_4() -> Outcome {
    let cfg = SegmentationConfig::default();
    let mut r = rng(4);
    let mut ok = cfg.n_norm == 200;
    let mut seen = Vec::new();
    for (n, expected) in [(80, "discarded"), (150, "interpolated"), (200, "passthrough"), (240, "resampled")] {
        let seq = one_window_sequence(n, &mut r);
        let out = segment(&seq, &cfg).unwrap();
        match expected {
            "discarded" => {
                ok &= out.is_empty();
                seen.push(format!("{n}->discarded"));
            }
            _ => {
                ok &= out.len() == 1;
                let Some(s) = out.first() else { continue };
                let action = s.meta.get("action").cloned().unwrap_or_default();
                ok &= s.values.rows() == 200 && s.values.cols() == 4;
                ok &= action == expected;
                if expected == "passthrough" {
                    let raw: Vec<f64> = seq.frames().iter().flat_map(|f| f.amplitudes.clone()).collect();
                    ok &= s.values.as_slice() == raw.as_slice();
                }
                seen.push(format!("{n}->{action}({} rows)", s.values.rows()));
            }
        }
    }
    outcome(ok, seen.join(", "))
}

// ---------------------------------------------------------------- criterion 5

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let (mut mean_err, mut sd_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (rows, cols) = (r.random_range(2..=300), r.random_range(1..=10));
        let mut m = Matrix::zeros(rows, cols);
        for c in 0..cols {
            let (offset, scale) = (r.random_range(0.0..50.0), r.random_range(0.1..10.0));
            let col: Vec<f64> = (0..rows).map(|_| offset + scale * r.random_range(-1.0..1.0)).collect();
            m.set_column(c, &col);
        }
        let z = normalize_sample(&Sample::new(m, None));
        for c in 0..cols {
            let col = z.values.column(c);
            let n = rows as f64;
            let mean = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            mean_err = mean_err.max(mean.abs());
            sd_err = sd_err.max((sd - 1.0).abs());
        }
    }

    let mut round_trip = 0.0f64;
    for _ in 0..100 {
        let len = 8 * r.random_range(1..=40);
        let x: Vec<f64> = (0..len).map(|_| r.random_range(-5.0..5.0)).collect();
        let (approx, details) = dwt(&x, 3);
        round_trip = round_trip.max(rmse_max(&idwt(&approx, &details), &x));
        let len = r.random_range(8..=300);
        let y: Vec<f64> = (0..len).map(|_| r.random_range(-5.0..5.0)).collect();
        round_trip = round_trip.max(rmse_max(&wavelet_denoise_with_threshold(&y, 3, 0.0).unwrap(), &y));
    }

    let cfg = WaveletConfig { enabled: true, ..Default::default() };
    let noise = Normal::new(0.0, 0.3).unwrap();
    let mut worst_ratio = 0.0f64;
    for _ in 0..20 {
        let n = 200;
        let clean: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / n as f64).sin()).collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut r)).collect();
        let denoised = wavelet_denoise(&noisy, &cfg).unwrap();
        worst_ratio = worst_ratio.max(rmse(&denoised, &clean) / rmse(&noisy, &clean));
    }
    outcome(
        mean_err < 1e-9 && sd_err < 1e-9 && round_trip <= 1e-9 && worst_ratio < 1.0,
        format!("max |mean| {mean_err:.1e}, max |sd-1| {sd_err:.1e}, round trip {round_trip:.1e}, worst denoised/noisy RMSE {worst_ratio:.3} over 20 sinusoids"),
    )
}

fn rmse_max(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- criterion 6

fn monotone_to_one(rep: &TopNReport) -> bool {
    rep.p.windows(2).all(|w| w[0] <= w[1]) && rep.p.last() == Some(&1.0)
}

fn criterion_6() -> Outcome {
    let classes = 11;
    let mut r = rng(6);
    let mut ok = true;
    for _ in 0..100 {
        let n = r.random_range(1..=60);
        // coarse values so ties occur
        let logits: Vec<f64> = (0..n * classes).map(|_| (r.random_range(-3.0f64..3.0) * 2.0).round()).collect();
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..classes)).collect();
        ok &= monotone_to_one(&evaluate_logits(&logits, &labels, classes, classes).unwrap());
    }
    let k = 5;
    let labels: Vec<usize> = (0..k * classes).map(|i| i % classes).collect();
    let uniform = evaluate_logits(&vec![0.0; labels.len() * classes], &labels, classes, classes).unwrap();
    let exact = (0..classes).all(|i| uniform.p[i] == (i + 1) as f64 / classes as f64);
    outcome(ok && uniform.p[0] == 1.0 / 11.0 && exact, format!("monotone with P11 = 1 on 100 random logit sets: {ok}; uniform logits P1 = {} (1/11 = {}), P_k = k/11 exactly: {exact}", uniform.p[0], 1.0 / 11.0))
}

// ------------------------------------------------------------ criteria 7 and 9

const SPLIT_SEED: u64 = 1;
const TRAIN_SEED: u64 = 1;

fn protocol_net(alpha: f64, beta: f64) -> TsNetConfig {
    TsNetConfig { lstm_hidden: 32, fusion_dim: 32, alpha, beta, ..Default::default() }
}

fn protocol_train() -> TrainConfig {
    TrainConfig { epochs: 20, seed: TRAIN_SEED, ..Default::default() }
}

fn held_out(ds: &Dataset, net: &TsNetConfig) -> TopNReport {
    let (train, test) = ds.stratified_split(0.3, SPLIT_SEED);
    let out = train_tsnet(&train, net, &protocol_train(), &TrainOptions::default()).unwrap();
    evaluate_topn(&out.net, &test, net.num_classes).unwrap()
}

fn shuffled(ds: &Dataset) -> Dataset {
    let mut labels: Vec<Option<usize>> = ds.samples().iter().map(|s| s.label).collect();
    labels.shuffle(&mut rng(99));
    let samples = ds.samples().iter().zip(labels).map(|(s, l)| Sample { label: l, ..s.clone() }).collect();
    Dataset::new(samples, ds.class_names().to_vec()).unwrap()
}

fn criterion_7() -> (Outcome, Dataset, f64) {
    let start = Instant::now();
    let spec = SynthSpec { repetitions: 30, ..Default::default() };
    let (ds, report) = make_fixture_dataset(&spec, 200).unwrap();
    let rep = held_out(&ds, &protocol_net(0.2, 0.8));
    let secs = start.elapsed().as_secs_f64();
    let control = held_out(&shuffled(&ds), &protocol_net(0.2, 0.8));
    let (top1, top5, ctrl) = (rep.p[0], rep.p[4], control.p[0]);
    let pass = top1 >= 0.90 && top5 >= 0.99 && secs < 600.0 && (0.04..=0.14).contains(&ctrl) && monotone_to_one(&rep);
    let detail = format!(
        "{} samples ({} classes), held-out {} : top-1 {:.1}% (>= 90), top-5 {:.1}% (>= 99), {secs:.0} s (< 600 s); shuffled-label control top-1 {:.1}% (4..14)",
        ds.len(),
        report.class_names.len(),
        rep.total,
        100.0 * top1,
        100.0 * top5,
        100.0 * ctrl
    );
    (outcome(pass, detail), ds, top1)
}

fn criterion_9(ds: &Dataset, fused_top1: f64) -> Outcome {
    let temporal_only = held_out(ds, &protocol_net(1.0, 0.0)).p[0];
    outcome(temporal_only < fused_top1, format!("alpha=1 top-1 {:.1}% vs alpha=0.2/beta=0.8 top-1 {:.1}% (must be strictly lower)", 100.0 * temporal_only, 100.0 * fused_top1))
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8(ds: &Dataset) -> Outcome {
    let (n_t, n_s) = ds.sample_shape().unwrap();
    let cfg = AeConfig { loss_variant: LossVariant::CorrectedDistance, xi: 0.85, ..Default::default() };
    let tc = TrainConfig { epochs: 50, seed: TRAIN_SEED, ..Default::default() };
    let before = output_correlation_stats(&Autoencoder::<f32>::new(cfg.clone(), n_t, n_s, tc.seed).unwrap(), ds).unwrap();
    let trained = train_autoencoder(ds, &cfg, &tc).unwrap();
    let after = output_correlation_stats(&trained.autoencoder, ds).unwrap();
    let gain = after.same_class_mean - before.same_class_mean;

    let literal = AeConfig { loss_variant: LossVariant::PaperLiteral, ..cfg };
    let literal_ok = match train_autoencoder(ds, &literal, &TrainConfig { epochs: 10, ..tc }) {
        Ok(out) => out.history.iter().all(|h| h.total().is_finite()) && out.autoencoder.params.all_finite(),
        Err(_) => false,
    };
    outcome(
        gain >= 0.1 && after.same_class_mean > after.cross_class_mean && literal_ok,
        format!(
            "same-class corr {:.3} -> {:.3} (gain {gain:+.3}, needs >= +0.100); cross-class {:.3} -> {:.3}; literal variant finite: {literal_ok}",
            before.same_class_mean, after.same_class_mean, before.cross_class_mean, after.cross_class_mean
        ),
    )
}

// --------------------------------------------------------------- criterion 10

const SMALL: &str = "[synth]\nrepetitions = 3\n[tsnet]\nlstm_hidden = 8\nfusion_dim = 8\nconv_channels = [4, 4, 4]\n[autoencoder]\nlayer_widths_encoder = [16, 8, 4]\n";

fn cli(args: &[&str]) -> i32 {
    dispatch(std::iter::once("csi2dig").chain(args.iter().copied()).map(String::from).collect())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn cli_chain(root: &Path, seed: &str) -> bool {
    let cfg = root.join("cfg.toml");
    fs::write(&cfg, SMALL).unwrap();
    let c = s(&cfg);
    let (syn, ds, ae, tr, ev) = (root.join("syn"), root.join("ds"), root.join("ae"), root.join("tr"), root.join("ev"));
    let ckpt = ae.join("autoencoder.ckpt");
    [
        cli(&["--config", c, "--seed", seed, "--quiet", "--out", s(&syn), "synth"]),
        cli(&["--config", c, "--seed", seed, "--quiet", "--out", s(&ds), "segment", "--input", s(&syn.join("csi.csv")), "--labels", s(&syn.join("ground_truth.csv"))]),
        cli(&["--config", c, "--seed", seed, "--quiet", "--out", s(&ae), "train-ae", "--dataset", s(&ds), "--epochs", "2"]),
        cli(&["--config", c, "--seed", seed, "--quiet", "--out", s(&tr), "train", "--dataset", s(&ds), "--epochs", "3", "--ae", s(&ckpt)]),
        cli(&["--config", c, "--seed", seed, "--quiet", "--out", s(&ev), "eval", "--dataset", s(&ds), "--checkpoint", s(&tr.join("tsnet.ckpt")), "--ae", s(&ckpt), "--holdout", s(&tr.join("holdout.csv")), "--per-class"]),
    ]
    .iter()
    .all(|&code| code == 0)
}

fn collect_files(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(&path, base, out);
        } else {
            out.insert(path.strip_prefix(base).unwrap().display().to_string(), fs::read(&path).unwrap());
        }
    }
}

fn criterion_10() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let ran = cli_chain(dirs[0].path(), "9") && cli_chain(dirs[1].path(), "9") && cli_chain(dirs[2].path(), "10");
    if !ran {
        return outcome(false, "a CLI step exited non-zero");
    }
    let files: Vec<BTreeMap<String, Vec<u8>>> = dirs
        .iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            collect_files(d.path(), d.path(), &mut m);
            m
        })
        .collect();
    let identical = files[0] == files[1];
    let ckpts = ["tr/tsnet.ckpt", "ae/autoencoder.ckpt"];
    let seed_matters = ckpts.iter().all(|k| files[0].get(*k) != files[2].get(*k));
    let has_all = ckpts.iter().chain(&["ev/eval.csv", "tr/train_history.csv"]).all(|k| files[0].contains_key(*k));
    outcome(identical && seed_matters && has_all, format!("{} output files byte-identical across same-seed reruns: {identical}; another seed changes both checkpoints: {seed_matters}", files[0].len()))
}

// ----------------------------------------------------------------------- main

fn main() {
    let mut unexpected = Vec::new();
    let mut report = |id: usize, name: &str, o: Outcome| {
        let verdict = match (o.pass, KNOWN_UNMET.contains(&id)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(id);
                "FAIL"
            }
        };
        println!("criterion {id:>2} [{verdict}] {name}: {}", o.detail);
    };
    report(1, "gradient fidelity", criterion_1());
    report(2, "DTW against path enumeration", criterion_2());
    report(3, "correlation matrices against double loops", criterion_3());
    report(4, "segmentation actions", criterion_4());
    report(5, "normalization and wavelet", criterion_5());
    report(6, "top-N accuracy law", criterion_6());
    let (o7, ds, fused_top1) = criterion_7();
    report(7, "synthetic end-to-end classification", o7);
    report(8, "contrastive autoencoder separation", criterion_8(&ds));
    report(9, "temporal-only ablation", criterion_9(&ds, fused_top1));
    report(10, "CLI determinism", criterion_10());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
