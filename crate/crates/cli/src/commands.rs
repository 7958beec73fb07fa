use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use csi2dig_core::analysis::{column_mean_profile, cross_mean_pcc, dtw_distance, spatial_corr_matrix, temporal_corr_matrix};
use csi2dig_core::autoencoder::{output_correlation_stats, train_autoencoder, Autoencoder, LossVariant};
use csi2dig_core::model::{default_class_names, load_checkpoint, parse_csi_file, read_dataset, save_checkpoint, write_csi_file, write_dataset, write_matrix_csv, CsiSequence, Dataset, SubcarrierLayout};
use csi2dig_core::preprocess::{denoise_sample, normalize_sample, segment, select_subcarriers};
use csi2dig_core::synth::{generate, label_segments, SynthSpec};
use csi2dig_core::tsnet::{evaluate_topn, train_tsnet, EpochRecord, TrainOptions, TsNet};

use crate::{Cli, CliError, Command, LayoutArg, LossArg, PipelineConfig};

pub(crate) fn execute(cli: &Cli, cfg: PipelineConfig) -> Result<(), CliError> {
    let out = cli.out.as_deref().ok_or_else(|| CliError::Usage("--out <DIR> is required".into()))?;
    fs::create_dir_all(out)?;
    let log = |msg: &str| {
        if !cli.quiet {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::Synth { spec } => synth(cli, cfg, spec.as_deref(), out, &log),
        Command::Convert { input, layout } => {
            let seq = select(&read_csi(input)?, *layout)?;
            fs::write(out.join("csi.csv"), write_csi_file(&seq))?;
            log(&format!("{} frames x {} subcarriers", seq.len(), seq.width()));
            Ok(())
        }
        Command::Segment { input, labels, layout, wavelet, no_normalize } => segment_cmd(&cfg, input, labels.as_deref(), *layout, *wavelet, *no_normalize, out, &log),
        Command::Analyze { dataset, sample, against } => analyze(&read_dataset(dataset)?, *sample, *against, out),
        Command::TrainAe { dataset, xi, loss_variant, recon_weight, epochs } => {
            let mut ae_cfg = cfg.autoencoder.clone();
            ae_cfg.xi = xi.unwrap_or(ae_cfg.xi);
            ae_cfg.recon_weight = recon_weight.unwrap_or(ae_cfg.recon_weight);
            if let Some(v) = loss_variant {
                ae_cfg.loss_variant = match v {
                    LossArg::Corrected => LossVariant::CorrectedDistance,
                    LossArg::Literal => LossVariant::PaperLiteral,
                };
            }
            let mut tc = cfg.ae_train.clone();
            tc.epochs = epochs.unwrap_or(tc.epochs);
            let ds = read_dataset(dataset)?;
            let (n_t, n_s) = ds.sample_shape().ok_or_else(|| CliError::Data("dataset is empty".into()))?;
            let init = Autoencoder::<f32>::new(ae_cfg.clone(), n_t, n_s, tc.seed)?;
            let before = output_correlation_stats(&init, &ds)?;
            log(&format!("training autoencoder for {} epochs", tc.epochs));
            let outcome = train_autoencoder(&ds, &ae_cfg, &tc)?;
            let after = output_correlation_stats(&outcome.autoencoder, &ds)?;
            fs::write(out.join("autoencoder.ckpt"), save_checkpoint(&outcome.autoencoder.to_checkpoint()))?;
            let mut hist = String::from("epoch,reconstruction,contrastive,total\n");
            for r in &outcome.history {
                let _ = writeln!(hist, "{},{},{},{}", r.epoch, r.reconstruction, r.contrastive, r.total());
            }
            fs::write(out.join("ae_history.csv"), hist)?;
            let mut corr = String::from("stage,same_class_mean,cross_class_mean\n");
            for (stage, s) in [("init", before), ("final", after)] {
                let _ = writeln!(corr, "{stage},{},{}", s.same_class_mean, s.cross_class_mean);
            }
            fs::write(out.join("ae_correlation.csv"), corr)?;
            log(&format!("same-class output correlation {:.4} -> {:.4}", before.same_class_mean, after.same_class_mean));
            Ok(())
        }
        Command::Train { dataset, alpha, beta, epochs, ae, holdout_fraction } => train(&cfg, dataset, *alpha, *beta, *epochs, ae, *holdout_fraction, cli.quiet, out, &log),
        Command::Eval { dataset, checkpoint, holdout, ae, topn, per_class } => eval(dataset, checkpoint, holdout.as_deref(), ae, *topn, *per_class, out),
    }
}

fn read_csi(path: &Path) -> Result<CsiSequence, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(parse_csi_file(&bytes)?)
}

fn select(seq: &CsiSequence, layout: LayoutArg) -> Result<CsiSequence, CliError> {
    let layout = match layout {
        LayoutArg::Auto if seq.width() == 64 => SubcarrierLayout::bw20_default(),
        LayoutArg::Auto | LayoutArg::All => SubcarrierLayout::unselected(seq.width()),
        LayoutArg::Bw20 => SubcarrierLayout::bw20_default(),
        LayoutArg::Bw20NoPilots => SubcarrierLayout::bw20_without_pilots(),
    };
    Ok(select_subcarriers(seq, &layout)?)
}

fn synth(cli: &Cli, cfg: PipelineConfig, spec_file: Option<&Path>, out: &Path, log: &dyn Fn(&str)) -> Result<(), CliError> {
    let spec = match spec_file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", p.display())))?;
            let mut spec: SynthSpec = toml::from_str(&text).map_err(|e| CliError::Usage(format!("spec: {e}")))?;
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            spec
        }
        None => cfg.synth,
    };
    let gen = generate(&spec)?;
    fs::write(out.join("csi.csv"), write_csi_file(&gen.sequence))?;
    let names = spec.class_names();
    let mut truth = String::from("window_index,start_us,label,class\n");
    for (k, w) in gen.windows.iter().enumerate() {
        let _ = writeln!(truth, "{k},{},{},{}", (w.start_s * 1e6).round() as i64, w.label, names[w.label]);
    }
    fs::write(out.join("ground_truth.csv"), truth)?;
    log(&format!("{} windows, {} frames", gen.windows.len(), gen.sequence.len()));
    Ok(())
}

/// Labels per window index plus class names, from `ground_truth.csv`.
fn read_ground_truth(path: &Path) -> Result<(Vec<usize>, Vec<String>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some("window_index,start_us,label,class") {
        return Err(CliError::Data("ground truth header must be window_index,start_us,label,class".into()));
    }
    let mut labels = Vec::new();
    let mut names: Vec<Option<String>> = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
        let bad = || CliError::Data(format!("ground truth line {}: malformed row", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 || f[0].parse::<usize>().ok() != Some(labels.len()) {
            return Err(bad());
        }
        let label: usize = f[2].parse().map_err(|_| bad())?;
        if names.len() <= label {
            names.resize(label + 1, None);
        }
        names[label] = Some(f[3].to_string());
        labels.push(label);
    }
    let defaults = default_class_names();
    let names = names.into_iter().enumerate().map(|(i, n)| n.unwrap_or_else(|| defaults.get(i).cloned().unwrap_or_else(|| format!("class{i}")))).collect();
    Ok((labels, names))
}

#[allow(clippy::too_many_arguments)]
fn segment_cmd(cfg: &PipelineConfig, input: &Path, labels: Option<&Path>, layout: LayoutArg, wavelet: bool, no_normalize: bool, out: &Path, log: &dyn Fn(&str)) -> Result<(), CliError> {
    let seq = select(&read_csi(input)?, layout)?;
    let mut samples = segment(&seq, &cfg.segmentation)?;
    let class_names = match labels {
        Some(p) => {
            let (truth, names) = read_ground_truth(p)?;
            samples = label_segments(samples, &truth);
            names
        }
        None => default_class_names(),
    };
    let mut wcfg = cfg.wavelet.clone();
    wcfg.enabled |= wavelet;
    let mut report = String::from("window_index,frames,action,label\n");
    let mut processed = Vec::with_capacity(samples.len());
    for s in samples {
        let _ = writeln!(report, "{},{},{},{}", s.meta["window_index"], s.meta["frames"], s.meta["action"], s.label.map(|l| l.to_string()).unwrap_or_default());
        let s = if wcfg.enabled { denoise_sample(&s, &wcfg)? } else { s };
        processed.push(if no_normalize { s } else { normalize_sample(&s) });
    }
    let n = processed.len();
    write_dataset(out, &Dataset::new(processed, class_names)?)?;
    fs::write(out.join("segments.csv"), report)?;
    log(&format!("{n} samples written"));
    Ok(())
}

fn analyze(ds: &Dataset, sample: usize, against: Option<usize>, out: &Path) -> Result<(), CliError> {
    let get = |i: usize| ds.samples().get(i).ok_or_else(|| CliError::Data(format!("sample {i} out of range (dataset has {})", ds.len())));
    let a = get(sample)?;
    let data = |e: csi2dig_core::analysis::AnalysisError| CliError::Data(e.to_string());
    let temporal = temporal_corr_matrix(&a.values).map_err(data)?;
    let spatial = spatial_corr_matrix(&a.values).map_err(data)?;
    fs::write(out.join("temporal_corr.csv"), write_matrix_csv(&temporal.values, "s"))?;
    fs::write(out.join("spatial_corr.csv"), write_matrix_csv(&spatial.values, "r"))?;
    for (file, head, m) in [("temporal_profile.csv", "subcarrier", &temporal), ("spatial_profile.csv", "row", &spatial)] {
        let mut text = format!("{head},mean_corr\n");
        for (i, v) in column_mean_profile(m).iter().enumerate() {
            let _ = writeln!(text, "{i},{v}");
        }
        fs::write(out.join(file), text)?;
    }
    if let Some(j) = against {
        let b = get(j)?;
        let dtw = dtw_distance(&a.values, &b.values).map_err(data)?;
        let pcc = cross_mean_pcc(&a.values, &b.values).map_err(data)?;
        fs::write(out.join("comparison.csv"), format!("sample_a,sample_b,dtw_distance,cross_mean_pcc\n{sample},{j},{dtw},{pcc}\n"))?;
    }
    Ok(())
}

fn ae_path(arg: &str) -> Option<PathBuf> {
    (arg != "none").then(|| PathBuf::from(arg))
}

fn maybe_denoise(ds: Dataset, ae: Option<&Path>) -> Result<Dataset, CliError> {
    let Some(path) = ae else { return Ok(ds) };
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ae = Autoencoder::<f32>::from_checkpoint(&load_checkpoint(&bytes)?)?;
    let names = ds.class_names().to_vec();
    let samples = ds.samples().iter().map(|s| ae.denoise(s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(samples, names)?)
}

#[allow(clippy::too_many_arguments)]
fn train(cfg: &PipelineConfig, dataset: &Path, alpha: Option<f64>, beta: Option<f64>, epochs: Option<usize>, ae: &str, holdout: f64, quiet: bool, out: &Path, log: &dyn Fn(&str)) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&holdout) {
        return Err(CliError::Usage("--holdout-fraction must lie in [0, 1)".into()));
    }
    let ds = maybe_denoise(read_dataset(dataset)?, ae_path(ae).as_deref())?;
    let mut net_cfg = cfg.tsnet.clone();
    net_cfg.num_classes = ds.num_classes();
    match (alpha, beta) {
        (Some(a), Some(b)) => (net_cfg.alpha, net_cfg.beta) = (a, b),
        (Some(a), None) => (net_cfg.alpha, net_cfg.beta) = (a, 1.0 - a),
        (None, Some(b)) => (net_cfg.alpha, net_cfg.beta) = (1.0 - b, b),
        (None, None) => {}
    }
    let mut tc = cfg.train.clone();
    tc.epochs = epochs.unwrap_or(tc.epochs);
    let (train_idx, test_idx) = ds.stratified_split_indices(holdout, tc.seed);
    let (train_set, test_set) = (ds.subset(&train_idx), ds.subset(&test_idx));
    let progress = |r: &EpochRecord| {
        if !quiet {
            let eval = r.eval_top1.map(|v| format!(", held-out top-1 {v:.4}")).unwrap_or_default();
            eprintln!("epoch {}: loss {:.4}, train top-1 {:.4}{eval}", r.epoch, r.loss, r.train_top1);
        }
    };
    let opts = TrainOptions { eval_set: (!test_set.is_empty()).then_some(&test_set), eval_every: 10, progress: Some(&progress) };
    log(&format!("training on {} samples, holding out {}", train_set.len(), test_set.len()));
    let outcome = train_tsnet(&train_set, &net_cfg, &tc, &opts)?;
    fs::write(out.join("tsnet.ckpt"), save_checkpoint(&outcome.net.to_checkpoint()))?;
    let mut hist = String::from("epoch,loss,train_top1,eval_top1\n");
    for r in &outcome.history {
        let _ = writeln!(hist, "{},{},{},{}", r.epoch, r.loss, r.train_top1, r.eval_top1.map(|v| v.to_string()).unwrap_or_default());
    }
    fs::write(out.join("train_history.csv"), hist)?;
    let mut idx = String::from("index\n");
    for i in &test_idx {
        let _ = writeln!(idx, "{i}");
    }
    fs::write(out.join("holdout.csv"), idx)?;
    Ok(())
}

fn read_indices(path: &Path, len: usize) -> Result<Vec<usize>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next() != Some("index") {
        return Err(CliError::Data("holdout file must start with an `index` header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| match l.parse::<usize>() {
            Ok(i) if i < len => Ok(i),
            _ => Err(CliError::Data(format!("holdout index {l:?} invalid for a dataset of {len} samples"))),
        })
        .collect()
}

fn eval(dataset: &Path, checkpoint: &Path, holdout: Option<&Path>, ae: &str, topn: usize, per_class: bool, out: &Path) -> Result<(), CliError> {
    let mut ds = read_dataset(dataset)?;
    if let Some(p) = holdout {
        ds = ds.subset(&read_indices(p, ds.len())?);
    }
    let ds = maybe_denoise(ds, ae_path(ae).as_deref())?;
    let bytes = fs::read(checkpoint).map_err(|e| CliError::Data(format!("{}: {e}", checkpoint.display())))?;
    let net = TsNet::<f32>::from_checkpoint(&load_checkpoint(&bytes)?)?;
    if net.config.num_classes != ds.num_classes() {
        return Err(CliError::Data(format!("shape mismatch: checkpoint has {} classes, dataset {}", net.config.num_classes, ds.num_classes())));
    }
    let report = evaluate_topn(&net, &ds, topn)?;
    let mut text = String::from("class");
    for n in 1..=topn {
        let _ = write!(text, ",P{n}");
    }
    text.push('\n');
    let row = |text: &mut String, name: &str, p: Option<&Vec<f64>>| {
        text.push_str(name);
        for n in 0..topn {
            let _ = write!(text, ",{}", p.map(|p| p[n].to_string()).unwrap_or_default());
        }
        text.push('\n');
    };
    row(&mut text, "all", Some(&report.p));
    if per_class {
        for (name, p) in ds.class_names().iter().zip(&report.per_class) {
            row(&mut text, name, p.as_ref());
        }
    }
    fs::write(out.join("eval.csv"), text)?;
    Ok(())
}
