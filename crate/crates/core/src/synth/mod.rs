//! Seeded synthetic CSI generator with known per-window labels.
//!
//! Each 2-second window belongs to one class. A non-silence window adds a
//! class-specific subcarrier signature, scaled by a smooth bump in time, on
//! top of per-subcarrier baselines, slow drift, Gaussian noise and rare
//! broadband spikes. Packets arrive with jittered spacing and are dropped
//! independently. Class identity lives in the signature across subcarriers;
//! the bump's shape is shared by all classes up to a small width change.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Triangular};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{default_class_names, Bandwidth, CsiFrame, CsiSequence, Dataset, SubcarrierLayout};
use crate::preprocess::{normalize_sample, segment, select_subcarriers, PreprocessError, SegmentationConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("segmentation discarded every window")]
    AllWindowsDropped,
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    /// The last class is silence (no signature).
    pub num_classes: usize,
    /// Raw subcarriers per frame; 64 produces a 20 MHz layout.
    pub subcarriers: usize,
    /// Mode of the per-packet rate distribution.
    pub rate_hz: f64,
    /// Per-packet rates are drawn from a triangular law on this range.
    pub rate_jitter: (f64, f64),
    pub burst_amplitude: f64,
    pub noise_sigma: f64,
    pub drop_probability: f64,
    pub window_seconds: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Peak of the slow common baseline wander.
    pub drift_amplitude: f64,
    /// Half-width of the uniform shift of the bump center within a window.
    pub envelope_jitter_s: f64,
    pub spike_probability: f64,
    pub spike_amplitude: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            num_classes: 11,
            subcarriers: 64,
            rate_hz: 100.0,
            rate_jitter: (60.0, 150.0),
            burst_amplitude: 4.0,
            noise_sigma: 0.5,
            drop_probability: 0.05,
            window_seconds: 2.0,
            repetitions: 30,
            seed: 7,
            drift_amplitude: 0.5,
            envelope_jitter_s: 0.2,
            spike_probability: 0.005,
            spike_amplitude: 3.0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.into()));
        let (lo, hi) = self.rate_jitter;
        if self.num_classes < 1 {
            return bad("num_classes must be positive");
        }
        if self.subcarriers < 2 {
            return bad("need at least 2 subcarriers");
        }
        if !(lo > 0.0 && lo <= self.rate_hz && self.rate_hz <= hi && hi.is_finite()) {
            return bad("rate_jitter must satisfy 0 < min <= rate_hz <= max");
        }
        if !(0.0..1.0).contains(&self.drop_probability) {
            return bad("drop_probability must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.spike_probability) {
            return bad("spike_probability must lie in [0, 1]");
        }
        if !(self.window_seconds > 0.0 && self.window_seconds.is_finite()) {
            return bad("window_seconds must be positive");
        }
        if [self.burst_amplitude, self.noise_sigma, self.drift_amplitude, self.envelope_jitter_s, self.spike_amplitude].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return bad("amplitudes, noise and jitter must be finite and non-negative");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be positive");
        }
        Ok(())
    }

    pub fn silence_class(&self) -> usize {
        self.num_classes - 1
    }

    /// Raw layout of generated frames and the layout selection should use.
    pub fn layouts(&self) -> (SubcarrierLayout, SubcarrierLayout) {
        if self.subcarriers == 64 {
            (SubcarrierLayout::new(Bandwidth::Bw20, 64, []).expect("static layout"), SubcarrierLayout::bw20_default())
        } else {
            (SubcarrierLayout::unselected(self.subcarriers), SubcarrierLayout::unselected(self.subcarriers))
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        if self.num_classes == 11 {
            default_class_names()
        } else {
            (0..self.num_classes).map(|c| if c + 1 == self.num_classes { "silence".into() } else { format!("class{c}") }).collect()
        }
    }
}

/// Fixed per-run structure drawn once from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthModel {
    pub baselines: Vec<f64>,
    /// One signature per class, root-mean-square 1; silence is all zeros.
    pub signatures: Vec<Vec<f64>>,
    pub drift_period_s: f64,
    pub drift_phase: f64,
}

/// Largest |cosine| allowed between two class signatures.
pub const MAX_SIGNATURE_COSINE: f64 = 0.5;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

impl SynthModel {
    pub fn new(spec: &SynthSpec) -> Self {
        let mut rng = stream(spec.seed, 0);
        let s = spec.subcarriers;
        let baselines = (0..s).map(|_| rng.random_range(20.0..40.0)).collect();
        let mut signatures: Vec<Vec<f64>> = Vec::with_capacity(spec.num_classes);
        for _ in 0..spec.silence_class() {
            let g = loop {
                let mut g: Vec<f64> = (0..s).map(|_| StandardNormal.sample(&mut rng)).collect();
                let rms = (g.iter().map(|x| x * x).sum::<f64>() / s as f64).sqrt();
                g.iter_mut().for_each(|x| *x /= rms);
                if signatures.iter().all(|h| cosine(&g, h).abs() < MAX_SIGNATURE_COSINE) {
                    break g;
                }
            };
            signatures.push(g);
        }
        signatures.push(vec![0.0; s]);
        Self { baselines, signatures, drift_period_s: rng.random_range(15.0..30.0), drift_phase: rng.random_range(0.0..std::f64::consts::TAU) }
    }

    /// Noise-free, spike-free amplitude of subcarrier `s` at absolute time
    /// `t` inside window `w`.
    pub fn clean_amplitude(&self, spec: &SynthSpec, w: &WindowTruth, t: f64, s: usize) -> f64 {
        let drift = spec.drift_amplitude * (std::f64::consts::TAU * t / self.drift_period_s + self.drift_phase).sin();
        let env = (-0.5 * ((t - w.envelope_center_s) / w.envelope_width_s).powi(2)).exp();
        self.baselines[s] + drift + spec.burst_amplitude * self.signatures[w.label][s] * env
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowTruth {
    pub label: usize,
    pub start_s: f64,
    pub envelope_center_s: f64,
    pub envelope_width_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub sequence: CsiSequence,
    pub windows: Vec<WindowTruth>,
    pub model: SynthModel,
}

impl SynthOutput {
    pub fn labels(&self) -> Vec<usize> {
        self.windows.iter().map(|w| w.label).collect()
    }
}

/// Independent random streams per purpose, so e.g. changing the noise level
/// leaves packet timing untouched.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Generates `repetitions` windows per class in shuffled order. The first
/// packet sits at time 0 and is never dropped, so window `k` covers
/// `[k W, (k+1) W)` for a segmenter anchored at the first frame.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput, SynthError> {
    spec.validate()?;
    let model = SynthModel::new(spec);
    let (raw_layout, _) = spec.layouts();
    let w_s = spec.window_seconds;

    let mut sched = stream(spec.seed, 1);
    let mut labels: Vec<usize> = (0..spec.num_classes).flat_map(|c| std::iter::repeat_n(c, spec.repetitions)).collect();
    labels.shuffle(&mut sched);
    let windows: Vec<WindowTruth> = labels
        .iter()
        .enumerate()
        .map(|(k, &label)| {
            let start_s = k as f64 * w_s;
            let shift = if spec.envelope_jitter_s > 0.0 { sched.random_range(-spec.envelope_jitter_s..=spec.envelope_jitter_s) } else { 0.0 };
            WindowTruth { label, start_s, envelope_center_s: start_s + w_s / 2.0 + shift, envelope_width_s: 0.12 * w_s * (1.0 + 0.02 * label as f64) }
        })
        .collect();

    let (lo, hi) = spec.rate_jitter;
    let rate = if hi > lo { Some(Triangular::new(lo, hi, spec.rate_hz).map_err(|e| SynthError::InvalidSpec(e.to_string()))?) } else { None };
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let mut timing = stream(spec.seed, 2);
    let mut drops = stream(spec.seed, 3);
    let mut noise_rng = stream(spec.seed, 4);
    let mut spikes = stream(spec.seed, 5);

    let total_us = (windows.len() as f64 * w_s * 1e6).round() as i64;
    let window_us = (w_s * 1e6).round() as i64;
    let mut frames = Vec::new();
    let mut t_us = 0i64;
    while t_us < total_us {
        let keep = t_us == 0 || drops.random::<f64>() >= spec.drop_probability;
        if keep {
            let w = &windows[((t_us / window_us) as usize).min(windows.len() - 1)];
            let t = t_us as f64 * 1e-6;
            let spike = if spikes.random::<f64>() < spec.spike_probability { spec.spike_amplitude * spikes.random_range(0.5..1.5) } else { 0.0 };
            let amplitudes = (0..spec.subcarriers)
                .map(|s| {
                    let n = if spec.noise_sigma > 0.0 { noise.sample(&mut noise_rng) } else { 0.0 };
                    // amplitudes are magnitudes
                    (model.clean_amplitude(spec, w, t, s) + n + spike).max(0.0)
                })
                .collect();
            frames.push(CsiFrame { timestamp_us: t_us, source_id: "synth".into(), amplitudes });
        }
        let r = rate.as_ref().map_or(spec.rate_hz, |d| d.sample(&mut timing));
        t_us += ((1e6 / r).round() as i64).max(1);
    }
    Ok(SynthOutput { sequence: CsiSequence::new(raw_layout, frames).map_err(PreprocessError::from)?, windows, model })
}

/// Per-class window counts before and after segmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub class_names: Vec<String>,
    pub generated: Vec<usize>,
    pub kept: Vec<usize>,
}

impl FixtureReport {
    pub fn discarded(&self) -> usize {
        self.generated.iter().sum::<usize>() - self.kept.iter().sum::<usize>()
    }
}

/// Labels segmented samples by their `window_index` metadata.
pub fn label_segments(samples: Vec<crate::model::Sample>, labels: &[usize]) -> Vec<crate::model::Sample> {
    samples
        .into_iter()
        .filter_map(|mut s| {
            let k: usize = s.meta.get("window_index")?.parse().ok()?;
            s.label = Some(*labels.get(k)?);
            Some(s)
        })
        .collect()
}

/// generate, select subcarriers, segment at `n_norm` rows, z-score columns.
pub fn make_fixture_dataset(spec: &SynthSpec, n_norm: usize) -> Result<(Dataset, FixtureReport), SynthError> {
    let out = generate(spec)?;
    let (_, layout) = spec.layouts();
    let selected = select_subcarriers(&out.sequence, &layout)?;
    let cfg = SegmentationConfig { window_seconds: spec.window_seconds, n_norm, ..Default::default() };
    let labels = out.labels();
    let samples: Vec<_> = label_segments(segment(&selected, &cfg)?, &labels).iter().map(normalize_sample).collect();
    if samples.is_empty() {
        return Err(SynthError::AllWindowsDropped);
    }
    let mut generated = vec![0; spec.num_classes];
    let mut kept = vec![0; spec.num_classes];
    labels.iter().for_each(|&l| generated[l] += 1);
    samples.iter().filter_map(|s| s.label).for_each(|l| kept[l] += 1);
    let names = spec.class_names();
    let dataset = Dataset::new(samples, names.clone()).map_err(PreprocessError::from)?;
    Ok((dataset, FixtureReport { class_names: names, generated, kept }))
}
