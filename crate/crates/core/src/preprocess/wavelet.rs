//! Periodized orthogonal DWT with the 8-tap Daubechies filter and
//! soft universal-threshold denoising.

use crate::model::Sample;

use super::{PreprocessError, WaveletConfig};

/// Daubechies scaling (reconstruction low-pass) filter, 4 vanishing moments.
pub const DB4_LOWPASS: [f64; 8] = [
    0.230_377_813_308_855_23,
    0.714_846_570_552_541_5,
    0.630_880_767_929_590_4,
    -0.027_983_769_416_983_85,
    -0.187_034_811_718_881_14,
    0.030_841_381_835_986_965,
    0.032_883_011_666_982_945,
    -0.010_597_401_784_997_278,
];

fn highpass(h: &[f64]) -> Vec<f64> {
    let l = h.len();
    (0..l).map(|m| if m % 2 == 0 { h[l - 1 - m] } else { -h[l - 1 - m] }).collect()
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for k in 0..half {
        for m in 0..h.len() {
            let v = x[(2 * k + m) % n];
            a[k] += h[m] * v;
            d[k] += g[m] * v;
        }
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut x = vec![0.0; n];
    for k in 0..a.len() {
        for m in 0..h.len() {
            x[(2 * k + m) % n] += h[m] * a[k] + g[m] * d[k];
        }
    }
    x
}

/// Multi-level decomposition. `x.len()` must be divisible by `2^levels`.
/// Returns the coarsest approximation and detail bands, finest first.
pub fn dwt(x: &[f64], levels: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert!(levels == 0 || x.len() % (1 << levels) == 0, "length must be divisible by 2^levels");
    let g = highpass(&DB4_LOWPASS);
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, &DB4_LOWPASS, &g);
        details.push(d);
        approx = a;
    }
    (approx, details)
}

pub fn idwt(approx: &[f64], details: &[Vec<f64>]) -> Vec<f64> {
    let g = highpass(&DB4_LOWPASS);
    details.iter().rev().fold(approx.to_vec(), |a, d| synthesis_step(&a, d, &DB4_LOWPASS, &g))
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `sigma * sqrt(2 ln n)` with `sigma = median(|finest detail|) / 0.6745`.
pub fn universal_threshold(finest_detail: &[f64], n: usize) -> f64 {
    let sigma = median(&finest_detail.iter().map(|d| d.abs()).collect::<Vec<_>>()) / 0.6745;
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

/// Half-sample symmetric extension to a multiple of `block`.
fn pad_symmetric(x: &[f64], block: usize) -> Vec<f64> {
    let n = x.len();
    let target = n.div_ceil(block) * block;
    let mut out = x.to_vec();
    let mut i = 0;
    while out.len() < target {
        // reflect back and forth over the original samples
        let period = 2 * n;
        let p = (n + i) % period;
        out.push(if p < n { x[p] } else { x[period - 1 - p] });
        i += 1;
    }
    out
}

fn check_length(len: usize, levels: usize) -> Result<(), PreprocessError> {
    if levels == 0 || levels >= usize::BITS as usize || len < (1usize << levels) {
        return Err(PreprocessError::SeriesTooShort { len, levels });
    }
    Ok(())
}

/// Decompose, soft-threshold every detail band at `threshold`, reconstruct.
pub fn wavelet_denoise_with_threshold(series: &[f64], levels: usize, threshold: f64) -> Result<Vec<f64>, PreprocessError> {
    check_length(series.len(), levels)?;
    Ok(denoise_padded(series, levels, |_| threshold))
}

fn denoise_padded(series: &[f64], levels: usize, threshold: impl Fn(&[Vec<f64>]) -> f64) -> Vec<f64> {
    let padded = pad_symmetric(series, 1 << levels);
    let (approx, mut details) = dwt(&padded, levels);
    let t = threshold(&details);
    if t > 0.0 {
        for band in &mut details {
            for d in band.iter_mut() {
                *d = d.signum() * (d.abs() - t).max(0.0);
            }
        }
    }
    let mut out = idwt(&approx, &details);
    out.truncate(series.len());
    out
}

pub fn wavelet_denoise(series: &[f64], cfg: &WaveletConfig) -> Result<Vec<f64>, PreprocessError> {
    check_length(series.len(), cfg.levels)?;
    let n = series.len();
    Ok(denoise_padded(series, cfg.levels, |details| universal_threshold(&details[0], n)))
}

/// Applies [`wavelet_denoise`] to every column of the sample.
pub fn denoise_sample(s: &Sample, cfg: &WaveletConfig) -> Result<Sample, PreprocessError> {
    let mut out = s.clone();
    for c in 0..s.values.cols() {
        out.values.set_column(c, &wavelet_denoise(&s.values.column(c), cfg)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn filter_is_orthonormal() {
        let h = DB4_LOWPASS;
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-12);
        assert!((h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn round_trip_without_threshold() {
        for len in [8usize, 9, 16, 31, 64, 200, 257] {
            let x: Vec<f64> = (0..len).map(|i| (i as f64 * 0.37).sin() * 10.0 + (i % 5) as f64).collect();
            let y = wavelet_denoise_with_threshold(&x, 3, 0.0).unwrap();
            assert_eq!(y.len(), len);
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() < 1e-9, "len {len}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn constant_series_unchanged() {
        let x = vec![4.2; 128];
        let y = wavelet_denoise(&x, &WaveletConfig::default()).unwrap();
        assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn too_short() {
        assert_eq!(wavelet_denoise(&[1.0; 7], &WaveletConfig::default()), Err(PreprocessError::SeriesTooShort { len: 7, levels: 3 }));
    }

    #[test]
    fn noisy_sinusoid_gets_closer_to_clean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let clean: Vec<f64> = (0..512).map(|i| 2.0 * (2.0 * std::f64::consts::PI * i as f64 / 128.0).sin()).collect();
        let noisy: Vec<f64> = clean.iter().map(|c| c + noise.sample(&mut rng)).collect();
        let rmse = |a: &[f64]| (a.iter().zip(&clean).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt();
        let den = wavelet_denoise(&noisy, &WaveletConfig { enabled: true, ..Default::default() }).unwrap();
        assert!(rmse(&den) < rmse(&noisy), "{} !< {}", rmse(&den), rmse(&noisy));
    }
}
