#![allow(dead_code)]

use std::f64::consts::PI;

use fdlp::dsp::AudioSegment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect()
}

pub fn segment(samples: Vec<f64>, sr: u32) -> AudioSegment {
    AudioSegment::new(samples, sr).unwrap()
}

/// `(1 + depth cos(2 pi fm t)) cos(2 pi fc t)`.
pub fn am_tone(carrier: f64, modulator: f64, depth: f64, seconds: f64, sr: u32) -> Vec<f64> {
    let n = (seconds * sr as f64).round() as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr as f64;
            (1.0 + depth * (2.0 * PI * modulator * t).cos()) * (2.0 * PI * carrier * t).cos()
        })
        .collect()
}

pub fn tone(freq: f64, seconds: f64, sr: u32) -> Vec<f64> {
    am_tone(freq, 0.0, 0.0, seconds, sr)
}

/// Noise through a few resonances with a slowly varying syllabic envelope.
pub fn speechlike(seconds: f64, sr: u32, seed: u64) -> Vec<f64> {
    let n = (seconds * sr as f64).round() as usize;
    let noise = white_noise(n, 1.0, seed);
    let mut out = vec![0.0; n];
    for &(f, r) in &[(500.0, 0.97), (1500.0, 0.95), (2500.0, 0.93)] {
        let theta = 2.0 * PI * f / sr as f64;
        let (a1, a2) = (2.0 * r * f64::cos(theta), -r * r);
        let (mut y1, mut y2) = (0.0, 0.0);
        for i in 0..n {
            let y = noise[i] + a1 * y1 + a2 * y2;
            out[i] += 0.05 * y;
            y2 = y1;
            y1 = y;
        }
    }
    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / sr as f64;
        *v *= 0.6 + 0.4 * (2.0 * PI * 4.0 * t).sin();
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided cepstrum of `G^2 / |A|^2` on an `n`-point uniform grid over the
/// full circle, by direct FFT.
pub fn dense_cepstrum(gain: f64, polynomial: &[f64], n: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &c) in polynomial.iter().enumerate() {
        buf[i % n].re += c;
    }
    planner.plan_fft_forward(n).process(&mut buf);
    let mut logs: Vec<Complex64> = buf
        .iter()
        .map(|a| Complex64::new((gain * gain).ln() - a.norm_sqr().ln(), 0.0))
        .collect();
    planner.plan_fft_inverse(n).process(&mut logs);
    logs.iter().map(|z| z.re / n as f64).collect()
}

/// Brute-force unnormalised DCT-II, `X[j] = sum_k x[k] cos(pi j (k + 1/2) / n)`.
pub fn brute_dct2(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum()
        })
        .collect()
}

/// Welch two-sample t test; returns the two-sided p value.
pub fn welch_p_value(a: &[f64], b: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    2.0 * (1.0 - dist.cdf(t.abs()))
}
