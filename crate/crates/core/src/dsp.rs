//! Shared numeric building blocks: orthonormal DCT-II, biased autocorrelation,
//! Levinson-Durbin, analytic-signal envelopes and analysis windows.

use std::cell::RefCell;
use std::f64::consts::PI;

use rustdct::DctPlanner;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

thread_local! {
    static FFT_PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static DCT_PLANNER: RefCell<DctPlanner<f64>> = RefCell::new(DctPlanner::new());
}

/// In-place complex FFT using a per-thread cached planner.
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let plan = FFT_PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(buf.len())
        } else {
            p.plan_fft_forward(buf.len())
        }
    });
    plan.process(buf);
}

/// A mono waveform with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSegment {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Biased autocorrelation estimate `r[0..=max_lag]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationSequence {
    values: Vec<f64>,
    source_length: usize,
}

impl AutocorrelationSequence {
    /// Wraps precomputed lags. `values[0]` is the zero-lag term.
    pub fn from_values(values: Vec<f64>, source_length: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            values,
            source_length,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn source_length(&self) -> usize {
        self.source_length
    }
}

/// All-pole model `G / A(z)` with `A(z) = 1 - sum_m alpha_m z^-m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AllPoleModel {
    gain: f64,
    coefficients: Vec<f64>,
}

impl AllPoleModel {
    pub fn new(gain: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidConfig(format!("model gain must be positive, got {gain}")));
        }
        Ok(Self { gain, coefficients })
    }

    /// Builds a model from reflection coefficients (step-up recursion).
    pub fn from_reflection_coefficients(gain: f64, reflections: &[f64]) -> Result<Self> {
        let mut alpha: Vec<f64> = Vec::with_capacity(reflections.len());
        for &k in reflections {
            let prev = alpha.clone();
            let i = prev.len();
            for j in 0..i {
                alpha[j] = prev[j] - k * prev[i - 1 - j];
            }
            alpha.push(k);
        }
        Self::new(gain, alpha)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Prediction coefficients `alpha_1..alpha_p`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    /// Final prediction error power, `G^2`.
    pub fn prediction_error(&self) -> f64 {
        self.gain * self.gain
    }

    /// Coefficients of `A(z)` including the leading one: `[1, -alpha_1, .., -alpha_p]`.
    pub fn polynomial(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.coefficients.iter().map(|a| -a))
            .collect()
    }

    /// Power response `G^2 / |A(e^{jw})|^2` at a single frequency.
    pub fn power_at(&self, omega: f64) -> f64 {
        let a: Complex64 = self
            .polynomial()
            .iter()
            .enumerate()
            .map(|(m, &c)| c * Complex64::from_polar(1.0, -omega * m as f64))
            .sum();
        self.prediction_error() / a.norm_sqr()
    }

    /// Reflection coefficients via the step-down recursion. Returns `None` if
    /// some intermediate reflection has unit magnitude.
    pub fn reflection_coefficients(&self) -> Option<Vec<f64>> {
        let mut alpha = self.coefficients.clone();
        let mut out = vec![0.0; alpha.len()];
        for i in (0..alpha.len()).rev() {
            let k = alpha[i];
            out[i] = k;
            let denom = 1.0 - k * k;
            if denom <= 0.0 || !denom.is_finite() {
                return None;
            }
            let prev: Vec<f64> = (0..i)
                .map(|j| (alpha[j] + k * alpha[i - 1 - j]) / denom)
                .collect();
            alpha = prev;
        }
        Some(out)
    }

    /// Schur-Cohn test: every reflection coefficient strictly inside (-1, 1).
    pub fn is_minimum_phase(&self) -> bool {
        self.reflection_coefficients()
            .is_some_and(|ks| ks.iter().all(|k| k.abs() < 1.0))
    }
}

/// Squared Hilbert envelope samples over a known duration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSignal {
    pub values: Vec<f64>,
    pub duration: f64,
}

/// Orthonormal DCT-II.
pub fn dct(x: &[f64]) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len();
    let mut buf = x.to_vec();
    let plan = DCT_PLANNER.with(|p| p.borrow_mut().plan_dct2(n));
    plan.process_dct2(&mut buf);
    let s0 = (1.0 / n as f64).sqrt();
    let s = (2.0 / n as f64).sqrt();
    buf[0] *= s0;
    buf[1..].iter_mut().for_each(|v| *v *= s);
    Ok(buf)
}

/// Inverse of [`dct`] (orthonormal DCT-III).
pub fn idct(coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    // rustdct's DCT-III halves the DC term; undo the orthonormal weights to match.
    buf[0] *= 2.0 * (1.0 / n as f64).sqrt();
    let s = (2.0 / n as f64).sqrt();
    buf[1..].iter_mut().for_each(|v| *v *= s);
    let plan = DCT_PLANNER.with(|p| p.borrow_mut().plan_dct3(n));
    plan.process_dct3(&mut buf);
    Ok(buf)
}

/// Biased autocorrelation `r[k] = (1/N) sum_n s[n] s[n+k]` for `k = 0..=max_lag`.
///
/// Leading and trailing zeros are skipped, which makes sparse sub-band
/// sequences cheap without changing the estimate.
pub fn autocorrelate(sequence: &[f64], max_lag: usize) -> Result<AutocorrelationSequence> {
    let n = sequence.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if max_lag >= n {
        return Err(Error::OrderTooLarge {
            order: max_lag,
            available: n,
        });
    }
    let start = sequence.iter().position(|&v| v != 0.0);
    let values = match start {
        None => vec![0.0; max_lag + 1],
        Some(start) => {
            let end = sequence.iter().rposition(|&v| v != 0.0).unwrap() + 1;
            let s = &sequence[start..end];
            (0..=max_lag)
                .map(|k| {
                    if k >= s.len() {
                        0.0
                    } else {
                        s[..s.len() - k]
                            .iter()
                            .zip(&s[k..])
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                            / n as f64
                    }
                })
                .collect()
        }
    };
    Ok(AutocorrelationSequence {
        values,
        source_length: n,
    })
}

/// Levinson-Durbin recursion: fits the order-`r.max_lag()` forward predictor.
pub fn levinson_durbin(r: &AutocorrelationSequence) -> Result<AllPoleModel> {
    let r = r.values();
    if r[0].is_nan() || r[0] <= 0.0 {
        return Err(Error::ZeroEnergy(r[0]));
    }
    let order = r.len() - 1;
    let mut alpha = vec![0.0; order];
    let mut prev = vec![0.0; order];
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| alpha[j - 1] * r[i - j]).sum();
        let k = (r[i] - acc) / err;
        if k.is_nan() || k.abs() >= 1.0 {
            return Err(Error::UnstableModel {
                order: i,
                reflection: k,
            });
        }
        prev[..i - 1].copy_from_slice(&alpha[..i - 1]);
        for j in 1..i {
            alpha[j - 1] = prev[j - 1] - k * prev[i - j - 1];
        }
        alpha[i - 1] = k;
        err *= 1.0 - k * k;
        if err.is_nan() || err <= 0.0 {
            return Err(Error::UnstableModel {
                order: i,
                reflection: k,
            });
        }
    }
    AllPoleModel::new(err.sqrt(), alpha)
}

/// Analytic signal via the frequency-domain method.
pub fn analytic_signal(x: &[f64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, false);
    // keep DC (and Nyquist for even n), double positive, zero negative
    let half = n.div_ceil(2);
    for v in buf.iter_mut().take(half).skip(1) {
        *v *= 2.0;
    }
    let neg_start = if n.is_multiple_of(2) { n / 2 + 1 } else { half };
    for v in buf.iter_mut().skip(neg_start) {
        *v = Complex64::new(0.0, 0.0);
    }
    fft_in_place(&mut buf, true);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    Ok(buf)
}

/// Squared magnitude of the analytic signal.
pub fn hilbert_envelope(segment: &AudioSegment) -> Result<EnvelopeSignal> {
    let values = analytic_signal(segment.samples())?
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    Ok(EnvelopeSignal {
        values,
        duration: segment.duration_seconds(),
    })
}

fn symmetric_cosine_window(length: usize, a0: f64) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::InvalidLength(length));
    }
    let denom = (length - 1) as f64;
    let mut w = vec![0.0; length];
    for n in 0..length.div_ceil(2) {
        let v = a0 - (1.0 - a0) * (2.0 * PI * n as f64 / denom).cos();
        w[n] = v;
        w[length - 1 - n] = v;
    }
    Ok(w)
}

/// Symmetric von Hann window `0.5 - 0.5 cos(2 pi n / (N - 1))`.
pub fn von_hann_window(length: usize) -> Result<Vec<f64>> {
    let mut w = symmetric_cosine_window(length, 0.5)?;
    if length % 2 == 1 {
        w[length / 2] = 1.0;
    }
    Ok(w)
}

/// Symmetric Hamming window `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming_window(length: usize) -> Result<Vec<f64>> {
    symmetric_cosine_window(length, 0.54)
}
