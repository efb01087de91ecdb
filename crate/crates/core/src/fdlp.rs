//! All-pole modelling of DCT-domain sequences and the modulation-domain
//! operations built on top of it.
//!
//! Conventions used throughout:
//!
//! * the model is `G / A(z)` with `A(z) = 1 - sum_m alpha_m z^-m`;
//! * the FDLP response is the power response `F(w) = G^2 / |A(e^{jw})|^2`,
//!   where `w in [0, pi)` indexes time across the analysis window;
//! * the modulation spectrum `M` is the one-sided cepstrum of `G / A(z)`, so
//!   `log F(w) = 2 * (M[0] + sum_{m >= 1} M[m] cos(m w))`. The factor of two
//!   comes from `F` being a squared magnitude. With this convention the
//!   recursion `M[m] = alpha_m + sum_{i=1}^{m-1} (i/m) alpha_{m-i} M[i]`
//!   holds with `M[0] = log G`, and `M[m]` for `m >= 1` equals the `m`-th
//!   inverse-DTFT coefficient of `log F`. The zeroth inverse-DTFT
//!   coefficient of `log F` is `2 M[0]`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::dsp::{autocorrelate, fft_in_place, levinson_durbin, AllPoleModel};
use crate::error::{Error, Result};

/// Uniform sampling of `[0, pi)`: `w_k = pi * (k + offset) / n_points`.
///
/// The default offset of one half places each sample at the centre of its
/// frame, so frame `k` of a `T`-second window sits at `(k + 0.5) T / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub n_points: usize,
    pub offset: f64,
}

impl FrequencyGrid {
    pub fn new(n_points: usize, offset: f64) -> Self {
        Self { n_points, offset }
    }

    pub fn centered(n_points: usize) -> Self {
        Self::new(n_points, 0.5)
    }

    pub fn omega(&self, k: usize) -> f64 {
        PI * (k as f64 + self.offset) / self.n_points as f64
    }
}

/// Evaluates `sum_m c[m] e^{-j m w_k}` on the grid with one FFT of length
/// `2 n`. Coefficients beyond `2 n` are folded in exactly.
pub(crate) fn dtft_on_grid(coeffs: &[f64], grid: &FrequencyGrid) -> Vec<Complex64> {
    let n = grid.n_points;
    let len = 2 * n;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let step = -PI * grid.offset / n as f64;
    for (m, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            buf[m % len] += c * Complex64::from_polar(1.0, step * m as f64);
        }
    }
    fft_in_place(&mut buf, false);
    buf.truncate(n);
    buf
}

/// Model power response sampled across the analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct FdlpResponse {
    pub values: Vec<f64>,
    pub duration: Option<f64>,
    pub grid: FrequencyGrid,
}

impl FdlpResponse {
    pub fn n_points(&self) -> usize {
        self.values.len()
    }
}

/// Modulation spectrum `M[0..K]` of a window of `window_duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpectrum {
    coefficients: Vec<f64>,
    window_duration: f64,
}

impl ModulationSpectrum {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn window_duration(&self) -> f64 {
        self.window_duration
    }

    /// Modulation frequency of coefficient `m`, in Hz.
    pub fn frequency_of(&self, m: usize) -> f64 {
        m as f64 / (2.0 * self.window_duration)
    }
}

/// Modulation-domain weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifter {
    weights: Vec<f64>,
    band: Option<(usize, usize)>,
}

impl Lifter {
    /// Arbitrary real weights.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        Self {
            weights,
            band: None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Inclusive `(a, b)` pass band, for binary lifters.
    pub fn band(&self) -> Option<(usize, usize)> {
        self.band
    }

    pub fn apply(&self, spectrum: &ModulationSpectrum) -> Result<ModulationSpectrum> {
        if self.weights.len() != spectrum.len() {
            return Err(Error::ShapeMismatch {
                expected: spectrum.len(),
                actual: self.weights.len(),
            });
        }
        Ok(ModulationSpectrum {
            coefficients: spectrum
                .coefficients
                .iter()
                .zip(&self.weights)
                .map(|(m, g)| m * g)
                .collect(),
            window_duration: spectrum.window_duration,
        })
    }
}

/// Linear prediction of a (sub-band) DCT sequence.
pub fn fit_fdlp_model(dct_band: &[f64], order: usize) -> Result<AllPoleModel> {
    if order >= dct_band.len() {
        return Err(Error::OrderTooLarge {
            order,
            available: dct_band.len(),
        });
    }
    levinson_durbin(&autocorrelate(dct_band, order)?)
}

/// `G^2 / |A(e^{jw})|^2` on the frame-centred grid of `n_points`.
pub fn fdlp_response(model: &AllPoleModel, n_points: usize) -> Result<FdlpResponse> {
    fdlp_response_on_grid(model, FrequencyGrid::centered(n_points))
}

pub fn fdlp_response_on_grid(model: &AllPoleModel, grid: FrequencyGrid) -> Result<FdlpResponse> {
    if grid.n_points == 0 {
        return Err(Error::InvalidLength(0));
    }
    let g2 = model.prediction_error();
    let values = dtft_on_grid(&model.polynomial(), &grid)
        .iter()
        .map(|a| g2 / a.norm_sqr())
        .collect();
    Ok(FdlpResponse {
        values,
        duration: None,
        grid,
    })
}

/// Modulation spectrum by the cepstral recursion on the model coefficients.
pub fn modulation_spectrum(
    model: &AllPoleModel,
    n_coeffs: usize,
    window_duration: f64,
) -> Result<ModulationSpectrum> {
    if n_coeffs == 0 {
        return Err(Error::InvalidLength(0));
    }
    let alpha = model.coefficients();
    let p = alpha.len();
    let mut m_coef = vec![0.0; n_coeffs];
    m_coef[0] = model.gain().ln();
    for m in 1..n_coeffs {
        let mut acc = if m <= p { alpha[m - 1] } else { 0.0 };
        let lo = if m > p { m - p } else { 1 };
        for i in lo..m {
            acc += (i as f64 / m as f64) * alpha[m - i - 1] * m_coef[i];
        }
        m_coef[m] = acc;
    }
    debug_assert_eq!(m_coef[0], model.gain().ln());
    Ok(ModulationSpectrum {
        coefficients: m_coef,
        window_duration,
    })
}

/// Number of coefficients covering modulations up to `max_modulation_hz`:
/// `ceil(2 F_m T)`.
pub fn modulation_coefficient_count(max_modulation_hz: f64, window_duration: f64) -> Result<usize> {
    if !max_modulation_hz.is_finite() || max_modulation_hz < 0.0 {
        return Err(Error::InvalidFrequency(max_modulation_hz));
    }
    if !window_duration.is_finite() || window_duration <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "window duration must be positive, got {window_duration}"
        )));
    }
    let exact = 2.0 * max_modulation_hz * window_duration;
    Ok((exact - 1e-9).ceil().max(0.0) as usize)
}

/// Binary lifter with ones on `a..=min(b, length - 1)`.
pub fn make_binary_lifter(a: usize, b: usize, length: usize) -> Result<Lifter> {
    if a > b {
        return Err(Error::InvalidRange { a, b });
    }
    if length == 0 {
        return Err(Error::InvalidLength(0));
    }
    let weights = (0..length)
        .map(|m| if a <= m && m <= b { 1.0 } else { 0.0 })
        .collect();
    Ok(Lifter {
        weights,
        band: Some((a, b)),
    })
}

/// `log F` reconstructed from a (liftered) modulation spectrum.
pub fn log_response_on_grid(spectrum: &ModulationSpectrum, grid: FrequencyGrid) -> Vec<f64> {
    dtft_on_grid(spectrum.coefficients(), &grid)
        .iter()
        .map(|z| 2.0 * z.re)
        .collect()
}

/// `exp(DTFT(M * gamma))` on the frame-centred grid.
pub fn liftered_response(
    spectrum: &ModulationSpectrum,
    lifter: &Lifter,
    n_points: usize,
) -> Result<FdlpResponse> {
    liftered_response_on_grid(spectrum, lifter, FrequencyGrid::centered(n_points))
}

pub fn liftered_response_on_grid(
    spectrum: &ModulationSpectrum,
    lifter: &Lifter,
    grid: FrequencyGrid,
) -> Result<FdlpResponse> {
    if grid.n_points == 0 {
        return Err(Error::InvalidLength(0));
    }
    let weighted = lifter.apply(spectrum)?;
    let values = log_response_on_grid(&weighted, grid)
        .into_iter()
        .map(f64::exp)
        .collect();
    Ok(FdlpResponse {
        values,
        duration: Some(spectrum.window_duration),
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::dct;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    /// Direct cosine-sum evaluation of log F, independent of the FFT path.
    fn direct_log_power(model: &AllPoleModel, omega: f64) -> f64 {
        model.power_at(omega).ln()
    }

    #[test]
    fn order_zero_response_is_flat() {
        let m = AllPoleModel::new(3.0, vec![]).unwrap();
        let r = fdlp_response(&m, 17).unwrap();
        assert!(r.values.iter().all(|&v| rel_close(v, 9.0, 1e-14)));
    }

    #[test]
    fn ar1_response_at_dc() {
        let m = AllPoleModel::new(1.0, vec![0.9]).unwrap();
        let r = fdlp_response_on_grid(&m, FrequencyGrid::new(8, 0.0)).unwrap();
        assert!(rel_close(r.values[0], 100.0, 1e-12));
    }

    #[test]
    fn grid_response_matches_pointwise_evaluation() {
        let m = AllPoleModel::from_reflection_coefficients(0.7, &[0.6, -0.4, 0.3, 0.2, -0.5])
            .unwrap();
        // fewer points than coefficients exercises the folding path
        for grid in [FrequencyGrid::centered(64), FrequencyGrid::new(2, 0.25)] {
            let r = fdlp_response_on_grid(&m, grid).unwrap();
            for (k, v) in r.values.iter().enumerate() {
                assert!(rel_close(*v, m.power_at(grid.omega(k)), 1e-10));
            }
        }
    }

    #[test]
    fn recursion_base_cases() {
        let m = AllPoleModel::new(2.5, vec![0.4]).unwrap();
        let ms = modulation_spectrum(&m, 4, 1.5).unwrap();
        assert_eq!(ms.coefficients()[0], 2.5f64.ln());
        assert_eq!(ms.coefficients()[1], 0.4);

        let m = AllPoleModel::new(1.0, vec![0.3, -0.2]).unwrap();
        let ms = modulation_spectrum(&m, 3, 1.5).unwrap();
        assert!((ms.coefficients()[2] - (-0.2 + 0.3 * 0.3 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn order_two_matches_dense_idtft() {
        let m = AllPoleModel::new(1.3, vec![0.5, -0.3]).unwrap();
        let ms = modulation_spectrum(&m, 6, 1.0).unwrap();
        let n = 1 << 14;
        for k in 0..6 {
            // trapezoid rule on the periodic integrand is spectrally accurate
            let c: f64 = (0..n)
                .map(|j| {
                    let w = 2.0 * PI * j as f64 / n as f64;
                    direct_log_power(&m, w) * (k as f64 * w).cos()
                })
                .sum::<f64>()
                / n as f64;
            let expect = if k == 0 { c / 2.0 } else { c };
            assert!((ms.coefficients()[k] - expect).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(modulation_coefficient_count(50.0, 1.5).unwrap(), 150);
        assert_eq!(modulation_coefficient_count(33.33, 1.5).unwrap(), 100);
        assert_eq!(modulation_coefficient_count(0.0, 1.5).unwrap(), 0);
        assert!(modulation_coefficient_count(-1.0, 1.5).is_err());
    }

    #[test]
    fn binary_lifters() {
        let l = make_binary_lifter(0, 100, 150).unwrap();
        assert!(l.weights()[..=100].iter().all(|&w| w == 1.0));
        assert!(l.weights()[101..].iter().all(|&w| w == 0.0));

        let l = make_binary_lifter(1, 450, 451).unwrap();
        assert_eq!(l.weights()[0], 0.0);
        assert!(l.weights()[1..].iter().all(|&w| w == 1.0));

        let l = make_binary_lifter(0, 1000, 20).unwrap();
        assert!(l.weights().iter().all(|&w| w == 1.0));

        assert!(matches!(make_binary_lifter(3, 2, 10), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn identity_lifter_reproduces_response() {
        let m = AllPoleModel::from_reflection_coefficients(0.3, &[0.7, -0.5, 0.4, -0.2]).unwrap();
        let ms = modulation_spectrum(&m, 400, 1.5).unwrap();
        let lifter = make_binary_lifter(0, 399, 400).unwrap();
        let a = liftered_response(&ms, &lifter, 150).unwrap();
        let b = fdlp_response(&m, 150).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(rel_close(*x, *y, 1e-6));
        }
    }

    #[test]
    fn dc_only_lifter_is_flat_gain() {
        let m = AllPoleModel::from_reflection_coefficients(0.3, &[0.7, -0.5]).unwrap();
        let ms = modulation_spectrum(&m, 50, 1.5).unwrap();
        let r = liftered_response(&ms, &make_binary_lifter(0, 0, 50).unwrap(), 30).unwrap();
        assert!(r.values.iter().all(|&v| rel_close(v, 0.09, 1e-12)));
    }

    #[test]
    fn lifter_length_mismatch() {
        let m = AllPoleModel::new(1.0, vec![0.5]).unwrap();
        let ms = modulation_spectrum(&m, 10, 1.5).unwrap();
        let l = make_binary_lifter(0, 3, 9).unwrap();
        assert!(matches!(
            liftered_response(&ms, &l, 10),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn silent_band_has_no_energy() {
        assert!(matches!(fit_fdlp_model(&[0.0; 64], 8), Err(Error::ZeroEnergy(_))));
        assert!(matches!(
            fit_fdlp_model(&[1.0; 8], 8),
            Err(Error::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn white_dct_sequence_gives_small_coefficients() {
        // deterministic pseudo-random +-1 sequence
        let mut state: u64 = 0x2545_f491_4f6c_dd1d;
        let seq: Vec<f64> = (0..20_000)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                if state & 1 == 0 { 1.0 } else { -1.0 }
            })
            .collect();
        let m = fit_fdlp_model(&seq, 20).unwrap();
        assert!(m.coefficients().iter().all(|a| a.abs() < 0.05));
    }

    #[test]
    fn am_tone_envelope_is_tracked() {
        use crate::dsp::{hilbert_envelope, AudioSegment};
        let sr = 8000usize;
        let x: Vec<f64> = (0..sr)
            .map(|n| {
                let t = n as f64 / sr as f64;
                (1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos()) * (2.0 * PI * 1000.0 * t).cos()
            })
            .collect();
        let env = hilbert_envelope(&AudioSegment::new(x.clone(), sr as u32).unwrap()).unwrap();
        let model = fit_fdlp_model(&dct(&x).unwrap(), 40).unwrap();
        let resp = fdlp_response(&model, sr).unwrap();
        let lo = sr / 20;
        let hi = sr - lo;
        let a: Vec<f64> = resp.values[lo..hi].iter().map(|v| v.ln()).collect();
        let b: Vec<f64> = env.values[lo..hi].iter().map(|v| v.ln()).collect();
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        assert!(cov / (va * vb).sqrt() > 0.95);
    }
}
