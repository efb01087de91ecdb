//! Full-utterance FDLP spectrograms and the mel spectrogram baseline.
//!
//! The FDLP path cuts the utterance into von Hann windowed segments of
//! `window_seconds`, computes a `n_bands x round(frame_rate * T)` log-response
//! matrix for each segment and overlap-adds the segments on the global frame
//! grid. Frame `j` of the output is centred at `(j + 0.5) / frame_rate`
//! seconds; each segment's responses are evaluated directly at those instants
//! so segments whose offset is not a whole number of frames still line up.

use std::f64::consts::PI;

use log::warn;
use ndarray::{Array2, Axis};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::dsp::{
    autocorrelate, dct, fft_in_place, hamming_window, levinson_durbin, von_hann_window, AllPoleModel,
    AudioSegment, AutocorrelationSequence,
};
use crate::error::{Error, Result};
use crate::fdlp::{log_response_on_grid, make_binary_lifter, modulation_spectrum, FrequencyGrid, Lifter};
use crate::filterbank::{
    bark_cochlear_filterbank_with_width, mel_triangular_filterbank, BandScale, Filterbank, DEFAULT_BARK_WIDTH,
};

/// Floor applied before taking logs.
pub const DEFAULT_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FdlpConfig {
    pub window_seconds: f64,
    pub overlap_fraction: f64,
    pub model_order: usize,
    pub n_bands: usize,
    pub frame_rate: f64,
    pub lifter_a: usize,
    pub lifter_b: usize,
    pub envelope_floor: f64,
    /// Full width at half power of each cochlear filter, in bark.
    pub band_width_bark: f64,
}

impl Default for FdlpConfig {
    fn default() -> Self {
        Self {
            window_seconds: 1.5,
            overlap_fraction: 0.25,
            model_order: 150,
            n_bands: 80,
            frame_rate: 100.0,
            lifter_a: 0,
            lifter_b: 100,
            envelope_floor: DEFAULT_FLOOR,
            band_width_bark: DEFAULT_BARK_WIDTH,
        }
    }
}

impl FdlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.window_seconds > 0.0 && self.window_seconds.is_finite()) {
            return bad(format!("window_seconds must be positive, got {}", self.window_seconds));
        }
        if !(self.overlap_fraction > 0.0 && self.overlap_fraction < 1.0) {
            return bad(format!("overlap_fraction must lie in (0, 1), got {}", self.overlap_fraction));
        }
        if self.model_order == 0 {
            return bad("model_order must be at least 1".into());
        }
        if self.n_bands == 0 {
            return bad("n_bands must be at least 1".into());
        }
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return bad(format!("frame_rate must be positive, got {}", self.frame_rate));
        }
        if self.frames_per_window() == 0 {
            return bad("frame_rate * window_seconds rounds to zero frames".into());
        }
        if self.lifter_a > self.lifter_b {
            return Err(Error::InvalidRange {
                a: self.lifter_a,
                b: self.lifter_b,
            });
        }
        if self.envelope_floor.is_nan() || self.envelope_floor <= 0.0 {
            return bad(format!("envelope_floor must be positive, got {}", self.envelope_floor));
        }
        if !(self.band_width_bark > 0.0 && self.band_width_bark.is_finite()) {
            return bad(format!("band_width_bark must be positive, got {}", self.band_width_bark));
        }
        Ok(())
    }

    /// Columns of each per-window matrix, `round(frame_rate * T)`.
    pub fn frames_per_window(&self) -> usize {
        (self.frame_rate * self.window_seconds).round() as usize
    }

    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_seconds * sample_rate as f64).round() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((1.0 - self.overlap_fraction) * self.window_seconds * sample_rate as f64).round() as usize
    }

    /// Modulation coefficients kept per band; everything past `lifter_b` is
    /// zeroed by the lifter anyway.
    pub fn modulation_coefficients(&self) -> usize {
        self.lifter_b + 1
    }

    pub fn lifter(&self) -> Result<Lifter> {
        make_binary_lifter(self.lifter_a, self.lifter_b, self.modulation_coefficients())
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint(&format!(
            "fdlp;T={:016x};ov={:016x};p={};bands={};fr={:016x};a={};b={};floor={:016x};bw={:016x}",
            self.window_seconds.to_bits(),
            self.overlap_fraction.to_bits(),
            self.model_order,
            self.n_bands,
            self.frame_rate.to_bits(),
            self.lifter_a,
            self.lifter_b,
            self.envelope_floor.to_bits(),
            self.band_width_bark.to_bits(),
        ))
    }
}

pub fn mel_fingerprint(n_bands: usize, frame_rate: f64) -> u64 {
    fingerprint(&format!("mel;bands={n_bands};fr={:016x}", frame_rate.to_bits()))
}

fn fingerprint(canonical: &str) -> u64 {
    let digest = Sha256::digest(canonical.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Log-energy matrix, bands x frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub frame_rate: f64,
    pub band_scale: BandScale,
    pub config_fingerprint: u64,
}

impl Spectrogram {
    pub fn n_bands(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }
}

/// Amplitude taper applied to an analysis segment. Edge windows keep their
/// outer half flat so utterance boundaries are not attenuated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    Hann,
    FlatStart,
    FlatEnd,
    Flat,
}

impl Taper {
    fn for_window(first: bool, last: bool) -> Self {
        match (first, last) {
            (true, true) => Taper::Flat,
            (true, false) => Taper::FlatStart,
            (false, true) => Taper::FlatEnd,
            (false, false) => Taper::Hann,
        }
    }

    /// Amplitude at fractional position `u` in `[0, 1]`; zero outside.
    pub fn amplitude(self, u: f64) -> f64 {
        if !(0.0..=1.0).contains(&u) {
            return 0.0;
        }
        let flat = match self {
            Taper::Hann => false,
            Taper::FlatStart => u <= 0.5,
            Taper::FlatEnd => u >= 0.5,
            Taper::Flat => true,
        };
        if flat {
            1.0
        } else {
            (PI * u).sin().powi(2)
        }
    }

    fn samples(self, len: usize) -> Result<Vec<f64>> {
        let mut w = von_hann_window(len)?;
        let half = (len - 1) as f64 / 2.0;
        for (i, v) in w.iter_mut().enumerate() {
            let flat = match self {
                Taper::Hann => false,
                Taper::FlatStart => (i as f64) <= half,
                Taper::FlatEnd => (i as f64) >= half,
                Taper::Flat => true,
            };
            if flat {
                *v = 1.0;
            }
        }
        Ok(w)
    }
}

/// One windowed analysis segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSegment {
    pub offset_samples: usize,
    pub audio: AudioSegment,
    /// True if the segment ran past the end of the utterance and was zero padded.
    pub padded: bool,
    pub taper: Taper,
}

impl WindowedSegment {
    pub fn offset_seconds(&self) -> f64 {
        self.offset_samples as f64 / self.audio.sample_rate() as f64
    }
}

/// Splits `x` into von Hann weighted segments of `T` seconds, hopping by
/// `(1 - overlap) T`. The last segment is zero padded to full length. The
/// first and last segments keep their outer half untapered.
pub fn segment_utterance(x: &AudioSegment, config: &FdlpConfig) -> Result<Vec<WindowedSegment>> {
    config.validate()?;
    let sr = x.sample_rate();
    let len = config.window_samples(sr);
    let hop = config.hop_samples(sr);
    if len < 2 || hop == 0 {
        return Err(Error::InvalidConfig(format!(
            "window of {len} samples with hop {hop} is too short at {sr} Hz"
        )));
    }
    let samples = x.samples();
    let mut offsets = vec![0];
    while offsets[offsets.len() - 1] + len < samples.len() {
        offsets.push(offsets[offsets.len() - 1] + hop);
    }
    let count = offsets.len();
    offsets
        .into_iter()
        .enumerate()
        .map(|(idx, offset)| {
            let kind = Taper::for_window(idx == 0, idx + 1 == count);
            let taper = kind.samples(len)?;
            let mut buf = vec![0.0; len];
            let available = samples.len().saturating_sub(offset).min(len);
            for (i, b) in buf.iter_mut().enumerate().take(available) {
                *b = samples[offset + i] * taper[i];
            }
            Ok(WindowedSegment {
                offset_samples: offset,
                audio: AudioSegment::new(buf, sr)?,
                padded: offset + len > samples.len(),
                taper: kind,
            })
        })
        .collect()
}

/// Builds the cochlear filterbank matching `config` for windows at `sample_rate`.
pub fn cochlear_filterbank(config: &FdlpConfig, sample_rate: u32) -> Result<Filterbank> {
    bark_cochlear_filterbank_with_width(
        config.n_bands,
        config.window_samples(sample_rate),
        sample_rate,
        config.band_width_bark,
    )
}

/// Relative white-noise correction added to the zero lag of every band
/// autocorrelation. Keeps near-empty (zero padded) stretches of a window from
/// making the normal equations singular.
pub const WHITE_NOISE_CORRECTION: f64 = 1e-7;

fn fit_band(band: &[f64], order: usize) -> Result<Option<AllPoleModel>> {
    if order >= band.len() {
        return Err(Error::OrderTooLarge {
            order,
            available: band.len(),
        });
    }
    let r = autocorrelate(band, order)?;
    let mut lags = r.values().to_vec();
    lags[0] *= 1.0 + WHITE_NOISE_CORRECTION;
    let r = AutocorrelationSequence::from_values(lags, r.source_length())?;
    match levinson_durbin(&r) {
        Ok(model) => Ok(Some(model)),
        Err(Error::ZeroEnergy(_)) => Ok(None),
        Err(Error::UnstableModel { order: at, .. }) => {
            warn!("unstable all-pole fit at order {at}; emitting floor");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Per-window log-response matrix on an explicit frame grid.
pub fn window_fdlp_matrix_on_grid(
    segment: &AudioSegment,
    bank: &Filterbank,
    config: &FdlpConfig,
    grid: FrequencyGrid,
) -> Result<Array2<f64>> {
    let log_floor = config.envelope_floor.ln();
    let mut m = window_log_responses(segment, bank, config, grid)?;
    m.mapv_inplace(|v| v.max(log_floor));
    Ok(m)
}

/// Unfloored log responses; silent bands are `-inf`. The floor is applied
/// once, after overlap-add.
fn window_log_responses(
    segment: &AudioSegment,
    bank: &Filterbank,
    config: &FdlpConfig,
    grid: FrequencyGrid,
) -> Result<Array2<f64>> {
    config.validate()?;
    let expected = config.window_samples(segment.sample_rate());
    if segment.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: segment.len(),
        });
    }
    if bank.n_bins() != segment.len() {
        return Err(Error::ShapeMismatch {
            expected: segment.len(),
            actual: bank.n_bins(),
        });
    }
    if config.model_order >= segment.len() {
        return Err(Error::OrderTooLarge {
            order: config.model_order,
            available: segment.len(),
        });
    }
    let spectrum = dct(segment.samples())?;
    let lifter = config.lifter()?;
    let n_coeffs = config.modulation_coefficients();

    let rows: Vec<Vec<f64>> = (0..bank.n_bands())
        .into_par_iter()
        .map(|b| -> Result<Vec<f64>> {
            let band = bank.band_signal(&spectrum, b)?;
            let Some(model) = fit_band(&band, config.model_order)? else {
                return Ok(vec![f64::NEG_INFINITY; grid.n_points]);
            };
            let ms = modulation_spectrum(&model, n_coeffs, config.window_seconds)?;
            let weighted = lifter.apply(&ms)?;
            Ok(log_response_on_grid(&weighted, grid))
        })
        .collect::<Result<_>>()?;

    let mut out = Array2::zeros((bank.n_bands(), grid.n_points));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    }
    Ok(out)
}

/// Per-window `n_bands x round(frame_rate * T)` matrix of log liftered
/// responses, frames centred within the window.
pub fn window_fdlp_matrix(segment: &AudioSegment, bank: &Filterbank, config: &FdlpConfig) -> Result<Array2<f64>> {
    let grid = FrequencyGrid::centered(config.frames_per_window());
    window_fdlp_matrix_on_grid(segment, bank, config, grid)
}

/// A per-window log-response matrix placed on the utterance frame grid:
/// column `k` is global frame `first_frame + k`, sampled at local position
/// `k + grid_offset` frames from the window start. `taper` is the amplitude
/// taper the segment was analysed with; its square is imprinted on the
/// response.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    pub first_frame: i64,
    pub grid_offset: f64,
    pub values: Array2<f64>,
    pub taper: Taper,
}

impl WindowMatrix {
    /// Placement of a window starting `offset_samples` into the utterance.
    pub fn placement(offset_samples: usize, sample_rate: u32, frame_rate: f64) -> (i64, f64) {
        let position = offset_samples as f64 * frame_rate / sample_rate as f64;
        let first = (position + 1e-9).floor();
        let frac = (position - first).max(0.0);
        (first as i64, 0.5 - frac)
    }
}

/// Taper power at each column of `win`, i.e. the analysis window resampled
/// to the frame rate and squared.
pub fn taper_power(win: &WindowMatrix) -> Vec<f64> {
    let n = win.values.ncols();
    (0..n)
        .map(|k| win.taper.amplitude((k as f64 + win.grid_offset) / n as f64).powi(2))
        .collect()
}

/// Raw (unnormalised) OLA weights, `windows x total_frames`.
fn raw_weights(windows: &[WindowMatrix], total_frames: usize) -> Array2<f64> {
    let mut w = Array2::zeros((windows.len(), total_frames));
    for (i, win) in windows.iter().enumerate() {
        for (k, p) in taper_power(win).into_iter().enumerate() {
            let j = win.first_frame + k as i64;
            if j >= 0 && (j as usize) < total_frames {
                w[[i, j as usize]] = p;
            }
        }
    }
    w
}

/// Normalised OLA weights, `windows x total_frames`. Every frame covered by at
/// least one window has a column summing to one.
pub fn overlap_add_weights(windows: &[WindowMatrix], total_frames: usize) -> Array2<f64> {
    let mut w = raw_weights(windows, total_frames);
    for mut col in w.columns_mut() {
        let total = col.sum();
        if total > 0.0 {
            col.mapv_inplace(|v| v / total);
        }
    }
    w
}

/// Overlap-adds per-window log responses in the linear domain, then takes logs.
///
/// Each window response is divided by its taper power to give an envelope
/// estimate, and the estimates are averaged with the taper power as weight,
/// normalised by the weight actually contributing at each frame. Constant
/// envelope estimates therefore come out constant.
pub fn overlap_add(windows: &[WindowMatrix], config: &FdlpConfig, total_frames: usize) -> Result<Spectrogram> {
    if windows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if windows.windows(2).any(|w| w[1].first_frame < w[0].first_frame) {
        return Err(Error::InvalidConfig("windows must be ordered by offset".into()));
    }
    let n_bands = windows[0].values.nrows();
    if let Some(bad) = windows.iter().find(|w| w.values.nrows() != n_bands) {
        return Err(Error::ShapeMismatch {
            expected: n_bands,
            actual: bad.values.nrows(),
        });
    }
    let weights = raw_weights(windows, total_frames);
    let mut acc = Array2::<f64>::zeros((n_bands, total_frames));
    for (i, win) in windows.iter().enumerate() {
        for k in 0..win.values.ncols() {
            let j = win.first_frame + k as i64;
            if j < 0 || j as usize >= total_frames {
                continue;
            }
            let j = j as usize;
            if weights[[i, j]] == 0.0 {
                continue;
            }
            for b in 0..n_bands {
                acc[[b, j]] += win.values[[b, k]].exp();
            }
        }
    }
    let floor = config.envelope_floor;
    for (mut col, total) in acc.columns_mut().into_iter().zip(weights.sum_axis(Axis(0))) {
        col.mapv_inplace(|v| if total > 0.0 { (v / total).max(floor).ln() } else { floor.ln() });
    }
    Ok(Spectrogram {
        values: acc,
        frame_rate: config.frame_rate,
        band_scale: BandScale::Bark,
        config_fingerprint: config.fingerprint(),
    })
}

fn frame_count(x: &AudioSegment, frame_rate: f64) -> usize {
    (x.duration_seconds() * frame_rate).round() as usize
}

/// FDLP spectrogram of a whole utterance. Windows and bands are processed in
/// parallel on the current rayon pool; the result does not depend on the
/// pool size.
pub fn fdlp_spectrogram(x: &AudioSegment, config: &FdlpConfig) -> Result<Spectrogram> {
    config.validate()?;
    let sr = x.sample_rate();
    let bank = cochlear_filterbank(config, sr)?;
    let segments = segment_utterance(x, config)?;
    let n = config.frames_per_window();
    let windows: Vec<WindowMatrix> = segments
        .par_iter()
        .map(|seg| {
            let (first_frame, grid_offset) = WindowMatrix::placement(seg.offset_samples, sr, config.frame_rate);
            let values = window_log_responses(&seg.audio, &bank, config, FrequencyGrid::new(n, grid_offset))?;
            Ok(WindowMatrix {
                first_frame,
                grid_offset,
                values,
                taper: seg.taper,
            })
        })
        .collect::<Result<_>>()?;
    overlap_add(&windows, config, frame_count(x, config.frame_rate))
}

/// Log mel filterbank energies: 20 ms Hamming windows every `1 / frame_rate`
/// seconds, magnitude spectrum, triangular mel filters, natural log with a
/// floor of [`DEFAULT_FLOOR`].
pub fn mel_spectrogram(x: &AudioSegment, n_bands: usize, frame_rate: f64) -> Result<Spectrogram> {
    if !(frame_rate > 0.0 && frame_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!("frame_rate must be positive, got {frame_rate}")));
    }
    let sr = x.sample_rate();
    let win_len = (0.02 * sr as f64).round() as usize;
    let hop = (sr as f64 / frame_rate).round() as usize;
    if win_len < 2 || hop == 0 {
        return Err(Error::InvalidConfig(format!("sample rate {sr} Hz too low for mel analysis")));
    }
    let n_fft = win_len.next_power_of_two();
    let bank = mel_triangular_filterbank(n_bands, n_fft / 2 + 1, sr)?;
    let window = hamming_window(win_len)?;
    let n_frames = frame_count(x, frame_rate);
    let samples = x.samples();

    let columns: Vec<Vec<f64>> = (0..n_frames)
        .into_par_iter()
        .map(|i| {
            let start = i * hop;
            let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
            for (k, w) in window.iter().enumerate() {
                if let Some(&s) = samples.get(start + k) {
                    buf[k].re = s * w;
                }
            }
            fft_in_place(&mut buf, false);
            let magnitude: Vec<f64> = buf[..=n_fft / 2].iter().map(|z| z.norm()).collect();
            bank.apply(&magnitude)
                .map(|e| e.into_iter().map(|v| v.max(DEFAULT_FLOOR).ln()).collect())
        })
        .collect::<Result<_>>()?;

    let mut values = Array2::zeros((n_bands, n_frames));
    for (mut col, src) in values.axis_iter_mut(Axis(1)).zip(columns) {
        col.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    }
    Ok(Spectrogram {
        values,
        frame_rate,
        band_scale: BandScale::Mel,
        config_fingerprint: mel_fingerprint(n_bands, frame_rate),
    })
}
