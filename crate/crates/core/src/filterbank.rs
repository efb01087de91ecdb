//! Bark-spaced cochlear weights over DCT bins and mel triangular filters over
//! FFT bins.

use std::fmt;
use std::io::Write;
use std::ops::Range;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandScale {
    Bark,
    Mel,
}

impl fmt::Display for BandScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BandScale::Bark => f.write_str("bark"),
            BandScale::Mel => f.write_str("mel"),
        }
    }
}

fn check_frequency(f: f64) -> Result<()> {
    if f >= 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidFrequency(f))
    }
}

/// Schroeder's bark scale, `6 asinh(f / 600)`.
pub fn hz_to_bark(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(6.0 * (f / 600.0).asinh())
}

pub fn bark_to_hz(bark: f64) -> f64 {
    600.0 * (bark / 6.0).sinh()
}

/// HTK mel scale, `2595 log10(1 + f / 700)`.
pub fn hz_to_mel(f: f64) -> Result<f64> {
    check_frequency(f)?;
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Per-band weights over frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Filterbank {
    weights: Array2<f64>,
    scale: BandScale,
    centers_hz: Vec<f64>,
    edges_hz: Vec<(f64, f64)>,
    support: Vec<Range<usize>>,
}

impl Filterbank {
    fn from_weights(
        weights: Array2<f64>,
        scale: BandScale,
        centers_hz: Vec<f64>,
        edges_hz: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let mut support = Vec::with_capacity(weights.nrows());
        for row in weights.rows() {
            let start = row.iter().position(|&w| w > 0.0);
            let Some(start) = start else {
                return Err(Error::TooManyBands {
                    bands: weights.nrows(),
                    bins: weights.ncols(),
                });
            };
            let end = row.iter().rposition(|&w| w > 0.0).unwrap() + 1;
            support.push(start..end);
        }
        Ok(Self {
            weights,
            scale,
            centers_hz,
            edges_hz,
            support,
        })
    }

    pub fn n_bands(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.weights.ncols()
    }

    pub fn scale(&self) -> BandScale {
        self.scale
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn row(&self, band: usize) -> ArrayView1<'_, f64> {
        self.weights.row(band)
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Lower and upper frequency (Hz) where each band's weight reaches zero.
    pub fn edges_hz(&self) -> &[(f64, f64)] {
        &self.edges_hz
    }

    /// Bins where the band's weight is nonzero.
    pub fn support(&self, band: usize) -> Range<usize> {
        self.support[band].clone()
    }

    /// Pointwise product of `spectrum` with one band, zero outside its support.
    pub fn band_signal(&self, spectrum: &[f64], band: usize) -> Result<Vec<f64>> {
        self.check_len(spectrum.len())?;
        let mut out = vec![0.0; spectrum.len()];
        let row = self.weights.row(band);
        for k in self.support(band) {
            out[k] = spectrum[k] * row[k];
        }
        Ok(out)
    }

    /// Weighted sum of `spectrum` for every band.
    pub fn apply(&self, spectrum: &[f64]) -> Result<Vec<f64>> {
        self.check_len(spectrum.len())?;
        Ok((0..self.n_bands())
            .map(|b| {
                let row = self.weights.row(b);
                self.support(b).map(|k| row[k] * spectrum[k]).sum()
            })
            .collect())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_bins() {
            return Err(Error::ShapeMismatch {
                expected: self.n_bins(),
                actual: len,
            });
        }
        Ok(())
    }

    /// CSV dump: `band,center_hz,w_0,..,w_{n-1}`, one line per band.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "band,center_hz")?;
        for k in 0..self.n_bins() {
            write!(out, ",w{k}")?;
        }
        writeln!(out)?;
        for (b, row) in self.weights.rows().into_iter().enumerate() {
            write!(out, "{b},{}", self.centers_hz[b])?;
            for w in row {
                write!(out, ",{w}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Half support (in bark) of a raised-cosine taper whose power falls to one
/// half over a full width of `width_bark`.
fn raised_cosine_half_support(width_bark: f64) -> f64 {
    // 0.5 (1 + cos(pi d / W)) = 1/sqrt(2) at d = width / 2
    let c = (std::f64::consts::SQRT_2 - 1.0).acos();
    std::f64::consts::PI * width_bark / (2.0 * c)
}

pub const DEFAULT_BARK_WIDTH: f64 = 1.0;

/// Cochlear weights over the `n_bins` DCT coefficients of a window, centres
/// uniform in bark over `[0, sample_rate / 2]`.
pub fn bark_cochlear_filterbank(n_bands: usize, n_bins: usize, sample_rate: u32) -> Result<Filterbank> {
    bark_cochlear_filterbank_with_width(n_bands, n_bins, sample_rate, DEFAULT_BARK_WIDTH)
}

pub fn bark_cochlear_filterbank_with_width(
    n_bands: usize,
    n_bins: usize,
    sample_rate: u32,
    width_bark: f64,
) -> Result<Filterbank> {
    if n_bands == 0 {
        return Err(Error::InvalidConfig("at least one band is required".into()));
    }
    if n_bands > n_bins {
        return Err(Error::TooManyBands {
            bands: n_bands,
            bins: n_bins,
        });
    }
    if !(width_bark > 0.0 && width_bark.is_finite()) {
        return Err(Error::InvalidConfig(format!("band width must be positive, got {width_bark}")));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let max_bark = hz_to_bark(nyquist)?;
    let (centers, half_support): (Vec<f64>, f64) = if n_bands == 1 {
        (vec![max_bark / 2.0], max_bark.max(raised_cosine_half_support(width_bark)))
    } else {
        let step = max_bark / (n_bands - 1) as f64;
        (
            (0..n_bands).map(|i| i as f64 * step).collect(),
            raised_cosine_half_support(width_bark),
        )
    };
    let bin_bark: Vec<f64> = (0..n_bins)
        .map(|k| 6.0 * ((k as f64 * sample_rate as f64 / (2.0 * n_bins as f64)) / 600.0).asinh())
        .collect();

    let mut weights = Array2::zeros((n_bands, n_bins));
    for (b, &c) in centers.iter().enumerate() {
        let mut row = weights.row_mut(b);
        let lo = bin_bark.partition_point(|&z| z <= c - half_support);
        let hi = bin_bark.partition_point(|&z| z < c + half_support);
        for k in lo..hi {
            let d = (bin_bark[k] - c) / half_support;
            row[k] = 0.5 * (1.0 + (std::f64::consts::PI * d).cos());
        }
        let peak = row.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            row.mapv_inplace(|w| w / peak);
        }
    }
    let edges = centers
        .iter()
        .map(|&c| {
            (
                bark_to_hz((c - half_support).max(0.0)),
                bark_to_hz(c + half_support).min(nyquist),
            )
        })
        .collect();
    let centers_hz = centers.iter().map(|&c| bark_to_hz(c)).collect();
    Filterbank::from_weights(weights, BandScale::Bark, centers_hz, edges)
}

/// Triangular mel filters over `n_fft_bins` one-sided FFT bins (bin `k` at
/// `k * sample_rate / (2 (n_fft_bins - 1))` Hz). Adjacent triangles meet at
/// each other's centres; each has unit height at its centre frequency.
pub fn mel_triangular_filterbank(n_bands: usize, n_fft_bins: usize, sample_rate: u32) -> Result<Filterbank> {
    if n_bands == 0 {
        return Err(Error::InvalidConfig("at least one band is required".into()));
    }
    if n_bands > n_fft_bins || n_fft_bins < 2 {
        return Err(Error::TooManyBands {
            bands: n_bands,
            bins: n_fft_bins,
        });
    }
    let nyquist = sample_rate as f64 / 2.0;
    let max_mel = hz_to_mel(nyquist)?;
    let points: Vec<f64> = (0..n_bands + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_bands + 1) as f64))
        .collect();
    let bin_hz = nyquist / (n_fft_bins - 1) as f64;

    let mut weights = Array2::zeros((n_bands, n_fft_bins));
    for b in 0..n_bands {
        let (lo, c, hi) = (points[b], points[b + 1], points[b + 2]);
        let mut row = weights.row_mut(b);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            *w = if f > lo && f <= c {
                (f - lo) / (c - lo)
            } else if f > c && f < hi {
                (hi - f) / (hi - c)
            } else {
                0.0
            };
        }
    }
    let centers = points[1..=n_bands].to_vec();
    let edges = (0..n_bands).map(|b| (points[b], points[b + 2])).collect();
    Filterbank::from_weights(weights, BandScale::Mel, centers, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bark_values() {
        assert_eq!(hz_to_bark(0.0).unwrap(), 0.0);
        // 6 asinh(1) = 6 ln(1 + sqrt 2)
        assert!((hz_to_bark(600.0).unwrap() - 5.288_241_522_117_258).abs() < 1e-12);
        assert!(matches!(hz_to_bark(-1.0), Err(Error::InvalidFrequency(_))));
    }

    #[test]
    fn mel_values() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        assert!((hz_to_mel(700.0).unwrap() - 781.172_838_748_031_2).abs() < 1e-9);
        assert!((hz_to_mel(1000.0).unwrap() - 999.985_537_139_624_4).abs() < 1e-9);
        assert!(hz_to_mel(f64::NAN).is_err());
    }

    #[test]
    fn default_bark_bank_shape() {
        let fb = bark_cochlear_filterbank(80, 24_000, 16_000).unwrap();
        assert_eq!(fb.n_bands(), 80);
        assert_eq!(fb.centers_hz()[0], 0.0);
        assert!((fb.centers_hz()[79] - 8000.0).abs() < 1e-6);
        let barks: Vec<f64> = fb.centers_hz().iter().map(|&f| hz_to_bark(f).unwrap()).collect();
        let step = barks[1] - barks[0];
        for w in barks.windows(2) {
            assert!((w[1] - w[0] - step).abs() < 1e-9);
        }
    }

    #[test]
    fn bark_taper_half_power_width() {
        let fb = bark_cochlear_filterbank(20, 48_000, 16_000).unwrap();
        let row = fb.row(10);
        let c = hz_to_bark(fb.centers_hz()[10]).unwrap();
        let n = fb.n_bins();
        // bins where power >= 1/2 span one bark
        let inside: Vec<f64> = (0..n)
            .filter(|&k| row[k] * row[k] >= 0.5)
            .map(|k| hz_to_bark(k as f64 * 16_000.0 / (2.0 * n as f64)).unwrap() - c)
            .collect();
        let width = inside.last().unwrap() - inside.first().unwrap();
        assert!((width - 1.0).abs() < 0.01, "width {width}");
    }

    #[test]
    fn single_band_covers_everything() {
        let fb = bark_cochlear_filterbank(1, 1000, 16_000).unwrap();
        let row = fb.row(0);
        assert!(row.iter().all(|&w| w > 0.0));
        assert_eq!(row.iter().cloned().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn too_many_bands() {
        assert!(matches!(
            bark_cochlear_filterbank(10, 5, 16_000),
            Err(Error::TooManyBands { .. })
        ));
        assert!(matches!(
            mel_triangular_filterbank(300, 257, 16_000),
            Err(Error::TooManyBands { .. })
        ));
    }

    #[test]
    fn bark_coverage_between_centres() {
        let fb = bark_cochlear_filterbank(80, 24_000, 16_000).unwrap();
        for k in 0..fb.n_bins() {
            let total: f64 = (0..80).map(|b| fb.row(b)[k]).sum();
            assert!(total > 0.1, "bin {k} total {total}");
        }
    }

    #[test]
    fn mel_default_centres() {
        let fb = mel_triangular_filterbank(80, 257, 16_000).unwrap();
        assert!(fb.centers_hz()[0] < 100.0);
        assert!(fb.centers_hz()[79] > 7500.0 && fb.centers_hz()[79] < 8000.0);
        for k in 0..fb.n_bins() {
            let col: Vec<f64> = (0..80).map(|b| fb.row(b)[k]).filter(|&w| w > 0.0).collect();
            assert!(col.len() <= 2);
            assert!(col.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn mel_tone_at_centre_hits_its_band() {
        let n_bins = 4097;
        let fb = mel_triangular_filterbank(40, n_bins, 16_000).unwrap();
        let bin_hz = 8000.0 / (n_bins - 1) as f64;
        for target in [3usize, 17, 30] {
            let k = (fb.centers_hz()[target] / bin_hz).round() as usize;
            let mut spectrum = vec![0.0; n_bins];
            spectrum[k] = 1.0;
            let e = fb.apply(&spectrum).unwrap();
            let best = e
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(best, target);
        }
    }

    #[test]
    fn all_ones_gives_row_sums() {
        let fb = bark_cochlear_filterbank(16, 2000, 16_000).unwrap();
        let out = fb.apply(&vec![1.0; 2000]).unwrap();
        for (b, v) in out.iter().enumerate() {
            assert!((v - fb.row(b).sum()).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_dump_has_one_line_per_band() {
        let fb = mel_triangular_filterbank(4, 9, 8000).unwrap();
        let mut buf = Vec::new();
        fb.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("band,center_hz,w0"));
        assert_eq!(lines[1].split(',').count(), 11);
    }
}
