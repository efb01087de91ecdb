//! Frequency-domain linear prediction (FDLP) spectrograms and mel spectrogram
//! baselines for speech.
//!
//! The FDLP pipeline windows an utterance into long segments, takes the DCT of
//! each, splits it into bark-spaced sub-bands and fits an all-pole model per
//! band. Each model's log response is expanded into a modulation spectrum,
//! liftered, resampled at the frame rate and overlap-added into a full
//! utterance spectrogram.
//!
//! ```
//! use fdlp::{dsp::AudioSegment, spectrogram::{fdlp_spectrogram, FdlpConfig}};
//!
//! let sr = 16_000;
//! let samples: Vec<f64> = (0..sr)
//!     .map(|n| (2.0 * std::f64::consts::PI * 440.0 * n as f64 / sr as f64).sin())
//!     .collect();
//! let audio = AudioSegment::new(samples, sr as u32).unwrap();
//! let spec = fdlp_spectrogram(&audio, &FdlpConfig::default()).unwrap();
//! assert_eq!(spec.n_bands(), 80);
//! assert_eq!(spec.n_frames(), 100);
//! ```

pub mod dsp;
pub mod error;
pub mod extract;
pub mod fdlp;
pub mod filterbank;
pub mod io;
pub mod spectrogram;

pub use error::{Error, Result};
