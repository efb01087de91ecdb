use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::AudioSegment;
use crate::error::{Error, Result};

fn map_open_error(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => Error::Io(e),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        other => Error::CorruptHeader(other.to_string()),
    }
}

/// Reads a mono WAV file, 16-bit PCM or 32-bit float, into `[-1, 1]`.
/// 16-bit samples are scaled by `1 / 32768`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSegment> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(map_open_error)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels in {} (only mono is supported)",
            spec.channels,
            path.display()
        )));
    }
    let truncated = |e: hound::Error| Error::CorruptHeader(format!("{}: {e}", path.display()));
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(truncated)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(truncated)?,
        (format, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {format:?} samples")));
        }
    };
    AudioSegment::new(samples, spec.sample_rate)
}

fn spec(sample_rate: u32, bits: u16, format: SampleFormat) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    }
}

/// Writes mono 16-bit PCM; samples are scaled by 32768 and clamped.
pub fn write_wav_i16(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let mut w = WavWriter::create(path, spec(sample_rate, 16, SampleFormat::Int))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        w.write_sample(v).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.finalize().map_err(|e| Error::Io(std::io::Error::other(e)))
}

/// Writes mono 32-bit float.
pub fn write_wav_f32(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<()> {
    let mut w = WavWriter::create(path, spec(sample_rate, 32, SampleFormat::Float))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for &s in samples {
        w.write_sample(s as f32).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.finalize().map_err(|e| Error::Io(std::io::Error::other(e)))
}
