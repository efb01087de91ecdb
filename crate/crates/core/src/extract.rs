//! Corpus-level feature extraction.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::{debug, info, warn};
use rayon::prelude::*;

use crate::dsp::AudioSegment;
use crate::error::{Error, Result};
use crate::io::archive::{FeatureArchive, FeatureMatrix};
use crate::io::manifest::{CorpusManifest, ManifestRecord};
use crate::io::wav::read_wav;
use crate::spectrogram::{fdlp_spectrogram, mel_fingerprint, mel_spectrogram, FdlpConfig, Spectrogram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureType {
    Fdlp,
    Mel,
}

impl FromStr for FeatureType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fdlp" => Ok(FeatureType::Fdlp),
            "mel" => Ok(FeatureType::Mel),
            other => Err(Error::InvalidConfig(format!("unknown feature type {other:?}"))),
        }
    }
}

impl fmt::Display for FeatureType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureType::Fdlp => f.write_str("fdlp"),
            FeatureType::Mel => f.write_str("mel"),
        }
    }
}

/// Fingerprint stored in archive headers for a feature type and config.
/// The mel pipeline only depends on the band count and frame rate.
pub fn feature_fingerprint(feature: FeatureType, config: &FdlpConfig) -> u64 {
    match feature {
        FeatureType::Fdlp => config.fingerprint(),
        FeatureType::Mel => mel_fingerprint(config.n_bands, config.frame_rate),
    }
}

pub fn extract_features(audio: &AudioSegment, config: &FdlpConfig, feature: FeatureType) -> Result<Spectrogram> {
    match feature {
        FeatureType::Fdlp => fdlp_spectrogram(audio, config),
        FeatureType::Mel => mel_spectrogram(audio, config.n_bands, config.frame_rate),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UtteranceStatus {
    Ok { frames: usize },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceReport {
    pub id: String,
    pub status: UtteranceStatus,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExtractionReport {
    pub utterances: Vec<UtteranceReport>,
}

impl ExtractionReport {
    pub fn succeeded(&self) -> usize {
        self.utterances
            .iter()
            .filter(|u| matches!(u.status, UtteranceStatus::Ok { .. }))
            .count()
    }

    pub fn failed(&self) -> usize {
        self.utterances.len() - self.succeeded()
    }
}

impl fmt::Display for ExtractionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for u in &self.utterances {
            match &u.status {
                UtteranceStatus::Ok { frames } => {
                    writeln!(f, "{}\tok\t{frames} frames\t{:.3}s", u.id, u.wall_seconds)?
                }
                UtteranceStatus::Failed(msg) => writeln!(f, "{}\tfailed\t{msg}\t{:.3}s", u.id, u.wall_seconds)?,
            }
        }
        write!(f, "{} ok, {} failed", self.succeeded(), self.failed())
    }
}

fn process(record: &ManifestRecord, manifest: &CorpusManifest, config: &FdlpConfig, feature: FeatureType) -> Result<Spectrogram> {
    let audio = read_wav(&record.path)?;
    if let Some(expected) = manifest.expected_sample_rate {
        if audio.sample_rate() != expected {
            return Err(Error::SampleRateMismatch {
                expected,
                actual: audio.sample_rate(),
            });
        }
    }
    extract_features(&audio, config, feature)
}

/// Extracts every utterance of `manifest` on a pool of `parallelism` workers.
///
/// The archive keeps manifest order whatever the completion order. Failed
/// utterances are reported and skipped; the call fails only when nothing
/// succeeds.
pub fn run_extraction(
    manifest: &CorpusManifest,
    config: &FdlpConfig,
    feature: FeatureType,
    parallelism: usize,
) -> Result<(FeatureArchive, ExtractionReport)> {
    if manifest.is_empty() {
        return Err(Error::EmptyInput);
    }
    if feature == FeatureType::Fdlp {
        config.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    info!(
        "extracting {} {feature} features from {} utterances with {} workers",
        config.n_bands,
        manifest.len(),
        parallelism.max(1)
    );

    let results: Vec<(Result<Spectrogram>, f64)> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|record| {
                let start = Instant::now();
                let result = process(record, manifest, config, feature);
                let elapsed = start.elapsed().as_secs_f64();
                debug!("{}: {:.3}s", record.id, elapsed);
                (result, elapsed)
            })
            .collect()
    });

    let mut archive = FeatureArchive::new(feature_fingerprint(feature, config));
    let mut report = ExtractionReport::default();
    for (record, (result, wall_seconds)) in manifest.records.iter().zip(results) {
        let status = match result.and_then(|spec| {
            let frames = spec.n_frames();
            archive.push(record.id.clone(), FeatureMatrix::from_spectrogram(&spec))?;
            Ok(frames)
        }) {
            Ok(frames) => UtteranceStatus::Ok { frames },
            Err(e) => {
                warn!("{}: {e}", record.id);
                UtteranceStatus::Failed(e.to_string())
            }
        };
        report.utterances.push(UtteranceReport {
            id: record.id.clone(),
            status,
            wall_seconds,
        });
    }
    if report.succeeded() == 0 {
        return Err(Error::AllFailed(manifest.len()));
    }
    Ok((archive, report))
}
