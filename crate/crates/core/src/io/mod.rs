//! Persistence and file formats used by the batch extractor.

pub mod archive;
pub mod config_file;
pub mod csv;
pub mod image;
pub mod manifest;
pub mod wav;

pub use archive::{read_archive, write_archive, FeatureArchive, FeatureMatrix, ARCHIVE_VERSION};
pub use config_file::ConfigFile;
pub use csv::write_spectrogram_csv;
pub use image::{emit_image, render_pgm, write_pgm};
pub use manifest::{CorpusManifest, ManifestRecord};
pub use wav::{read_wav, write_wav_f32, write_wav_i16};
