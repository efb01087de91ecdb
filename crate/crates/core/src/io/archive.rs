//! Binary feature archive.
//!
//! Layout, all integers little endian:
//!
//! ```text
//! "FDLP"            magic
//! u16               format version
//! u64               config fingerprint
//! u32               entry count
//! per entry:
//!   u32             id length in bytes
//!   [u8]            UTF-8 id
//!   u32 rows, u32 cols
//!   f64             frame rate (Hz)
//!   [f32]           rows * cols values, row major
//!   u32             CRC-32 of every entry byte above
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

pub const ARCHIVE_MAGIC: &[u8; 4] = b"FDLP";
pub const ARCHIVE_VERSION: u16 = 1;

/// A spectrogram at storage precision.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub frame_rate: f64,
    pub values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn from_spectrogram(spec: &Spectrogram) -> Self {
        Self {
            rows: spec.n_bands(),
            cols: spec.n_frames(),
            frame_rate: spec.frame_rate,
            values: spec.values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_array(&self) -> Array2<f32> {
        Array2::from_shape_vec((self.rows, self.cols), self.values.clone())
            .expect("feature matrix length matches its shape")
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.cols + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureArchive {
    pub version: u16,
    pub fingerprint: u64,
    entries: Vec<(String, FeatureMatrix)>,
}

impl FeatureArchive {
    pub fn new(fingerprint: u64) -> Self {
        Self {
            version: ARCHIVE_VERSION,
            fingerprint,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[(String, FeatureMatrix)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FeatureMatrix> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, m)| m)
    }

    /// Appends an entry. Ids must be unique; band count and frame rate must
    /// match the entries already present.
    pub fn push(&mut self, id: impl Into<String>, matrix: FeatureMatrix) -> Result<()> {
        let id = id.into();
        if matrix.values.len() != matrix.rows * matrix.cols {
            return Err(Error::ShapeMismatch {
                expected: matrix.rows * matrix.cols,
                actual: matrix.values.len(),
            });
        }
        if self.entries.iter().any(|(k, _)| *k == id) {
            return Err(Error::MalformedArchive(format!("duplicate utterance id {id:?}")));
        }
        if let Some((_, first)) = self.entries.first() {
            if first.rows != matrix.rows || first.frame_rate.to_bits() != matrix.frame_rate.to_bits() {
                return Err(Error::MalformedArchive(format!(
                    "entry {id:?} has {} bands at {} Hz, archive has {} bands at {} Hz",
                    matrix.rows, matrix.frame_rate, first.rows, first.frame_rate
                )));
            }
        }
        self.entries.push((id, matrix));
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(ARCHIVE_MAGIC)?;
        out.write_u16::<LittleEndian>(self.version)?;
        out.write_u64::<LittleEndian>(self.fingerprint)?;
        out.write_u32::<LittleEndian>(self.entries.len() as u32)?;
        let mut entry = Vec::new();
        for (id, m) in &self.entries {
            entry.clear();
            entry.write_u32::<LittleEndian>(id.len() as u32)?;
            entry.extend_from_slice(id.as_bytes());
            entry.write_u32::<LittleEndian>(m.rows as u32)?;
            entry.write_u32::<LittleEndian>(m.cols as u32)?;
            entry.write_f64::<LittleEndian>(m.frame_rate)?;
            for &v in &m.values {
                entry.write_f32::<LittleEndian>(v)?;
            }
            let crc = crc32fast::hash(&entry);
            out.write_all(&entry)?;
            out.write_u32::<LittleEndian>(crc)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(eof("header"))?;
        if &magic != ARCHIVE_MAGIC {
            return Err(Error::MalformedArchive("bad magic bytes".into()));
        }
        let version = input.read_u16::<LittleEndian>().map_err(eof("header"))?;
        if version != ARCHIVE_VERSION {
            return Err(Error::VersionMismatch {
                expected: ARCHIVE_VERSION,
                found: version,
            });
        }
        let fingerprint = input.read_u64::<LittleEndian>().map_err(eof("header"))?;
        let count = input.read_u32::<LittleEndian>().map_err(eof("header"))?;
        let mut archive = FeatureArchive::new(fingerprint);
        let mut seen = HashSet::new();
        for _ in 0..count {
            let mut hasher = crc32fast::Hasher::new();
            let mut read = |len: usize| -> Result<Vec<u8>> {
                let mut buf = vec![0u8; len];
                input.read_exact(&mut buf).map_err(eof("entry"))?;
                hasher.update(&buf);
                Ok(buf)
            };
            let id_len = u32::from_le_bytes(read(4)?.try_into().unwrap()) as usize;
            let id_bytes = read(id_len)?;
            let rows = u32::from_le_bytes(read(4)?.try_into().unwrap()) as usize;
            let cols = u32::from_le_bytes(read(4)?.try_into().unwrap()) as usize;
            let frame_rate = f64::from_le_bytes(read(8)?.try_into().unwrap());
            let payload = read(rows * cols * 4)?;
            let expected = hasher.finalize();
            let stored = input.read_u32::<LittleEndian>().map_err(eof("checksum"))?;
            let id = String::from_utf8_lossy(&id_bytes).into_owned();
            if stored != expected {
                return Err(Error::ChecksumFailure(id));
            }
            let id = String::from_utf8(id_bytes)
                .map_err(|_| Error::MalformedArchive("entry id is not UTF-8".into()))?;
            if !seen.insert(id.clone()) {
                return Err(Error::MalformedArchive(format!("duplicate utterance id {id:?}")));
            }
            let values = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            archive.push(
                id,
                FeatureMatrix {
                    rows,
                    cols,
                    frame_rate,
                    values,
                },
            )?;
        }
        Ok(archive)
    }
}

fn eof(what: &'static str) -> impl Fn(std::io::Error) -> Error {
    move |e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::MalformedArchive(format!("truncated {what}"))
        } else {
            Error::Io(e)
        }
    }
}

pub fn write_archive(archive: &FeatureArchive, path: impl AsRef<Path>) -> Result<()> {
    archive.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<FeatureArchive> {
    FeatureArchive::read_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize, seed: f32) -> FeatureMatrix {
        FeatureMatrix {
            rows,
            cols,
            frame_rate: 100.0,
            values: (0..rows * cols).map(|i| seed + i as f32 * 0.5).collect(),
        }
    }

    fn bytes(a: &FeatureArchive) -> Vec<u8> {
        let mut buf = Vec::new();
        a.write_to(&mut buf).unwrap();
        buf
    }

    #[test]
    fn empty_archive_round_trips() {
        let a = FeatureArchive::new(42);
        let b = FeatureArchive::read_from(bytes(&a).as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_entries_round_trip() {
        let mut a = FeatureArchive::new(7);
        a.push("utt1", matrix(3, 4, -1.0)).unwrap();
        a.push("utt2", matrix(3, 2, f32::MIN_POSITIVE)).unwrap();
        let b = FeatureArchive::read_from(bytes(&a).as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flipped_payload_byte_fails_checksum() {
        let mut a = FeatureArchive::new(7);
        a.push("utt1", matrix(2, 2, 1.0)).unwrap();
        let mut buf = bytes(&a);
        let n = buf.len();
        buf[n - 6] ^= 0x01;
        assert!(matches!(
            FeatureArchive::read_from(buf.as_slice()),
            Err(Error::ChecksumFailure(id)) if id == "utt1"
        ));
    }

    #[test]
    fn version_and_magic_checks() {
        let mut buf = bytes(&FeatureArchive::new(1));
        buf[4] = 9;
        assert!(matches!(
            FeatureArchive::read_from(buf.as_slice()),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
        buf[0] = b'X';
        assert!(matches!(
            FeatureArchive::read_from(buf.as_slice()),
            Err(Error::MalformedArchive(_))
        ));
    }

    #[test]
    fn truncated_archive_is_malformed() {
        let mut a = FeatureArchive::new(7);
        a.push("u", matrix(2, 3, 0.0)).unwrap();
        let buf = bytes(&a);
        assert!(matches!(
            FeatureArchive::read_from(&buf[..buf.len() - 3]),
            Err(Error::MalformedArchive(_))
        ));
    }

    #[test]
    fn push_enforces_invariants() {
        let mut a = FeatureArchive::new(0);
        a.push("x", matrix(2, 2, 0.0)).unwrap();
        assert!(a.push("x", matrix(2, 2, 0.0)).is_err());
        assert!(a.push("y", matrix(3, 2, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn random_payloads_round_trip_bitwise(
            payload in proptest::collection::vec(any::<u32>(), 0..64),
            fingerprint in any::<u64>(),
            id in "[a-z0-9_-]{1,12}",
        ) {
            let values: Vec<f32> = payload.iter().map(|&b| f32::from_bits(b)).collect();
            let mut a = FeatureArchive::new(fingerprint);
            a.push(id, FeatureMatrix { rows: 1, cols: values.len(), frame_rate: 100.0, values }).unwrap();
            let b = FeatureArchive::read_from(bytes(&a).as_slice()).unwrap();
            prop_assert_eq!(bytes(&a), bytes(&b));
            let (_, ma) = &a.entries()[0];
            let (_, mb) = &b.entries()[0];
            let bits_a: Vec<u32> = ma.values.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = mb.values.iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bits_a, bits_b);
        }
    }
}
