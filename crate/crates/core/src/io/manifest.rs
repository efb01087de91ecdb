use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    pub path: PathBuf,
}

/// Utterance list: one `<id> <path>` pair per line. Blank lines and lines
/// starting with `#` are ignored; relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub records: Vec<ManifestRecord>,
    pub expected_sample_rate: Option<u32>,
}

impl CorpusManifest {
    pub fn from_records(records: Vec<ManifestRecord>, expected_sample_rate: Option<u32>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Manifest {
                    line: i + 1,
                    message: format!("duplicate utterance id {:?}", r.id),
                });
            }
        }
        Ok(Self {
            records,
            expected_sample_rate,
        })
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Manifest { line: i + 1, message };
            let (id, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected `<id> <path>`".into()))?;
            let path = rest.trim();
            if path.is_empty() || path.contains('\0') {
                return Err(err(format!("invalid path for {id:?}")));
            }
            if !seen.insert(id.to_string()) {
                return Err(err(format!("duplicate utterance id {id:?}")));
            }
            let path = Path::new(path);
            let path = if path.is_absolute() {
                path.to_path_buf()
            } else {
                base_dir.join(path)
            };
            records.push(ManifestRecord {
                id: id.to_string(),
                path,
            });
        }
        Ok(Self {
            records,
            expected_sample_rate: None,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
