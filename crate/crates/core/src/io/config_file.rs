use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectrogram::FdlpConfig;

/// Keys accepted in `key = value` config files. Dashes and underscores are
/// interchangeable.
pub const KNOWN_KEYS: &[&str] = &[
    "feature",
    "window_seconds",
    "overlap",
    "order",
    "bands",
    "frame_rate",
    "lifter_a",
    "lifter_b",
    "envelope_floor",
    "band_width_bark",
    "parallelism",
    "sample_rate",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

fn normalise(key: &str) -> String {
    key.trim().replace('-', "_")
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key=value", i + 1))
            })?;
            let key = normalise(k);
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::InvalidConfig(format!("line {}: unknown key {key:?}", i + 1)));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalise(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidConfig(format!("bad value {v:?} for {key}"))),
        }
    }

    /// Overwrites the fields of `config` that this file sets.
    pub fn apply_to(&self, config: &mut FdlpConfig) -> Result<()> {
        if let Some(v) = self.get("window_seconds")? {
            config.window_seconds = v;
        }
        if let Some(v) = self.get("overlap")? {
            config.overlap_fraction = v;
        }
        if let Some(v) = self.get("order")? {
            config.model_order = v;
        }
        if let Some(v) = self.get("bands")? {
            config.n_bands = v;
        }
        if let Some(v) = self.get("frame_rate")? {
            config.frame_rate = v;
        }
        if let Some(v) = self.get("lifter_a")? {
            config.lifter_a = v;
        }
        if let Some(v) = self.get("lifter_b")? {
            config.lifter_b = v;
        }
        if let Some(v) = self.get("envelope_floor")? {
            config.envelope_floor = v;
        }
        if let Some(v) = self.get("band_width_bark")? {
            config.band_width_bark = v;
        }
        Ok(())
    }
}
