use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

/// Binary PGM (P5) bytes for a bands x frames matrix: one pixel per cell,
/// time left to right, lowest band on the bottom row. Values are min-max
/// scaled to 0..=255; a constant matrix renders as uniform 128.
pub fn render_pgm(values: &Array2<f64>) -> Result<Vec<u8>> {
    let (bands, frames) = values.dim();
    if bands == 0 || frames == 0 {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    let mut out = format!("P5\n{frames} {bands}\n255\n").into_bytes();
    out.reserve(bands * frames);
    for b in (0..bands).rev() {
        for t in 0..frames {
            let px = if range > 0.0 {
                (255.0 * (values[[b, t]] - lo) / range).round() as u8
            } else {
                128
            };
            out.push(px);
        }
    }
    Ok(out)
}

pub fn emit_image(spec: &Spectrogram, path: impl AsRef<Path>) -> Result<()> {
    write_pgm(&spec.values, path)
}

pub fn write_pgm(values: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let bytes = render_pgm(values)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}
