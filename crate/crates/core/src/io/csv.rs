use std::io::Write;

use crate::error::Result;
use crate::io::archive::FeatureMatrix;

fn significant6(v: f32) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.5e}")
    }
}

/// One line per frame: `frame,b0,..,b{n-1}` with six significant digits.
pub fn write_spectrogram_csv<W: Write>(matrix: &FeatureMatrix, mut out: W) -> Result<()> {
    write!(out, "frame")?;
    for b in 0..matrix.rows {
        write!(out, ",b{b}")?;
    }
    writeln!(out)?;
    for t in 0..matrix.cols {
        write!(out, "{t}")?;
        for b in 0..matrix.rows {
            write!(out, ",{}", significant6(matrix.get(b, t)))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_rows() {
        let m = FeatureMatrix {
            rows: 2,
            cols: 3,
            frame_rate: 100.0,
            values: vec![1.0, 2.0, 3.0, -0.000_123_456_78, 0.0, 123_456_789.0],
        };
        let mut buf = Vec::new();
        write_spectrogram_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "frame,b0,b1");
        assert_eq!(lines[1], "0,1.00000e0,-1.23457e-4");
        assert_eq!(lines[2], "1,2.00000e0,0");
        assert_eq!(lines[3], "2,3.00000e0,1.23457e8");
        let parsed: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!((parsed + 1.23457e-4).abs() < 1e-12);
    }
}
