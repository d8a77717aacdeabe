//! Plain-text output formats: CSV tables and JSON summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::secular::SpectralPoint;

/// Decimal with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Spectrum CSV: `n,k,z_prime,bracket_lo,bracket_hi`.
pub fn write_spectrum_csv<W: Write>(points: &[SpectralPoint], mut out: W) -> Result<()> {
    writeln!(out, "n,k,z_prime,bracket_lo,bracket_hi")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            p.index,
            fmt17(p.k),
            fmt17(p.z_prime),
            fmt17(p.bracket.0),
            fmt17(p.bracket.1)
        )?;
    }
    Ok(())
}

/// One sample per line under the header `value`.
pub fn write_values_csv<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "value")?;
    for v in values {
        writeln!(out, "{}", fmt17(*v))?;
    }
    Ok(())
}

/// Histogram CSV: `bin_center,density`.
pub fn write_histogram_csv<W: Write>(centers: &[f64], density: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "bin_center,density")?;
    for (c, d) in centers.iter().zip(density) {
        writeln!(out, "{},{}", fmt17(*c), fmt17(*d))?;
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, std::f64::consts::PI, 1e-300, 12345.678901234567] {
            let s = fmt17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn spectrum_header_and_rows() {
        let pts = [SpectralPoint {
            index: 0,
            k: 0.0,
            z_prime: 3.0,
            bracket: (-1.0, 1.0),
        }];
        let mut buf = Vec::new();
        write_spectrum_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,k,z_prime,bracket_lo,bracket_hi"));
        assert!(lines.next().unwrap().starts_with("0,0.0000000000000000e0,"));
    }
}
