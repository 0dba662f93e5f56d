//! Input readers: CSV (one sample per line, optional header) and raw
//! little-endian f64/i16 streams, plus the 360→250 Hz rate conversion.

use crate::config::{InputFormat, RunConfig};
use crate::error::{io_err, CliError, Result};
use csecg::experiment::derive_seed;
use csecg::signal;
use std::path::Path;

/// Salt for the synthetic-input seed, so the generated signal is not
/// correlated with the sensing matrix drawn from the same base seed.
const SYNTHETIC_SALT: u64 = 0x53_59_4e_54;

pub fn read_samples(path: &Path, format: InputFormat, scale: f64) -> Result<Vec<f64>> {
    match format {
        InputFormat::Csv => read_csv(path),
        InputFormat::RawF64 => read_raw_f64(path),
        InputFormat::RawI16 => read_raw_i16(path, scale),
    }
}

fn read_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(io_err(format!("cannot read {}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let row = i + 1;
        let cell = raw.trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => {
                return Err(CliError::Data(format!(
                    "{}: non-finite sample at row {row}",
                    path.display()
                )))
            }
            // A single leading unparseable line is taken as the header.
            Err(_) if row == 1 => continue,
            Err(_) => {
                return Err(CliError::Data(format!(
                    "{}: unparseable value '{cell}' at row {row}",
                    path.display()
                )))
            }
        }
    }
    Ok(out)
}

fn read_raw_f64(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(io_err(format!("cannot read {}", path.display())))?;
    if bytes.len() % 8 != 0 {
        return Err(CliError::Data(format!(
            "{}: {} bytes is not a whole number of f64 samples",
            path.display(),
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(bytes.len() / 8);
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(CliError::Data(format!(
                "{}: non-finite sample at index {i}",
                path.display()
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn read_raw_i16(path: &Path, scale: f64) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(io_err(format!("cannot read {}", path.display())))?;
    if bytes.len() % 2 != 0 {
        return Err(CliError::Data(format!(
            "{}: {} bytes is not a whole number of i16 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|c| i16::from_le_bytes(c.try_into().unwrap()) as f64 * scale)
        .collect())
}

/// Produces the working 250 Hz stream named by the config — either the
/// synthetic generator or a file, resampled if it arrives at 360 Hz —
/// together with a record label for reports.
pub fn load_stream(cfg: &RunConfig) -> Result<(Vec<f64>, String)> {
    if let Some(len) = cfg.synthetic {
        let x = signal::synthetic_ecg(len, 250.0, derive_seed(cfg.seed, SYNTHETIC_SALT));
        return Ok((x, "synthetic".into()));
    }
    let path = cfg.input.as_ref().ok_or_else(|| {
        CliError::Config("no input: give --input <file> or --synthetic <samples>".into())
    })?;
    let samples = read_samples(path, cfg.format, cfg.scale)?;
    let record = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if cfg.fs == 360 {
        let out = signal::resample_360_to_250(&samples);
        log::info!(
            "resampled {} samples at 360 Hz to {} at 250 Hz",
            samples.len(),
            out.len()
        );
        Ok((out, record))
    } else {
        Ok((samples, record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file_with(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn csv_reads_values_and_skips_a_header() {
        let f = file_with(b"amplitude\n1.5\n-2\n\n3e-1\n");
        let got = read_samples(f.path(), InputFormat::Csv, 1.0).unwrap();
        assert_eq!(got, vec![1.5, -2.0, 0.3]);
    }

    #[test]
    fn csv_rejects_bad_rows_with_their_number() {
        let f = file_with(b"1.0\n2.0\noops\n");
        let err = read_samples(f.path(), InputFormat::Csv, 1.0).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("row 3"), "{err}");

        let f = file_with(b"1.0\nnan\n");
        let err = read_samples(f.path(), InputFormat::Csv, 1.0).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn raw_formats_decode_little_endian() {
        let mut bytes = Vec::new();
        for v in [0.5f64, -1.25] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let f = file_with(&bytes);
        assert_eq!(
            read_samples(f.path(), InputFormat::RawF64, 1.0).unwrap(),
            vec![0.5, -1.25]
        );

        let mut bytes = Vec::new();
        for v in [200i16, -400] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let f = file_with(&bytes);
        assert_eq!(
            read_samples(f.path(), InputFormat::RawI16, 1.0 / 200.0).unwrap(),
            vec![1.0, -2.0]
        );
    }

    #[test]
    fn raw_formats_reject_ragged_lengths() {
        let f = file_with(&[0u8; 9]);
        assert_eq!(
            read_samples(f.path(), InputFormat::RawF64, 1.0)
                .unwrap_err()
                .exit_code(),
            3
        );
        let f = file_with(&[0u8; 3]);
        assert!(read_samples(f.path(), InputFormat::RawI16, 1.0).is_err());
    }

    #[test]
    fn missing_file_is_a_data_error() {
        let err =
            read_samples(Path::new("/nonexistent/x.csv"), InputFormat::Csv, 1.0).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
