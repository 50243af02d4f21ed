//! IQ file import/export: little-endian interleaved 32-bit floats (re, im),
//! with a sidecar `<path>.meta` file carrying `sample_rate_hz=<value>`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::IqSignal;

fn meta_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".meta");
    PathBuf::from(os)
}

/// Write the signal as interleaved f32 LE pairs plus the sidecar header.
pub fn write_iq(path: &Path, signal: &IqSignal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in &signal.samples {
        w.write_all(&(s.re as f32).to_le_bytes())?;
        w.write_all(&(s.im as f32).to_le_bytes())?;
    }
    w.flush()?;
    let mut meta = File::create(meta_path(path))?;
    writeln!(meta, "sample_rate_hz={}", signal.sample_rate_hz)?;
    Ok(())
}

/// Read a signal written by [`write_iq`]. Round trips bit-exactly at f32
/// precision.
pub fn read_iq(path: &Path) -> Result<IqSignal> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::invalid(format!(
            "IQ file {} has {} bytes, not a multiple of 8",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            Complex64::new(
                f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
                f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64,
            )
        })
        .collect();

    let meta = std::fs::read_to_string(meta_path(path))?;
    let rate = meta
        .lines()
        .find_map(|l| l.trim().strip_prefix("sample_rate_hz="))
        .ok_or_else(|| Error::invalid("missing sample_rate_hz in sidecar header"))?
        .parse::<f64>()
        .map_err(|e| Error::invalid(format!("bad sample_rate_hz: {e}")))?;
    IqSignal::new(samples, rate)
}
