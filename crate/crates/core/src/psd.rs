//! Averaged-periodogram (Welch) power spectral density estimation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::{unitary_fft, IqSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdWindow {
    Hann,
    Rect,
}

/// Averaged periodogram over segments of `segment_len` samples advancing by
/// `segment_len - overlap`. Returns centered frequency bins (Hz) and linear
/// power density (power per Hz); summing density * bin-width recovers the
/// windowed mean power.
pub fn compute_psd(
    x: &IqSignal,
    segment_len: usize,
    overlap: usize,
    window: PsdWindow,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if segment_len == 0 || x.len() < segment_len {
        return Err(Error::invalid(format!(
            "signal of {} samples shorter than segment length {segment_len}",
            x.len()
        )));
    }
    if overlap >= segment_len {
        return Err(Error::invalid("overlap must be smaller than segment length"));
    }
    let n = segment_len;
    let taps: Vec<f64> = match window {
        PsdWindow::Rect => vec![1.0; n],
        PsdWindow::Hann => (0..n)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / n as f64;
                t.sin() * t.sin()
            })
            .collect(),
    };
    let win_power: f64 = taps.iter().map(|w| w * w).sum::<f64>() / n as f64;

    let hop = n - overlap;
    let mut acc = vec![0.0f64; n];
    let mut segments = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex64::default(); n];
    while start + n <= x.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = x.samples[start + i] * taps[i];
        }
        unitary_fft(&mut buf, false);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let fs = x.sample_rate_hz;
    // Unitary FFT: sum over bins of |X|^2 equals windowed time power * n.
    let scale = 1.0 / (segments as f64 * win_power * fs);
    let half = n / 2;
    let mut freqs = Vec::with_capacity(n);
    let mut psd = Vec::with_capacity(n);
    for i in 0..n {
        // fftshift: negative frequencies first.
        let bin = (i + half) % n;
        let f_signed = bin as f64 - if bin >= half { n as f64 } else { 0.0 };
        freqs.push(f_signed * fs / n as f64);
        psd.push(acc[(i + half) % n] * scale);
    }
    Ok((freqs, psd))
}

/// Write a PSD as `freq_hz,psd_db` CSV rows.
pub fn write_psd_csv<W: std::io::Write>(
    w: &mut W,
    freqs: &[f64],
    psd: &[f64],
) -> Result<()> {
    writeln!(w, "freq_hz,psd_db")?;
    for (f, p) in freqs.iter().zip(psd) {
        let db = 10.0 * p.max(1e-300).log10();
        writeln!(w, "{f},{db}")?;
    }
    Ok(())
}
