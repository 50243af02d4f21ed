//! Integer time-of-arrival estimation: cross-correlation of the received
//! stream against the known transmitted reference, peak pick with a
//! smallest-lag tie-break.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::{unitary_fft, IqSignal};

/// Correlation magnitudes over a set of candidate lags.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub lags: Vec<usize>,
    pub magnitudes: Vec<f64>,
    pub peak_lag: usize,
}

impl CorrelationProfile {
    /// Diagnostic dump as `lag,magnitude` lines.
    pub fn dump_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "lag,magnitude")?;
        for (lag, mag) in self.lags.iter().zip(&self.magnitudes) {
            writeln!(w, "{lag},{mag}")?;
        }
        Ok(())
    }
}

/// Problem size above which [`correlate`] switches to the FFT fast path.
const DIRECT_OP_LIMIT: usize = 20_000_000;

/// Correlate `y` against the reference at lags {0, step, 2*step, ...} up to
/// `max_lag` inclusive: R[t] = |sum_n y[n + t] x*[n]|, out-of-range samples
/// treated as zero.
pub fn correlate(
    y: &IqSignal,
    x_ref: &IqSignal,
    step: usize,
    max_lag: usize,
) -> Result<CorrelationProfile> {
    if x_ref.is_empty() {
        return Err(Error::invalid("correlation reference must be nonempty"));
    }
    if step == 0 {
        return Err(Error::invalid("correlation step must be positive"));
    }
    let num_lags = max_lag / step + 1;
    let magnitudes = if num_lags * x_ref.len() <= DIRECT_OP_LIMIT {
        correlate_direct(&y.samples, &x_ref.samples, step, max_lag)
    } else {
        correlate_fft(&y.samples, &x_ref.samples, step, max_lag)
    };
    let lags: Vec<usize> = (0..num_lags).map(|i| i * step).collect();
    let peak_lag = peak(&lags, &magnitudes);
    Ok(CorrelationProfile {
        lags,
        magnitudes,
        peak_lag,
    })
}

fn peak(lags: &[usize], magnitudes: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &m) in magnitudes.iter().enumerate() {
        if m > magnitudes[best] {
            best = i;
        }
    }
    lags[best]
}

pub(crate) fn correlate_direct(
    y: &[Complex64],
    x_ref: &[Complex64],
    step: usize,
    max_lag: usize,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(max_lag / step + 1);
    let mut t = 0usize;
    while t <= max_lag {
        let upper = x_ref.len().min(y.len().saturating_sub(t));
        let mut acc = Complex64::default();
        for n in 0..upper {
            acc += y[n + t] * x_ref[n].conj();
        }
        out.push(acc.norm());
        t += step;
    }
    out
}

pub(crate) fn correlate_fft(
    y: &[Complex64],
    x_ref: &[Complex64],
    step: usize,
    max_lag: usize,
) -> Vec<f64> {
    // Linear cross-correlation via zero-padded circular convolution.
    let n = (y.len() + x_ref.len()).next_power_of_two();
    let mut fy = vec![Complex64::default(); n];
    fy[..y.len()].copy_from_slice(y);
    let mut fx = vec![Complex64::default(); n];
    fx[..x_ref.len()].copy_from_slice(x_ref);
    unitary_fft(&mut fy, false);
    unitary_fft(&mut fx, false);
    for (a, b) in fy.iter_mut().zip(&fx) {
        *a *= b.conj();
    }
    unitary_fft(&mut fy, true);
    // Unitary transforms leave a residual 1/sqrt(n); undo it.
    let scale = (n as f64).sqrt();
    (0..=max_lag)
        .step_by(step)
        .map(|t| fy[t].norm() * scale)
        .collect()
}

/// Lag of the global correlation maximum; ties break toward the smallest lag.
pub fn estimate_itoa(profile: &CorrelationProfile) -> usize {
    profile.peak_lag
}
