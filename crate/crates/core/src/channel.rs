//! LOS delayed channel with calibrated white Gaussian noise.
//!
//! The integer part of the delay is a plain sample shift; the fractional part
//! goes through a 64-tap Kaiser-windowed sinc interpolator, which models a
//! linear (non-cyclic) channel. The per-bin frequency-ramp form of the same
//! channel is kept as an independent oracle ([`ramp_grid`], [`model_rx_bin`]).
//!
//! SNR convention: `snr_db` is the per-occupied-PRS-subcarrier ratio
//! beta^2 / sigma^2, where sigma^2 is the complex noise variance per sample
//! (equal per frequency bin under the unitary transform). Sweeps that hold
//! E_PRS fixed across allocations calibrate sigma from a reference beta so a
//! hotter comb genuinely sees a better per-bin SNR.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{PrsConfig, ResourceGrid};
use crate::ofdm::IqSignal;

/// Tap count of the fractional-delay interpolator.
pub const FRAC_DELAY_TAPS: usize = 64;
/// Group-delay center of the interpolator, compensated inside the channel.
const KERNEL_CENTER: usize = FRAC_DELAY_TAPS / 2 - 1;
/// Kaiser window shape parameter.
const KAISER_BETA: f64 = 10.0;

/// Single-tap LOS channel: complex gain, (possibly fractional) delay in
/// samples, per-subcarrier SNR, and the noise seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub alpha: Complex64,
    pub tau_samples: f64,
    pub snr_db: f64,
    pub rng_seed: u64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            tau_samples: 0.0,
            snr_db: f64::INFINITY,
            rng_seed: 0,
        }
    }
}

/// Zeroth-order modified Bessel function of the first kind (series form).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Kaiser-windowed sinc kernel delaying by `KERNEL_CENTER + frac` samples,
/// normalized to unit DC gain. `frac` must be in [0, 1).
pub fn fractional_delay_kernel(frac: f64) -> Vec<f64> {
    debug_assert!((0.0..1.0).contains(&frac));
    let center = KERNEL_CENTER as f64 + frac;
    let half = (FRAC_DELAY_TAPS - 1) as f64 / 2.0;
    let denom = bessel_i0(KAISER_BETA);
    let mut taps: Vec<f64> = (0..FRAC_DELAY_TAPS)
        .map(|i| {
            let t = i as f64 - center;
            // Fixed window, shifted sinc.
            let w = (i as f64 - half) / (half + 1.0);
            let window = if w.abs() <= 1.0 {
                bessel_i0(KAISER_BETA * (1.0 - w * w).sqrt()) / denom
            } else {
                0.0
            };
            sinc(t) * window
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Delay a sample stream by `tau >= 0` samples: integer part by shift,
/// fractional part by the windowed-sinc interpolator. Gain is unity.
pub fn delay_samples(x: &[Complex64], tau: f64) -> Vec<Complex64> {
    let int_delay = tau.floor() as usize;
    let frac = tau - tau.floor();
    if frac < 1e-12 {
        let mut out = vec![Complex64::default(); x.len() + int_delay];
        out[int_delay..].copy_from_slice(x);
        return out;
    }
    let taps = fractional_delay_kernel(frac);
    let out_len = x.len() + int_delay + FRAC_DELAY_TAPS - KERNEL_CENTER;
    let mut out = vec![Complex64::default(); out_len];

    // Only samples near the nonzero span of the input can produce output.
    let first_nz = match x.iter().position(|s| *s != Complex64::default()) {
        Some(i) => i,
        None => return out,
    };
    let last_nz = x.iter().rposition(|s| *s != Complex64::default()).unwrap();

    // y[n] = sum_i h[i] * x[n - int_delay + KERNEL_CENTER - i]
    let lo = (first_nz + int_delay).saturating_sub(FRAC_DELAY_TAPS - 1 - KERNEL_CENTER);
    let hi = (last_nz + int_delay + KERNEL_CENTER + 1).min(out_len);
    for n in lo..hi {
        let base = n as isize - int_delay as isize + KERNEL_CENTER as isize;
        let mut acc = Complex64::default();
        for (i, &h) in taps.iter().enumerate() {
            let j = base - i as isize;
            if j >= 0 && (j as usize) < x.len() {
                acc += x[j as usize] * h;
            }
        }
        out[n] = acc;
    }
    out
}

/// Noise standard deviation (per complex sample) realizing the requested
/// per-PRS-subcarrier SNR for the given allocation.
pub fn calibrate_noise(x: &IqSignal, cfg: &PrsConfig, snr_db: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::invalid("cannot calibrate noise for an empty signal"));
    }
    Ok(noise_sigma_for_beta(cfg.beta_prs, snr_db))
}

/// Sigma such that beta^2 / sigma^2 equals the SNR, with sigma the standard
/// deviation of a complex sample (components at sigma/sqrt(2)).
pub fn noise_sigma_for_beta(beta: f64, snr_db: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return 0.0;
    }
    beta * 10f64.powf(-snr_db / 20.0)
}

/// Add circular complex Gaussian noise of per-sample std `sigma` to
/// `samples[range]`. Deterministic for a given seed; the same seed and range
/// produce bit-identical noise.
pub fn add_noise(samples: &mut [Complex64], range: std::ops::Range<usize>, sigma: f64, seed: u64) {
    if sigma == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comp = sigma / 2f64.sqrt();
    for s in &mut samples[range] {
        let (a, b) = box_muller(&mut rng);
        s.re += comp * a;
        s.im += comp * b;
    }
}

fn box_muller(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * PI * u2;
    (r * th.cos(), r * th.sin())
}

/// Apply the LOS channel: output = alpha * delay(x, tau) + noise.
pub fn apply_channel(x: &IqSignal, ch: &ChannelSpec, cfg: &PrsConfig) -> Result<IqSignal> {
    if x.is_empty() {
        return Err(Error::invalid("channel input must be nonempty"));
    }
    if ch.tau_samples < 0.0 {
        return Err(Error::invalid("channel delay must be nonnegative"));
    }
    let mut out = delay_samples(&x.samples, ch.tau_samples);
    if ch.alpha != Complex64::new(1.0, 0.0) {
        out.iter_mut().for_each(|s| *s *= ch.alpha);
    }
    // SNR is referenced to the received per-bin power (|alpha| * beta)^2.
    let sigma = noise_sigma_for_beta(cfg.beta_prs * ch.alpha.norm(), ch.snr_db);
    let len = out.len();
    add_noise(&mut out, 0..len, sigma, ch.rng_seed);
    IqSignal::new(out, x.sample_rate_hz)
}

/// Closed-form received bin model: alpha * e^{-j 2 pi k tau / n} * x.
/// `k` is a signed frequency index (negative for bins below DC).
pub fn model_rx_bin(x: Complex64, k: i64, tau: f64, alpha: Complex64, n: usize) -> Complex64 {
    alpha * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * tau / n as f64) * x
}

/// Frequency-ramp oracle channel: returns a grid whose PRS cells carry the
/// exact per-bin phase of a `tau_frac`-sample delay (signed frequencies under
/// the centered placement). Modulating this grid yields a received signal
/// whose extracted symbols match the ramp model to machine precision.
pub fn ramp_grid(grid: &ResourceGrid, cfg: &PrsConfig, tau_frac: f64, alpha: Complex64) -> ResourceGrid {
    let mut out = grid.clone();
    let half = cfg.n_occupied() as i64 / 2;
    for l in 0..grid.n_symbols() {
        for k in 0..grid.n_fft() {
            let v = grid.cell(l, k);
            if v != Complex64::default() {
                out.set_cell(l, k, model_rx_bin(v, k as i64 - half, tau_frac, alpha, cfg.n_fft));
            }
        }
    }
    out
}
