//! OFDM modulation and demodulation: IFFT plus cyclic prefix per symbol,
//! frame/slot assembly, and receiver-side symbol extraction.
//!
//! Transforms are unitary (1/sqrt(N) in both directions) so per-symbol energy
//! is identical in the time and frequency domains.
//!
//! Spectrum placement: grid subcarrier k (0 = lowest allocated) sits at FFT
//! bin (k - N_occ/2) mod N_FFT, centering the occupied band at DC.
//! [`extract_symbol`] undoes the shift, so recovered vectors are indexed like
//! the grid.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{PrsConfig, ResourceGrid, SYMBOLS_PER_SLOT};

/// Complex baseband sample stream with sampling-rate metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IqSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
}

impl IqSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::invalid("signal contains non-finite samples"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }
}

/// Frame/slot layout: which slots carry the preamble and the PRS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub slots_per_frame: usize,
    pub symbols_per_slot: usize,
    pub preamble_slot: usize,
    pub prs_slot: usize,
}

impl Default for FrameLayout {
    /// 10 ms frame of 20 slots, 14 symbols each; preamble in slot 0, PRS in
    /// slot 1.
    fn default() -> Self {
        Self {
            slots_per_frame: 20,
            symbols_per_slot: SYMBOLS_PER_SLOT,
            preamble_slot: 0,
            prs_slot: 1,
        }
    }
}

impl FrameLayout {
    pub fn validate(&self) -> Result<()> {
        if self.slots_per_frame == 0 || self.symbols_per_slot == 0 {
            return Err(Error::invalid("frame layout dimensions must be positive"));
        }
        if self.preamble_slot >= self.slots_per_frame || self.prs_slot >= self.slots_per_frame {
            return Err(Error::invalid("slot index outside frame"));
        }
        Ok(())
    }

    pub fn slot_len(&self, cfg: &PrsConfig) -> usize {
        self.symbols_per_slot * cfg.symbol_len()
    }

    pub fn frame_len(&self, cfg: &PrsConfig) -> usize {
        self.slots_per_frame * self.slot_len(cfg)
    }

    /// Sample index of the first PRS sample (start of the first PRS symbol's
    /// cyclic prefix) within the frame.
    pub fn prs_start_sample(&self, cfg: &PrsConfig) -> usize {
        self.prs_slot * self.slot_len(cfg) + cfg.l_start * cfg.symbol_len()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary in-place transform; `inverse = true` for the IFFT.
pub(crate) fn unitary_fft(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    PLANNER.with(|p| {
        let fft = if inverse {
            p.borrow_mut().plan_fft_inverse(n)
        } else {
            p.borrow_mut().plan_fft_forward(n)
        };
        fft.process(buf);
    });
    let scale = 1.0 / (n as f64).sqrt();
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// FFT bin for grid subcarrier `k` under the centered placement.
pub(crate) fn physical_bin(k: usize, cfg: &PrsConfig) -> usize {
    (k + cfg.n_fft - cfg.n_occupied() / 2) % cfg.n_fft
}

/// OFDM-modulate a resource grid: per symbol, N_FFT-point unitary IFFT of the
/// centered spectrum, then the last N_CP samples prepended as cyclic prefix.
/// Symbols are concatenated in order, all-zero symbols included.
pub fn modulate(grid: &ResourceGrid, cfg: &PrsConfig) -> Result<IqSignal> {
    if grid.n_fft() != cfg.n_fft {
        return Err(Error::invalid(format!(
            "grid width {} does not match n_fft {}",
            grid.n_fft(),
            cfg.n_fft
        )));
    }
    let sym_len = cfg.symbol_len();
    let mut samples = vec![Complex64::default(); grid.n_symbols() * sym_len];
    let mut spectrum = vec![Complex64::default(); cfg.n_fft];
    for l in 0..grid.n_symbols() {
        let row = grid.symbol_row(l);
        if row.iter().all(|c| *c == Complex64::default()) {
            continue;
        }
        spectrum.iter_mut().for_each(|c| *c = Complex64::default());
        for (k, &v) in row.iter().enumerate() {
            if v != Complex64::default() {
                spectrum[physical_bin(k, cfg)] = v;
            }
        }
        unitary_fft(&mut spectrum, true);
        let out = &mut samples[l * sym_len..(l + 1) * sym_len];
        out[..cfg.n_cp].copy_from_slice(&spectrum[cfg.n_fft - cfg.n_cp..]);
        out[cfg.n_cp..].copy_from_slice(&spectrum);
    }
    IqSignal::new(samples, cfg.sample_rate_hz())
}

/// Place the PRS slot signal and the raw preamble chips into a full frame.
///
/// `prs_signal` is the modulated slot from [`modulate`] (leading zero symbols
/// included) and is placed at the start of the PRS slot; `preamble` chips go
/// at the start of the preamble slot.
pub fn assemble_frame(
    prs_signal: &IqSignal,
    preamble: &[Complex64],
    layout: &FrameLayout,
    cfg: &PrsConfig,
) -> Result<IqSignal> {
    layout.validate()?;
    let slot_len = layout.slot_len(cfg);
    if prs_signal.len() > slot_len {
        return Err(Error::invalid(format!(
            "PRS signal of {} samples exceeds slot capacity {}",
            prs_signal.len(),
            slot_len
        )));
    }
    if preamble.len() > slot_len {
        return Err(Error::invalid(format!(
            "preamble of {} samples exceeds slot capacity {}",
            preamble.len(),
            slot_len
        )));
    }
    let mut samples = vec![Complex64::default(); layout.frame_len(cfg)];
    let pre_start = layout.preamble_slot * slot_len;
    samples[pre_start..pre_start + preamble.len()].copy_from_slice(preamble);
    let prs_start = layout.prs_slot * slot_len;
    samples[prs_start..prs_start + prs_signal.len()].copy_from_slice(&prs_signal.samples);
    IqSignal::new(samples, cfg.sample_rate_hz())
}

/// Extract the frequency-domain vector of one PRS OFDM symbol.
///
/// `l` is the symbol offset within the PRS occasion (0 = the symbol at
/// l_start) and `itoa` is the estimated sample index of the PRS start (first
/// CP sample of the first PRS symbol). The CP is stripped, the window is
/// forward-transformed, and the centered spectrum is mapped back to grid
/// subcarrier indexing.
pub fn extract_symbol(
    y: &IqSignal,
    l: usize,
    itoa: usize,
    cfg: &PrsConfig,
) -> Result<Vec<Complex64>> {
    let start = itoa + l * cfg.symbol_len() + cfg.n_cp;
    let end = start + cfg.n_fft;
    if end > y.len() {
        return Err(Error::OutOfRange(format!(
            "symbol window [{start}, {end}) outside signal of length {}",
            y.len()
        )));
    }
    let mut buf = y.samples[start..end].to_vec();
    unitary_fft(&mut buf, false);
    let mut logical = vec![Complex64::default(); cfg.n_fft];
    for (k, slot) in logical.iter_mut().enumerate() {
        *slot = buf[physical_bin(k, cfg)];
    }
    Ok(logical)
}
