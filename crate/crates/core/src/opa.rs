//! Residual TOA estimation from the phase slope of the zero-forcing channel
//! estimate across comb-spaced PRS subcarriers, and the combined
//! integer-plus-residual TOA pipeline.
//!
//! The estimator splits the PRS subcarriers of one OFDM symbol into a low and
//! a high half, averages the complex channel estimates of each half, and reads
//! the residual delay off the phase difference of the two averages. The
//! centroids of the halves sit N_PRS/2 comb steps apart, so the default phase
//! span M is N_PRS/2; the value is configurable for compatibility with
//! readings that take M = N_PRS.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{subcarrier_index, PrsConfig, ResourceGrid};
use crate::ofdm::{extract_symbol, IqSignal};
use crate::sync::{correlate, estimate_itoa};

/// Zero-forcing channel estimate on the PRS subcarriers of one OFDM symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CfrEstimate {
    /// H-hat values, one per PRS subcarrier, ordered by subcarrier index.
    pub values: Vec<Complex64>,
    /// The PRS subcarrier indices, strictly increasing with stride k_comb.
    pub indices: Vec<usize>,
}

/// Averaged half-band channel values and their phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSplit {
    pub h_low: Complex64,
    pub h_high: Complex64,
    /// Phase of `h_low`.
    pub theta_i: f64,
    /// Phase of `h_high`.
    pub theta_f: f64,
    /// Phase span M, in comb steps, dividing the measured phase difference.
    pub m_span: f64,
}

/// Combined TOA estimate with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaEstimate {
    /// Integer time of arrival in samples.
    pub itoa: usize,
    /// Residual (fractional) time of arrival in samples.
    pub rtoa: f64,
    /// Combined estimate, itoa + rtoa.
    pub toa: f64,
    /// Mean phase slope in radians per comb step.
    pub slope: f64,
    /// Per-PRS-symbol residual estimates feeding the mean.
    pub per_symbol_rtoa: Vec<f64>,
}

impl ToaEstimate {
    /// One CSV row per the report schema:
    /// trial_id, snr_db, n_rb, k_comb, beta, itoa, rtoa, toa, slope.
    pub fn csv_row(&self, trial_id: u64, snr_db: f64, cfg: &PrsConfig) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            trial_id,
            snr_db,
            cfg.n_rb,
            cfg.k_comb,
            cfg.beta_prs,
            self.itoa,
            self.rtoa,
            self.toa,
            self.slope
        )
    }

    pub const CSV_HEADER: &'static str =
        "trial_id,snr_db,n_rb,k_comb,beta,itoa,rtoa,toa,slope";
}

/// Estimator options; defaults follow the calibrated geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOptions {
    /// Phase span M in comb steps. `None` uses N_PRS/2, the centroid
    /// separation of the two averaged halves.
    pub m_span: Option<f64>,
    /// Correlation lag search bounds (inclusive start, exclusive end).
    /// `None` searches the whole feasible range.
    pub search: Option<(usize, usize)>,
    /// Correlation lag step.
    pub step: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            m_span: None,
            search: None,
            step: 1,
        }
    }
}

impl EstimatorOptions {
    pub fn effective_m(&self, cfg: &PrsConfig) -> f64 {
        self.m_span.unwrap_or(cfg.n_prs() as f64 / 2.0)
    }
}

/// Zero-forcing CFR estimate: H[k_m] = Y[k_m] / X[k_m] on the PRS indices of
/// symbol `l` (absolute index within the slot grid).
pub fn estimate_cfr(
    y_fd: &[Complex64],
    grid: &ResourceGrid,
    l: usize,
    cfg: &PrsConfig,
) -> Result<CfrEstimate> {
    if y_fd.len() != cfg.n_fft {
        return Err(Error::invalid(format!(
            "frequency-domain vector length {} != n_fft {}",
            y_fd.len(),
            cfg.n_fft
        )));
    }
    let sym_off = l
        .checked_sub(cfg.l_start)
        .filter(|off| *off < cfg.l_prs)
        .ok_or_else(|| Error::invalid(format!("symbol {l} carries no PRS")))?;
    let n_prs = cfg.n_prs();
    let mut values = Vec::with_capacity(n_prs);
    let mut indices = Vec::with_capacity(n_prs);
    for m in 0..n_prs {
        let k = subcarrier_index(m, cfg, sym_off)?;
        let x = grid.cell(l, k);
        if x == Complex64::default() {
            return Err(Error::Internal(format!(
                "PRS cell ({l}, {k}) is zero; cannot zero-force"
            )));
        }
        values.push(y_fd[k] / x);
        indices.push(k);
    }
    Ok(CfrEstimate { values, indices })
}

/// Split PRS subcarrier indices into the low and high halves.
pub fn split_sets(indices: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if indices.len() % 2 != 0 {
        return Err(Error::invalid(format!(
            "cannot split {} PRS subcarriers into equal halves",
            indices.len()
        )));
    }
    let half = indices.len() / 2;
    Ok((indices[..half].to_vec(), indices[half..].to_vec()))
}

/// Arithmetic complex means over the two index sets.
pub fn average_halves(
    cfr: &CfrEstimate,
    sets: &(Vec<usize>, Vec<usize>),
    m_span: f64,
) -> Result<PhaseSplit> {
    if sets.0.is_empty() || sets.1.is_empty() {
        return Err(Error::invalid("cannot average an empty subcarrier set"));
    }
    let mean_over = |set: &[usize]| -> Result<Complex64> {
        let mut acc = Complex64::default();
        for k in set {
            let pos = cfr
                .indices
                .iter()
                .position(|i| i == k)
                .ok_or_else(|| Error::invalid(format!("index {k} not in CFR estimate")))?;
            acc += cfr.values[pos];
        }
        Ok(acc / set.len() as f64)
    };
    let h_low = mean_over(&sets.0)?;
    let h_high = mean_over(&sets.1)?;
    Ok(PhaseSplit {
        h_low,
        h_high,
        theta_i: h_low.arg(),
        theta_f: h_high.arg(),
        m_span,
    })
}

/// Phase slope S = angle(h_high * conj(h_low)) / M, principal value of the
/// angle in (-pi, pi].
pub fn slope(split: &PhaseSplit) -> Result<f64> {
    if !(split.m_span > 0.0) {
        return Err(Error::invalid("phase span M must be positive"));
    }
    let prod = split.h_high * split.h_low.conj();
    if prod.norm() < 1e-300 {
        return Err(Error::DegenerateInput(
            "averaged channel estimates have vanishing magnitude".into(),
        ));
    }
    Ok(prod.arg() / split.m_span)
}

/// Residual TOA in samples: eps = -N_FFT * S / (2 pi K_comb).
pub fn rtoa_from_slope(s: f64, cfg: &PrsConfig) -> f64 {
    -(cfg.n_fft as f64) * s / (2.0 * PI * cfg.k_comb as f64)
}

/// Largest residual delay (samples) measurable without phase wrap for the
/// effective M.
pub fn wrap_bound(cfg: &PrsConfig, m_span: f64) -> f64 {
    cfg.n_fft as f64 / (2.0 * m_span * cfg.k_comb as f64)
}

/// Full TOA pipeline: correlate, pick the integer TOA, extract each PRS
/// symbol, zero-force, split/average/slope, convert to residual samples, and
/// combine. Per-symbol residuals are averaged over the L_PRS symbols.
///
/// `reference` is the modulated PRS block (all L_PRS symbols with CPs) used
/// for the correlation; `grid` supplies the known transmitted cells.
pub fn estimate_toa(
    y: &IqSignal,
    grid: &ResourceGrid,
    reference: &IqSignal,
    cfg: &PrsConfig,
    opts: &EstimatorOptions,
) -> Result<ToaEstimate> {
    if reference.is_empty() {
        return Err(Error::invalid("empty PRS reference").in_stage("correlate"));
    }
    let (search_lo, search_hi) = match opts.search {
        Some((lo, hi)) => {
            if lo >= hi || hi > y.len() {
                return Err(Error::invalid(format!(
                    "search window [{lo}, {hi}) invalid for signal of length {}",
                    y.len()
                ))
                .in_stage("correlate"));
            }
            (lo, hi)
        }
        None => (0, y.len().saturating_sub(reference.len()) + 1),
    };
    let windowed = IqSignal {
        samples: y.samples[search_lo..].to_vec(),
        sample_rate_hz: y.sample_rate_hz,
    };
    let profile = correlate(&windowed, reference, opts.step, search_hi - search_lo - 1)
        .map_err(|e| e.in_stage("correlate"))?;
    let itoa = search_lo + estimate_itoa(&profile);

    let m_span = opts.effective_m(cfg);
    let degenerate_floor = 1e-12 * cfg.beta_prs;
    let mut per_symbol_rtoa = Vec::with_capacity(cfg.l_prs);
    let mut slope_sum = 0.0;
    for sym_off in 0..cfg.l_prs {
        let y_fd =
            extract_symbol(y, sym_off, itoa, cfg).map_err(|e| e.in_stage("extract_symbol"))?;
        let l = cfg.l_start + sym_off;
        let cfr = estimate_cfr(&y_fd, grid, l, cfg).map_err(|e| e.in_stage("estimate_cfr"))?;
        let sets = split_sets(&cfr.indices).map_err(|e| e.in_stage("split_sets"))?;
        let split =
            average_halves(&cfr, &sets, m_span).map_err(|e| e.in_stage("average_halves"))?;
        if split.h_low.norm() < degenerate_floor || split.h_high.norm() < degenerate_floor {
            return Err(Error::DegenerateInput(format!(
                "averaged channel magnitude below {degenerate_floor:.3e} in symbol {l}"
            ))
            .in_stage("average_halves"));
        }
        let s = slope(&split).map_err(|e| e.in_stage("slope"))?;
        slope_sum += s;
        per_symbol_rtoa.push(rtoa_from_slope(s, cfg));
    }
    let rtoa = per_symbol_rtoa.iter().sum::<f64>() / per_symbol_rtoa.len() as f64;
    Ok(ToaEstimate {
        itoa,
        rtoa,
        toa: itoa as f64 + rtoa,
        slope: slope_sum / cfg.l_prs as f64,
        per_symbol_rtoa,
    })
}
