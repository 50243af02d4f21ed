//! Monte-Carlo harness: MSE-vs-SNR sweeps over PRS allocation parameters,
//! fixed-energy allocation variants, and report serialization.
//!
//! Each (parameter value, SNR) cell runs `trials` independent channel draws:
//! generate the frame, delay it by the drawn tau, add calibrated noise,
//! run the full TOA estimator, and accumulate squared errors against the
//! ground-truth arrival time. Trials are parallelized but accumulated in
//! trial order, so reports are byte-identical regardless of thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{delay_samples, noise_sigma_for_beta, ramp_grid};
use crate::error::{Error, Result};
use crate::grid::{beta_for_energy, map_prs, PrsConfig, ResourceGrid};
use crate::ofdm::{assemble_frame, modulate, FrameLayout, IqSignal};
use crate::opa::{estimate_toa, EstimatorOptions};
use crate::sequences::{generate_gold, map_qpsk};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// How the fractional part of the per-trial delay is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauFrac {
    Fixed(f64),
    /// Uniform over [0, 1), emulating free-running sub-sample timing drift.
    Uniform,
}

/// The swept allocation parameter and its values.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepParam {
    NRb(Vec<usize>),
    KComb(Vec<usize>),
    BetaPrs(Vec<f64>),
    /// Allocation variants (n_rb, k_comb) all normalized to the same E_PRS.
    FixedEnergy {
        energy: f64,
        variants: Vec<(usize, usize)>,
    },
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::NRb(_) => "n_rb",
            SweepParam::KComb(_) => "k_comb",
            SweepParam::BetaPrs(_) => "beta_prs",
            SweepParam::FixedEnergy { .. } => "fixed_energy",
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            SweepParam::NRb(v) => v.is_empty(),
            SweepParam::KComb(v) => v.is_empty(),
            SweepParam::BetaPrs(v) => v.is_empty(),
            SweepParam::FixedEnergy { variants, .. } => variants.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PrsConfig,
    pub param: SweepParam,
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    /// Fixed integer part of the channel delay.
    pub tau_int: usize,
    pub tau_frac: TauFrac,
    pub rng_seed: u64,
    pub layout: FrameLayout,
    /// Correlation search half-width (samples) around the expected PRS start.
    pub search_halfwidth: usize,
    /// Gold seed for the PRS sequence.
    pub prs_seed: u32,
    /// Replace the sinc-filter channel with the per-bin frequency-ramp
    /// oracle channel.
    pub ramp_oracle_channel: bool,
    /// Noise sigma calibrated from this beta instead of each config's own;
    /// set for fixed-energy sweeps so all variants share one noise floor.
    pub noise_ref_beta: Option<f64>,
    /// Estimator phase span override.
    pub m_span: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            base: PrsConfig::default(),
            param: SweepParam::NRb(vec![20]),
            snr_grid_db: vec![20.0],
            trials_per_point: 100,
            tau_int: 7,
            tau_frac: TauFrac::Uniform,
            rng_seed: 1,
            // Two slots are enough to hold the preamble and PRS slots; the
            // rest of a 10 ms frame is empty air time.
            layout: FrameLayout {
                slots_per_frame: 2,
                ..FrameLayout::default()
            },
            search_halfwidth: 32,
            prs_seed: 42,
            ramp_oracle_channel: false,
            noise_ref_beta: None,
            m_span: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::invalid("trials_per_point must be >= 1"));
        }
        if self.param.is_empty() {
            return Err(Error::invalid("sweep value list must be nonempty"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::invalid("snr grid must be nonempty"));
        }
        self.layout.validate()
    }

    /// Derived (label, config) pairs, one per swept value.
    pub fn variants(&self) -> Vec<(String, Result<PrsConfig>)> {
        match &self.param {
            SweepParam::NRb(values) => values
                .iter()
                .map(|&v| {
                    let cfg = PrsConfig {
                        n_rb: v,
                        ..self.base.clone()
                    };
                    (v.to_string(), cfg.validate().map(|_| cfg))
                })
                .collect(),
            SweepParam::KComb(values) => values
                .iter()
                .map(|&v| {
                    let cfg = PrsConfig {
                        k_comb: v,
                        ..self.base.clone()
                    };
                    (v.to_string(), cfg.validate().map(|_| cfg))
                })
                .collect(),
            SweepParam::BetaPrs(values) => values
                .iter()
                .map(|&v| {
                    let cfg = PrsConfig {
                        beta_prs: v,
                        ..self.base.clone()
                    };
                    (v.to_string(), cfg.validate().map(|_| cfg))
                })
                .collect(),
            SweepParam::FixedEnergy { energy, variants } => variants
                .iter()
                .map(|&(n_rb, k_comb)| {
                    let label = format!("{n_rb}rb_comb{k_comb}");
                    let cfg = fixed_energy_config(*energy, n_rb, k_comb, &self.base);
                    (label, cfg)
                })
                .collect(),
        }
    }
}

/// One report cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub parameter: String,
    pub value: String,
    pub snr_db: f64,
    pub trials: usize,
    pub mse_samples: f64,
    pub mse_meters: f64,
    /// Baseline: squared error of the integer TOA alone.
    pub mse_itoa_samples: f64,
    /// Monte-Carlo standard error of `mse_samples`.
    pub mse_se_samples: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MseReport {
    pub rows: Vec<MseRow>,
    /// Cells or trials that could not run, with reasons. Never silently
    /// dropped.
    pub skipped: Vec<String>,
}

impl MseReport {
    pub const CSV_HEADER: &'static str = "parameter,value,snr_db,trials,mse_samples,mse_meters";

    /// Serialize with the pinned header. `comments` (e.g. echoed overrides)
    /// and the skipped-cell log are emitted as `#` lines.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        for s in &self.skipped {
            writeln!(w, "# skipped: {s}")?;
        }
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.parameter, r.value, r.snr_db, r.trials, r.mse_samples, r.mse_meters
            )?;
        }
        Ok(())
    }
}

/// Mean squared deviation from the ground truth.
pub fn mse(estimates: &[f64], truth: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::invalid("mse over an empty estimate list"));
    }
    Ok(estimates
        .iter()
        .map(|e| (e - truth) * (e - truth))
        .sum::<f64>()
        / estimates.len() as f64)
}

fn fixed_energy_config(
    energy: f64,
    n_rb: usize,
    k_comb: usize,
    base: &PrsConfig,
) -> Result<PrsConfig> {
    let mut cfg = PrsConfig {
        n_rb,
        k_comb,
        beta_prs: 1.0,
        ..base.clone()
    };
    cfg.validate().map_err(|e| {
        Error::invalid(format!("variant ({n_rb} RB, comb {k_comb}): {e}"))
    })?;
    cfg.beta_prs = beta_for_energy(energy, &cfg)?;
    Ok(cfg)
}

/// Configs for allocation variants normalized to a common E_PRS.
pub fn fixed_energy_variants(
    energy: f64,
    variants: &[(usize, usize)],
    base: &PrsConfig,
) -> Result<Vec<PrsConfig>> {
    variants
        .iter()
        .map(|&(n_rb, k_comb)| fixed_energy_config(energy, n_rb, k_comb, base))
        .collect()
}

/// splitmix64, used to derive independent per-trial seeds.
fn mix_seed(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct CellContext {
    cfg: PrsConfig,
    grid: ResourceGrid,
    frame: IqSignal,
    reference: IqSignal,
    prs_start: usize,
}

impl CellContext {
    fn build(cfg: PrsConfig, spec: &SweepSpec) -> Result<Self> {
        let bits = generate_gold(spec.prs_seed, 2 * cfg.n_prs())?;
        let grid = map_prs(&map_qpsk(&bits)?, &cfg)?;
        let prs_signal = modulate(&grid, &cfg)?;
        let frame = assemble_frame(&prs_signal, &[], &spec.layout, &cfg)?;
        let ref_lo = cfg.l_start * cfg.symbol_len();
        let ref_hi = (cfg.l_start + cfg.l_prs) * cfg.symbol_len();
        let reference = IqSignal::new(
            prs_signal.samples[ref_lo..ref_hi].to_vec(),
            cfg.sample_rate_hz(),
        )?;
        let prs_start = spec.layout.prs_start_sample(&cfg);
        Ok(Self {
            cfg,
            grid,
            frame,
            reference,
            prs_start,
        })
    }

    /// One Monte-Carlo trial: returns (toa squared error, itoa squared error).
    fn run_trial(&self, spec: &SweepSpec, sigma: f64, trial_seed: u64) -> Result<(f64, f64)> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(trial_seed);
        let frac = match spec.tau_frac {
            TauFrac::Fixed(f) => f,
            TauFrac::Uniform => rng.gen::<f64>(),
        };
        let tau = spec.tau_int as f64 + frac;
        let cfg = &self.cfg;

        let mut received = if spec.ramp_oracle_channel {
            // Per-symbol cyclic phase-ramp channel plus integer shift.
            let rx_grid = ramp_grid(&self.grid, cfg, frac, Complex64::new(1.0, 0.0));
            let rx_prs = modulate(&rx_grid, cfg)?;
            let rx_frame = assemble_frame(&rx_prs, &[], &spec.layout, cfg)?;
            let mut shifted = vec![Complex64::default(); spec.tau_int];
            shifted.extend(rx_frame.samples);
            shifted
        } else {
            delay_samples(&self.frame.samples, tau)
        };

        // The estimator only reads the correlation search span and the PRS
        // symbol windows; generate noise exactly there.
        let expected = self.prs_start + spec.tau_int;
        let search_lo = expected.saturating_sub(spec.search_halfwidth);
        let search_hi = expected + spec.search_halfwidth + 1;
        let read_hi = search_hi + self.reference.len() + cfg.symbol_len() + cfg.n_fft;
        if received.len() < read_hi {
            received.resize(read_hi, Complex64::default());
        }
        crate::channel::add_noise(&mut received, search_lo..read_hi, sigma, trial_seed);

        let y = IqSignal {
            samples: received,
            sample_rate_hz: cfg.sample_rate_hz(),
        };
        let opts = EstimatorOptions {
            m_span: spec.m_span,
            search: Some((search_lo, search_hi)),
            step: 1,
        };
        let est = estimate_toa(&y, &self.grid, &self.reference, cfg, &opts)?;
        let truth = self.prs_start as f64 + tau;
        let toa_err = est.toa - truth;
        let itoa_err = est.itoa as f64 - truth;
        Ok((toa_err * toa_err, itoa_err * itoa_err))
    }
}

/// Run the full sweep. Deterministic for a fixed seed, including under
/// maximal parallelism.
pub fn run_sweep(spec: &SweepSpec) -> Result<MseReport> {
    spec.validate()?;
    let mut report = MseReport::default();
    let name = spec.param.name();
    for (cell_idx, (label, cfg)) in spec.variants().into_iter().enumerate() {
        let cfg = match cfg {
            Ok(cfg) => cfg,
            Err(e) => {
                report.skipped.push(format!("{name}={label}: {e}"));
                continue;
            }
        };
        let ctx = match CellContext::build(cfg, spec) {
            Ok(ctx) => ctx,
            Err(e) => {
                report.skipped.push(format!("{name}={label}: {e}"));
                continue;
            }
        };
        for (snr_idx, &snr_db) in spec.snr_grid_db.iter().enumerate() {
            let beta_ref = spec.noise_ref_beta.unwrap_or(ctx.cfg.beta_prs);
            let sigma = noise_sigma_for_beta(beta_ref, snr_db);
            let cell_key = mix_seed(
                spec.rng_seed ^ ((cell_idx as u64) << 32) ^ ((snr_idx as u64) << 48),
            );
            let results: Vec<Result<(f64, f64)>> = (0..spec.trials_per_point)
                .into_par_iter()
                .map(|trial| {
                    let trial_seed = mix_seed(cell_key ^ trial as u64);
                    ctx.run_trial(spec, sigma, trial_seed)
                })
                .collect();
            let mut sum_toa = 0.0;
            let mut sum_toa_sq = 0.0;
            let mut sum_itoa = 0.0;
            let mut ok = 0usize;
            for (trial, r) in results.into_iter().enumerate() {
                match r {
                    Ok((t, i)) => {
                        sum_toa += t;
                        sum_toa_sq += t * t;
                        sum_itoa += i;
                        ok += 1;
                    }
                    Err(e) => report.skipped.push(format!(
                        "{name}={label} snr={snr_db} trial={trial}: {e}"
                    )),
                }
            }
            if ok == 0 {
                report
                    .skipped
                    .push(format!("{name}={label} snr={snr_db}: all trials failed"));
                continue;
            }
            let mse_samples = sum_toa / ok as f64;
            let var_sq = (sum_toa_sq / ok as f64 - mse_samples * mse_samples).max(0.0);
            let meters_per_sample = SPEED_OF_LIGHT / ctx.cfg.sample_rate_hz();
            report.rows.push(MseRow {
                parameter: name.to_string(),
                value: label.clone(),
                snr_db,
                trials: ok,
                mse_samples,
                mse_meters: mse_samples * meters_per_sample,
                mse_itoa_samples: sum_itoa / ok as f64,
                mse_se_samples: (var_sq / ok as f64).sqrt(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_basics() {
        assert_eq!(mse(&[5.0, 5.0, 5.0], 5.0).unwrap(), 0.0);
        assert_eq!(mse(&[6.0, 4.0], 5.0).unwrap(), 1.0);
        assert!(mse(&[], 1.0).is_err());
    }

    #[test]
    fn uniform_fractional_error_approaches_one_twelfth() {
        // ITOA-only baseline: quantization error uniform in [-0.5, 0.5).
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let estimates: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
        let m = mse(&estimates, 0.0).unwrap();
        assert!((m - 1.0 / 12.0).abs() < 0.05 / 12.0, "mse {m}");
    }

    #[test]
    fn fixed_energy_variants_share_energy() {
        let base = PrsConfig::default();
        let cfgs = fixed_energy_variants(90.0, &[(10, 4), (30, 4)], &base).unwrap();
        for cfg in &cfgs {
            assert!((crate::grid::prs_energy(cfg) - 90.0).abs() < 1e-9);
        }
        // beta(10 RB) = sqrt(3) * beta(30 RB)
        assert!((cfgs[0].beta_prs / cfgs[1].beta_prs - 3f64.sqrt()).abs() < 1e-12);
        // Invalid variant is reported with the offender named.
        let err = fixed_energy_variants(90.0, &[(10, 4), (0, 4)], &base).unwrap_err();
        assert!(err.to_string().contains("0 RB"), "{err}");
    }

    #[test]
    fn single_noiseless_trial_has_zero_mse() {
        let spec = SweepSpec {
            trials_per_point: 1,
            snr_grid_db: vec![f64::INFINITY],
            tau_frac: TauFrac::Fixed(0.0),
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].mse_samples < 1e-6);
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = SweepSpec {
            param: SweepParam::NRb(vec![8, 20]),
            snr_grid_db: vec![10.0, 20.0],
            trials_per_point: 5,
            ..SweepSpec::default()
        };
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a, b);
        let mut ca = Vec::new();
        a.write_csv(&mut ca, &[]).unwrap();
        let mut cb = Vec::new();
        b.write_csv(&mut cb, &[]).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn invalid_variant_is_skipped_not_dropped() {
        let spec = SweepSpec {
            param: SweepParam::NRb(vec![20, 0]),
            trials_per_point: 1,
            snr_grid_db: vec![f64::INFINITY],
            tau_frac: TauFrac::Fixed(0.25),
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.skipped.len(), 1);
        assert!(report.skipped[0].contains("n_rb=0"));
    }

    #[test]
    fn rejects_zero_trials() {
        let spec = SweepSpec {
            trials_per_point: 0,
            ..SweepSpec::default()
        };
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn ramp_oracle_channel_recovers_exactly() {
        let spec = SweepSpec {
            trials_per_point: 3,
            snr_grid_db: vec![f64::INFINITY],
            tau_frac: TauFrac::Fixed(0.3),
            ramp_oracle_channel: true,
            ..SweepSpec::default()
        };
        let report = run_sweep(&spec).unwrap();
        assert!(report.rows[0].mse_samples < 1e-12, "{:?}", report.rows[0]);
    }
}
