//! PRS allocation parameters and mapping of the PRS sequence onto the
//! subcarrier/symbol resource grid.
//!
//! Subcarrier index 0 of the grid is the lowest allocated subcarrier; the
//! shift that centers the occupied band in the FFT happens in the OFDM module.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sequences::PrsSequence;

/// Subcarriers per resource block.
pub const N_SC: usize = 12;
/// OFDM symbols per slot (normal CP numerology).
pub const SYMBOLS_PER_SLOT: usize = 14;

/// Comb pattern offsets k' by comb size and symbol offset within the PRS
/// resource, matching the standard time-frequency PRS mapping.
const K_PRIME: [(usize, [usize; 12]); 4] = [
    (2, [0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1]),
    (4, [0, 2, 1, 3, 0, 2, 1, 3, 0, 2, 1, 3]),
    (6, [0, 3, 1, 4, 2, 5, 0, 3, 1, 4, 2, 5]),
    (12, [0, 6, 3, 9, 1, 7, 4, 10, 2, 8, 5, 11]),
];

/// PRS/OFDM allocation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PrsConfig {
    /// FFT size N_FFT.
    pub n_fft: usize,
    /// Number of resource blocks allocated to PRS.
    pub n_rb: usize,
    /// Subcarrier spacing in Hz.
    pub f_scs_hz: f64,
    /// Comb size (subcarrier stride between PRS bins), one of {2, 4, 6, 12}.
    pub k_comb: usize,
    /// Comb offset in [0, k_comb).
    pub k_offset: usize,
    /// Number of OFDM symbols carrying PRS, one of {2, 4, 6, 12}.
    pub l_prs: usize,
    /// First PRS symbol index within the slot.
    pub l_start: usize,
    /// PRS amplitude factor.
    pub beta_prs: f64,
    /// Cyclic prefix length in samples.
    pub n_cp: usize,
}

impl Default for PrsConfig {
    /// Testbed-style defaults: 1024-point FFT at 30 kHz spacing
    /// (30.72 MHz sampling), 20 RBs on a comb-4 with offset 1, four PRS
    /// symbols starting at symbol 4.
    fn default() -> Self {
        Self {
            n_fft: 1024,
            n_rb: 20,
            f_scs_hz: 30e3,
            k_comb: 4,
            k_offset: 1,
            l_prs: 4,
            l_start: 4,
            beta_prs: 1.0,
            n_cp: 72,
        }
    }
}

impl PrsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || !self.n_fft.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_fft must be a positive power of two, got {}",
                self.n_fft
            )));
        }
        if self.n_rb == 0 {
            return Err(Error::invalid("n_rb must be positive"));
        }
        if !(self.f_scs_hz > 0.0) {
            return Err(Error::invalid("f_scs_hz must be positive"));
        }
        if !K_PRIME.iter().any(|(c, _)| *c == self.k_comb) {
            return Err(Error::invalid(format!(
                "k_comb must be one of 2, 4, 6, 12, got {}",
                self.k_comb
            )));
        }
        if self.k_offset >= self.k_comb {
            return Err(Error::invalid(format!(
                "k_offset {} must be < k_comb {}",
                self.k_offset, self.k_comb
            )));
        }
        if ![2, 4, 6, 12].contains(&self.l_prs) {
            return Err(Error::invalid(format!(
                "l_prs must be one of 2, 4, 6, 12, got {}",
                self.l_prs
            )));
        }
        if self.l_start + self.l_prs > SYMBOLS_PER_SLOT {
            return Err(Error::invalid(format!(
                "l_start {} + l_prs {} exceeds {} symbols per slot",
                self.l_start, self.l_prs, SYMBOLS_PER_SLOT
            )));
        }
        if self.n_occupied() > self.n_fft {
            return Err(Error::invalid(format!(
                "occupied subcarriers {} exceed n_fft {}",
                self.n_occupied(),
                self.n_fft
            )));
        }
        if self.n_occupied() % self.k_comb != 0 {
            return Err(Error::invalid(format!(
                "occupied subcarriers {} not divisible by k_comb {}",
                self.n_occupied(),
                self.k_comb
            )));
        }
        if !(self.beta_prs >= 0.0) {
            return Err(Error::invalid("beta_prs must be nonnegative"));
        }
        Ok(())
    }

    /// Number of allocated subcarriers, N_SC * N_RB.
    pub fn n_occupied(&self) -> usize {
        N_SC * self.n_rb
    }

    /// PRS sequence length per OFDM symbol, N_SC * N_RB / K_comb.
    pub fn n_prs(&self) -> usize {
        self.n_occupied() / self.k_comb
    }

    /// Samples per OFDM symbol including cyclic prefix.
    pub fn symbol_len(&self) -> usize {
        self.n_fft + self.n_cp
    }

    /// Baseband sampling rate implied by the numerology.
    pub fn sample_rate_hz(&self) -> f64 {
        self.n_fft as f64 * self.f_scs_hz
    }
}

/// Comb offset k' for a comb size and symbol offset l - l_start in [0, 12).
pub fn k_prime(k_comb: usize, symbol_offset: usize) -> Result<usize> {
    if symbol_offset >= 12 {
        return Err(Error::invalid(format!(
            "symbol offset {symbol_offset} out of range [0, 12)"
        )));
    }
    K_PRIME
        .iter()
        .find(|(c, _)| *c == k_comb)
        .map(|(_, row)| row[symbol_offset])
        .ok_or_else(|| Error::invalid(format!("unsupported comb size {k_comb}")))
}

/// Subcarrier index k_m = m*K_comb + ((k_offset + k') mod K_comb).
pub fn subcarrier_index(m: usize, cfg: &PrsConfig, symbol_offset: usize) -> Result<usize> {
    if m >= cfg.n_prs() {
        return Err(Error::invalid(format!(
            "PRS symbol index {m} out of range [0, {})",
            cfg.n_prs()
        )));
    }
    let kp = k_prime(cfg.k_comb, symbol_offset)?;
    Ok(m * cfg.k_comb + (cfg.k_offset + kp) % cfg.k_comb)
}

/// Frequency-domain symbol matrix, one slot of OFDM symbols by N_FFT
/// subcarriers. Cells not assigned to PRS are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    cells: Vec<Complex64>,
    n_symbols: usize,
    n_fft: usize,
}

impl ResourceGrid {
    pub fn zeros(n_symbols: usize, n_fft: usize) -> Self {
        Self {
            cells: vec![Complex64::default(); n_symbols * n_fft],
            n_symbols,
            n_fft,
        }
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn cell(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.cells[symbol * self.n_fft + subcarrier]
    }

    pub fn set_cell(&mut self, symbol: usize, subcarrier: usize, value: Complex64) {
        self.cells[symbol * self.n_fft + subcarrier] = value;
    }

    pub fn symbol_row(&self, symbol: usize) -> &[Complex64] {
        &self.cells[symbol * self.n_fft..(symbol + 1) * self.n_fft]
    }

    /// Sum of |cell|^2 over one OFDM symbol.
    pub fn symbol_energy(&self, symbol: usize) -> f64 {
        self.symbol_row(symbol).iter().map(|c| c.norm_sqr()).sum()
    }

    /// Diagnostic dump of nonzero cells as `symbol,subcarrier,re,im` lines.
    pub fn dump_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "symbol,subcarrier,re,im")?;
        for l in 0..self.n_symbols {
            for k in 0..self.n_fft {
                let c = self.cell(l, k);
                if c != Complex64::default() {
                    writeln!(w, "{l},{k},{},{}", c.re, c.im)?;
                }
            }
        }
        Ok(())
    }
}

/// Map the PRS sequence onto a one-slot resource grid, scaled by beta_prs.
pub fn map_prs(r: &PrsSequence, cfg: &PrsConfig) -> Result<ResourceGrid> {
    cfg.validate()?;
    if r.len() != cfg.n_prs() {
        return Err(Error::invalid(format!(
            "PRS sequence length {} does not match N_PRS = {}",
            r.len(),
            cfg.n_prs()
        )));
    }
    let mut grid = ResourceGrid::zeros(SYMBOLS_PER_SLOT, cfg.n_fft);
    for sym_off in 0..cfg.l_prs {
        let l = cfg.l_start + sym_off;
        for (m, &sym) in r.symbols().iter().enumerate() {
            let k = subcarrier_index(m, cfg, sym_off)?;
            grid.set_cell(l, k, sym * cfg.beta_prs);
        }
    }
    Ok(grid)
}

/// PRS energy per OFDM symbol, E = N_PRS * beta^2.
pub fn prs_energy(cfg: &PrsConfig) -> f64 {
    cfg.n_prs() as f64 * cfg.beta_prs * cfg.beta_prs
}

/// Amplitude factor that yields the target per-symbol PRS energy for the
/// given allocation: beta = sqrt(E * K_comb / (N_SC * N_RB)).
pub fn beta_for_energy(target_energy: f64, cfg: &PrsConfig) -> Result<f64> {
    if target_energy < 0.0 {
        return Err(Error::invalid("target energy must be nonnegative"));
    }
    if cfg.n_prs() == 0 {
        return Err(Error::invalid("config has zero PRS subcarriers"));
    }
    Ok((target_energy / cfg.n_prs() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{generate_gold, map_qpsk};

    fn prs_for(cfg: &PrsConfig) -> PrsSequence {
        let bits = generate_gold(42, 2 * cfg.n_prs()).unwrap();
        map_qpsk(&bits).unwrap()
    }

    #[test]
    fn k_prime_golden_entries() {
        assert_eq!(k_prime(4, 1).unwrap(), 2);
        assert_eq!(k_prime(12, 3).unwrap(), 9);
        assert_eq!(k_prime(2, 0).unwrap(), 0);
        assert!(k_prime(5, 0).is_err());
        assert!(k_prime(4, 12).is_err());
    }

    #[test]
    fn k_prime_row_periodicity() {
        // Row period equals comb-dependent repeat visible in the table.
        for &(comb, period) in &[(2usize, 2usize), (4, 4), (6, 6), (12, 12)] {
            for off in 0..12 - period {
                assert_eq!(
                    k_prime(comb, off).unwrap(),
                    k_prime(comb, off + period).unwrap()
                );
            }
        }
    }

    #[test]
    fn subcarrier_index_examples() {
        let cfg = PrsConfig {
            k_comb: 4,
            k_offset: 1,
            ..PrsConfig::default()
        };
        assert_eq!(subcarrier_index(0, &cfg, 0).unwrap(), 1);
        assert_eq!(subcarrier_index(2, &cfg, 1).unwrap(), 11);
        let cfg0 = PrsConfig {
            k_offset: 0,
            ..PrsConfig::default()
        };
        assert_eq!(subcarrier_index(0, &cfg0, 0).unwrap(), 0);
        assert!(subcarrier_index(cfg.n_prs(), &cfg, 0).is_err());
    }

    #[test]
    fn subcarrier_index_injective_all_combs() {
        for &k_comb in &[2usize, 4, 6, 12] {
            for k_offset in 0..k_comb {
                let cfg = PrsConfig {
                    k_comb,
                    k_offset,
                    n_rb: 12, // divisible by every comb size
                    ..PrsConfig::default()
                };
                cfg.validate().unwrap();
                for sym_off in 0..cfg.l_prs {
                    let c = (cfg.k_offset + k_prime(k_comb, sym_off).unwrap()) % k_comb;
                    let ks: Vec<usize> = (0..cfg.n_prs())
                        .map(|m| subcarrier_index(m, &cfg, sym_off).unwrap())
                        .collect();
                    // Image is exactly {j*k_comb + c}.
                    for (j, &k) in ks.iter().enumerate() {
                        assert_eq!(k, j * k_comb + c);
                        assert!(k < cfg.n_occupied());
                    }
                }
            }
        }
    }

    #[test]
    fn map_prs_cell_count_and_energy() {
        let cfg = PrsConfig::default(); // 20 RB, comb 4
        let grid = map_prs(&prs_for(&cfg), &cfg).unwrap();
        for sym_off in 0..cfg.l_prs {
            let l = cfg.l_start + sym_off;
            let nonzero = grid
                .symbol_row(l)
                .iter()
                .filter(|c| **c != Complex64::default())
                .count();
            assert_eq!(nonzero, 60);
            // Direct summation oracle over the emitted grid.
            let measured: f64 = grid.symbol_row(l).iter().map(|c| c.norm_sqr()).sum();
            assert!((measured - prs_energy(&cfg)).abs() < 1e-12 * measured.max(1.0));
        }
        // Symbols outside the PRS block stay zero.
        for l in 0..cfg.l_start {
            assert!(grid.symbol_row(l).iter().all(|c| *c == Complex64::default()));
        }
    }

    #[test]
    fn map_prs_zero_beta_gives_zero_grid() {
        let cfg = PrsConfig {
            beta_prs: 0.0,
            ..PrsConfig::default()
        };
        let grid = map_prs(&prs_for(&cfg), &cfg).unwrap();
        assert!(grid.cells.iter().all(|c| *c == Complex64::default()));
    }

    #[test]
    fn map_prs_rejects_length_mismatch() {
        let cfg = PrsConfig::default();
        let wrong = map_qpsk(&generate_gold(1, 2 * (cfg.n_prs() + 1)).unwrap()).unwrap();
        assert!(map_prs(&wrong, &cfg).is_err());
    }

    #[test]
    fn prs_energy_values() {
        let cfg = PrsConfig::default();
        assert_eq!(prs_energy(&cfg), 60.0);
        let cfg = PrsConfig {
            beta_prs: 0.0,
            ..PrsConfig::default()
        };
        assert_eq!(prs_energy(&cfg), 0.0);
        let cfg = PrsConfig {
            n_rb: 30,
            k_comb: 6,
            beta_prs: 2.0,
            ..PrsConfig::default()
        };
        assert_eq!(prs_energy(&cfg), 240.0);
    }

    #[test]
    fn beta_for_energy_round_trips() {
        let cfg = PrsConfig::default();
        assert!((beta_for_energy(60.0, &cfg).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(beta_for_energy(0.0, &cfg).unwrap(), 0.0);
        let cfg10 = PrsConfig {
            n_rb: 10,
            ..PrsConfig::default()
        };
        let beta = beta_for_energy(60.0, &cfg10).unwrap();
        assert!((beta - 2f64.sqrt()).abs() < 1e-15);
        let back = PrsConfig {
            beta_prs: beta,
            ..cfg10
        };
        assert!((prs_energy(&back) - 60.0).abs() < 1e-12);
        assert!(beta_for_energy(-1.0, &cfg).is_err());
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let mut cfg = PrsConfig::default();
        cfg.n_rb = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = PrsConfig::default();
        cfg.k_offset = 4;
        assert!(cfg.validate().is_err());
        let mut cfg = PrsConfig::default();
        cfg.l_start = 12;
        assert!(cfg.validate().is_err());
        let mut cfg = PrsConfig::default();
        cfg.n_rb = 90; // 1080 > 1024
        assert!(cfg.validate().is_err());
    }
}
