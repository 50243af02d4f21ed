//! Plain-text `key=value` configuration files and command-line overrides.
//!
//! Every `PrsConfig`, `ChannelSpec`, `FrameLayout` and `SweepSpec` field is
//! addressable by name; unknown keys and malformed values are rejected with
//! the offending line number.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::experiments::{SweepParam, SweepSpec, TauFrac};
use crate::grid::PrsConfig;
use crate::ofdm::FrameLayout;

const KNOWN_KEYS: &[&str] = &[
    // PrsConfig
    "n_fft",
    "n_rb",
    "f_scs_hz",
    "k_comb",
    "k_offset",
    "l_prs",
    "l_start",
    "beta_prs",
    "n_cp",
    // ChannelSpec
    "channel_alpha_re",
    "channel_alpha_im",
    "channel_tau_samples",
    "channel_snr_db",
    "channel_rng_seed",
    // FrameLayout
    "slots_per_frame",
    "symbols_per_slot",
    "preamble_slot",
    "prs_slot",
    // SweepSpec
    "sweep_parameter",
    "sweep_values",
    "snr_grid_db",
    "trials_per_point",
    "tau_int",
    "tau_frac",
    "rng_seed",
    "search_halfwidth",
    "prs_seed",
    "ramp_oracle_channel",
    "noise_ref_beta",
    "m_span",
    "fixed_energy",
    "fixed_energy_variants",
    // estimation extras
    "preamble_length",
];

/// Parsed key/value store, remembering the source line of each entry for
/// diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    /// Parse config text: one `key = value` per line, `#` comments, blank
    /// lines ignored. Later assignments override earlier ones.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: line_no,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("unknown key {key:?}"),
                });
            }
            map.entries
                .insert(key.to_string(), (value.to_string(), line_no));
        }
        Ok(map)
    }

    /// Apply `key=value` override strings (e.g. from the command line); they
    /// win over file values. Line 0 marks an override in diagnostics.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for ov in overrides {
            let (key, value) = ov.split_once('=').ok_or_else(|| {
                Error::invalid(format!("override must be key=value, got {ov:?}"))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::invalid(format!("unknown override key {key:?}")));
            }
            self.entries
                .insert(key.to_string(), (value.trim().to_string(), 0));
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(_, l)| *l).unwrap_or(0)
    }

    fn bad(&self, key: &str, msg: impl std::fmt::Display) -> Error {
        Error::Config {
            line: self.line_of(key),
            msg: format!("{key}: {msg}"),
        }
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse::<T>()
                .map_err(|_| self.bad(key, format!("cannot parse {v:?}"))),
        }
    }

    fn parse_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some("inf") => Ok(f64::INFINITY),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| self.bad(key, format!("cannot parse {v:?} as a number"))),
        }
    }

    fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let raw = self
            .get(key)
            .ok_or_else(|| self.bad(key, "missing required list"))?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<T>()
                    .map_err(|_| self.bad(key, format!("cannot parse list item {s:?}")))
            })
            .collect()
    }

    /// PRS allocation from the map, defaults from [`PrsConfig::default`].
    pub fn prs_config(&self) -> Result<PrsConfig> {
        let d = PrsConfig::default();
        let cfg = PrsConfig {
            n_fft: self.parse_as("n_fft", d.n_fft)?,
            n_rb: self.parse_as("n_rb", d.n_rb)?,
            f_scs_hz: self.parse_f64("f_scs_hz", d.f_scs_hz)?,
            k_comb: self.parse_as("k_comb", d.k_comb)?,
            k_offset: self.parse_as("k_offset", d.k_offset)?,
            l_prs: self.parse_as("l_prs", d.l_prs)?,
            l_start: self.parse_as("l_start", d.l_start)?,
            beta_prs: self.parse_f64("beta_prs", d.beta_prs)?,
            n_cp: self.parse_as("n_cp", d.n_cp)?,
        };
        cfg.validate().map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        let d = ChannelSpec::default();
        Ok(ChannelSpec {
            alpha: Complex64::new(
                self.parse_f64("channel_alpha_re", d.alpha.re)?,
                self.parse_f64("channel_alpha_im", d.alpha.im)?,
            ),
            tau_samples: self.parse_f64("channel_tau_samples", d.tau_samples)?,
            snr_db: self.parse_f64("channel_snr_db", d.snr_db)?,
            rng_seed: self.parse_as("channel_rng_seed", d.rng_seed)?,
        })
    }

    pub fn frame_layout(&self) -> Result<FrameLayout> {
        let d = FrameLayout::default();
        let layout = FrameLayout {
            slots_per_frame: self.parse_as("slots_per_frame", d.slots_per_frame)?,
            symbols_per_slot: self.parse_as("symbols_per_slot", d.symbols_per_slot)?,
            preamble_slot: self.parse_as("preamble_slot", d.preamble_slot)?,
            prs_slot: self.parse_as("prs_slot", d.prs_slot)?,
        };
        layout.validate().map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(layout)
    }

    fn sweep_param(&self) -> Result<SweepParam> {
        let name = self.get("sweep_parameter").unwrap_or("n_rb");
        match name {
            "n_rb" => Ok(SweepParam::NRb(self.parse_list("sweep_values")?)),
            "k_comb" => Ok(SweepParam::KComb(self.parse_list("sweep_values")?)),
            "beta_prs" => Ok(SweepParam::BetaPrs(self.parse_list("sweep_values")?)),
            "fixed_energy" => {
                let energy = self
                    .get("fixed_energy")
                    .ok_or_else(|| self.bad("fixed_energy", "required for this sweep"))?
                    .parse::<f64>()
                    .map_err(|_| self.bad("fixed_energy", "cannot parse energy"))?;
                let raw = self.get("fixed_energy_variants").ok_or_else(|| {
                    self.bad("fixed_energy_variants", "required for this sweep")
                })?;
                // Variants look like "10x4,30x4" (n_rb x k_comb).
                let variants = raw
                    .split(',')
                    .map(|pair| {
                        let (a, b) = pair.trim().split_once('x').ok_or_else(|| {
                            self.bad("fixed_energy_variants", format!("bad variant {pair:?}"))
                        })?;
                        let n_rb = a.parse().map_err(|_| {
                            self.bad("fixed_energy_variants", format!("bad n_rb in {pair:?}"))
                        })?;
                        let k_comb = b.parse().map_err(|_| {
                            self.bad("fixed_energy_variants", format!("bad k_comb in {pair:?}"))
                        })?;
                        Ok((n_rb, k_comb))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(SweepParam::FixedEnergy { energy, variants })
            }
            other => Err(self.bad("sweep_parameter", format!("unknown parameter {other:?}"))),
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let d = SweepSpec::default();
        let tau_frac = match self.get("tau_frac") {
            None => d.tau_frac,
            Some("uniform") => TauFrac::Uniform,
            Some(v) => TauFrac::Fixed(
                v.parse::<f64>()
                    .map_err(|_| self.bad("tau_frac", "expected \"uniform\" or a number"))?,
            ),
        };
        let noise_ref_beta = match self.get("noise_ref_beta") {
            None => None,
            Some(_) => Some(self.parse_f64("noise_ref_beta", 1.0)?),
        };
        let m_span = match self.get("m_span") {
            None => None,
            Some(_) => Some(self.parse_f64("m_span", 0.0)?),
        };
        let spec = SweepSpec {
            base: self.prs_config()?,
            param: self.sweep_param()?,
            snr_grid_db: match self.get("snr_grid_db") {
                None => d.snr_grid_db,
                Some(_) => {
                    let raw = self.get("snr_grid_db").unwrap();
                    raw.split(',')
                        .map(|s| match s.trim() {
                            "inf" => Ok(f64::INFINITY),
                            t => t.parse::<f64>().map_err(|_| {
                                self.bad("snr_grid_db", format!("cannot parse {t:?}"))
                            }),
                        })
                        .collect::<Result<Vec<_>>>()?
                }
            },
            trials_per_point: self.parse_as("trials_per_point", d.trials_per_point)?,
            tau_int: self.parse_as("tau_int", d.tau_int)?,
            tau_frac,
            rng_seed: self.parse_as("rng_seed", d.rng_seed)?,
            layout: self.frame_layout_or(d.layout)?,
            search_halfwidth: self.parse_as("search_halfwidth", d.search_halfwidth)?,
            prs_seed: self.parse_as("prs_seed", d.prs_seed)?,
            ramp_oracle_channel: self.parse_as("ramp_oracle_channel", d.ramp_oracle_channel)?,
            noise_ref_beta,
            m_span,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Frame layout with sweep-style defaults (2 slots) unless overridden.
    fn frame_layout_or(&self, default: FrameLayout) -> Result<FrameLayout> {
        let layout = FrameLayout {
            slots_per_frame: self.parse_as("slots_per_frame", default.slots_per_frame)?,
            symbols_per_slot: self.parse_as("symbols_per_slot", default.symbols_per_slot)?,
            preamble_slot: self.parse_as("preamble_slot", default.preamble_slot)?,
            prs_slot: self.parse_as("prs_slot", default.prs_slot)?,
        };
        layout.validate().map_err(|e| Error::Config {
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(layout)
    }

    /// Non-default entries formatted for echoing into output headers.
    pub fn echo_lines(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|(k, (v, _))| format!("{k}={v}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_file() {
        let text = "\n# comment\nn_rb = 8\nk_comb=2   # trailing comment\n";
        let map = ConfigMap::parse(text).unwrap();
        let cfg = map.prs_config().unwrap();
        assert_eq!(cfg.n_rb, 8);
        assert_eq!(cfg.k_comb, 2);
        assert_eq!(cfg.n_fft, 1024); // default preserved
    }

    #[test]
    fn reports_line_numbers() {
        let err = ConfigMap::parse("n_rb=8\nbogus line\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ConfigMap::parse("n_rb=8\nnot_a_key=1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let map = ConfigMap::parse("n_rb=eight\n").unwrap();
        let err = map.prs_config().unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn overrides_win_and_echo() {
        let mut map = ConfigMap::parse("n_rb=8\n").unwrap();
        map.apply_overrides(&["n_rb=12".into(), "beta_prs=2.0".into()])
            .unwrap();
        let cfg = map.prs_config().unwrap();
        assert_eq!(cfg.n_rb, 12);
        assert_eq!(cfg.beta_prs, 2.0);
        let echo = map.echo_lines();
        assert!(echo.contains(&"n_rb=12".to_string()));
        assert!(map.apply_overrides(&["nonsense".into()]).is_err());
        assert!(map.apply_overrides(&["nope=1".into()]).is_err());
    }

    #[test]
    fn invalid_config_rejected() {
        let map = ConfigMap::parse("n_rb=0\n").unwrap();
        assert!(map.prs_config().is_err());
    }

    #[test]
    fn channel_and_layout() {
        let map =
            ConfigMap::parse("channel_tau_samples=7.3\nchannel_snr_db=inf\nprs_slot=1\n").unwrap();
        let ch = map.channel_spec().unwrap();
        assert_eq!(ch.tau_samples, 7.3);
        assert!(ch.snr_db.is_infinite());
        let layout = map.frame_layout().unwrap();
        assert_eq!(layout.prs_slot, 1);
        assert_eq!(layout.slots_per_frame, 20);
    }

    #[test]
    fn sweep_spec_round_trip() {
        let text = "sweep_parameter=k_comb\nsweep_values=2,4,6,12\nsnr_grid_db=0,10,20\n\
                    trials_per_point=3\ntau_frac=uniform\nrng_seed=5\n";
        let map = ConfigMap::parse(text).unwrap();
        let spec = map.sweep_spec().unwrap();
        assert_eq!(spec.param, SweepParam::KComb(vec![2, 4, 6, 12]));
        assert_eq!(spec.snr_grid_db, vec![0.0, 10.0, 20.0]);
        assert_eq!(spec.trials_per_point, 3);
        assert_eq!(spec.tau_frac, TauFrac::Uniform);
        assert_eq!(spec.layout.slots_per_frame, 2); // sweep default
    }

    #[test]
    fn fixed_energy_sweep_parsing() {
        let text = "sweep_parameter=fixed_energy\nfixed_energy=90\n\
                    fixed_energy_variants=10x4, 30x4\nnoise_ref_beta=1.0\ntau_frac=0.25\n";
        let spec = ConfigMap::parse(text).unwrap().sweep_spec().unwrap();
        assert_eq!(
            spec.param,
            SweepParam::FixedEnergy {
                energy: 90.0,
                variants: vec![(10, 4), (30, 4)]
            }
        );
        assert_eq!(spec.noise_ref_beta, Some(1.0));
        assert_eq!(spec.tau_frac, TauFrac::Fixed(0.25));
    }
}
