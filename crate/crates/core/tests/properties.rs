//! Randomized property tests for the sequence, mapping, and estimator layers.

use num_complex::Complex64;
use proptest::prelude::*;

use prs_toa::channel::ramp_grid;
use prs_toa::grid::{map_prs, subcarrier_index, PrsConfig};
use prs_toa::ofdm::IqSignal;
use prs_toa::opa::{
    average_halves, estimate_cfr, rtoa_from_slope, slope, split_sets, wrap_bound,
};
use prs_toa::sequences::{generate_gold, map_qpsk};
use prs_toa::sync::{correlate, estimate_itoa};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn qpsk_symbols_are_unit_magnitude(seed in 0u32..(1 << 31), len in 1usize..200) {
        let bits = generate_gold(seed, 2 * len).unwrap();
        let prs = map_qpsk(&bits).unwrap();
        prop_assert_eq!(prs.len(), len);
        for s in prs.symbols() {
            prop_assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prs_mapping_stays_injective(
        comb_idx in 0usize..4,
        k_offset_raw in 0usize..12,
        n_rb in 1usize..8,
    ) {
        let k_comb = [2, 4, 6, 12][comb_idx];
        let cfg = PrsConfig {
            k_comb,
            k_offset: k_offset_raw % k_comb,
            n_rb: n_rb * 12, // divisible by every comb size
            ..PrsConfig::default()
        };
        cfg.validate().unwrap();
        for sym_off in 0..cfg.l_prs {
            let mut seen = vec![false; cfg.n_occupied()];
            for m in 0..cfg.n_prs() {
                let k = subcarrier_index(m, &cfg, sym_off).unwrap();
                prop_assert!(!std::mem::replace(&mut seen[k], true));
            }
        }
    }

    #[test]
    fn correlation_peak_tracks_shift(delay in 0usize..40, scale in 0.1f64..10.0) {
        let reference: Vec<Complex64> = (0..128)
            .map(|i| Complex64::from_polar(1.0, 0.002 * (i * i) as f64))
            .collect();
        let mut y = vec![Complex64::default(); delay];
        y.extend(reference.iter().map(|s| s * scale));
        let profile = correlate(
            &IqSignal::new(y, 1.0).unwrap(),
            &IqSignal::new(reference, 1.0).unwrap(),
            1,
            60,
        )
        .unwrap();
        prop_assert_eq!(estimate_itoa(&profile), delay);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ramp_channel_residual_recovered_within_wrap_bound(
        tau_frac in -0.95f64..0.95,
        alpha_mag in 0.2f64..4.0,
        alpha_phase in -3.0f64..3.0,
    ) {
        let cfg = PrsConfig::default();
        let bits = generate_gold(42, 2 * cfg.n_prs()).unwrap();
        let grid = map_prs(&map_qpsk(&bits).unwrap(), &cfg).unwrap();
        let m = cfg.n_prs() as f64 / 2.0;
        let tau = tau_frac * wrap_bound(&cfg, m);
        let rx = ramp_grid(&grid, &cfg, tau, Complex64::from_polar(alpha_mag, alpha_phase));
        let l = cfg.l_start;
        let cfr = estimate_cfr(rx.symbol_row(l), &grid, l, &cfg).unwrap();
        let sets = split_sets(&cfr.indices).unwrap();
        let split = average_halves(&cfr, &sets, m).unwrap();
        let rtoa = rtoa_from_slope(slope(&split).unwrap(), &cfg);
        prop_assert!((rtoa - tau).abs() < 1e-6, "tau {} -> {}", tau, rtoa);
    }
}
