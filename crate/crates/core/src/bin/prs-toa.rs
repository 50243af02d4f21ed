//! Command-line front end: PRS frame generation, channel simulation, TOA
//! estimation, MSE sweeps, and PSD rendering. All outputs are CSV or raw IQ;
//! plotting is left to external tools.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime/estimation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use prs_toa::channel::{apply_channel, ramp_grid};
use prs_toa::config::ConfigMap;
use prs_toa::error::Error;
use prs_toa::experiments::run_sweep;
use prs_toa::grid::{map_prs, prs_energy};
use prs_toa::iqfile::{read_iq, write_iq};
use prs_toa::ofdm::{assemble_frame, extract_symbol, modulate};
use prs_toa::opa::{estimate_toa, EstimatorOptions, ToaEstimate};
use prs_toa::psd::{compute_psd, write_psd_csv, PsdWindow};
use prs_toa::sequences::{generate_gold, generate_preamble, map_qpsk};

#[derive(Parser)]
#[command(
    name = "prs-toa",
    about = "OFDM PRS ranging simulator: generation, channel, TOA estimation, sweeps, PSD"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a PRS frame, apply the configured channel, write IQ samples.
    Generate {
        /// key=value config file.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Output IQ file (f32 little-endian interleaved, .meta sidecar).
        #[arg(short, long)]
        output: PathBuf,
        /// Override a config value (repeatable).
        #[arg(short = 'D', long = "define", value_name = "KEY=VALUE")]
        defines: Vec<String>,
    },
    /// Estimate the TOA of a PRS frame from an IQ file.
    Estimate {
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Input IQ file.
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short = 'D', long = "define", value_name = "KEY=VALUE")]
        defines: Vec<String>,
    },
    /// Run a Monte-Carlo MSE-vs-SNR sweep and write the report CSV.
    Sweep {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(short = 'D', long = "define", value_name = "KEY=VALUE")]
        defines: Vec<String>,
    },
    /// Welch PSD of an IQ file, written as freq_hz,psd_db CSV.
    Psd {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1024)]
        segment_len: usize,
        #[arg(long, default_value_t = 512)]
        overlap: usize,
        #[arg(long, value_enum, default_value_t = WindowArg::Hann)]
        window: WindowArg,
    },
    /// Run the built-in oracle checks and print pass/fail per check.
    Selftest,
}

#[derive(Copy, Clone, ValueEnum)]
enum WindowArg {
    Hann,
    Rect,
}

/// Usage/config errors exit 1, runtime/estimation errors exit 2.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } => 1,
        Error::Stage { source, .. } => exit_code_for(source),
        _ => 2,
    }
}

fn load_config(path: &Option<PathBuf>, defines: &[String]) -> Result<ConfigMap, Error> {
    let mut map = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                Error::invalid(format!("cannot read config {}: {e}", p.display()))
            })?;
            ConfigMap::parse(&text)?
        }
        None => ConfigMap::default(),
    };
    map.apply_overrides(defines)?;
    Ok(map)
}

fn echo_comments(map: &ConfigMap) {
    for line in map.echo_lines() {
        println!("# {line}");
    }
}

fn cmd_generate(
    config: &Option<PathBuf>,
    output: &PathBuf,
    defines: &[String],
) -> Result<(), Error> {
    let map = load_config(config, defines)?;
    let cfg = map.prs_config()?;
    let layout = map.frame_layout()?;
    let ch = map.channel_spec()?;
    let bits = generate_gold(map.get("prs_seed").unwrap_or("42").parse().map_err(|_| {
        Error::invalid("prs_seed must be an integer")
    })?, 2 * cfg.n_prs())?;
    let grid = map_prs(&map_qpsk(&bits)?, &cfg)?;
    let prs = modulate(&grid, &cfg)?;
    let preamble = match map.get("preamble_length") {
        None => Vec::new(),
        Some(v) => {
            let len: usize = v
                .parse()
                .map_err(|_| Error::invalid("preamble_length must be an integer"))?;
            generate_preamble(len)?
        }
    };
    let frame = assemble_frame(&prs, &preamble, &layout, &cfg)?;
    let rx = apply_channel(&frame, &ch, &cfg)?;
    write_iq(output, &rx)?;
    echo_comments(&map);
    println!("prs_start_sample={}", layout.prs_start_sample(&cfg));
    println!("prs_energy={}", prs_energy(&cfg));
    println!("samples={}", rx.len());
    Ok(())
}

fn cmd_estimate(
    config: &Option<PathBuf>,
    input: &PathBuf,
    defines: &[String],
) -> Result<(), Error> {
    let map = load_config(config, defines)?;
    let cfg = map.prs_config()?;
    let layout = map.frame_layout()?;
    let ch = map.channel_spec()?;
    let seed: u32 = map
        .get("prs_seed")
        .unwrap_or("42")
        .parse()
        .map_err(|_| Error::invalid("prs_seed must be an integer"))?;
    let bits = generate_gold(seed, 2 * cfg.n_prs())?;
    let grid = map_prs(&map_qpsk(&bits)?, &cfg)?;
    let prs = modulate(&grid, &cfg)?;
    let ref_lo = cfg.l_start * cfg.symbol_len();
    let ref_hi = (cfg.l_start + cfg.l_prs) * cfg.symbol_len();
    let reference = prs_toa::ofdm::IqSignal::new(
        prs.samples[ref_lo..ref_hi].to_vec(),
        cfg.sample_rate_hz(),
    )?;
    let y = read_iq(input)?;
    let opts = EstimatorOptions::default();
    let est = estimate_toa(&y, &grid, &reference, &cfg, &opts)?;
    echo_comments(&map);
    println!("{}", ToaEstimate::CSV_HEADER);
    println!("{}", est.csv_row(0, ch.snr_db, &cfg));
    println!(
        "# prs_start_sample={} toa_rel={}",
        layout.prs_start_sample(&cfg),
        est.toa - layout.prs_start_sample(&cfg) as f64
    );
    Ok(())
}

fn cmd_sweep(config: &PathBuf, output: &PathBuf, defines: &[String]) -> Result<(), Error> {
    let map = load_config(&Some(config.clone()), defines)?;
    let spec = map.sweep_spec()?;
    eprintln!(
        "sweep: {} values x {} SNR points x {} trials",
        spec.variants().len(),
        spec.snr_grid_db.len(),
        spec.trials_per_point
    );
    let report = run_sweep(&spec)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(output)?);
    report.write_csv(&mut w, &map.echo_lines())?;
    for s in &report.skipped {
        eprintln!("skipped: {s}");
    }
    if !report.skipped.is_empty() {
        // Partial CSV is on disk; signal the failures.
        return Err(Error::Internal(format!(
            "{} sweep cells/trials skipped",
            report.skipped.len()
        )));
    }
    eprintln!("wrote {} rows to {}", report.rows.len(), output.display());
    Ok(())
}

fn cmd_psd(
    input: &PathBuf,
    output: &PathBuf,
    segment_len: usize,
    overlap: usize,
    window: WindowArg,
) -> Result<(), Error> {
    let x = read_iq(input)?;
    let win = match window {
        WindowArg::Hann => PsdWindow::Hann,
        WindowArg::Rect => PsdWindow::Rect,
    };
    let (freqs, psd) = compute_psd(&x, segment_len, overlap, win)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(output)?);
    write_psd_csv(&mut w, &freqs, &psd)?;
    Ok(())
}

/// Built-in oracle checks; returns the number of failures.
fn cmd_selftest() -> usize {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{}: {}", name, if ok { "pass" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // LFSR oracle: straight-line bit recurrences against the generator.
    let gold = generate_gold(7, 128).unwrap();
    let oracle = {
        let mut x1 = vec![0u8; 31 + 1600 + 128];
        x1[0] = 1;
        let mut x2 = x1.clone();
        x2[0] = 1; // seed 7 = 0b111
        x2[1] = 1;
        x2[2] = 1;
        for n in 0..1600 + 128 - 1 + 1 {
            x1[n + 31] = x1[n + 3] ^ x1[n];
            x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n];
        }
        (0..128)
            .map(|n| x1[n + 1600] ^ x2[n + 1600])
            .collect::<Vec<u8>>()
    };
    check("lfsr-gold-recurrence", gold.bits() == oracle.as_slice());

    // Phase-ramp oracle: quarter-sample delay recovered from the slope.
    let cfg = prs_toa::grid::PrsConfig::default();
    let bits = generate_gold(42, 2 * cfg.n_prs()).unwrap();
    let grid = map_prs(&map_qpsk(&bits).unwrap(), &cfg).unwrap();
    let tau = 0.25;
    let rx = ramp_grid(&grid, &cfg, tau, Complex64::new(1.0, 0.0));
    let recovered = (|| -> Result<f64, Error> {
        let cfr =
            prs_toa::opa::estimate_cfr(rx.symbol_row(cfg.l_start), &grid, cfg.l_start, &cfg)?;
        let sets = prs_toa::opa::split_sets(&cfr.indices)?;
        let split = prs_toa::opa::average_halves(&cfr, &sets, cfg.n_prs() as f64 / 2.0)?;
        Ok(prs_toa::opa::rtoa_from_slope(prs_toa::opa::slope(&split)?, &cfg))
    })();
    check(
        "phase-ramp-quarter-sample",
        matches!(recovered, Ok(r) if (r - tau).abs() < 1e-6),
    );

    // Length arithmetic: default frame is 20 * 14 * (1024 + 72) samples.
    let layout = prs_toa::ofdm::FrameLayout::default();
    let prs = modulate(&grid, &cfg).unwrap();
    let frame = assemble_frame(&prs, &[], &layout, &cfg).unwrap();
    check(
        "frame-length-arithmetic",
        frame.len() == 20 * 14 * (1024 + 72),
    );

    // OFDM round trip at the known frame offset.
    let itoa = layout.prs_start_sample(&cfg);
    let rec = extract_symbol(&frame, 0, itoa, &cfg).unwrap();
    let max_dev = rec
        .iter()
        .zip(grid.symbol_row(cfg.l_start))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    check("ofdm-round-trip", max_dev < 1e-9);

    failures
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are success; anything else is a usage error.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Generate {
            config,
            output,
            defines,
        } => cmd_generate(config, output, defines),
        Command::Estimate {
            config,
            input,
            defines,
        } => cmd_estimate(config, input, defines),
        Command::Sweep {
            config,
            output,
            defines,
        } => cmd_sweep(config, output, defines),
        Command::Psd {
            input,
            output,
            segment_len,
            overlap,
            window,
        } => cmd_psd(input, output, *segment_len, *overlap, *window),
        Command::Selftest => {
            let failures = cmd_selftest();
            return if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
