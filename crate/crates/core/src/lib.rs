//! Baseband simulation of OFDM positioning-reference-signal ranging with
//! sub-sample time-of-arrival resolution.
//!
//! The pipeline: a Gold-sequence PRS is QPSK-mapped onto a comb of
//! subcarriers ([`sequences`], [`grid`]), OFDM-modulated into a frame
//! ([`ofdm`]), passed through a delayed LOS channel with calibrated noise
//! ([`channel`]), and received by a two-stage estimator: cross-correlation
//! for the integer sample offset ([`sync`]) plus a phase-slope read of the
//! zero-forcing channel estimate for the fractional residual ([`opa`]).
//! [`experiments`] runs Monte-Carlo MSE-vs-SNR sweeps over allocation
//! parameters and [`psd`] renders Welch spectra of the generated signals.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod iqfile;
pub mod ofdm;
pub mod opa;
pub mod psd;
pub mod sequences;
pub mod sync;

pub use error::{Error, Result};
