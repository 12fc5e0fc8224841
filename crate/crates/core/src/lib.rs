//! Software twin of a Colosseum-style channel emulation loop.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! - [`sequences`]: sounding codes (GLFSR m-sequences, Gold, Golay, LS) and
//!   their correlation properties.
//! - [`waveform`]: BPSK modulation, raw `.iq` files and AWGN.
//! - [`channel`]: 512-slot sparse FIR taps, per-link convolution, multi-node
//!   superposition and millisecond frame switching.
//! - [`approx`]: reduction of ray-traced multipath profiles to emulator-legal
//!   tap sets.
//! - [`sounder`]: cross-correlation CIR recovery, peak picking, path gains and
//!   per-frame statistics.
//! - [`scenario`]: scenario model, JSON schema, heatmaps, modeled-vs-sounded
//!   validation and the normalized cross-correlation similarity metric.
//! - [`planner`]: RSSI/SINR link budget and exhaustive RU-pair placement.

pub mod approx;
pub mod channel;
mod error;
pub mod planner;
pub mod scenario;
pub mod sequences;
pub mod sounder;
pub mod waveform;

pub use error::{Error, Result};
