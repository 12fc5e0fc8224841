//! Software surrogate of a 512-tap FIR channel emulator.
//!
//! Every link `(tx, rx)` carries a sparse [`TapSet`] on a 10 ns grid with at
//! most four entries. Each receiver sees the superposition of all other
//! transmitters convolved with their link taps, attenuated by a fixed base
//! loss, plus an optional noise floor. Tap sets change every millisecond
//! ([`ChannelFrame`]); [`emulate_mobile`] switches frames block by block and
//! overlap-adds the convolution tails.
//!
//! # ChannelFrame binary layout
//!
//! All integers and floats little-endian.
//!
//! ```text
//! offset size field
//! 0      4    magic "CHFR"
//! 4      2    version (u16) = 1
//! 6      2    reserved (u16) = 0
//! 8      8    timestamp_ms (u64)
//! 16     4    link_count (u32)
//! 20     48*n links, each:
//!               0  4  tx node id (u32)
//!               4  4  rx node id (u32)
//!               8  40 4 slots of { index u16, re f32, im f32 }
//! ```
//!
//! Slots are sorted by index; unused slots hold index `0xFFFF` and zero gain.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::waveform::{IqWaveform, NoiseSource};
use crate::{Error, Result};

/// Number of slots in the emulator FIR line.
pub const TAP_GRID_LEN: usize = 512;
/// Spacing of the FIR grid in seconds.
pub const TAP_SPACING_S: f64 = 10e-9;
const TAP_GRID_RATE_HZ: f64 = 1e8;
/// Maximum number of populated taps per link.
pub const MAX_TAPS: usize = 4;
pub const DEFAULT_BASE_LOSS_DB: f64 = 57.55;
pub const DEFAULT_NOISE_FLOOR_DB: f64 = -100.0;

const BINARY_MAGIC: &[u8; 4] = b"CHFR";
const BINARY_VERSION: u16 = 1;
const EMPTY_SLOT: u16 = 0xFFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sparse FIR taps on the 10 ns grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TapSet {
    taps: BTreeMap<u16, Complex32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub index: u16,
    pub re: f32,
    pub im: f32,
}

impl Tap {
    pub fn gain(&self) -> Complex32 {
        Complex32::new(self.re, self.im)
    }
}

impl TapSet {
    pub fn new(entries: impl IntoIterator<Item = (u16, Complex32)>) -> Result<Self> {
        let mut set = TapSet::default();
        for (index, gain) in entries {
            set.insert(index, gain)?;
        }
        Ok(set)
    }

    /// Single unit tap at index 0.
    pub fn identity() -> Self {
        let mut taps = BTreeMap::new();
        taps.insert(0, Complex32::new(1.0, 0.0));
        TapSet { taps }
    }

    /// Builds taps from `(index, gain_db)` pairs with zero phase.
    pub fn from_db(entries: &[(u16, f64)]) -> Result<Self> {
        TapSet::new(
            entries
                .iter()
                .map(|&(i, db)| (i, Complex32::new(10f64.powf(db / 20.0) as f32, 0.0))),
        )
    }

    pub fn insert(&mut self, index: u16, gain: Complex32) -> Result<()> {
        if usize::from(index) >= TAP_GRID_LEN {
            return Err(Error::InvalidTapSet(format!("index {index} outside 0..{TAP_GRID_LEN}")));
        }
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(Error::InvalidTapSet(format!("gain at index {index} is not finite")));
        }
        if self.taps.contains_key(&index) {
            return Err(Error::InvalidTapSet(format!("duplicate index {index}")));
        }
        if self.taps.len() == MAX_TAPS {
            return Err(Error::InvalidTapSet(format!("more than {MAX_TAPS} taps")));
        }
        self.taps.insert(index, gain);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn get(&self, index: u16) -> Option<Complex32> {
        self.taps.get(&index).copied()
    }

    /// Taps in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (u16, Complex32)> + '_ {
        self.taps.iter().map(|(&i, &g)| (i, g))
    }

    pub fn taps(&self) -> Vec<Tap> {
        self.iter()
            .map(|(index, g)| Tap {
                index,
                re: g.re,
                im: g.im,
            })
            .collect()
    }

    /// Tap delays in seconds.
    pub fn delays(&self) -> Vec<f64> {
        self.taps.keys().map(|&i| f64::from(i) * TAP_SPACING_S).collect()
    }

    /// `20 log10 |gain|` per tap.
    pub fn gains_db(&self) -> Vec<f64> {
        self.taps.values().map(|g| amplitude_db(c64(*g).norm())).collect()
    }

    /// Sum of `|gain|^2`.
    pub fn total_power(&self) -> f64 {
        self.taps.values().map(|g| c64(*g).norm_sqr()).sum()
    }

    /// Coherent sum of all tap gains.
    pub fn coherent_sum(&self) -> Complex64 {
        self.taps.values().map(|g| c64(*g)).sum()
    }

    pub fn max_index(&self) -> Option<u16> {
        self.taps.keys().next_back().copied()
    }

    /// Multiplies every gain by `factor` (e.g. a uniform phase rotation).
    pub fn scaled(&self, factor: Complex64) -> TapSet {
        TapSet {
            taps: self
                .taps
                .iter()
                .map(|(&i, &g)| {
                    let z = c64(g) * factor;
                    (i, Complex32::new(z.re as f32, z.im as f32))
                })
                .collect(),
        }
    }
}

impl Serialize for TapSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.taps().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TapSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let taps = Vec::<Tap>::deserialize(d)?;
        TapSet::new(taps.into_iter().map(|t| (t.index, t.gain()))).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn c64(z: Complex32) -> Complex64 {
    Complex64::new(z.re as f64, z.im as f64)
}

/// `20 log10(a)`, `-inf` for zero.
pub fn amplitude_db(a: f64) -> f64 {
    if a == 0.0 {
        f64::NEG_INFINITY
    } else {
        20.0 * a.log10()
    }
}

/// Tap sets of every link at one millisecond instant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelFrame {
    pub timestamp_ms: u64,
    pub links: BTreeMap<(NodeId, NodeId), TapSet>,
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    tx: NodeId,
    rx: NodeId,
    taps: TapSet,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    timestamp_ms: u64,
    links: Vec<LinkRecord>,
}

impl Serialize for ChannelFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameRecord {
            timestamp_ms: self.timestamp_ms,
            links: self
                .links
                .iter()
                .map(|(&(tx, rx), taps)| LinkRecord {
                    tx,
                    rx,
                    taps: taps.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChannelFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = FrameRecord::deserialize(d)?;
        let mut links = BTreeMap::new();
        for l in rec.links {
            if links.insert((l.tx, l.rx), l.taps).is_some() {
                return Err(serde::de::Error::custom(format!("duplicate link {}->{}", l.tx, l.rx)));
            }
        }
        Ok(ChannelFrame {
            timestamp_ms: rec.timestamp_ms,
            links,
        })
    }
}

impl ChannelFrame {
    pub fn new(timestamp_ms: u64) -> Self {
        ChannelFrame {
            timestamp_ms,
            links: BTreeMap::new(),
        }
    }

    pub fn with_link(mut self, tx: NodeId, rx: NodeId, taps: TapSet) -> Self {
        self.links.insert((tx, rx), taps);
        self
    }

    pub fn link(&self, tx: NodeId, rx: NodeId) -> Option<&TapSet> {
        self.links.get(&(tx, rx))
    }

    /// Encodes the frame in the binary layout documented at module level.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 48 * self.links.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&self.timestamp_ms.to_le_bytes());
        out.extend_from_slice(&(self.links.len() as u32).to_le_bytes());
        for (&(tx, rx), taps) in &self.links {
            out.extend_from_slice(&tx.0.to_le_bytes());
            out.extend_from_slice(&rx.0.to_le_bytes());
            let mut slots = taps.iter();
            for _ in 0..MAX_TAPS {
                let (index, g) = slots.next().unwrap_or((EMPTY_SLOT, Complex32::new(0.0, 0.0)));
                out.extend_from_slice(&index.to_le_bytes());
                out.extend_from_slice(&g.re.to_le_bytes());
                out.extend_from_slice(&g.im.to_le_bytes());
            }
        }
        out
    }

    /// Decodes one frame; returns the frame and the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let bad = |m: &str| Error::InvalidBinary(m.to_string());
        if bytes.len() < 20 {
            return Err(bad("header shorter than 20 bytes"));
        }
        if &bytes[0..4] != BINARY_MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != BINARY_VERSION {
            return Err(Error::InvalidBinary(format!("unsupported version {version}")));
        }
        let timestamp_ms = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let count = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
        let total = 20 + 48 * count;
        if bytes.len() < total {
            return Err(Error::InvalidBinary(format!(
                "{count} links need {total} bytes, have {}",
                bytes.len()
            )));
        }
        let mut frame = ChannelFrame::new(timestamp_ms);
        for rec in bytes[20..total].chunks_exact(48) {
            let tx = NodeId(u32::from_le_bytes(rec[0..4].try_into().unwrap()));
            let rx = NodeId(u32::from_le_bytes(rec[4..8].try_into().unwrap()));
            let mut taps = TapSet::default();
            for slot in rec[8..].chunks_exact(10) {
                let index = u16::from_le_bytes([slot[0], slot[1]]);
                if index == EMPTY_SLOT {
                    continue;
                }
                let re = f32::from_le_bytes(slot[2..6].try_into().unwrap());
                let im = f32::from_le_bytes(slot[6..10].try_into().unwrap());
                taps.insert(index, Complex32::new(re, im))?;
            }
            if frame.links.insert((tx, rx), taps).is_some() {
                return Err(Error::InvalidBinary(format!("duplicate link {tx}->{rx}")));
            }
        }
        Ok((frame, total))
    }
}

/// Encodes a frame sequence as back-to-back binary frames.
pub fn frames_to_bytes(frames: &[ChannelFrame]) -> Vec<u8> {
    frames.iter().flat_map(|f| f.to_bytes()).collect()
}

pub fn frames_from_bytes(mut bytes: &[u8]) -> Result<Vec<ChannelFrame>> {
    let mut frames = Vec::new();
    while !bytes.is_empty() {
        let (frame, used) = ChannelFrame::from_bytes(bytes)?;
        frames.push(frame);
        bytes = &bytes[used..];
    }
    Ok(frames)
}

/// Emulator hardware properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmulatorConfig {
    /// Attenuation applied to every link, dB.
    pub base_loss_db: f64,
    /// Receiver noise power in dB relative to unit power; `None` disables noise.
    pub noise_floor_db: Option<f64>,
    pub sample_rate: f64,
}

impl EmulatorConfig {
    pub fn new(sample_rate: f64) -> Self {
        EmulatorConfig {
            base_loss_db: DEFAULT_BASE_LOSS_DB,
            noise_floor_db: Some(DEFAULT_NOISE_FLOOR_DB),
            sample_rate,
        }
    }

    /// Lossless, noiseless configuration.
    pub fn ideal(sample_rate: f64) -> Self {
        EmulatorConfig {
            base_loss_db: 0.0,
            noise_floor_db: None,
            sample_rate,
        }
    }

    pub fn with_base_loss(mut self, db: f64) -> Self {
        self.base_loss_db = db;
        self
    }

    pub fn with_noise_floor(mut self, db: Option<f64>) -> Self {
        self.noise_floor_db = db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::invalid(format!(
                "emulator sample rate {} must be > 0",
                self.sample_rate
            )));
        }
        if !self.base_loss_db.is_finite() {
            return Err(Error::invalid("base loss must be finite"));
        }
        Ok(())
    }

    /// Linear amplitude factor `10^(-base_loss/20)`.
    pub fn base_loss_amplitude(&self) -> f64 {
        10f64.powf(-self.base_loss_db / 20.0)
    }

    /// Delay of grid `index` in samples, rounded to the nearest sample, and
    /// whether the delay is exactly representable at this rate.
    pub fn delay_samples(&self, index: u16) -> (usize, bool) {
        // divide by the grid rate rather than multiply by 10 ns: exact for
        // integer rates, so half-sample delays round consistently
        let exact = f64::from(index) * self.sample_rate / TAP_GRID_RATE_HZ;
        let rounded = exact.round();
        (rounded as usize, (exact - rounded).abs() < 1e-6)
    }
}

fn max_delay_samples<'a>(sets: impl IntoIterator<Item = &'a TapSet>, config: &EmulatorConfig) -> usize {
    sets.into_iter()
        .filter_map(|t| t.max_index())
        .map(|i| config.delay_samples(i).0)
        .max()
        .unwrap_or(0)
}

// Adds input convolved with taps into acc starting at offset.
fn accumulate(acc: &mut [Complex64], offset: usize, input: &[Complex32], taps: &TapSet, config: &EmulatorConfig) {
    let scale = config.base_loss_amplitude();
    for (index, gain) in taps.iter() {
        let g = c64(gain) * scale;
        let (delay, _) = config.delay_samples(index);
        let dst = &mut acc[offset + delay..offset + delay + input.len()];
        for (y, x) in dst.iter_mut().zip(input) {
            *y += g * c64(*x);
        }
    }
}

fn off_grid_warnings(taps: &TapSet, config: &EmulatorConfig) -> Vec<String> {
    taps.iter()
        .filter(|&(i, _)| !config.delay_samples(i).1)
        .map(|(i, _)| {
            format!(
                "tap {i} ({} ns) rounded to {} samples at {} S/s",
                f64::from(i) * 10.0,
                config.delay_samples(i).0,
                config.sample_rate
            )
        })
        .collect()
}

fn to_waveform(acc: Vec<Complex64>, sample_rate: f64, label: String) -> Result<IqWaveform> {
    let samples = acc
        .into_iter()
        .map(|z| Complex32::new(z.re as f32, z.im as f32))
        .collect();
    IqWaveform::new(samples, sample_rate, label)
}

/// Convolves one link (no noise): `y[n] = sum_taps g 10^(-L/20) x[n - d]`.
///
/// Output length is the input length plus the largest tap delay in samples.
/// Off-grid tap delays are rounded to the nearest sample and noted in the
/// output label.
pub fn convolve_link(input: &IqWaveform, taps: &TapSet, config: &EmulatorConfig) -> Result<IqWaveform> {
    config.validate()?;
    check_rate(input, config)?;
    let len = input.len() + max_delay_samples([taps], config);
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    accumulate(&mut acc, 0, input.samples(), taps, config);
    let mut label = format!("{}*h", input.label);
    let warnings = off_grid_warnings(taps, config);
    if !warnings.is_empty() {
        label.push_str(" [warning: ");
        label.push_str(&warnings.join("; "));
        label.push(']');
    }
    to_waveform(acc, config.sample_rate, label)
}

fn check_rate(input: &IqWaveform, config: &EmulatorConfig) -> Result<()> {
    if input.sample_rate() != config.sample_rate {
        return Err(Error::invalid(format!(
            "waveform rate {} differs from emulator rate {}",
            input.sample_rate(),
            config.sample_rate
        )));
    }
    Ok(())
}

/// Result of a multi-node emulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Emulation {
    pub outputs: BTreeMap<NodeId, IqWaveform>,
    /// `(tx, rx)` pairs with no tap set; treated as zero channels.
    pub missing_links: Vec<(NodeId, NodeId)>,
    pub warnings: Vec<String>,
}

fn check_inputs(inputs: &BTreeMap<NodeId, IqWaveform>, config: &EmulatorConfig) -> Result<usize> {
    config.validate()?;
    let mut len = None;
    for (node, w) in inputs {
        check_rate(w, config)?;
        match len {
            None => len = Some(w.len()),
            Some(l) if l != w.len() => {
                return Err(Error::invalid(format!(
                    "input of node {node} has {} samples, expected {l}",
                    w.len()
                )))
            }
            _ => {}
        }
    }
    Ok(len.unwrap_or(0))
}

/// Emulates one static frame for every receiver.
///
/// Receivers are all input nodes plus every `rx` named in the frame. Each
/// receiver sums the other inputs through their link taps; noise at
/// `config.noise_floor_db` is drawn from stream `rx id` of `noise_seed`.
pub fn emulate(
    inputs: &BTreeMap<NodeId, IqWaveform>,
    frame: &ChannelFrame,
    config: &EmulatorConfig,
    noise_seed: u64,
) -> Result<Emulation> {
    emulate_blocks(inputs, std::slice::from_ref(frame), None, config, noise_seed)
}

/// Emulates a time-varying scenario with one frame per millisecond.
///
/// Block `k` (1 ms of input) goes through `frames[k]`; the last frame also
/// covers any input beyond the frame span. Convolution tails overlap-add into
/// the following blocks.
pub fn emulate_mobile(
    inputs: &BTreeMap<NodeId, IqWaveform>,
    frames: &[ChannelFrame],
    config: &EmulatorConfig,
    noise_seed: u64,
) -> Result<Emulation> {
    if frames.is_empty() {
        return Err(Error::invalid("no channel frames"));
    }
    for w in frames.windows(2) {
        if w[1].timestamp_ms != w[0].timestamp_ms + 1 {
            return Err(Error::invalid(format!(
                "frames must be 1 ms apart (got {} then {})",
                w[0].timestamp_ms, w[1].timestamp_ms
            )));
        }
    }
    let per_ms = config.sample_rate * 1e-3;
    if (per_ms - per_ms.round()).abs() > 1e-9 || per_ms < 1.0 {
        return Err(Error::invalid(format!(
            "sample rate {} does not give an integer number of samples per ms",
            config.sample_rate
        )));
    }
    let block = per_ms.round() as usize;
    let len = check_inputs(inputs, config)?;
    if len < block * frames.len() {
        return Err(Error::InputTooShort(format!(
            "{} frames need {} samples, input has {len}",
            frames.len(),
            block * frames.len()
        )));
    }
    emulate_blocks(inputs, frames, Some(block), config, noise_seed)
}

/// Emulation output at the emulator's internal f64 precision, before the
/// conversion to f32 IQ samples.
#[derive(Debug, Clone, PartialEq)]
pub struct WideEmulation {
    pub outputs: BTreeMap<NodeId, Vec<Complex64>>,
    pub missing_links: Vec<(NodeId, NodeId)>,
    pub warnings: Vec<String>,
}

/// [`emulate`] without the final rounding to f32.
pub fn emulate_wide(
    inputs: &BTreeMap<NodeId, IqWaveform>,
    frame: &ChannelFrame,
    config: &EmulatorConfig,
    noise_seed: u64,
) -> Result<WideEmulation> {
    emulate_blocks_wide(inputs, std::slice::from_ref(frame), None, config, noise_seed)
}

fn emulate_blocks(
    inputs: &BTreeMap<NodeId, IqWaveform>,
    frames: &[ChannelFrame],
    block: Option<usize>,
    config: &EmulatorConfig,
    noise_seed: u64,
) -> Result<Emulation> {
    let wide = emulate_blocks_wide(inputs, frames, block, config, noise_seed)?;
    let outputs = wide
        .outputs
        .into_iter()
        .map(|(rx, acc)| Ok((rx, to_waveform(acc, config.sample_rate, format!("rx{rx}"))?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Emulation {
        outputs,
        missing_links: wide.missing_links,
        warnings: wide.warnings,
    })
}

fn emulate_blocks_wide(
    inputs: &BTreeMap<NodeId, IqWaveform>,
    frames: &[ChannelFrame],
    block: Option<usize>,
    config: &EmulatorConfig,
    noise_seed: u64,
) -> Result<WideEmulation> {
    let len = check_inputs(inputs, config)?;
    let out_len = len + max_delay_samples(frames.iter().flat_map(|f| f.links.values()), config);

    let mut receivers: BTreeSet<NodeId> = inputs.keys().copied().collect();
    for f in frames {
        receivers.extend(f.links.keys().map(|&(_, rx)| rx));
    }

    let mut missing = BTreeSet::new();
    let mut warnings = BTreeSet::new();
    for f in frames {
        for &rx in &receivers {
            for &tx in inputs.keys().filter(|&&tx| tx != rx) {
                match f.link(tx, rx) {
                    Some(taps) => warnings.extend(off_grid_warnings(taps, config)),
                    None => {
                        missing.insert((tx, rx));
                    }
                }
            }
        }
    }

    // block boundaries: frame k covers [start_k, end_k)
    let spans: Vec<(usize, usize)> = match block {
        None => vec![(0, len)],
        Some(b) => (0..frames.len())
            .map(|k| {
                let end = if k + 1 == frames.len() { len } else { (k + 1) * b };
                (k * b, end)
            })
            .collect(),
    };

    let outputs: Vec<(NodeId, Vec<Complex64>)> = receivers
        .par_iter()
        .map(|&rx| {
            let mut acc = vec![Complex64::new(0.0, 0.0); out_len];
            for (&tx, wave) in inputs.iter().filter(|(&tx, _)| tx != rx) {
                for (frame, &(start, end)) in frames.iter().zip(&spans) {
                    if let Some(taps) = frame.link(tx, rx) {
                        accumulate(&mut acc, start, &wave.samples()[start..end], taps, config);
                    }
                }
            }
            if let Some(floor) = config.noise_floor_db {
                let mut noise = NoiseSource::new(floor, noise_seed, u64::from(rx.0));
                for z in acc.iter_mut() {
                    let (i, q) = noise.next_pair();
                    *z += Complex64::new(i, q);
                }
            }
            (rx, acc)
        })
        .collect();

    Ok(WideEmulation {
        outputs: outputs.into_iter().collect(),
        missing_links: missing.into_iter().collect(),
        warnings: warnings.into_iter().collect(),
    })
}
