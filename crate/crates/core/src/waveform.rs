//! IQ waveforms: BPSK modulation of code sequences, the raw `.iq` file format
//! and additive white Gaussian noise.
//!
//! # `.iq` layout
//!
//! A headerless stream of samples, each sample two IEEE-754 binary32 values
//! `I` then `Q`, little-endian. A file of `n` samples is exactly `8 n` bytes.
//!
//! # Noise PRNG
//!
//! Noise is drawn from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` and switched to the requested stream with
//! `set_stream`. Gaussian variates come from `rand_distr::StandardNormal`
//! (ziggurat), one for I then one for Q per sample.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex32;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::sequences::CodeSequence;
use crate::{Error, Result};

/// Sampled complex baseband signal.
#[derive(Debug, Clone, PartialEq)]
pub struct IqWaveform {
    samples: Vec<Complex32>,
    sample_rate: f64,
    pub label: String,
}

impl IqWaveform {
    pub fn new(samples: Vec<Complex32>, sample_rate: f64, label: impl Into<String>) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid(format!("sample rate {sample_rate} must be > 0")));
        }
        if let Some(index) = samples.iter().position(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::NonFiniteSample { index });
        }
        Ok(Self {
            samples,
            sample_rate,
            label: label.into(),
        })
    }

    /// All-zero waveform of `len` samples.
    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex32::new(0.0, 0.0); len], sample_rate, "zeros")
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex32> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean of `|x|^2` over all samples (0 for an empty waveform).
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.energy() / self.samples.len() as f64
    }

    /// Sum of `|x|^2`, accumulated in f64.
    pub fn energy(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.re as f64).powi(2) + (s.im as f64).powi(2))
            .sum()
    }

    /// CSV with columns `index,i,q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,i,q\n");
        for (k, s) in self.samples.iter().enumerate() {
            out.push_str(&format!("{k},{},{}\n", s.re, s.im));
        }
        out
    }
}

/// BPSK: chip `c` becomes `c + 0j`, held for `samples_per_chip` samples,
/// and the whole code repeated `repetitions` times.
pub fn modulate_bpsk(
    seq: &CodeSequence,
    sample_rate: f64,
    samples_per_chip: usize,
    repetitions: usize,
) -> Result<IqWaveform> {
    if samples_per_chip == 0 {
        return Err(Error::invalid("samples_per_chip must be >= 1"));
    }
    if repetitions == 0 {
        return Err(Error::invalid("repetitions must be >= 1"));
    }
    let mut period = Vec::with_capacity(seq.len() * samples_per_chip);
    for &c in seq.chips() {
        let s = Complex32::new(c as f32, 0.0);
        period.extend(std::iter::repeat_n(s, samples_per_chip));
    }
    let samples = period.repeat(repetitions);
    IqWaveform::new(
        samples,
        sample_rate,
        format!("bpsk:{}:N={}x{}", seq.family(), seq.len(), repetitions),
    )
}

/// Encodes samples in the `.iq` layout.
pub fn encode_iq(wave: &IqWaveform) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(wave.len() * 8);
    for s in wave.samples() {
        bytes.extend_from_slice(&s.re.to_le_bytes());
        bytes.extend_from_slice(&s.im.to_le_bytes());
    }
    bytes
}

/// Decodes the `.iq` layout. The sample rate is not stored in the file.
pub fn decode_iq(bytes: &[u8], sample_rate: f64) -> Result<IqWaveform> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::TruncatedIq {
            floats: bytes.len() / 4,
        });
    }
    let samples: Vec<Complex32> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex32::new(re, im)
        })
        .collect();
    IqWaveform::new(samples, sample_rate, "iq-file")
}

pub fn save_iq_file(wave: &IqWaveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_iq(wave)).map_err(|e| Error::io(path, e))
}

pub fn load_iq_file(path: impl AsRef<Path>, sample_rate: f64) -> Result<IqWaveform> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut wave = decode_iq(&bytes, sample_rate)?;
    wave.label = path.display().to_string();
    Ok(wave)
}

/// Complex Gaussian noise source with total power `10^(power_db/10)`,
/// split equally between I and Q.
pub struct NoiseSource {
    rng: ChaCha8Rng,
    sigma: f64,
}

impl NoiseSource {
    pub fn new(power_db: f64, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let sigma = (10f64.powf(power_db / 10.0) / 2.0).sqrt();
        Self { rng, sigma }
    }

    pub fn next_pair(&mut self) -> (f64, f64) {
        let i: f64 = StandardNormal.sample(&mut self.rng);
        let q: f64 = StandardNormal.sample(&mut self.rng);
        (self.sigma * i, self.sigma * q)
    }

    /// Adds noise in place; each sum is computed in f64 and rounded once.
    pub fn add_to(&mut self, samples: &mut [Complex32]) {
        for s in samples {
            let (i, q) = self.next_pair();
            s.re = (s.re as f64 + i) as f32;
            s.im = (s.im as f64 + q) as f32;
        }
    }
}

/// Returns `wave` plus circularly-symmetric complex AWGN (stream 0 of `seed`).
pub fn add_awgn(wave: &IqWaveform, noise_power_db: f64, seed: u64) -> IqWaveform {
    let mut out = wave.clone();
    NoiseSource::new(noise_power_db, seed, 0).add_to(&mut out.samples);
    out.label = format!("{}+awgn({noise_power_db}dB)", wave.label);
    out
}
