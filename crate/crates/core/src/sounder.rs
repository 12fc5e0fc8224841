//! Cross-correlation channel sounder.
//!
//! The received IQ stream is correlated against the known BPSK reference:
//! `h(k) = sum_n s(n) r(n + k) / (s^T s)`, separately for the I and Q rails
//! (BPSK has a real reference, so both rails share `s`). Lags are grouped into
//! frames of one code period, peaks are picked per frame, and path gains are
//! `20 log10 |h| - P_t - G_t - G_r`.
//!
//! A plain correlator leaves the periodic autocorrelation sidelobes of the code
//! (for an m-sequence, `-1/N` of every other tap) on top of each peak. When
//! refinement is enabled the detected taps of a steady-state frame are
//! re-estimated jointly by solving `A g = h_peaks`, with `A` the reference's
//! periodic autocorrelation at the pairwise tap offsets, which removes that
//! bias exactly in the noiseless case.

use std::collections::HashMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::{amplitude_db, TAP_SPACING_S};
use crate::sequences::{CodeSequence, Family};
use crate::waveform::{modulate_bpsk, IqWaveform};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD_DB: f64 = 40.0;
pub const DEFAULT_MIN_SEPARATION: usize = 2;

/// Recovered channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct CirEstimate {
    /// Absolute correlation lag of each entry, in samples.
    pub lags: Vec<usize>,
    pub h_i: Vec<f64>,
    pub h_q: Vec<f64>,
    /// `sqrt(h_i^2 + h_q^2)`.
    pub magnitude: Vec<f64>,
    pub sample_rate: f64,
    /// Reference period in samples (`N * samples_per_chip`).
    pub period: usize,
}

impl CirEstimate {
    fn from_complex(first_lag: usize, h: Vec<Complex64>, sample_rate: f64, period: usize) -> Self {
        let lags = (first_lag..first_lag + h.len()).collect();
        let h_i = h.iter().map(|z| z.re).collect();
        let h_q = h.iter().map(|z| z.im).collect();
        let magnitude = h.iter().map(|z| z.re.hypot(z.im)).collect();
        CirEstimate {
            lags,
            h_i,
            h_q,
            magnitude,
            sample_rate,
            period,
        }
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn value(&self, idx: usize) -> Complex64 {
        Complex64::new(self.h_i[idx], self.h_q[idx])
    }

    /// Entries `[start, start + len)` as a new estimate.
    pub fn window(&self, start: usize, len: usize) -> CirEstimate {
        let end = (start + len).min(self.len());
        let start = start.min(end);
        CirEstimate {
            lags: self.lags[start..end].to_vec(),
            h_i: self.h_i[start..end].to_vec(),
            h_q: self.h_q[start..end].to_vec(),
            magnitude: self.magnitude[start..end].to_vec(),
            sample_rate: self.sample_rate,
            period: self.period,
        }
    }

    /// `(lag, magnitude)` CSV, for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,h_i,h_q,magnitude\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.lags[k], self.h_i[k], self.h_q[k], self.magnitude[k]
            ));
        }
        out
    }
}

/// Real reference samples: each chip held for `samples_per_chip` samples.
fn reference_samples(reference: &CodeSequence, samples_per_chip: usize) -> Vec<f64> {
    reference
        .chips()
        .iter()
        .flat_map(|&c| std::iter::repeat_n(f64::from(c), samples_per_chip))
        .collect()
}

/// Normalized cross-correlation of `received` with one reference period,
/// for every lag at which the reference fits entirely inside the capture.
pub fn correlate(received: &IqWaveform, reference: &CodeSequence, samples_per_chip: usize) -> Result<CirEstimate> {
    let samples: Vec<Complex64> = received
        .samples()
        .iter()
        .map(|z| Complex64::new(z.re as f64, z.im as f64))
        .collect();
    correlate_wide(&samples, received.sample_rate(), reference, samples_per_chip)
}

/// [`correlate`] on f64 samples, e.g. the emulator's unrounded output.
pub fn correlate_wide(
    received: &[Complex64],
    sample_rate: f64,
    reference: &CodeSequence,
    samples_per_chip: usize,
) -> Result<CirEstimate> {
    if samples_per_chip == 0 {
        return Err(Error::invalid("samples_per_chip must be >= 1"));
    }
    let s = reference_samples(reference, samples_per_chip);
    let period = s.len();
    if received.len() < period {
        return Err(Error::InputTooShort(format!(
            "received {} samples, reference period is {period}",
            received.len()
        )));
    }
    let energy: f64 = s.iter().map(|x| x * x).sum();
    let lags = received.len() - period + 1;

    let size = (received.len() + period).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let mut r = received.to_vec();
    r.resize(size, Complex64::new(0.0, 0.0));
    let mut sf: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    sf.resize(size, Complex64::new(0.0, 0.0));
    fwd.process(&mut r);
    fwd.process(&mut sf);
    for (a, b) in r.iter_mut().zip(&sf) {
        *a *= b.conj();
    }
    inv.process(&mut r);
    let scale = 1.0 / (size as f64 * energy);
    let h: Vec<Complex64> = r[..lags].iter().map(|z| z * scale).collect();
    Ok(CirEstimate::from_complex(0, h, sample_rate, period))
}

/// One detected tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedTap {
    /// Delay relative to the frame's strongest peak, seconds.
    pub toa_s: f64,
    /// Path gain, dB.
    pub gain_db: f64,
    /// Absolute correlation lag of the peak.
    pub peak_lag: usize,
    /// Complex CIR amplitude at the peak.
    pub re: f64,
    pub im: f64,
}

impl DetectedTap {
    pub fn amplitude(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    /// ToA expressed on the 10 ns emulator grid.
    pub fn grid_offset(&self) -> i64 {
        (self.toa_s / TAP_SPACING_S).round() as i64
    }
}

/// Taps of one sounding frame (one code period of lags).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTaps {
    pub frame: usize,
    pub taps: Vec<DetectedTap>,
}

/// Peak-picking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Keep peaks no more than this many dB below the frame's strongest.
    pub threshold_db: f64,
    /// Minimum lag distance between reported peaks, samples.
    pub min_separation: usize,
    /// Absolute magnitude a peak must exceed (0 disables).
    pub min_magnitude: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            threshold_db: DEFAULT_THRESHOLD_DB,
            min_separation: DEFAULT_MIN_SEPARATION,
            min_magnitude: 0.0,
        }
    }
}

impl DetectionConfig {
    /// Sets `min_magnitude` six noise standard deviations above the
    /// correlator output noise for a receiver noise floor of `noise_floor_db`.
    pub fn with_noise_floor(mut self, noise_floor_db: f64, period: usize) -> Self {
        let sigma = (10f64.powf(noise_floor_db / 10.0) / period as f64).sqrt();
        self.min_magnitude = 6.0 * sigma;
        self
    }
}

/// Splits `cir` into frames of `cir.period` entries (full frames only) and
/// picks peaks in each.
///
/// Peaks are lags whose magnitude is within `threshold_db` of the frame's
/// strongest and above `min_magnitude`, accepted strongest-first and dropped
/// when closer than `min_separation` to an already accepted peak. Gains are
/// plain `20 log10 |h|`.
pub fn detect_taps(cir: &CirEstimate, config: &DetectionConfig) -> Result<Vec<FrameTaps>> {
    if cir.is_empty() {
        return Err(Error::invalid("empty CIR"));
    }
    let period = cir.period.max(1);
    let frames = cir.len() / period;
    Ok((0..frames)
        .map(|f| FrameTaps {
            frame: f,
            taps: detect_in_range(cir, f * period, (f + 1) * period, config),
        })
        .collect())
}

fn detect_in_range(cir: &CirEstimate, start: usize, end: usize, config: &DetectionConfig) -> Vec<DetectedTap> {
    let mag = &cir.magnitude[start..end];
    let peak = mag.iter().cloned().fold(0.0, f64::max);
    if peak <= config.min_magnitude || peak == 0.0 {
        return Vec::new();
    }
    let floor = (peak * 10f64.powf(-config.threshold_db / 20.0)).max(config.min_magnitude);
    let mut candidates: Vec<usize> = (0..mag.len()).filter(|&k| mag[k] >= floor).collect();
    candidates.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));

    let sep = config.min_separation.max(1);
    let mut accepted: Vec<usize> = Vec::new();
    for k in candidates {
        if accepted.iter().all(|&a| a.abs_diff(k) >= sep) {
            accepted.push(k);
        }
    }
    let strongest = cir.lags[start + accepted[0]];
    accepted.sort_unstable();
    accepted
        .into_iter()
        .map(|k| {
            let idx = start + k;
            let z = cir.value(idx);
            DetectedTap {
                toa_s: (cir.lags[idx] as f64 - strongest as f64) / cir.sample_rate,
                gain_db: amplitude_db(z.norm()),
                peak_lag: cir.lags[idx],
                re: z.re,
                im: z.im,
            }
        })
        .collect()
}

/// `G_p = 20 log10 |h| - P_t - G_t - G_r` per tap; `-inf` for zero magnitude.
pub fn path_gains(taps: &[DetectedTap], p_t_db: f64, g_t_dbi: f64, g_r_dbi: f64) -> Vec<f64> {
    taps.iter()
        .map(|t| amplitude_db(t.amplitude().norm()) - p_t_db - g_t_dbi - g_r_dbi)
        .collect()
}

/// Periodic autocorrelation of the sample-level reference, normalized by its
/// energy, evaluated lazily per offset.
struct ReferenceAutocorrelation {
    samples: Vec<f64>,
    energy: f64,
    cache: HashMap<usize, f64>,
}

impl ReferenceAutocorrelation {
    fn new(reference: &CodeSequence, samples_per_chip: usize) -> Self {
        let samples = reference_samples(reference, samples_per_chip);
        let energy = samples.iter().map(|x| x * x).sum();
        ReferenceAutocorrelation {
            samples,
            energy,
            cache: HashMap::new(),
        }
    }

    fn at(&mut self, offset: i64) -> f64 {
        let n = self.samples.len();
        let m = offset.rem_euclid(n as i64) as usize;
        if let Some(&v) = self.cache.get(&m) {
            return v;
        }
        let s = &self.samples;
        let v = (0..n).map(|i| s[i] * s[(i + m) % n]).sum::<f64>() / self.energy;
        self.cache.insert(m, v);
        v
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (x, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= f * p;
            }
            let bc = b[col];
            b[row] -= bc * f;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= x[k] * a[row][k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Link-budget terms removed from the measured gain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_t_db: f64,
    pub g_t_dbi: f64,
    pub g_r_dbi: f64,
}

/// Statistics of one tap tracked across frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapStats {
    /// ToA on the 10 ns grid, relative to the strongest peak.
    pub grid_offset: i64,
    pub count: usize,
    pub mean_toa_s: f64,
    pub mean_gain_db: f64,
    pub std_gain_db: f64,
    /// Mean and std of `gain[f] - gain[f-1]` over consecutive frames.
    pub mean_frame_delta_db: Option<f64>,
    pub std_frame_delta_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffStats {
    pub mean_db: f64,
    pub std_db: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingStats {
    pub taps: Vec<TapStats>,
    /// Per-frame gain difference between the strongest and weakest tracked taps.
    pub strongest_minus_weakest: Option<DiffStats>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl SoundingStats {
    /// One row per tracked tap; empty cells where a statistic is undefined.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(
            "grid_offset,count,mean_toa_s,mean_gain_db,std_gain_db,mean_frame_delta_db,std_frame_delta_db\n",
        );
        for t in &self.taps {
            out.push_str(&format!(
                "{},{},{:e},{},{},{},{}\n",
                t.grid_offset,
                t.count,
                t.mean_toa_s,
                t.mean_gain_db,
                t.std_gain_db,
                opt(t.mean_frame_delta_db),
                opt(t.std_frame_delta_db)
            ));
        }
        out
    }
}

/// Aggregates taps across frames. A tap joins the track whose grid offset is
/// nearest, if within one grid cell; otherwise it opens a new track.
pub fn aggregate(frames: &[FrameTaps]) -> SoundingStats {
    struct Track {
        grid: i64,
        // (frame, gain_db, toa_s)
        points: Vec<(usize, f64, f64)>,
    }
    let mut tracks: Vec<Track> = Vec::new();
    for frame in frames {
        for tap in &frame.taps {
            let g = tap.grid_offset();
            let nearest = tracks
                .iter_mut()
                .filter(|t| (t.grid - g).abs() <= 1)
                .min_by_key(|t| ((t.grid - g).abs(), t.grid));
            let point = (frame.frame, tap.gain_db, tap.toa_s);
            match nearest {
                Some(t) => t.points.push(point),
                None => tracks.push(Track {
                    grid: g,
                    points: vec![point],
                }),
            }
        }
    }
    tracks.sort_by_key(|t| t.grid);

    let taps: Vec<TapStats> = tracks
        .iter()
        .map(|t| {
            let gains: Vec<f64> = t.points.iter().map(|p| p.1).collect();
            let toas: Vec<f64> = t.points.iter().map(|p| p.2).collect();
            let deltas: Vec<f64> = t
                .points
                .windows(2)
                .filter(|w| w[1].0 == w[0].0 + 1)
                .map(|w| w[1].1 - w[0].1)
                .collect();
            let (mean_gain_db, std_gain_db) = mean_std(&gains);
            let (mean_frame_delta_db, std_frame_delta_db) = if deltas.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&deltas);
                (Some(m), Some(s))
            };
            TapStats {
                grid_offset: t.grid,
                count: t.points.len(),
                mean_toa_s: mean_std(&toas).0,
                mean_gain_db,
                std_gain_db,
                mean_frame_delta_db,
                std_frame_delta_db,
            }
        })
        .collect();

    let strongest_minus_weakest = if tracks.len() >= 2 {
        let by_gain = |i: &usize| taps[*i].mean_gain_db;
        let idx: Vec<usize> = (0..taps.len()).collect();
        let s = *idx.iter().max_by(|a, b| by_gain(a).total_cmp(&by_gain(b))).unwrap();
        let w = *idx.iter().min_by(|a, b| by_gain(a).total_cmp(&by_gain(b))).unwrap();
        let weak: HashMap<usize, f64> = tracks[w].points.iter().map(|p| (p.0, p.1)).collect();
        let diffs: Vec<f64> = tracks[s]
            .points
            .iter()
            .filter_map(|p| weak.get(&p.0).map(|wg| p.1 - wg))
            .collect();
        let (mean_db, std_db) = mean_std(&diffs);
        (!diffs.is_empty()).then_some(DiffStats {
            mean_db,
            std_db,
            count: diffs.len(),
        })
    } else {
        None
    };

    SoundingStats {
        taps,
        strongest_minus_weakest,
    }
}

/// Parameters echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub family: Family,
    pub code_length: usize,
    pub samples_per_chip: usize,
    pub budget: LinkBudget,
    pub detection: DetectionConfig,
    pub refined: bool,
}

/// Full sounding output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoundingReport {
    pub sample_rate: f64,
    pub frame_spacing_samples: usize,
    pub frames: Vec<FrameTaps>,
    pub stats: SoundingStats,
    pub config: ReportConfig,
}

impl SoundingReport {
    /// CSV with columns `frame,tap_index,toa_s,gain_db`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,tap_index,toa_s,gain_db\n");
        for f in &self.frames {
            for (i, t) in f.taps.iter().enumerate() {
                out.push_str(&format!("{},{},{:e},{}\n", f.frame, i, t.toa_s, t.gain_db));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Link path loss: minus the total power of all tracked taps, dB.
    pub fn path_loss_db(&self) -> Option<f64> {
        if self.stats.taps.is_empty() {
            return None;
        }
        let p: f64 = self.stats.taps.iter().map(|t| 10f64.powf(t.mean_gain_db / 10.0)).sum();
        Some(-10.0 * p.log10())
    }
}

/// Heatmap-ready CSV `tx,rx,path_loss_db` for a set of sounded links.
pub fn campaign_csv<'a>(links: impl IntoIterator<Item = (u32, u32, &'a SoundingReport)>) -> String {
    let mut out = String::from("tx,rx,path_loss_db\n");
    for (tx, rx, report) in links {
        match report.path_loss_db() {
            Some(pl) => out.push_str(&format!("{tx},{rx},{pl}\n")),
            None => out.push_str(&format!("{tx},{rx},\n")),
        }
    }
    out
}

/// Transmit/receive loop configuration.
///
/// The transmitter sends `frames + 2` code periods. The first and last periods
/// are guards, so every reported frame sees a periodic (steady-state) signal
/// for any tap delay shorter than one period.
#[derive(Debug, Clone)]
pub struct Sounder {
    pub code: CodeSequence,
    pub samples_per_chip: usize,
    pub detection: DetectionConfig,
    pub budget: LinkBudget,
    pub refine: bool,
}

impl Sounder {
    pub fn new(code: CodeSequence) -> Self {
        Sounder {
            code,
            samples_per_chip: 1,
            detection: DetectionConfig::default(),
            budget: LinkBudget::default(),
            refine: true,
        }
    }

    pub fn period(&self) -> usize {
        self.code.len() * self.samples_per_chip
    }

    /// BPSK waveform carrying `frames` sounding frames plus both guards.
    pub fn transmit(&self, sample_rate: f64, frames: usize) -> Result<IqWaveform> {
        if frames == 0 {
            return Err(Error::invalid("at least one sounding frame is required"));
        }
        modulate_bpsk(&self.code, sample_rate, self.samples_per_chip, frames + 2)
    }

    /// Sounds a capture produced from [`Sounder::transmit`] with `frames`.
    pub fn sound(&self, received: &IqWaveform, frames: usize) -> Result<SoundingReport> {
        let cir = correlate(received, &self.code, self.samples_per_chip)?;
        self.report(cir, frames)
    }

    /// [`Sounder::sound`] on f64 samples. Avoids the f32 rounding of IQ
    /// samples, which otherwise biases taps far below the strongest one by
    /// about `2^-24 |strongest| / |tap|` relative.
    pub fn sound_wide(&self, received: &[Complex64], sample_rate: f64, frames: usize) -> Result<SoundingReport> {
        let cir = correlate_wide(received, sample_rate, &self.code, self.samples_per_chip)?;
        self.report(cir, frames)
    }

    fn report(&self, cir: CirEstimate, frames: usize) -> Result<SoundingReport> {
        let period = self.period();
        let sample_rate = cir.sample_rate;
        if cir.len() < (frames + 1) * period {
            return Err(Error::InputTooShort(format!(
                "{frames} frames need {} correlation lags, capture gives {}",
                (frames + 1) * period,
                cir.len()
            )));
        }
        let steady = cir.window(period, frames * period);
        let mut detected = detect_taps(&steady, &self.detection)?;
        let mut acf = ReferenceAutocorrelation::new(&self.code, self.samples_per_chip);
        for frame in &mut detected {
            if self.refine {
                refine_frame(frame, &mut acf, &self.detection);
            }
            let gains = path_gains(
                &frame.taps,
                self.budget.p_t_db,
                self.budget.g_t_dbi,
                self.budget.g_r_dbi,
            );
            for (t, g) in frame.taps.iter_mut().zip(gains) {
                t.gain_db = g;
            }
        }
        let stats = aggregate(&detected);
        Ok(SoundingReport {
            sample_rate,
            frame_spacing_samples: period,
            frames: detected,
            stats,
            config: ReportConfig {
                family: self.code.family(),
                code_length: self.code.len(),
                samples_per_chip: self.samples_per_chip,
                budget: self.budget,
                detection: self.detection,
                refined: self.refine,
            },
        })
    }
}

// Joint re-estimation of a frame's taps against the periodic reference
// autocorrelation. Leaves the frame untouched if the system is singular.
// Peaks that were only sidelobes collapse towards zero and are dropped by
// re-applying the detection threshold to the refined amplitudes.
fn refine_frame(frame: &mut FrameTaps, acf: &mut ReferenceAutocorrelation, config: &DetectionConfig) {
    let n = frame.taps.len();
    if n == 0 {
        return;
    }
    let lags: Vec<i64> = frame.taps.iter().map(|t| t.peak_lag as i64).collect();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| acf.at(lags[i] - lags[j])).collect())
        .collect();
    let b: Vec<Complex64> = frame.taps.iter().map(|t| t.amplitude()).collect();
    if let Some(g) = solve(a, b) {
        for (t, z) in frame.taps.iter_mut().zip(g) {
            t.re = z.re;
            t.im = z.im;
            t.gain_db = amplitude_db(z.norm());
        }
        let peak = frame.taps.iter().map(|t| t.amplitude().norm()).fold(0.0, f64::max);
        let floor = (peak * 10f64.powf(-config.threshold_db / 20.0)).max(config.min_magnitude);
        frame.taps.retain(|t| {
            let m = t.amplitude().norm();
            m > 0.0 && m >= floor
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{convolve_link, EmulatorConfig, TapSet};
    use crate::sequences::{autocorrelation, generate_glfsr, CorrelationMode};
    use num_complex::Complex32;

    // h(k) = sum_n s(n) r(n+k) / E, evaluated literally.
    fn direct(received: &IqWaveform, code: &CodeSequence, spc: usize) -> Vec<Complex64> {
        let s = reference_samples(code, spc);
        let e: f64 = s.iter().map(|x| x * x).sum();
        let r = received.samples();
        (0..=r.len() - s.len())
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..s.len() {
                    acc += Complex64::new(r[n + k].re as f64, r[n + k].im as f64) * s[n];
                }
                acc / e
            })
            .collect()
    }

    #[test]
    fn fft_correlation_matches_direct_sum() {
        let code = generate_glfsr(6, 0, 1).unwrap();
        let tx = modulate_bpsk(&code, 1e8, 2, 3).unwrap();
        let taps = TapSet::new([(0, Complex32::new(0.6, 0.3)), (70, Complex32::new(-0.2, 0.1))]).unwrap();
        let rx = convolve_link(&tx, &taps, &EmulatorConfig::ideal(1e8)).unwrap();
        let cir = correlate(&rx, &code, 2).unwrap();
        let d = direct(&rx, &code, 2);
        assert_eq!(cir.len(), d.len());
        for (k, z) in d.iter().enumerate() {
            assert!((cir.value(k) - z).norm() < 1e-12, "lag {k}");
            assert!((cir.magnitude[k] - z.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn loopback_peak_is_one() {
        let code = generate_glfsr(8, 0, 1).unwrap();
        let tx = modulate_bpsk(&code, 1e6, 1, 1).unwrap();
        let cir = correlate(&tx, &code, 1).unwrap();
        assert_eq!(cir.len(), 1);
        assert!((cir.magnitude[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delayed_and_scaled() {
        let code = generate_glfsr(8, 0, 1).unwrap();
        let tx = modulate_bpsk(&code, 1e6, 1, 1).unwrap();
        let mut s = vec![Complex32::new(0.0, 0.0); 37];
        s.extend(tx.samples().iter().map(|z| z * 0.5));
        s.extend(vec![Complex32::new(0.0, 0.0); 10]);
        let rx = IqWaveform::new(s, 1e6, "").unwrap();
        let cir = correlate(&rx, &code, 1).unwrap();
        let (k, m) = cir
            .magnitude
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(k, 37);
        assert!((m - 0.5).abs() < 1e-12);
    }

    #[test]
    fn four_tap_raw_heights_match_convolution_oracle() {
        // steady-state frame: h(d_k) = sum_j g_j R(d_k - d_j) / N
        let code = generate_glfsr(8, 0, 1).unwrap();
        let n = code.len() as i64;
        let r = autocorrelation(&code, CorrelationMode::Periodic);
        let db = [(0u16, -3.0), (128, -20.0), (200, -15.0), (400, -8.0)];
        let taps = TapSet::from_db(&db).unwrap();
        let cfg = EmulatorConfig::ideal(5e7).with_base_loss(57.55);
        let tx = modulate_bpsk(&code, 5e7, 1, 3).unwrap();
        let rx = convolve_link(&tx, &taps, &cfg).unwrap();
        let cir = correlate(&rx, &code, 1).unwrap();
        let delays: Vec<i64> = db.iter().map(|&(i, _)| i as i64 / 2).collect();
        let gains: Vec<f64> = taps
            .iter()
            .map(|(_, g)| g.re as f64 * cfg.base_loss_amplitude())
            .collect();
        for lag in 255..510i64 {
            let expected: f64 = delays
                .iter()
                .zip(&gains)
                .map(|(&d, &g)| g * r[(lag - d).rem_euclid(n) as usize] as f64 / n as f64)
                .sum();
            let got = cir.h_i[lag as usize];
            assert!(
                (got - expected).abs() < 1e-7 * gains[0],
                "lag {lag}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn short_capture_rejected() {
        let code = generate_glfsr(5, 0, 1).unwrap();
        let rx = IqWaveform::zeros(10, 1e6).unwrap();
        assert!(matches!(correlate(&rx, &code, 1), Err(Error::InputTooShort(_))));
    }

    fn synthetic(mags: &[(usize, f64)], len: usize) -> CirEstimate {
        let mut h = vec![Complex64::new(0.0, 0.0); len];
        for &(k, m) in mags {
            h[k] = Complex64::new(m, 0.0);
        }
        CirEstimate::from_complex(0, h, 1e6, len)
    }

    #[test]
    fn threshold_semantics() {
        let weak = 10f64.powf(-40.1 / 20.0);
        let cir = synthetic(&[(3, 1.0), (50, weak)], 100);
        let mut cfg = DetectionConfig::default();
        assert_eq!(detect_taps(&cir, &cfg).unwrap()[0].taps.len(), 1);
        cfg.threshold_db = 45.0;
        let taps = &detect_taps(&cir, &cfg).unwrap()[0].taps;
        assert_eq!(taps.len(), 2);
        assert!((taps[1].toa_s - 47e-6).abs() < 1e-15);
        assert!((taps[1].gain_db + 40.1).abs() < 1e-9);
    }

    #[test]
    fn min_separation_suppresses_neighbours() {
        let cir = synthetic(&[(10, 1.0), (11, 0.9), (20, 0.5)], 64);
        let cfg = DetectionConfig::default();
        let lags: Vec<usize> = detect_taps(&cir, &cfg).unwrap()[0]
            .taps
            .iter()
            .map(|t| t.peak_lag)
            .collect();
        assert_eq!(lags, vec![10, 20]);
        let cfg = DetectionConfig {
            min_separation: 1,
            ..cfg
        };
        let lags: Vec<usize> = detect_taps(&cir, &cfg).unwrap()[0]
            .taps
            .iter()
            .map(|t| t.peak_lag)
            .collect();
        assert_eq!(lags, vec![10, 11, 20]);
    }

    #[test]
    fn empty_frame_when_below_floor() {
        let cir = synthetic(&[(5, 1e-9)], 32);
        let cfg = DetectionConfig {
            min_magnitude: 1e-6,
            ..Default::default()
        };
        let frames = detect_taps(&cir, &cfg).unwrap();
        assert_eq!(frames.len(), 1);
        assert!(frames[0].taps.is_empty());
    }

    #[test]
    fn frames_split_by_period() {
        let mut cir = synthetic(&[(2, 1.0), (12, 0.5), (22, 1.0)], 25);
        cir.period = 10;
        let frames = detect_taps(&cir, &DetectionConfig::default()).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames[1].taps[0].peak_lag, 12);
        assert_eq!(frames[1].taps[0].toa_s, 0.0);
    }

    #[test]
    fn path_gain_formula() {
        let tap = |m: f64| DetectedTap {
            toa_s: 0.0,
            gain_db: 0.0,
            peak_lag: 0,
            re: m,
            im: 0.0,
        };
        assert_eq!(path_gains(&[tap(1.0)], 0.0, 0.0, 0.0), vec![0.0]);
        let g = path_gains(&[tap(10f64.powf(-57.55 / 20.0))], 0.0, 0.0, 0.0)[0];
        assert!((g + 57.55).abs() < 1e-12);
        let g = path_gains(&[tap(1.0)], 10.0, 3.0, 2.0)[0];
        assert_eq!(g, -15.0);
        assert_eq!(path_gains(&[tap(0.0)], 0.0, 0.0, 0.0)[0], f64::NEG_INFINITY);
    }

    #[test]
    fn solver_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let b = vec![Complex64::new(3.0, 1.0), Complex64::new(5.0, -2.0)];
        let x = solve(a, b).unwrap();
        assert!((x[0] - Complex64::new(0.8, 1.0)).norm() < 1e-12);
        assert!((x[1] - Complex64::new(1.4, -1.0)).norm() < 1e-12);
        assert!(solve(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![Complex64::new(1.0, 0.0); 2]).is_none());
    }

    #[test]
    fn aggregate_tracks_and_jitter() {
        let tap = |toa: f64, g: f64| DetectedTap {
            toa_s: toa,
            gain_db: g,
            peak_lag: 0,
            re: 0.0,
            im: 0.0,
        };
        let frames = vec![
            FrameTaps {
                frame: 0,
                taps: vec![tap(0.0, -3.0), tap(1.28e-6, -20.0)],
            },
            FrameTaps {
                frame: 1,
                taps: vec![tap(0.0, -3.0), tap(1.29e-6, -21.0)],
            },
            FrameTaps {
                frame: 2,
                taps: vec![tap(0.0, -3.0), tap(1.27e-6, -19.0)],
            },
        ];
        let stats = aggregate(&frames);
        assert_eq!(stats.taps.len(), 2);
        assert_eq!(stats.taps[1].count, 3);
        assert!((stats.taps[1].mean_gain_db + 20.0).abs() < 1e-12);
        assert!(stats.taps[0].std_gain_db == 0.0);
        assert!(stats.taps[1].std_gain_db > 0.0);
        let d = stats.strongest_minus_weakest.unwrap();
        assert!((d.mean_db - 17.0).abs() < 1e-12);
        assert_eq!(d.count, 3);
    }

    #[test]
    fn sounder_recovers_taps_exactly() {
        let code = generate_glfsr(8, 0, 1).unwrap();
        let sounder = Sounder::new(code);
        let taps = TapSet::from_db(&[(0, -3.0), (128, -20.0), (200, -15.0), (400, -8.0)]).unwrap();
        let cfg = EmulatorConfig::new(5e7).with_noise_floor(None);
        let tx = sounder.transmit(5e7, 4).unwrap();
        let rx = convolve_link(&tx, &taps, &cfg).unwrap();
        let report = sounder.sound(&rx, 4).unwrap();
        assert_eq!(report.frames.len(), 4);
        let modeled = taps.gains_db();
        for f in &report.frames {
            assert_eq!(f.taps.len(), 4);
            let offsets: Vec<i64> = f.taps.iter().map(|t| t.grid_offset()).collect();
            assert_eq!(offsets, vec![0, 128, 200, 400]);
            for (t, m) in f.taps.iter().zip(&modeled) {
                assert!((t.gain_db + 57.55 - m).abs() < 1e-6, "{} vs {m}", t.gain_db + 57.55);
            }
        }
    }

    #[test]
    fn report_json_round_trip() {
        let code = generate_glfsr(5, 0, 1).unwrap();
        let sounder = Sounder::new(code);
        let tx = sounder.transmit(1e6, 2).unwrap();
        let report = sounder.sound(&tx, 2).unwrap();
        let back = SoundingReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
        assert!(report.to_csv().starts_with("frame,tap_index,toa_s,gain_db\n0,0,"));
        let csv = campaign_csv([(1, 2, &report)]);
        let row = csv.strip_prefix("tx,rx,path_loss_db\n1,2,").unwrap();
        assert!(row.trim().parse::<f64>().unwrap().abs() < 1e-9);
    }
}
