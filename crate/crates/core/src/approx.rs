//! Reduction of multipath profiles to emulator taps.
//!
//! Components are clustered on the delay axis with power-weighted 1-D
//! k-means (`k = min(max_taps, occupied grid cells)`, solved exactly), each
//! cluster becomes one tap whose gain is the coherent sum of its
//! members, and cluster delays are snapped to the 10 ns grid relative to the
//! earliest cluster.

use std::path::Path;

use num_complex::{Complex32, Complex64};
use serde::{Deserialize, Serialize};

use crate::channel::{TapSet, MAX_TAPS, TAP_GRID_LEN, TAP_SPACING_S};
use crate::{Error, Result};

/// Longest representable excess delay, seconds.
pub const MAX_EXCESS_DELAY_S: f64 = TAP_GRID_LEN as f64 * TAP_SPACING_S;
/// Distance over which large-scale fading stays spatially consistent, meters.
pub const COHERENCE_DISTANCE_M: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathComponent {
    pub toa_s: f64,
    /// Linear amplitude `a_i`.
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl MultipathComponent {
    pub fn new(toa_s: f64, amplitude: f64, phase_rad: f64) -> Self {
        MultipathComponent {
            toa_s,
            amplitude,
            phase_rad,
        }
    }

    /// `a e^{j phi}`.
    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase_rad)
    }

    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}

/// Multipath components sorted by time of arrival.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultipathProfile {
    components: Vec<MultipathComponent>,
}

impl<'de> Deserialize<'de> for MultipathProfile {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            components: Vec<MultipathComponent>,
        }
        let raw = Raw::deserialize(d)?;
        MultipathProfile::new(raw.components).map_err(serde::de::Error::custom)
    }
}

impl MultipathProfile {
    pub fn new(mut components: Vec<MultipathComponent>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if !(c.toa_s.is_finite() && c.amplitude.is_finite() && c.phase_rad.is_finite()) {
                return Err(Error::invalid(format!("component {i} has non-finite fields")));
            }
            if c.toa_s < 0.0 || c.amplitude < 0.0 {
                return Err(Error::invalid(format!(
                    "component {i}: toa and amplitude must be non-negative"
                )));
            }
        }
        components.sort_by(|a, b| a.toa_s.total_cmp(&b.toa_s));
        Ok(MultipathProfile { components })
    }

    pub fn components(&self) -> &[MultipathComponent] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Incoherent total power `sum |c_i|^2`.
    pub fn total_power(&self) -> f64 {
        self.components.iter().map(|c| c.power()).sum()
    }

    /// Same profile with every ToA shifted by `delta_s`.
    pub fn shifted(&self, delta_s: f64) -> Result<Self> {
        MultipathProfile::new(
            self.components
                .iter()
                .map(|c| MultipathComponent {
                    toa_s: c.toa_s + delta_s,
                    ..*c
                })
                .collect(),
        )
    }

    /// Parses CSV with header `toa_s,<amplitude column>,phase_rad`, where the
    /// amplitude column is `amplitude_linear` or `amplitude_db`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        let col = |name: &str| header.iter().position(|h| h == name);
        let (toa, phase) = match (col("toa_s"), col("phase_rad")) {
            (Some(t), Some(p)) => (t, p),
            _ => {
                return Err(Error::Malformed {
                    row: 1,
                    message: "header must contain toa_s and phase_rad".into(),
                })
            }
        };
        let (amp, in_db) = match (col("amplitude_linear"), col("amplitude_db")) {
            (Some(a), None) => (a, false),
            (None, Some(a)) => (a, true),
            _ => {
                return Err(Error::Malformed {
                    row: 1,
                    message: "header must contain exactly one of amplitude_linear, amplitude_db".into(),
                })
            }
        };
        let mut components = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| Error::Malformed {
                row,
                message: e.to_string(),
            })?;
            let field = |idx: usize, name: &str| -> Result<f64> {
                record
                    .get(idx)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite() || (in_db && name == "amplitude" && *v == f64::NEG_INFINITY))
                    .ok_or_else(|| Error::Malformed {
                        row,
                        message: format!("bad {name} value {:?}", record.get(idx).unwrap_or("")),
                    })
            };
            let t = field(toa, "toa")?;
            let a = field(amp, "amplitude")?;
            let p = field(phase, "phase")?;
            let a = if in_db { 10f64.powf(a / 20.0) } else { a };
            if t < 0.0 || a < 0.0 {
                return Err(Error::Malformed {
                    row,
                    message: "toa and amplitude must be non-negative".into(),
                });
            }
            components.push(MultipathComponent::new(t, a, p));
        }
        MultipathProfile::new(components)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Loads `.json` files as JSON and anything else as CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            MultipathProfile::from_json(&text)
        } else {
            MultipathProfile::from_csv(&text)
        }
    }
}

/// One output cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub index: u16,
    /// Power-weighted mean delay relative to the earliest component, seconds.
    pub centroid_s: f64,
    pub re: f64,
    pub im: f64,
    pub members: usize,
}

impl Cluster {
    pub fn gain(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Approximation {
    pub taps: TapSet,
    pub clusters: Vec<Cluster>,
    /// ToA of the earliest component, removed by normalization.
    pub min_toa_s: f64,
    /// Components beyond the delay window that were folded into the last cluster.
    pub folded: usize,
}

impl Approximation {
    /// `sum |cluster gain|^2`, computed before the f32 tap conversion.
    pub fn total_power(&self) -> f64 {
        self.clusters.iter().map(|c| c.gain().norm_sqr()).sum()
    }
}

fn grid_cell(delay_s: f64) -> usize {
    ((delay_s / TAP_SPACING_S).round().max(0.0) as usize).min(TAP_GRID_LEN - 1)
}

/// Clusters `profile` into at most `max_taps` emulator taps.
pub fn approximate(profile: &MultipathProfile, max_taps: usize) -> Result<Approximation> {
    if profile.is_empty() {
        return Err(Error::invalid("empty multipath profile"));
    }
    if max_taps == 0 || max_taps > MAX_TAPS {
        return Err(Error::invalid(format!("max_taps must be in 1..={MAX_TAPS}")));
    }
    let min_toa = profile.components[0].toa_s;
    let rel: Vec<(f64, &MultipathComponent)> = profile.components.iter().map(|c| (c.toa_s - min_toa, c)).collect();
    let (inside, outside): (Vec<_>, Vec<_>) = rel.into_iter().partition(|(d, _)| *d <= MAX_EXCESS_DELAY_S);

    let delays: Vec<f64> = inside.iter().map(|(d, _)| *d).collect();
    let weights: Vec<f64> = inside.iter().map(|(_, c)| c.power()).collect();
    let mut cells: Vec<usize> = delays.iter().map(|&d| grid_cell(d)).collect();
    cells.dedup();
    let k = max_taps.min(cells.len());

    let assignment = weighted_kmeans(&delays, &weights, k);
    let (centroids, mut sums, mut members) =
        cluster_moments(&delays, &weights, &assignment, k, inside.iter().map(|(_, c)| c.gain()));
    let last = (0..k)
        .rev()
        .find(|&j| members[j] > 0)
        .expect("earliest component is always in-window");
    for (_, c) in &outside {
        sums[last] += c.gain();
        members[last] += 1;
    }

    let origin = centroids[0];
    let mut clusters: Vec<Cluster> = Vec::with_capacity(k);
    for j in 0..k {
        if members[j] == 0 {
            continue;
        }
        let index = grid_cell(centroids[j] - origin) as u16;
        match clusters.last_mut() {
            Some(last) if last.index == index => {
                last.re += sums[j].re;
                last.im += sums[j].im;
                last.members += members[j];
            }
            _ => clusters.push(Cluster {
                index,
                centroid_s: centroids[j],
                re: sums[j].re,
                im: sums[j].im,
                members: members[j],
            }),
        }
    }
    let taps = TapSet::new(
        clusters
            .iter()
            .map(|c| (c.index, Complex32::new(c.re as f32, c.im as f32))),
    )?;
    Ok(Approximation {
        taps,
        clusters,
        min_toa_s: min_toa,
        folded: outside.len(),
    })
}

// Centroid delay, coherent gain sum and member count per cluster. Clusters
// with zero total weight use the unweighted mean delay.
fn cluster_moments(
    delays: &[f64],
    weights: &[f64],
    assignment: &[usize],
    k: usize,
    gains: impl Iterator<Item = Complex64>,
) -> (Vec<f64>, Vec<Complex64>, Vec<usize>) {
    let mut wsum = vec![0.0; k];
    let mut wd = vec![0.0; k];
    let mut dsum = vec![0.0; k];
    let mut sums = vec![Complex64::new(0.0, 0.0); k];
    let mut members = vec![0usize; k];
    for (i, g) in gains.enumerate() {
        let j = assignment[i];
        wsum[j] += weights[i];
        wd[j] += weights[i] * delays[i];
        dsum[j] += delays[i];
        sums[j] += g;
        members[j] += 1;
    }
    let centroids = (0..k)
        .map(|j| {
            if wsum[j] > 0.0 {
                wd[j] / wsum[j]
            } else if members[j] > 0 {
                dsum[j] / members[j] as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    (centroids, sums, members)
}

/// Globally optimal power-weighted 1-D k-means. On a sorted axis optimal
/// clusters are contiguous runs, so the minimum within-cluster weighted sum of
/// squares is found by dynamic programming over split points (ties keep the
/// earliest split). Returns the cluster index of each delay, clusters ordered
/// by delay.
fn weighted_kmeans(delays: &[f64], weights: &[f64], k: usize) -> Vec<usize> {
    let n = delays.len();
    // prefix sums in grid units to keep the squares well scaled
    let x: Vec<f64> = delays.iter().map(|d| d / TAP_SPACING_S).collect();
    let mut pw = vec![0.0; n + 1];
    let mut px = vec![0.0; n + 1];
    let mut pxx = vec![0.0; n + 1];
    for i in 0..n {
        pw[i + 1] = pw[i] + weights[i];
        px[i + 1] = px[i] + weights[i] * x[i];
        pxx[i + 1] = pxx[i] + weights[i] * x[i] * x[i];
    }
    let cost = |i: usize, j: usize| -> f64 {
        let w = pw[j] - pw[i];
        if w <= 0.0 {
            return 0.0;
        }
        let s = px[j] - px[i];
        (pxx[j] - pxx[i] - s * s / w).max(0.0)
    };

    // best[c][j]: optimal cost of the first j points in c + 1 clusters
    let mut best = vec![vec![f64::INFINITY; n + 1]; k];
    let mut split = vec![vec![0usize; n + 1]; k];
    for (j, b) in best[0].iter_mut().enumerate().skip(1) {
        *b = cost(0, j);
    }
    for c in 1..k {
        for j in c + 1..=n {
            for i in c..j {
                let v = best[c - 1][i] + cost(i, j);
                if v < best[c][j] {
                    best[c][j] = v;
                    split[c][j] = i;
                }
            }
        }
    }
    let mut assignment = vec![0usize; n];
    let mut end = n;
    for c in (0..k).rev() {
        let start = if c == 0 { 0 } else { split[c][end] };
        for a in &mut assignment[start..end] {
            *a = c;
        }
        end = start;
    }
    assignment
}

/// Spatial sampling of a constant-speed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub spacing_m: f64,
    pub offsets_m: Vec<f64>,
    pub warning: Option<String>,
}

/// Offsets `0, D, 2D, ...` with `D = speed * sampling_interval`, one per
/// sampling instant in `[0, total_time]`. Warns when `D` exceeds the
/// coherence distance.
pub fn sample_trajectory(speed_mps: f64, sampling_interval_s: f64, total_time_s: f64) -> Result<Trajectory> {
    if !(speed_mps >= 0.0 && speed_mps.is_finite()) {
        return Err(Error::invalid("speed must be finite and >= 0"));
    }
    if !(sampling_interval_s > 0.0 && sampling_interval_s.is_finite()) {
        return Err(Error::invalid("sampling interval must be > 0"));
    }
    if !(total_time_s >= 0.0 && total_time_s.is_finite()) {
        return Err(Error::invalid("total time must be finite and >= 0"));
    }
    let spacing = speed_mps * sampling_interval_s;
    let steps = (total_time_s / sampling_interval_s * (1.0 + 1e-12)).floor() as usize;
    let warning = (spacing > COHERENCE_DISTANCE_M)
        .then(|| format!("spatial spacing {spacing} m exceeds the {COHERENCE_DISTANCE_M} m coherence distance"));
    Ok(Trajectory {
        spacing_m: spacing,
        offsets_m: (0..=steps).map(|i| i as f64 * spacing).collect(),
        warning,
    })
}
