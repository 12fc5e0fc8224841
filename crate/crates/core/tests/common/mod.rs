//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use castwin::approx::{MultipathComponent, MultipathProfile};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const GRID: f64 = 10e-9;

pub fn cell(d: f64) -> i64 {
    ((d / GRID).round() as i64).clamp(0, 511)
}

// All ways to cut 0..n into `k` non-empty contiguous runs, as run boundaries.
pub fn cuts(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            let mut b = acc.clone();
            b.push(n);
            out.push(b);
            return;
        }
        for end in start + 1..=n - (k - 1) {
            acc.push(end);
            rec(end, n, k - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

// Coherent power of the minimum weighted-SSE grouping, snapped and merged on
// the grid the same way the emulator requires.
pub fn oracle_power(profile: &MultipathProfile, max_taps: usize) -> f64 {
    let c = profile.components();
    let t0 = c[0].toa_s;
    let d: Vec<f64> = c.iter().map(|m| m.toa_s - t0).collect();
    let w: Vec<f64> = c.iter().map(|m| m.amplitude * m.amplitude).collect();
    let mut cells: Vec<i64> = d.iter().map(|&x| cell(x)).collect();
    cells.dedup();
    let k = max_taps.min(cells.len());

    let mut best: Option<(f64, Vec<usize>)> = None;
    for bounds in cuts(c.len(), k) {
        let mut sse = 0.0;
        let mut lo = 0;
        for &hi in &bounds {
            let ws: f64 = w[lo..hi].iter().sum();
            let mu = if ws > 0.0 {
                (lo..hi).map(|i| w[i] * d[i]).sum::<f64>() / ws
            } else {
                d[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            };
            sse += (lo..hi).map(|i| w[i] * (d[i] - mu).powi(2)).sum::<f64>();
            lo = hi;
        }
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((sse, bounds));
        }
    }
    let bounds = best.unwrap().1;

    let mut groups: Vec<(f64, Complex64)> = Vec::new();
    let mut lo = 0;
    for &hi in &bounds {
        let ws: f64 = w[lo..hi].iter().sum();
        let mu = if ws > 0.0 {
            (lo..hi).map(|i| w[i] * d[i]).sum::<f64>() / ws
        } else {
            d[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        };
        let g: Complex64 = c[lo..hi]
            .iter()
            .map(|m| Complex64::from_polar(m.amplitude, m.phase_rad))
            .sum();
        groups.push((mu, g));
        lo = hi;
    }
    let origin = groups[0].0;
    let mut merged: std::collections::BTreeMap<i64, Complex64> = Default::default();
    for (mu, g) in groups {
        *merged.entry(cell(mu - origin)).or_default() += g;
    }
    merged.values().map(|g| g.norm_sqr()).sum()
}

pub fn random_profile(rng: &mut ChaCha8Rng, max_len: usize) -> MultipathProfile {
    let n = rng.random_range(1..=max_len);
    let base = rng.random_range(0.0..5e-6);
    let spread = if rng.random_bool(0.5) { 3e-6 } else { 1e-7 };
    MultipathProfile::new(
        (0..n)
            .map(|_| {
                MultipathComponent::new(
                    base + rng.random_range(0.0..spread),
                    rng.random_range(0.01..1.0),
                    rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                )
            })
            .collect(),
    )
    .unwrap()
}

/// Best pair and score by literal evaluation of the planning loop: RSSI as a
/// dB sum, SINR against noise plus the other RU in linear power, dB values
/// averaged over UEs, strict improvement only.
pub fn naive_plan(
    path_loss: &[Vec<f64>],
    ru: &[(f64, f64, f64)],
    ue: &[(f64, f64)],
    noise_dbm: f64,
) -> ((usize, usize), f64) {
    let lin = |db: f64| 10f64.powf(db / 10.0);
    let rssi = |i: usize, j: usize| ru[i].0 + ru[i].1 - ru[i].2 - path_loss[i][j] + ue[j].0;
    let gamma = |serving: usize, other: usize, j: usize| {
        10.0 * (lin(rssi(serving, j)) / (lin(noise_dbm + ue[j].1) + lin(rssi(other, j)))).log10()
    };
    let mut best = (usize::MAX, usize::MAX);
    let mut best_score = f64::NEG_INFINITY;
    for p in 0..ru.len() {
        for q in p + 1..ru.len() {
            let mut total = 0.0;
            for j in 0..ue.len() {
                let a = gamma(p, q, j);
                let b = gamma(q, p, j);
                total += if a >= b { a } else { b };
            }
            let avg = total / ue.len() as f64;
            if avg > best_score {
                best_score = avg;
                best = (p, q);
            }
        }
    }
    (best, best_score)
}
