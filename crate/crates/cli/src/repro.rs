//! Bundled reproduction recipes. Each one writes plot-ready CSV under
//! `<out>/<recipe>/` and prints a one-line summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{ensure, Context};
use castwin::approx::{approximate, MultipathComponent, MultipathProfile};
use castwin::channel::{emulate_wide, ChannelFrame, EmulatorConfig, NodeId, TapSet, DEFAULT_BASE_LOSS_DB};
use castwin::planner::{plan_exhaustive, LinkGainMatrix};
use castwin::scenario::{rho, similarity};
use castwin::sequences::{
    autocorrelation, default_gold_pair, generate_glfsr, generate_golay, generate_gold, generate_ls, CodeSequence,
    CorrelationMode, GolayKind,
};
use castwin::sounder::{correlate, Sounder, SoundingReport};
use castwin::waveform::modulate_bpsk;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{Recipe, ReproArgs};
use crate::commands::{autocorrelation_csv, write_output};

const FOUR_TAPS: [(u16, f64); 4] = [(0, -3.0), (128, -20.0), (200, -15.0), (400, -8.0)];
const FOUR_TAP_RATE: f64 = 50e6;
const NOISE_FLOOR_DB: f64 = -100.0;

const ALL: [Recipe; 9] = [
    Recipe::PeakSpacing,
    Recipe::Autocorrelation,
    Recipe::Complementarity,
    Recipe::FourTap,
    Recipe::NoiseAsymmetry,
    Recipe::Superposition,
    Recipe::Approximation,
    Recipe::PlannerSweep,
    Recipe::Similarity,
];

fn name(r: Recipe) -> &'static str {
    match r {
        Recipe::All => "all",
        Recipe::PeakSpacing => "peak-spacing",
        Recipe::Autocorrelation => "autocorrelation",
        Recipe::Complementarity => "complementarity",
        Recipe::FourTap => "four-tap",
        Recipe::NoiseAsymmetry => "noise-asymmetry",
        Recipe::Superposition => "superposition",
        Recipe::Approximation => "approximation",
        Recipe::PlannerSweep => "planner-sweep",
        Recipe::Similarity => "similarity",
    }
}

pub fn run(a: &ReproArgs) -> anyhow::Result<()> {
    let recipes: Vec<Recipe> = if a.recipe == Recipe::All {
        ALL.to_vec()
    } else {
        vec![a.recipe]
    };
    for r in recipes {
        let dir = a.out.out.join(name(r));
        let summary = match r {
            Recipe::PeakSpacing => peak_spacing(&dir),
            Recipe::Autocorrelation => correlation_profiles(&dir),
            Recipe::Complementarity => complementarity(&dir),
            Recipe::FourTap => four_tap(&dir, a.frames, a.seed),
            Recipe::NoiseAsymmetry => noise_asymmetry(&dir, a.frames, a.seed),
            Recipe::Superposition => superposition(&dir, a.seed),
            Recipe::Approximation => approximation(&dir, a.seed),
            Recipe::PlannerSweep => planner_sweep(&dir, a.seed),
            Recipe::Similarity => similarity_recovery(&dir, a.seed),
            Recipe::All => unreachable!(),
        }
        .with_context(|| format!("recipe {}", name(r)))?;
        println!("{}: {summary}", name(r));
    }
    Ok(())
}

// Lags whose correlation magnitude reaches half the maximum.
fn peak_lags(magnitude: &[f64]) -> Vec<usize> {
    let max = magnitude.iter().copied().fold(0.0, f64::max);
    (0..magnitude.len()).filter(|&k| magnitude[k] > 0.5 * max).collect()
}

fn peak_spacing(dir: &Path) -> anyhow::Result<String> {
    let rate = 1e6;
    let codes = [
        ("glfsr255", generate_glfsr(8, 0, 1)?),
        ("golay128", generate_golay(128, GolayKind::A)?),
    ];
    let mut peaks = String::from("code,peak,lag,time_s,spacing\n");
    let mut parts = Vec::new();
    for (label, code) in &codes {
        let rx = modulate_bpsk(code, rate, 1, 3)?;
        let cir = correlate(&rx, code, 1)?;
        write_output(dir, &format!("{label}_correlation.csv"), cir.to_csv())?;
        let lags = peak_lags(&cir.magnitude);
        for (i, &k) in lags.iter().enumerate() {
            let spacing = if i == 0 {
                String::new()
            } else {
                (k - lags[i - 1]).to_string()
            };
            let _ = writeln!(peaks, "{label},{i},{k},{:e},{spacing}", k as f64 / rate);
        }
        let spacings: Vec<usize> = lags.windows(2).map(|w| w[1] - w[0]).collect();
        ensure!(
            spacings.iter().all(|&s| s == code.len()),
            "{label}: peak spacings {spacings:?}, expected {}",
            code.len()
        );
        parts.push(format!("{label} peaks every {} samples", code.len()));
    }
    write_output(dir, "peaks.csv", peaks)?;
    Ok(parts.join(", "))
}

fn correlation_profiles(dir: &Path) -> anyhow::Result<String> {
    let (p1, p2) = default_gold_pair(6).context("no degree-6 gold pair")?;
    let codes: Vec<(&str, CodeSequence)> = vec![
        ("glfsr255", generate_glfsr(8, 0, 1)?),
        ("gold63", generate_gold(p1, p2, 0)?),
        ("golay_a128", generate_golay(128, GolayKind::A)?),
        ("golay_b128", generate_golay(128, GolayKind::B)?),
        ("ls256", generate_ls(128)?),
    ];
    for (label, code) in &codes {
        write_output(dir, &format!("{label}.csv"), autocorrelation_csv(code))?;
    }
    let periodic = autocorrelation(&codes[0].1, CorrelationMode::Periodic);
    let off_peak: std::collections::BTreeSet<i64> = periodic[1..].iter().copied().collect();
    ensure!(
        periodic[0] == 255 && off_peak.len() == 1 && off_peak.contains(&-1),
        "glfsr255 periodic autocorrelation is not two-valued {{255, -1}}"
    );
    Ok(format!(
        "{} profiles; glfsr255 periodic values {{255, -1}}",
        codes.len()
    ))
}

fn complementarity(dir: &Path) -> anyhow::Result<String> {
    let a = autocorrelation(&generate_golay(128, GolayKind::A)?, CorrelationMode::Aperiodic);
    let b = autocorrelation(&generate_golay(128, GolayKind::B)?, CorrelationMode::Aperiodic);
    let mut out = String::from("lag,a,b,sum\n");
    for k in 0..a.len() {
        let _ = writeln!(out, "{k},{},{},{}", a[k], b[k], a[k] + b[k]);
    }
    write_output(dir, "golay128_sum.csv", out)?;
    ensure!(a[0] + b[0] == 256, "lag-0 sum {}", a[0] + b[0]);
    ensure!((1..a.len()).all(|k| a[k] + b[k] == 0), "nonzero out-of-phase sum");
    Ok("Ga128 + Gb128 aperiodic sum is 256 at lag 0 and 0 elsewhere".into())
}

fn sound_four_tap(frames: usize, noise: Option<f64>, seed: u64) -> anyhow::Result<SoundingReport> {
    let sounder = Sounder::new(generate_glfsr(8, 0, 1)?);
    let config = EmulatorConfig::new(FOUR_TAP_RATE)
        .with_base_loss(DEFAULT_BASE_LOSS_DB)
        .with_noise_floor(noise);
    let frame = ChannelFrame::new(0).with_link(NodeId(1), NodeId(2), TapSet::from_db(&FOUR_TAPS)?);
    let inputs = BTreeMap::from([(NodeId(1), sounder.transmit(FOUR_TAP_RATE, frames)?)]);
    let mut out = emulate_wide(&inputs, &frame, &config, seed)?;
    let rx = out.outputs.remove(&NodeId(2)).context("no receiver output")?;
    Ok(sounder.sound_wide(&rx, FOUR_TAP_RATE, frames)?)
}

// Worst per-frame |gain + base loss - modeled| per modeled tap, or an error if a
// frame's ToAs differ from the modeled grid.
fn four_tap_errors(report: &SoundingReport) -> anyhow::Result<Vec<f64>> {
    let mut worst = vec![0.0f64; FOUR_TAPS.len()];
    for f in &report.frames {
        let offsets: Vec<i64> = f.taps.iter().map(|t| t.grid_offset()).collect();
        let want: Vec<i64> = FOUR_TAPS.iter().map(|&(i, _)| i64::from(i)).collect();
        ensure!(offsets == want, "frame {}: grid offsets {offsets:?}", f.frame);
        for (w, (t, &(_, g))) in worst.iter_mut().zip(f.taps.iter().zip(&FOUR_TAPS)) {
            *w = w.max((t.gain_db + DEFAULT_BASE_LOSS_DB - g).abs());
        }
    }
    Ok(worst)
}

fn four_tap(dir: &Path, frames: usize, seed: u64) -> anyhow::Result<String> {
    let mut summary =
        String::from("noise,grid_index,toa_s,modeled_gain_db,mean_gain_db,std_gain_db,max_abs_error_db\n");
    let mut worst_by_case = Vec::new();
    for (label, noise) in [("off", None), ("on", Some(NOISE_FLOOR_DB))] {
        let report = sound_four_tap(frames, noise, seed)?;
        write_output(dir, &format!("taps_noise_{label}.csv"), report.to_csv())?;
        write_output(dir, &format!("stats_noise_{label}.csv"), report.stats.to_csv())?;
        let errors = four_tap_errors(&report)?;
        for ((&(index, g), t), e) in FOUR_TAPS.iter().zip(&report.stats.taps).zip(&errors) {
            let _ = writeln!(
                summary,
                "{label},{index},{:e},{g},{},{},{e:e}",
                t.mean_toa_s,
                t.mean_gain_db + DEFAULT_BASE_LOSS_DB,
                t.std_gain_db
            );
        }
        worst_by_case.push(errors.iter().copied().fold(0.0, f64::max));
    }
    write_output(dir, "summary.csv", summary)?;
    Ok(format!(
        "{frames} frames, ToAs exact; worst gain error {:.2e} dB without noise, {:.3} dB at {NOISE_FLOOR_DB} dB floor",
        worst_by_case[0], worst_by_case[1]
    ))
}

fn noise_asymmetry(dir: &Path, frames: usize, seed: u64) -> anyhow::Result<String> {
    let mut out = String::from("seed,strongest_std_db,weakest_std_db\n");
    let mut held = 0;
    for s in seed..seed + 5 {
        let report = sound_four_tap(frames, Some(NOISE_FLOOR_DB), s)?;
        let taps = &report.stats.taps;
        ensure!(taps.len() == FOUR_TAPS.len(), "seed {s}: {} tracks", taps.len());
        // strongest modeled tap is index 0 (-3 dB), weakest is index 128 (-20 dB)
        let (strong, weak) = (taps[0].std_gain_db, taps[1].std_gain_db);
        let _ = writeln!(out, "{s},{strong},{weak}");
        held += usize::from(weak > strong);
    }
    write_output(dir, "std_by_seed.csv", out)?;
    Ok(format!("weakest-tap std exceeds strongest-tap std for {held}/5 seeds"))
}

fn superposition(dir: &Path, seed: u64) -> anyhow::Result<String> {
    let rate = 1e8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = modulate_bpsk(&generate_glfsr(7, 0, 1)?, rate, 1, 4)?;
    let b = modulate_bpsk(&generate_glfsr(7, 0, 3)?, rate, 1, 4)?;
    let mut random_taps = || -> anyhow::Result<TapSet> {
        let n = rng.random_range(1..=4);
        let entries: Vec<(u16, f64)> = (0..n)
            .map(|_| (rng.random_range(0..512u16), rng.random_range(-20.0..0.0)))
            .collect();
        Ok(TapSet::from_db(&entries)?)
    };
    let (ta, tb) = (random_taps()?, random_taps()?);
    let (tx_a, tx_b, rx) = (NodeId(1), NodeId(2), NodeId(3));
    let config = EmulatorConfig::new(rate).with_noise_floor(None);
    let both = ChannelFrame::new(0)
        .with_link(tx_a, rx, ta.clone())
        .with_link(tx_b, rx, tb.clone());
    let run = |inputs: BTreeMap<NodeId, _>, frame: &ChannelFrame| -> anyhow::Result<Vec<num_complex::Complex64>> {
        emulate_wide(&inputs, frame, &config, 0)?
            .outputs
            .remove(&rx)
            .context("no output")
    };
    let joint = run(BTreeMap::from([(tx_a, a.clone()), (tx_b, b.clone())]), &both)?;
    let only_a = run(BTreeMap::from([(tx_a, a)]), &both)?;
    let only_b = run(BTreeMap::from([(tx_b, b)]), &both)?;
    let at = |v: &[num_complex::Complex64], i: usize| v.get(i).copied().unwrap_or_default();
    let mut out = String::from("sample,joint_re,joint_im,sum_re,sum_im\n");
    let mut peak = 0.0f64;
    let mut err = 0.0f64;
    for i in 0..joint.len().max(only_a.len()).max(only_b.len()) {
        let j = at(&joint, i);
        let s = at(&only_a, i) + at(&only_b, i);
        let _ = writeln!(out, "{i},{},{},{},{}", j.re, j.im, s.re, s.im);
        peak = peak.max(j.norm());
        err = err.max((j - s).norm());
    }
    write_output(dir, "superposition.csv", out)?;
    Ok(format!("max |joint - sum| = {:.2e} of peak", err / peak))
}

fn random_profile(rng: &mut ChaCha8Rng, max_len: usize) -> anyhow::Result<MultipathProfile> {
    let n = rng.random_range(1..=max_len);
    let t0 = rng.random_range(0.0..1e-5);
    let comps = (0..n)
        .map(|_| {
            MultipathComponent::new(
                t0 + rng.random_range(0.0..3e-6),
                rng.random_range(1e-3..1.0),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            )
        })
        .collect();
    Ok(MultipathProfile::new(comps)?)
}

fn approximation(dir: &Path, seed: u64) -> anyhow::Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("profile,components,taps,max_index,profile_power_db,cluster_power_db,tap_power_db\n");
    let db = |p: f64| 10.0 * p.log10();
    let mut max_taps_seen = 0;
    for i in 0..1000 {
        let profile = random_profile(&mut rng, 12)?;
        let approx = approximate(&profile, 4)?;
        let max_index = approx.taps.max_index().unwrap_or(0);
        ensure!(
            approx.taps.len() <= 4 && max_index < 512,
            "profile {i}: illegal tap set"
        );
        max_taps_seen = max_taps_seen.max(approx.taps.len());
        let _ = writeln!(
            out,
            "{i},{},{},{max_index},{},{},{}",
            profile.len(),
            approx.taps.len(),
            db(profile.total_power()),
            db(approx.total_power()),
            db(approx.taps.total_power())
        );
    }
    write_output(dir, "profiles.csv", out)?;
    Ok(format!(
        "1000 random profiles reduced, at most {max_taps_seen} taps, all indices < 512"
    ))
}

fn planner_sweep(dir: &Path, seed: u64) -> anyhow::Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rus, ues) = (24, 52);
    let pl: Vec<Vec<f64>> = (0..rus)
        .map(|_| (0..ues).map(|_| rng.random_range(60.0..120.0)).collect())
        .collect();
    let mut csv = String::new();
    for row in &pl {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_output(dir, "path_loss.csv", csv)?;

    let base = LinkGainMatrix::with_defaults(pl)?;
    let mut out = String::from("attenuation_db,pairs,best_p,best_q,best_score_db,mean_score_db\n");
    let mut previous: Option<f64> = None;
    let mut monotone = true;
    for att in (0..=50).step_by(10) {
        let m = base.with_attenuation(f64::from(att));
        let plan = plan_exhaustive(&m)?;
        let mean = plan.scores.iter().map(|s| s.score_db).sum::<f64>() / plan.scores.len() as f64;
        let _ = writeln!(
            out,
            "{att},{},{},{},{},{mean}",
            plan.scores.len(),
            plan.best_pair.0,
            plan.best_pair.1,
            plan.best_score_db
        );
        write_output(dir, &format!("score_matrix_att{att}.csv"), plan.to_matrix_csv())?;
        if let Some(prev) = previous {
            monotone &= plan.best_score_db < prev;
        }
        previous = Some(plan.best_score_db);
    }
    write_output(dir, "sweep.csv", out)?;
    ensure!(monotone, "best score did not fall with attenuation");
    Ok(format!(
        "{rus}x{ues} matrix, {} pairs per sweep point; best score falls as attenuation grows 0..50 dB",
        rus * (rus - 1) / 2
    ))
}

fn similarity_recovery(dir: &Path, seed: u64) -> anyhow::Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 200;
    let shift = 4i64;
    let base: Vec<f64> = (0..n + 40).map(|_| rng.random_range(-1.0..1.0)).collect();
    let x: Vec<f64> = base[20..20 + n].to_vec();
    let y: Vec<f64> = (0..n).map(|i| base[(20 + i as i64 - shift) as usize]).collect();
    let mut out = String::from("lag,rho\n");
    for k in -10i64..=10 {
        let _ = writeln!(out, "{k},{}", rho(&x, &y, k)?);
    }
    write_output(dir, "rho_by_lag.csv", out)?;
    let s = similarity(&x, &y, 10)?;
    ensure!(s.lag == shift, "injected shift {shift}, recovered {}", s.lag);
    Ok(format!("injected shift {shift} recovered at rho = {:.4}", s.rho))
}
