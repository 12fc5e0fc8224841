use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use castwin::approx::{approximate as reduce, MultipathProfile};
use castwin::channel::{amplitude_db, emulate_wide, frames_to_bytes, ChannelFrame, EmulatorConfig, NodeId};
use castwin::planner::{plan_exhaustive, LinkGainMatrix};
use castwin::scenario::{heatmap as build_heatmap, validate as compare, Metadata, Node, Scenario};
use castwin::sequences::{
    autocorrelation, default_gold_pair, generate_glfsr, generate_golay, generate_gold, generate_ls, CodeSequence,
    CorrelationMode, Family, GolayKind,
};
use castwin::sounder::{campaign_csv, DetectionConfig, LinkBudget, Sounder, SoundingReport};
use castwin::waveform::{save_iq_file, IqWaveform};
use num_complex::{Complex32, Complex64};

use crate::args::{ApproximateArgs, CodeArgs, HeatmapArgs, PlanArgs, SequenceArgs, SoundArgs, Switch, ValidateArgs};

pub fn write_output(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn build_code(a: &CodeArgs) -> anyhow::Result<CodeSequence> {
    Ok(match a.family {
        Family::Glfsr => generate_glfsr(a.degree, a.mask, a.lfsr_seed)?,
        Family::Gold => {
            let Some((p1, p2)) = default_gold_pair(a.degree) else {
                bail!("no preferred pair tabulated for degree {}", a.degree);
            };
            generate_gold(p1, p2, a.shift)?
        }
        Family::GolayA => generate_golay(a.length, GolayKind::A)?,
        Family::GolayB => generate_golay(a.length, GolayKind::B)?,
        Family::LooselySynchronous => generate_ls(a.length)?,
    })
}

pub fn autocorrelation_csv(code: &CodeSequence) -> String {
    let periodic = autocorrelation(code, CorrelationMode::Periodic);
    let aperiodic = autocorrelation(code, CorrelationMode::Aperiodic);
    let mut out = String::from("lag,periodic,aperiodic\n");
    for (k, (p, a)) in periodic.iter().zip(&aperiodic).enumerate() {
        let _ = writeln!(out, "{k},{p},{a}");
    }
    out
}

pub fn sequence(a: &SequenceArgs) -> anyhow::Result<()> {
    let code = build_code(&a.code)?;
    let dir = &a.out.out;
    write_output(dir, "sequence.txt", code.to_text())?;
    write_output(dir, "autocorrelation.csv", autocorrelation_csv(&code))?;
    println!("{} sequence, {} chips -> {}", code.family(), code.len(), dir.display());
    Ok(())
}

fn link_seed(seed: u64, tx: NodeId, rx: NodeId) -> u64 {
    seed ^ (u64::from(tx.0) << 32 | u64::from(rx.0))
}

fn narrow(samples: &[Complex64], rate: f64, label: &str) -> anyhow::Result<IqWaveform> {
    let s = samples
        .iter()
        .map(|z| Complex32::new(z.re as f32, z.im as f32))
        .collect();
    Ok(IqWaveform::new(s, rate, label)?)
}

pub fn sound(a: &SoundArgs) -> anyhow::Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let Some(frame) = scenario.frames.get(a.frame_index) else {
        bail!(
            "scenario has {} frames, no frame {}",
            scenario.frames.len(),
            a.frame_index
        );
    };
    let links: Vec<(NodeId, NodeId)> = match (a.tx, a.rx) {
        (Some(tx), Some(rx)) => {
            scenario.link(NodeId(tx), NodeId(rx), a.frame_index)?;
            vec![(NodeId(tx), NodeId(rx))]
        }
        _ => frame.links.keys().copied().collect(),
    };
    if links.is_empty() {
        bail!("frame {} has no links to sound", a.frame_index);
    }

    let mut sounder = Sounder::new(build_code(&a.code)?);
    sounder.samples_per_chip = a.samples_per_chip;
    sounder.budget = LinkBudget {
        p_t_db: a.pt_db,
        g_t_dbi: a.gt_dbi,
        g_r_dbi: a.gr_dbi,
    };
    let noise = (a.noise == Switch::On).then_some(a.noise_floor_db);
    sounder.detection = DetectionConfig {
        threshold_db: a.threshold_db,
        min_separation: a.min_separation,
        min_magnitude: 0.0,
    };
    if let Some(db) = noise {
        sounder.detection = sounder.detection.with_noise_floor(db, sounder.period());
    }
    let config = EmulatorConfig::new(a.rate)
        .with_base_loss(a.base_loss_db.unwrap_or(scenario.metadata.base_loss_db))
        .with_noise_floor(noise);

    let tx_wave = sounder.transmit(a.rate, a.frames)?;
    let dir = &a.out.out;
    let mut reports: Vec<(u32, u32, SoundingReport)> = Vec::with_capacity(links.len());
    for &(tx, rx) in &links {
        // Only the sounded transmitter is active.
        let single = ChannelFrame::new(frame.timestamp_ms).with_link(tx, rx, frame.links[&(tx, rx)].clone());
        let inputs = BTreeMap::from([(tx, tx_wave.clone())]);
        let mut emu = emulate_wide(&inputs, &single, &config, link_seed(a.seed, tx, rx))?;
        for w in &emu.warnings {
            eprintln!("warning: {w}");
        }
        let rx_samples = emu.outputs.remove(&rx).context("emulator produced no output")?;
        let report = sounder.sound_wide(&rx_samples, a.rate, a.frames)?;

        let tag = format!("{}_{}", tx.0, rx.0);
        write_output(dir, &format!("report_{tag}.json"), report.to_json()?)?;
        write_output(dir, &format!("taps_{tag}.csv"), report.to_csv())?;
        write_output(dir, &format!("stats_{tag}.csv"), report.stats.to_csv())?;
        if a.save_iq {
            std::fs::create_dir_all(dir)?;
            save_iq_file(
                &narrow(&rx_samples, a.rate, &format!("rx{tag}"))?,
                dir.join(format!("rx_{tag}.iq")),
            )?;
        }
        let pl = report
            .path_loss_db()
            .map(|v| format!("{v:.3} dB"))
            .unwrap_or_else(|| "no taps".into());
        println!(
            "{}->{}: {} frames, {} tracked taps, path loss {pl}",
            tx.0,
            rx.0,
            report.frames.len(),
            report.stats.taps.len()
        );
        reports.push((tx.0, rx.0, report));
    }
    if a.save_iq {
        save_iq_file(&tx_wave, dir.join("tx.iq"))?;
    }
    write_output(
        dir,
        "campaign.csv",
        campaign_csv(reports.iter().map(|(t, r, rep)| (*t, *r, rep))),
    )?;
    Ok(())
}

pub fn approximate(a: &ApproximateArgs) -> anyhow::Result<()> {
    let (tx, rx) = (NodeId(a.tx), NodeId(a.rx));
    let mut frames = Vec::with_capacity(a.profiles.len());
    let mut taps_csv = String::from("frame,index,delay_s,gain_db,re,im\n");
    let mut energy_csv =
        String::from("frame,components,clusters,folded,profile_power_db,cluster_power_db,tap_power_db\n");
    for (i, path) in a.profiles.iter().enumerate() {
        let profile = MultipathProfile::load(path).with_context(|| format!("profile {}", path.display()))?;
        let approx = reduce(&profile, a.max_taps)?;
        for (index, g) in approx.taps.iter() {
            let _ = writeln!(
                taps_csv,
                "{i},{index},{:e},{},{},{}",
                f64::from(index) * castwin::channel::TAP_SPACING_S,
                amplitude_db(Complex64::new(g.re.into(), g.im.into()).norm()),
                g.re,
                g.im
            );
        }
        let db = |p: f64| 10.0 * p.log10();
        let _ = writeln!(
            energy_csv,
            "{i},{},{},{},{},{},{}",
            profile.len(),
            approx.clusters.len(),
            approx.folded,
            db(profile.total_power()),
            db(approx.total_power()),
            db(approx.taps.total_power())
        );
        if approx.folded > 0 {
            eprintln!(
                "warning: {}: {} components beyond the delay window folded into the last tap",
                path.display(),
                approx.folded
            );
        }
        frames.push(ChannelFrame::new(i as u64).with_link(tx, rx, approx.taps));
    }
    let metadata = Metadata {
        base_loss_db: a.base_loss_db,
        duration_s: Some(frames.len() as f64 * 1e-3),
        ..Metadata::default()
    };
    let scenario = Scenario::new(vec![Node::new(a.tx, "tx"), Node::new(a.rx, "rx")], frames, metadata)?;
    let dir = &a.out.out;
    write_output(dir, "scenario.json", scenario.to_json()?)?;
    write_output(dir, "frames.chfr", frames_to_bytes(&scenario.frames))?;
    write_output(dir, "taps.csv", taps_csv)?;
    write_output(dir, "energy.csv", energy_csv)?;
    let counts: Vec<String> = scenario
        .frames
        .iter()
        .map(|f| f.links[&(tx, rx)].len().to_string())
        .collect();
    println!(
        "{} frames, taps per frame [{}] -> {}",
        scenario.frames.len(),
        counts.join(", "),
        dir.display()
    );
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> anyhow::Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let text = std::fs::read_to_string(&a.report).with_context(|| format!("reading {}", a.report.display()))?;
    let report = SoundingReport::from_json(&text).with_context(|| format!("parsing {}", a.report.display()))?;
    let result = compare(&scenario, &report, NodeId(a.tx), NodeId(a.rx), a.frame_index)?;
    let dir = &a.out.out;
    write_output(dir, "validation.csv", result.to_csv())?;
    write_output(dir, "validation.json", serde_json::to_string_pretty(&result)?)?;
    let s = &result.summary;
    let err = s
        .max_abs_gain_error_db
        .map(|v| format!("{v:.3e} dB"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "{}->{}: {} matched, {} modeled unmatched, {} sounded unmatched, max gain error {err}",
        a.tx, a.rx, s.matched, s.unmatched_modeled, s.unmatched_sounded
    );
    Ok(())
}

pub fn heatmap(a: &HeatmapArgs) -> anyhow::Result<()> {
    let scenario = Scenario::load(&a.scenario)?;
    let map = build_heatmap(&scenario, a.frame_index)?;
    write_output(&a.out.out, "heatmap.csv", map.to_csv())?;
    println!(
        "{}x{} path-loss matrix -> {}",
        map.nodes.len(),
        map.nodes.len(),
        a.out.out.display()
    );
    Ok(())
}

pub fn plan(a: &PlanArgs) -> anyhow::Result<()> {
    let mut m = LinkGainMatrix::load(&a.path_loss, a.params.as_deref())?;
    if let Some(att) = a.attenuation_db {
        m = m.with_attenuation(att);
    }
    let result = plan_exhaustive(&m)?;
    let dir = &a.out.out;
    write_output(dir, "scores.csv", result.to_csv())?;
    write_output(dir, "score_matrix.csv", result.to_matrix_csv())?;
    write_output(dir, "plan.json", serde_json::to_string_pretty(&result)?)?;
    println!(
        "{} RUs x {} UEs: {} pairs evaluated, best ({}, {}) at {:.3} dB",
        m.ru_count(),
        m.ue_count(),
        result.scores.len(),
        result.best_pair.0,
        result.best_pair.1,
        result.best_score_db
    );
    Ok(())
}
