use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use castwin::channel::{ChannelFrame, NodeId, TapSet};
use castwin::scenario::{Metadata, Node, Scenario};
use castwin::sounder::SoundingReport;

fn castwin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_castwin"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CASTWIN_OUT_DIR")
        .output()
        .expect("spawn castwin")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = castwin(args, cwd);
    assert!(
        out.status.success(),
        "castwin {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn four_tap_scenario(dir: &Path) -> PathBuf {
    let taps = TapSet::from_db(&[(0, -3.0), (128, -20.0), (200, -15.0), (400, -8.0)]).unwrap();
    let s = Scenario::new(
        vec![Node::new(1, "tx"), Node::new(2, "rx")],
        vec![ChannelFrame::new(0).with_link(NodeId(1), NodeId(2), taps)],
        Metadata::default(),
    )
    .unwrap();
    let path = dir.join("four_tap.json");
    s.save(&path).unwrap();
    path
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect()
}

#[test]
fn glfsr_sequence_has_255_chips_and_two_valued_autocorrelation() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["sequence", "--family", "glfsr", "--degree", "8", "--out", "o"],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("o/sequence.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 255);

    let rows = data_lines(&dir.path().join("o/autocorrelation.csv"));
    assert_eq!(rows.len(), 255);
    for (k, row) in rows.iter().enumerate() {
        let periodic: i64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(periodic, if k == 0 { 255 } else { -1 }, "lag {k}");
    }
}

#[test]
fn gold_degree_6_has_63_chips() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["sequence", "--family", "gold", "--degree", "6", "--out", "o"],
        dir.path(),
    );
    let text = fs::read_to_string(dir.path().join("o/sequence.txt")).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 63);
}

#[test]
fn unknown_family_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = castwin(&["sequence", "--family", "walsh"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("walsh"));
}

#[test]
fn unsupported_golay_length_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = castwin(&["sequence", "--family", "golay_a", "--length", "100"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_profile_exits_2_naming_the_row() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "toa_s,amplitude_linear,phase_rad\n1e-6,0.5,0\n2e-6,0.1,0\n3e-6,oops,0\n",
    )
    .unwrap();
    let out = castwin(&["approximate", "--profile", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 4"));
}

#[test]
fn missing_input_file_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = castwin(&["heatmap", "--scenario", "nope.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_component_profile_gives_one_tap_frame() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("one.csv"),
        "toa_s,amplitude_db,phase_rad\n3.3e-6,-10,0.25\n",
    )
    .unwrap();
    ok(&["approximate", "--profile", "one.csv", "--out", "o"], dir.path());
    let s = Scenario::load(dir.path().join("o/scenario.json")).unwrap();
    assert_eq!(s.frames.len(), 1);
    let taps = s.link(NodeId(1), NodeId(2), 0).unwrap();
    assert_eq!(taps.len(), 1);
    assert_eq!(taps.iter().next().unwrap().0, 0);
    assert!((taps.gains_db()[0] + 10.0).abs() < 1e-5);
}

#[test]
fn six_component_profile_reduces_to_four_taps_with_energy_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("six.csv"),
        "toa_s,amplitude_linear,phase_rad\n\
         1.000e-6,1.0,0\n1.004e-6,0.4,1\n1.500e-6,0.3,2\n2.000e-6,0.2,-1\n2.900e-6,0.15,0.5\n3.300e-6,0.1,3\n",
    )
    .unwrap();
    ok(
        &[
            "approximate",
            "--profile",
            "six.csv",
            "--profile",
            "six.csv",
            "--out",
            "o",
        ],
        dir.path(),
    );
    let s = Scenario::load(dir.path().join("o/scenario.json")).unwrap();
    assert_eq!(s.frames.len(), 2);
    assert_eq!(s.frames[1].timestamp_ms, 1);
    let taps = s.link(NodeId(1), NodeId(2), 0).unwrap();
    assert_eq!(taps.len(), 4);
    assert!(taps.iter().all(|(i, _)| i < 512));
    let energy = data_lines(&dir.path().join("o/energy.csv"));
    assert_eq!(energy.len(), 2);
    assert!(energy[0].starts_with("0,6,4,0,"));
    let bytes = fs::read(dir.path().join("o/frames.chfr")).unwrap();
    assert_eq!(castwin::channel::frames_from_bytes(&bytes).unwrap(), s.frames);
}

#[test]
fn noiseless_sound_loop_recovers_gains_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    four_tap_scenario(dir.path());
    ok(
        &[
            "sound",
            "--scenario",
            "four_tap.json",
            "--noise",
            "off",
            "--frames",
            "50",
            "--out",
            "o",
        ],
        dir.path(),
    );
    let report = SoundingReport::from_json(&fs::read_to_string(dir.path().join("o/report_1_2.json")).unwrap()).unwrap();
    assert_eq!(report.frames.len(), 50);
    let base = 57.55;
    let want = [(0i64, -3.0), (128, -20.0), (200, -15.0), (400, -8.0)];
    for f in &report.frames {
        assert_eq!(f.taps.len(), 4);
        for (t, &(off, g)) in f.taps.iter().zip(&want) {
            assert_eq!(t.grid_offset(), off);
            // modeled taps are stored as f32
            assert!((t.gain_db + base - g).abs() < 1e-6, "{} vs {g}", t.gain_db + base);
        }
    }
    let out = ok(
        &[
            "validate",
            "--scenario",
            "four_tap.json",
            "--report",
            "o/report_1_2.json",
            "--tx",
            "1",
            "--rx",
            "2",
            "--out",
            "v",
        ],
        dir.path(),
    );
    assert!(out.contains("4 matched"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("v/validation.json")).unwrap()).unwrap();
    assert!(v["summary"]["max_abs_gain_error_db"].as_f64().unwrap() < 1e-6);
    assert_eq!(data_lines(&dir.path().join("o/campaign.csv")).len(), 1);
}

#[test]
fn noisy_sound_stays_within_half_a_db() {
    let dir = tempfile::tempdir().unwrap();
    four_tap_scenario(dir.path());
    ok(
        &["sound", "--scenario", "four_tap.json", "--frames", "100", "--out", "o"],
        dir.path(),
    );
    let report = SoundingReport::from_json(&fs::read_to_string(dir.path().join("o/report_1_2.json")).unwrap()).unwrap();
    for (t, g) in report.stats.taps.iter().zip([-3.0, -20.0, -15.0, -8.0]) {
        assert!((t.mean_gain_db + 57.55 - g).abs() < 0.5);
    }
}

#[test]
fn sound_all_links_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::new(
        vec![Node::new(1, "a"), Node::new(2, "b"), Node::new(3, "c")],
        vec![ChannelFrame::new(0)
            .with_link(NodeId(1), NodeId(2), TapSet::from_db(&[(0, -3.0)]).unwrap())
            .with_link(
                NodeId(2),
                NodeId(3),
                TapSet::from_db(&[(10, -6.0), (50, -12.0)]).unwrap(),
            )],
        Metadata::default(),
    )
    .unwrap();
    s.save(dir.path().join("s.json")).unwrap();
    ok(
        &[
            "sound",
            "--scenario",
            "s.json",
            "--noise",
            "off",
            "--frames",
            "5",
            "--out",
            "o",
        ],
        dir.path(),
    );
    let campaign = data_lines(&dir.path().join("o/campaign.csv"));
    assert_eq!(campaign.len(), 2);
    assert!(campaign[0].starts_with("1,2,"));

    ok(&["heatmap", "--scenario", "s.json", "--out", "h"], dir.path());
    let rows = fs::read_to_string(dir.path().join("h/heatmap.csv")).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[0], "tx,1,2,3");
    let loss: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((loss - 60.55).abs() < 1e-5);
}

fn synthetic_path_loss(rus: usize, ues: usize) -> String {
    // deterministic, irregular values
    let mut out = String::from("# synthetic matrix\n");
    for i in 0..rus {
        let row: Vec<String> = (0..ues)
            .map(|j| {
                format!(
                    "{:.3}",
                    70.0 + ((i * 37 + j * 11) % 41) as f64 + (i as f64 * 0.7 - j as f64 * 0.3).sin()
                )
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[test]
fn plan_on_24_by_52_matrix_evaluates_276_pairs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pl.csv"), synthetic_path_loss(24, 52)).unwrap();
    let stdout = ok(&["plan", "--path-loss", "pl.csv", "--out", "o"], dir.path());
    assert!(stdout.contains("276 pairs"));
    assert_eq!(data_lines(&dir.path().join("o/scores.csv")).len(), 276);
    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/plan.json")).unwrap()).unwrap();
    assert_eq!(plan["scores"].as_array().unwrap().len(), 276);
    let matrix = fs::read_to_string(dir.path().join("o/score_matrix.csv")).unwrap();
    assert_eq!(matrix.lines().count(), 25);
}

#[test]
fn plan_attenuation_lowers_best_score() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pl.csv"), synthetic_path_loss(6, 10)).unwrap();
    let best = |att: &str, out: &str| -> f64 {
        ok(
            &["plan", "--path-loss", "pl.csv", "--attenuation-db", att, "--out", out],
            dir.path(),
        );
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(out).join("plan.json")).unwrap()).unwrap();
        v["best_score_db"].as_f64().unwrap()
    };
    assert!(best("30", "b") < best("10", "a"));
}

#[test]
fn malformed_path_loss_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("pl.csv"), "80,90\n85,x\n").unwrap();
    let out = castwin(&["plan", "--path-loss", "pl.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    four_tap_scenario(dir.path());
    fs::write(dir.path().join("pl.csv"), synthetic_path_loss(8, 12)).unwrap();
    fs::write(
        dir.path().join("p.csv"),
        "toa_s,amplitude_db,phase_rad\n1e-6,-1,0\n1.3e-6,-9,1\n2.05e-6,-4,2\n",
    )
    .unwrap();
    for run in ["r1", "r2"] {
        ok(
            &[
                "sound",
                "--scenario",
                "four_tap.json",
                "--frames",
                "30",
                "--save-iq",
                "--out",
                run,
            ],
            dir.path(),
        );
        ok(&["approximate", "--profile", "p.csv", "--out", run], dir.path());
        ok(&["plan", "--path-loss", "pl.csv", "--out", run], dir.path());
        ok(
            &["repro", "--recipe", "noise-asymmetry", "--frames", "40", "--out", run],
            dir.path(),
        );
    }
    let a = read_tree(&dir.path().join("r1"));
    let b = read_tree(&dir.path().join("r2"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seed_changes_noisy_output() {
    let dir = tempfile::tempdir().unwrap();
    four_tap_scenario(dir.path());
    ok(
        &[
            "sound",
            "--scenario",
            "four_tap.json",
            "--frames",
            "10",
            "--seed",
            "1",
            "--out",
            "a",
        ],
        dir.path(),
    );
    ok(
        &[
            "sound",
            "--scenario",
            "four_tap.json",
            "--frames",
            "10",
            "--seed",
            "2",
            "--out",
            "b",
        ],
        dir.path(),
    );
    assert_ne!(
        fs::read(dir.path().join("a/taps_1_2.csv")).unwrap(),
        fs::read(dir.path().join("b/taps_1_2.csv")).unwrap()
    );
}

#[test]
fn config_file_sets_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    four_tap_scenario(dir.path());
    fs::write(
        dir.path().join("c.toml"),
        "frames = 3\n[sound]\nframes = 12\nnoise = \"off\"\nscenario = \"four_tap.json\"\n",
    )
    .unwrap();
    let read = |out: &str| {
        SoundingReport::from_json(&fs::read_to_string(dir.path().join(out).join("report_1_2.json")).unwrap()).unwrap()
    };
    ok(&["--config", "c.toml", "sound", "--out", "a"], dir.path());
    assert_eq!(read("a").frames.len(), 12);
    ok(
        &["sound", "--config", "c.toml", "--frames", "4", "--out", "b"],
        dir.path(),
    );
    assert_eq!(read("b").frames.len(), 4);

    fs::write(dir.path().join("bad.toml"), "[sound]\nnot_an_option = 1\n").unwrap();
    let out = castwin(
        &["--config", "bad.toml", "sound", "--scenario", "four_tap.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_directory_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_castwin"))
        .args(["sequence", "--family", "golay_b", "--length", "32"])
        .current_dir(dir.path())
        .env("CASTWIN_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("from-env/sequence.txt").exists());
}

#[test]
fn repro_recipes_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["repro", "--recipe", "peak-spacing", "--out", "o"], dir.path());
    assert!(stdout.contains("every 255 samples") && stdout.contains("every 128 samples"));
    let peaks = data_lines(&dir.path().join("o/peak-spacing/peaks.csv"));
    assert_eq!(peaks.len(), 6);
    ok(&["repro", "--recipe", "planner-sweep", "--out", "o"], dir.path());
    assert_eq!(data_lines(&dir.path().join("o/planner-sweep/sweep.csv")).len(), 6);
}

#[test]
fn help_documents_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["--help"], dir.path());
    assert!(out.contains("--config") && out.contains("TOML"));
}
