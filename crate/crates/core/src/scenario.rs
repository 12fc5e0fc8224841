//! Scenario model, heatmaps, modeled-vs-sounded validation and the
//! normalized cross-correlation similarity metric.
//!
//! # JSON schema (version 1)
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "nodes": [
//!     { "id": 1, "label": "bs",
//!       "position": { "x": 0.0, "y": 0.0, "z": 10.0 },          // optional
//!       "mobility": { "speed_mps": 10.0,                         // optional
//!                     "waypoints": [ { "x": .., "y": .., "z": .. } ] } }
//!   ],
//!   "frames": [
//!     { "timestamp_ms": 0,
//!       "links": [ { "tx": 1, "rx": 2,
//!                    "taps": [ { "index": 0, "re": 0.7, "im": 0.0 } ] } ] }
//!   ],
//!   "metadata": { "center_frequency_hz": 1e9,  // optional
//!                 "bandwidth_hz": 1e8,         // optional
//!                 "duration_s": 0.001,         // optional
//!                 "base_loss_db": 57.55 }      // defaults to 57.55
//! }
//! ```
//!
//! Frame timestamps must increase by exactly 1 ms and every link must name
//! declared nodes.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{amplitude_db, c64, ChannelFrame, NodeId, TapSet, DEFAULT_BASE_LOSS_DB};
use crate::sounder::{SoundingReport, TapStats};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_LAG: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mobility {
    pub speed_mps: f64,
    #[serde(default)]
    pub waypoints: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    #[serde(default)]
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Position>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobility: Option<Mobility>,
}

impl Node {
    pub fn new(id: u32, label: impl Into<String>) -> Self {
        Node {
            id: NodeId(id),
            label: label.into(),
            position: None,
            mobility: None,
        }
    }
}

fn default_base_loss() -> f64 {
    DEFAULT_BASE_LOSS_DB
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
    #[serde(default = "default_base_loss")]
    pub base_loss_db: f64,
}

impl Default for Metadata {
    fn default() -> Self {
        Metadata {
            center_frequency_hz: None,
            bandwidth_hz: None,
            duration_s: None,
            base_loss_db: DEFAULT_BASE_LOSS_DB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub nodes: Vec<Node>,
    pub frames: Vec<ChannelFrame>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl Scenario {
    pub fn new(nodes: Vec<Node>, frames: Vec<ChannelFrame>, metadata: Metadata) -> Result<Self> {
        let s = Scenario {
            schema_version: SCHEMA_VERSION,
            nodes,
            frames,
            metadata,
        };
        s.validate()?;
        Ok(s)
    }

    /// Checks the schema version, node uniqueness, link endpoints and
    /// 1 ms frame cadence.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidScenario(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return Err(Error::InvalidScenario(format!("duplicate node id {}", n.id.0)));
            }
        }
        if !self.metadata.base_loss_db.is_finite() {
            return Err(Error::InvalidScenario("base_loss_db must be finite".into()));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if i > 0 && f.timestamp_ms != self.frames[i - 1].timestamp_ms + 1 {
                return Err(Error::InvalidScenario(format!(
                    "frame {i}: timestamp {} ms does not follow {} ms by 1 ms",
                    f.timestamp_ms,
                    self.frames[i - 1].timestamp_ms
                )));
            }
            for &(tx, rx) in f.links.keys() {
                for n in [tx, rx] {
                    if !ids.contains(&n) {
                        return Err(Error::InvalidScenario(format!(
                            "frame {i}: link {}->{} references undeclared node {}",
                            tx.0, rx.0, n.0
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort();
        ids
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Taps of `tx -> rx` in frame `frame_index`.
    pub fn link(&self, tx: NodeId, rx: NodeId, frame_index: usize) -> Result<&TapSet> {
        let frame = self
            .frames
            .get(frame_index)
            .ok_or_else(|| Error::InvalidScenario(format!("frame {frame_index} does not exist")))?;
        frame.link(tx, rx).ok_or(Error::MissingLink { tx: tx.0, rx: rx.0 })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Path loss of a tap set: `-20 log10 |sum of taps| + base_loss_db`.
pub fn link_path_loss_db(taps: &TapSet, base_loss_db: f64) -> f64 {
    -amplitude_db(taps.coherent_sum().norm()) + base_loss_db
}

/// Path-loss matrix indexed by sorted node ids; `loss_db[i][j]` is the link
/// from `nodes[i]` to `nodes[j]`, `None` on the diagonal and for absent links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub nodes: Vec<NodeId>,
    pub loss_db: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn get(&self, tx: NodeId, rx: NodeId) -> Option<f64> {
        let i = self.nodes.iter().position(|&n| n == tx)?;
        let j = self.nodes.iter().position(|&n| n == rx)?;
        self.loss_db[i][j]
    }

    /// Matrix CSV: header `tx,<rx ids...>`, one row per transmitter, blank
    /// cells where no value exists.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tx");
        for n in &self.nodes {
            out.push_str(&format!(",{}", n.0));
        }
        out.push('\n');
        for (i, row) in self.loss_db.iter().enumerate() {
            out.push_str(&self.nodes[i].0.to_string());
            for v in row {
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn heatmap(scenario: &Scenario, frame_index: usize) -> Result<Heatmap> {
    let frame = scenario
        .frames
        .get(frame_index)
        .ok_or_else(|| Error::InvalidScenario(format!("frame {frame_index} does not exist")))?;
    let nodes = scenario.node_ids();
    let loss_db = nodes
        .iter()
        .map(|&tx| {
            nodes
                .iter()
                .map(|&rx| {
                    if tx == rx {
                        return None;
                    }
                    frame
                        .link(tx, rx)
                        .map(|t| link_path_loss_db(t, scenario.metadata.base_loss_db))
                })
                .collect()
        })
        .collect();
    Ok(Heatmap { nodes, loss_db })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoundedTap {
    pub toa_s: f64,
    pub gain_db: f64,
    pub grid_offset: i64,
}

impl From<&TapStats> for SoundedTap {
    fn from(t: &TapStats) -> Self {
        SoundedTap {
            toa_s: t.mean_toa_s,
            gain_db: t.mean_gain_db,
            grid_offset: t.grid_offset,
        }
    }
}

/// One modeled tap and the sounded tap it was matched to, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapComparison {
    pub modeled_index: u16,
    pub modeled_gain_db: f64,
    pub sounded: Option<SoundedTap>,
    pub delay_match: bool,
    /// `sounded + base_loss - modeled`, dB.
    pub gain_error_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub matched: usize,
    pub unmatched_modeled: usize,
    pub unmatched_sounded: usize,
    pub max_abs_gain_error_db: Option<f64>,
    pub mean_abs_gain_error_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub tx: NodeId,
    pub rx: NodeId,
    pub taps: Vec<TapComparison>,
    pub unmatched_sounded: Vec<SoundedTap>,
    pub summary: ValidationSummary,
}

impl ValidationResult {
    /// `modeled_index,modeled_gain_db,sounded_toa_s,sounded_gain_db,delay_match,gain_error_db`;
    /// unmatched sounded taps follow with empty modeled columns.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out =
            String::from("modeled_index,modeled_gain_db,sounded_toa_s,sounded_gain_db,delay_match,gain_error_db\n");
        for t in &self.taps {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.modeled_index,
                t.modeled_gain_db,
                opt(t.sounded.map(|s| s.toa_s)),
                opt(t.sounded.map(|s| s.gain_db)),
                t.delay_match,
                opt(t.gain_error_db)
            ));
        }
        for s in &self.unmatched_sounded {
            out.push_str(&format!(",,{},{},false,\n", s.toa_s, s.gain_db));
        }
        out
    }

    pub fn all_matched(&self) -> bool {
        self.summary.unmatched_modeled == 0 && self.summary.unmatched_sounded == 0
    }
}

/// Compares the modeled taps of `tx -> rx` (frame `frame_index`) with a
/// sounding of that link.
///
/// Both sides are aligned to their strongest tap. Each modeled tap takes the
/// nearest unused sounded track within one grid cell; the gain error adds the
/// scenario's base loss back to the sounded gain.
pub fn validate(
    scenario: &Scenario,
    sounding: &SoundingReport,
    tx: NodeId,
    rx: NodeId,
    frame_index: usize,
) -> Result<ValidationResult> {
    let modeled = scenario.link(tx, rx, frame_index)?;
    let base_loss = scenario.metadata.base_loss_db;
    let strongest = modeled
        .iter()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i64::from(i))
        .unwrap_or(0);

    let sounded: Vec<SoundedTap> = sounding.stats.taps.iter().map(SoundedTap::from).collect();
    let mut used = vec![false; sounded.len()];
    let mut taps = Vec::with_capacity(modeled.len());
    for (index, gain) in modeled.iter() {
        let offset = i64::from(index) - strongest;
        let modeled_gain_db = amplitude_db(c64(gain).norm());
        let candidate = (0..sounded.len())
            .filter(|&k| !used[k] && (sounded[k].grid_offset - offset).abs() <= 1)
            .min_by_key(|&k| ((sounded[k].grid_offset - offset).abs(), sounded[k].grid_offset));
        let cmp = match candidate {
            Some(k) => {
                used[k] = true;
                TapComparison {
                    modeled_index: index,
                    modeled_gain_db,
                    sounded: Some(sounded[k]),
                    delay_match: true,
                    gain_error_db: Some(sounded[k].gain_db + base_loss - modeled_gain_db),
                }
            }
            None => TapComparison {
                modeled_index: index,
                modeled_gain_db,
                sounded: None,
                delay_match: false,
                gain_error_db: None,
            },
        };
        taps.push(cmp);
    }
    let unmatched_sounded: Vec<SoundedTap> = sounded
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(s, _)| *s)
        .collect();
    let errors: Vec<f64> = taps.iter().filter_map(|t| t.gain_error_db.map(f64::abs)).collect();
    let summary = ValidationSummary {
        matched: errors.len(),
        unmatched_modeled: taps.len() - errors.len(),
        unmatched_sounded: unmatched_sounded.len(),
        max_abs_gain_error_db: errors.iter().cloned().reduce(f64::max),
        mean_abs_gain_error_db: (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64),
    };
    Ok(ValidationResult {
        tx,
        rx,
        taps,
        unmatched_sounded,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    /// Largest (signed) `rho(k)` over the lag window.
    pub rho: f64,
    pub lag: i64,
}

/// Normalized cross-correlation at one lag:
/// `sum_n (x(n) - mean x)(y(n+k) - mean y) / sqrt(sum (x - mean x)^2 sum (y - mean y)^2)`.
/// The shorter series is zero-padded to the longer one first; terms with
/// `n + k` outside the series are omitted.
pub fn rho(x: &[f64], y: &[f64], k: i64) -> Result<f64> {
    let (x, y) = padded(x, y)?;
    let (xm, ym, denom) = moments(&x, &y)?;
    Ok(rho_at(&x, &y, xm, ym, denom, k))
}

/// Maximum of `rho(k)` over `|k| <= max_lag` and the lag attaining it
/// (earliest lag on ties).
pub fn similarity(x: &[f64], y: &[f64], max_lag: usize) -> Result<Similarity> {
    let (x, y) = padded(x, y)?;
    let (xm, ym, denom) = moments(&x, &y)?;
    let max_lag = max_lag as i64;
    let mut best = Similarity {
        rho: f64::NEG_INFINITY,
        lag: 0,
    };
    for k in -max_lag..=max_lag {
        let r = rho_at(&x, &y, xm, ym, denom, k);
        if r > best.rho {
            best = Similarity { rho: r, lag: k };
        }
    }
    Ok(best)
}

fn padded(x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InputTooShort(
            "similarity needs at least 2 samples per series".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("similarity inputs must be finite"));
    }
    let n = x.len().max(y.len());
    let mut x = x.to_vec();
    let mut y = y.to_vec();
    x.resize(n, 0.0);
    y.resize(n, 0.0);
    Ok((x, y))
}

fn moments(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sy: f64 = y.iter().map(|v| (v - ym).powi(2)).sum();
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((xm, ym, (sx * sy).sqrt()))
}

fn rho_at(x: &[f64], y: &[f64], xm: f64, ym: f64, denom: f64, k: i64) -> f64 {
    let n = x.len() as i64;
    let lo = 0.max(-k);
    let hi = n.min(n - k);
    let mut acc = 0.0;
    for i in lo..hi {
        acc += (x[i as usize] - xm) * (y[(i + k) as usize] - ym);
    }
    acc / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex32;

    fn two_node(taps: TapSet, base_loss_db: f64) -> Scenario {
        Scenario::new(
            vec![Node::new(1, "a"), Node::new(2, "b")],
            vec![ChannelFrame::new(0).with_link(NodeId(1), NodeId(2), taps)],
            Metadata {
                base_loss_db,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn heatmap_identity_and_additive() {
        let s = two_node(TapSet::identity(), 0.0);
        let h = heatmap(&s, 0).unwrap();
        assert_eq!(h.get(NodeId(1), NodeId(2)), Some(0.0));
        assert_eq!(h.get(NodeId(1), NodeId(1)), None);
        assert_eq!(h.get(NodeId(2), NodeId(1)), None);
        let s = two_node(TapSet::from_db(&[(0, -30.0)]).unwrap(), 57.55);
        let pl = heatmap(&s, 0).unwrap().get(NodeId(1), NodeId(2)).unwrap();
        assert!((pl - 87.55).abs() < 1e-5);
        assert!(heatmap(&s, 1).is_err());
    }

    #[test]
    fn heatmap_csv_layout() {
        let s = two_node(TapSet::identity(), 0.0);
        assert_eq!(heatmap(&s, 0).unwrap().to_csv(), "tx,1,2\n1,,0\n2,,\n");
    }

    #[test]
    fn heatmap_monotone_in_distance() {
        let nodes: Vec<Node> = (0..5)
            .map(|i| Node {
                position: Some(Position {
                    x: 10.0 * (i as f64 + 1.0).powi(2),
                    y: 0.0,
                    z: 0.0,
                }),
                ..Node::new(i, format!("n{i}"))
            })
            .collect();
        let origin = Position { x: 0.0, y: 0.0, z: 0.0 };
        let mut frame = ChannelFrame::new(0);
        let mut all = vec![Node::new(100, "bs")];
        all[0].position = Some(origin);
        for n in &nodes {
            let d = n.position.unwrap().distance(&origin);
            // power falls as 1/d^2, so amplitude as 1/d
            frame = frame.with_link(
                NodeId(100),
                n.id,
                TapSet::new([(0, Complex32::new((1.0 / d) as f32, 0.0))]).unwrap(),
            );
        }
        all.extend(nodes.clone());
        let s = Scenario::new(all, vec![frame], Metadata::default()).unwrap();
        let h = heatmap(&s, 0).unwrap();
        let losses: Vec<f64> = nodes.iter().map(|n| h.get(NodeId(100), n.id).unwrap()).collect();
        assert!(losses.windows(2).all(|w| w[0] < w[1]), "{losses:?}");
    }

    #[test]
    fn heatmap_ignores_uniform_phase() {
        let taps = TapSet::new([(0, Complex32::new(0.5, 0.1)), (30, Complex32::new(-0.2, 0.3))]).unwrap();
        let a = heatmap(&two_node(taps.clone(), 57.55), 0).unwrap();
        let rotated = taps.scaled(num_complex::Complex64::from_polar(1.0, 1.1));
        let b = heatmap(&two_node(rotated, 57.55), 0).unwrap();
        let (x, y) = (
            a.get(NodeId(1), NodeId(2)).unwrap(),
            b.get(NodeId(1), NodeId(2)).unwrap(),
        );
        assert!((x - y).abs() < 1e-5);
    }

    #[test]
    fn scenario_rules() {
        let nodes = vec![Node::new(1, "a"), Node::new(2, "b")];
        let bad_node = ChannelFrame::new(0).with_link(NodeId(1), NodeId(3), TapSet::identity());
        assert!(Scenario::new(nodes.clone(), vec![bad_node], Metadata::default()).is_err());
        let gap = vec![ChannelFrame::new(0), ChannelFrame::new(2)];
        assert!(Scenario::new(nodes.clone(), gap, Metadata::default()).is_err());
        let dup = vec![Node::new(1, "a"), Node::new(1, "b")];
        assert!(Scenario::new(dup, vec![], Metadata::default()).is_err());
        let mut s = Scenario::new(
            nodes,
            vec![ChannelFrame::new(5), ChannelFrame::new(6)],
            Metadata::default(),
        )
        .unwrap();
        s.schema_version = 2;
        assert!(Scenario::from_json(&serde_json::to_string(&s).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip_and_missing_fields() {
        let mut s = two_node(TapSet::new([(3, Complex32::new(0.1, -0.7))]).unwrap(), 57.55);
        s.nodes[0].position = Some(Position {
            x: 1.5,
            y: -2.0,
            z: 3.25,
        });
        s.nodes[1].mobility = Some(Mobility {
            speed_mps: 10.0,
            waypoints: vec![Position { x: 0.0, y: 0.0, z: 0.0 }],
        });
        s.metadata.center_frequency_hz = Some(1e9);
        assert_eq!(Scenario::from_json(&s.to_json().unwrap()).unwrap(), s);
        let minimal = r#"{"schema_version":1,"nodes":[{"id":1}],"frames":[]}"#;
        let m = Scenario::from_json(minimal).unwrap();
        assert_eq!(m.metadata.base_loss_db, DEFAULT_BASE_LOSS_DB);
    }

    #[test]
    fn rho_identity_and_antiphase() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 7) % 11) as f64).collect();
        assert!((rho(&x, &x, 0).unwrap() - 1.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((rho(&x, &y, 0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_recovers_shift() {
        let x: Vec<f64> = (0..200).map(|n| (0.3 * n as f64).sin()).collect();
        let y: Vec<f64> = (0..200).map(|n| (0.3 * (n as f64 - 3.0)).sin()).collect();
        let s = similarity(&x, &y, DEFAULT_MAX_LAG).unwrap();
        assert_eq!(s.lag, 3);
        assert!(s.rho > 0.98);
    }

    #[test]
    fn rho_matches_literal_formula_with_padding() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let y = [2.0, 1.0, 7.0];
        let yp = [2.0, 1.0, 7.0, 0.0, 0.0];
        let xm = x.iter().sum::<f64>() / 5.0;
        let ym = yp.iter().sum::<f64>() / 5.0;
        let d =
            (x.iter().map(|v| (v - xm).powi(2)).sum::<f64>() * yp.iter().map(|v| (v - ym).powi(2)).sum::<f64>()).sqrt();
        let want = (0..4).map(|n| (x[n] - xm) * (yp[n + 1] - ym)).sum::<f64>() / d;
        assert!((rho(&x, &y, 1).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn similarity_errors() {
        assert!(matches!(
            similarity(&[1.0, 1.0, 1.0], &[1.0, 2.0], 2),
            Err(Error::ZeroVariance)
        ));
        assert!(similarity(&[1.0], &[1.0, 2.0], 2).is_err());
    }
}
