//! RU placement planning by exhaustive pair search.
//!
//! RSSI is the dB link budget `P + G - A - L + G_UE`; SINR is evaluated in
//! linear power as `S / (N F + sum of interferers)`. A pair's score is the
//! average over UEs of the better of its two members' SINR (in dB), with the
//! other member as the only interferer.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_RU_POWER_DBM: f64 = 24.0;
pub const DEFAULT_RU_GAIN_DBI: f64 = 5.0;
pub const DEFAULT_RU_ATTENUATION_DB: f64 = 20.0;
pub const DEFAULT_UE_GAIN_DBI: f64 = 1.1;
pub const DEFAULT_UE_NOISE_FIGURE_DB: f64 = 5.0;
pub const DEFAULT_BANDWIDTH_HZ: f64 = 100e6;
/// Thermal noise density at room temperature, dBm/Hz.
pub const THERMAL_NOISE_DENSITY_DBM_HZ: f64 = -174.0;

pub fn thermal_noise_dbm(bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DENSITY_DBM_HZ + 10.0 * bandwidth_hz.log10()
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuParams {
    #[serde(default = "d_ru_p")]
    pub power_dbm: f64,
    #[serde(default = "d_ru_g")]
    pub gain_dbi: f64,
    #[serde(default = "d_ru_a")]
    pub attenuation_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeParams {
    #[serde(default = "d_ue_g")]
    pub gain_dbi: f64,
    #[serde(default = "d_ue_f")]
    pub noise_figure_db: f64,
}

fn d_ru_p() -> f64 {
    DEFAULT_RU_POWER_DBM
}
fn d_ru_g() -> f64 {
    DEFAULT_RU_GAIN_DBI
}
fn d_ru_a() -> f64 {
    DEFAULT_RU_ATTENUATION_DB
}
fn d_ue_g() -> f64 {
    DEFAULT_UE_GAIN_DBI
}
fn d_ue_f() -> f64 {
    DEFAULT_UE_NOISE_FIGURE_DB
}

impl Default for RuParams {
    fn default() -> Self {
        RuParams {
            power_dbm: DEFAULT_RU_POWER_DBM,
            gain_dbi: DEFAULT_RU_GAIN_DBI,
            attenuation_db: DEFAULT_RU_ATTENUATION_DB,
        }
    }
}

impl Default for UeParams {
    fn default() -> Self {
        UeParams {
            gain_dbi: DEFAULT_UE_GAIN_DBI,
            noise_figure_db: DEFAULT_UE_NOISE_FIGURE_DB,
        }
    }
}

/// Parameter sidecar for a path-loss CSV.
///
/// `ru` / `ue` list per-node parameters; when absent (or shorter than the
/// matrix) the remaining nodes use `ru_defaults` / `ue_defaults`. Thermal
/// noise is `thermal_noise_dbm` if given, else derived from `bandwidth_hz`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    #[serde(default)]
    pub ru_defaults: Option<RuParams>,
    #[serde(default)]
    pub ue_defaults: Option<UeParams>,
    #[serde(default)]
    pub ru: Vec<RuParams>,
    #[serde(default)]
    pub ue: Vec<UeParams>,
    #[serde(default)]
    pub thermal_noise_dbm: Option<f64>,
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
}

/// Path losses between RUs (rows) and UEs (columns) plus per-node parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGainMatrix {
    path_loss_db: Vec<Vec<f64>>,
    ru: Vec<RuParams>,
    ue: Vec<UeParams>,
    thermal_noise_dbm: f64,
}

impl LinkGainMatrix {
    pub fn new(
        path_loss_db: Vec<Vec<f64>>,
        ru: Vec<RuParams>,
        ue: Vec<UeParams>,
        thermal_noise_dbm: f64,
    ) -> Result<Self> {
        let r = path_loss_db.len();
        let u = path_loss_db.first().map_or(0, Vec::len);
        if r == 0 || u == 0 {
            return Err(Error::invalid("path-loss matrix must be non-empty"));
        }
        if let Some(i) = path_loss_db.iter().position(|row| row.len() != u) {
            return Err(Error::invalid(format!(
                "row {i} has {} columns, expected {u}",
                path_loss_db[i].len()
            )));
        }
        if ru.len() != r || ue.len() != u {
            return Err(Error::invalid(format!(
                "parameter counts ({} RU, {} UE) do not match a {r}x{u} matrix",
                ru.len(),
                ue.len()
            )));
        }
        let finite = path_loss_db.iter().flatten().all(|v| v.is_finite())
            && ru
                .iter()
                .all(|p| p.power_dbm.is_finite() && p.gain_dbi.is_finite() && p.attenuation_db.is_finite())
            && ue
                .iter()
                .all(|p| p.gain_dbi.is_finite() && p.noise_figure_db.is_finite())
            && thermal_noise_dbm.is_finite();
        if !finite {
            return Err(Error::invalid("all matrix entries and parameters must be finite"));
        }
        Ok(LinkGainMatrix {
            path_loss_db,
            ru,
            ue,
            thermal_noise_dbm,
        })
    }

    /// Matrix with default parameters everywhere.
    pub fn with_defaults(path_loss_db: Vec<Vec<f64>>) -> Result<Self> {
        let r = path_loss_db.len();
        let u = path_loss_db.first().map_or(0, Vec::len);
        LinkGainMatrix::new(
            path_loss_db,
            vec![RuParams::default(); r],
            vec![UeParams::default(); u],
            thermal_noise_dbm(DEFAULT_BANDWIDTH_HZ),
        )
    }

    pub fn from_sidecar(path_loss_db: Vec<Vec<f64>>, sidecar: &Sidecar) -> Result<Self> {
        let r = path_loss_db.len();
        let u = path_loss_db.first().map_or(0, Vec::len);
        if sidecar.ru.len() > r || sidecar.ue.len() > u {
            return Err(Error::invalid("sidecar lists more nodes than the matrix has"));
        }
        let rd = sidecar.ru_defaults.unwrap_or_default();
        let ud = sidecar.ue_defaults.unwrap_or_default();
        let mut ru = sidecar.ru.clone();
        ru.resize(r, rd);
        let mut ue = sidecar.ue.clone();
        ue.resize(u, ud);
        let noise = sidecar
            .thermal_noise_dbm
            .unwrap_or_else(|| thermal_noise_dbm(sidecar.bandwidth_hz.unwrap_or(DEFAULT_BANDWIDTH_HZ)));
        LinkGainMatrix::new(path_loss_db, ru, ue, noise)
    }

    /// Reads a headerless numeric CSV (rows = RUs, columns = UEs, path loss
    /// in dB; `#` starts a comment line).
    pub fn read_path_loss_csv(text: &str) -> Result<Vec<Vec<f64>>> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Malformed {
                row: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let row = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
            let values = record
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Malformed {
                    row,
                    message: format!("non-numeric path loss in {:?}", record.iter().collect::<Vec<_>>()),
                })?;
            rows.push(values);
        }
        Ok(rows)
    }

    /// Loads a path-loss CSV and, if given, its JSON parameter sidecar.
    pub fn load(csv_path: impl AsRef<Path>, sidecar_path: Option<&Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let matrix = LinkGainMatrix::read_path_loss_csv(&text)?;
        let sidecar = match sidecar_path {
            Some(p) => {
                let s = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&s)?
            }
            None => Sidecar::default(),
        };
        LinkGainMatrix::from_sidecar(matrix, &sidecar)
    }

    pub fn ru_count(&self) -> usize {
        self.path_loss_db.len()
    }

    pub fn ue_count(&self) -> usize {
        self.path_loss_db[0].len()
    }

    pub fn path_loss_db(&self, i: usize, j: usize) -> f64 {
        self.path_loss_db[i][j]
    }

    pub fn ru_params(&self) -> &[RuParams] {
        &self.ru
    }

    pub fn ue_params(&self) -> &[UeParams] {
        &self.ue
    }

    pub fn thermal_noise_dbm(&self) -> f64 {
        self.thermal_noise_dbm
    }

    /// Same matrix with every RU attenuation raised by `delta_db`.
    pub fn with_extra_attenuation(&self, delta_db: f64) -> Self {
        let mut m = self.clone();
        for r in &mut m.ru {
            r.attenuation_db += delta_db;
        }
        m
    }

    pub fn with_attenuation(&self, attenuation_db: f64) -> Self {
        let mut m = self.clone();
        for r in &mut m.ru {
            r.attenuation_db = attenuation_db;
        }
        m
    }

    pub fn with_thermal_noise(&self, dbm: f64) -> Self {
        LinkGainMatrix {
            thermal_noise_dbm: dbm,
            ..self.clone()
        }
    }

    /// Adds `delta_db` to every path-loss entry.
    pub fn with_path_loss_offset(&self, delta_db: f64) -> Self {
        let mut m = self.clone();
        for v in m.path_loss_db.iter_mut().flatten() {
            *v += delta_db;
        }
        m
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.ru_count() || j >= self.ue_count() {
            return Err(Error::invalid(format!(
                "index (RU {i}, UE {j}) outside a {}x{} matrix",
                self.ru_count(),
                self.ue_count()
            )));
        }
        Ok(())
    }
}

/// `S_ij = P_i + G_i - A_i - L_ij + G_UE,j`, dBm.
pub fn rssi(m: &LinkGainMatrix, i: usize, j: usize) -> Result<f64> {
    m.check(i, j)?;
    Ok(rssi_unchecked(m, i, j))
}

fn rssi_unchecked(m: &LinkGainMatrix, i: usize, j: usize) -> f64 {
    let r = &m.ru[i];
    r.power_dbm + r.gain_dbi - r.attenuation_db - m.path_loss_db[i][j] + m.ue[j].gain_dbi
}

/// SINR of UE `j` served by RU `serving` with every other RU in `active`
/// interfering, dB.
pub fn sinr(m: &LinkGainMatrix, serving: usize, j: usize, active: &[usize]) -> Result<f64> {
    m.check(serving, j)?;
    if !active.contains(&serving) {
        return Err(Error::invalid(format!("serving RU {serving} is not active")));
    }
    for &u in active {
        m.check(u, j)?;
    }
    let interferers: Vec<usize> = active.iter().copied().filter(|&u| u != serving).collect();
    Ok(sinr_unchecked(m, serving, j, &interferers))
}

fn sinr_unchecked(m: &LinkGainMatrix, serving: usize, j: usize, interferers: &[usize]) -> f64 {
    let signal = db_to_lin(rssi_unchecked(m, serving, j));
    let noise = db_to_lin(m.thermal_noise_dbm + m.ue[j].noise_figure_db);
    let interference: f64 = interferers.iter().map(|&u| db_to_lin(rssi_unchecked(m, u, j))).sum();
    lin_to_db(signal / (noise + interference))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub p: usize,
    pub q: usize,
    /// Mean over UEs of `max(SINR_p, SINR_q)`, dB.
    pub score_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub best_pair: (usize, usize),
    pub best_score_db: f64,
    /// All unordered pairs `p < q`, in lexicographic order.
    pub scores: Vec<PairScore>,
    pub ru_count: usize,
}

impl PlanResult {
    pub fn score(&self, p: usize, q: usize) -> Option<f64> {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        self.scores.iter().find(|s| s.p == p && s.q == q).map(|s| s.score_db)
    }

    /// Long-format CSV `p,q,score_db` (0-based RU indices).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,q,score_db\n");
        for s in &self.scores {
            out.push_str(&format!("{},{},{}\n", s.p, s.q, s.score_db));
        }
        out
    }

    /// Symmetric `R x R` score matrix CSV with an empty diagonal, ready for
    /// heatmap plotting.
    pub fn to_matrix_csv(&self) -> String {
        let r = self.ru_count;
        let mut grid = vec![vec![None; r]; r];
        for s in &self.scores {
            grid[s.p][s.q] = Some(s.score_db);
            grid[s.q][s.p] = Some(s.score_db);
        }
        let mut out = String::from("ru");
        for i in 0..r {
            out.push_str(&format!(",{i}"));
        }
        out.push('\n');
        for (i, row) in grid.iter().enumerate() {
            out.push_str(&i.to_string());
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

fn pair_score(m: &LinkGainMatrix, p: usize, q: usize) -> f64 {
    let mut sum = 0.0;
    for j in 0..m.ue_count() {
        let gp = sinr_unchecked(m, p, j, &[q]);
        let gq = sinr_unchecked(m, q, j, &[p]);
        sum += gp.max(gq);
    }
    sum / m.ue_count() as f64
}

/// Scores every RU pair and returns the best one. Pairs are evaluated in
/// parallel; the reduction runs in lexicographic order with a strict `>`, so
/// ties go to the lexicographically smallest pair.
pub fn plan_exhaustive(m: &LinkGainMatrix) -> Result<PlanResult> {
    let r = m.ru_count();
    if r < 2 {
        return Err(Error::invalid("planning needs at least 2 RUs"));
    }
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|p| (p + 1..r).map(move |q| (p, q))).collect();
    let scores: Vec<PairScore> = pairs
        .par_iter()
        .map(|&(p, q)| PairScore {
            p,
            q,
            score_db: pair_score(m, p, q),
        })
        .collect();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_pair = pairs[0];
    for s in &scores {
        if s.score_db > best_score {
            best_score = s.score_db;
            best_pair = (s.p, s.q);
        }
    }
    Ok(PlanResult {
        best_pair,
        best_score_db: best_score,
        scores,
        ru_count: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(pl: f64, ru: RuParams, ue: UeParams, noise: f64) -> LinkGainMatrix {
        LinkGainMatrix::new(vec![vec![pl]], vec![ru], vec![ue], noise).unwrap()
    }

    #[test]
    fn rssi_substitution() {
        let m = single(
            60.0,
            RuParams {
                power_dbm: 24.0,
                gain_dbi: 5.0,
                attenuation_db: 20.0,
            },
            UeParams {
                gain_dbi: 1.1,
                noise_figure_db: 5.0,
            },
            -94.0,
        );
        assert!((rssi(&m, 0, 0).unwrap() + 49.9).abs() < 1e-12);
        let a10 = m.with_attenuation(10.0);
        let a0 = m.with_attenuation(0.0);
        assert!((rssi(&a0, 0, 0).unwrap() - rssi(&a10, 0, 0).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rssi_identity() {
        let zero_ru = RuParams {
            power_dbm: 0.0,
            gain_dbi: 0.0,
            attenuation_db: 0.0,
        };
        let zero_ue = UeParams {
            gain_dbi: 0.0,
            noise_figure_db: 0.0,
        };
        assert_eq!(rssi(&single(0.0, zero_ru, zero_ue, -100.0), 0, 0).unwrap(), 0.0);
        assert!(rssi(&single(0.0, zero_ru, zero_ue, -100.0), 1, 0).is_err());
    }

    #[test]
    fn sinr_noise_only_and_equal_interferer() {
        let m = LinkGainMatrix::with_defaults(vec![vec![80.0], vec![80.0]]).unwrap();
        let s = rssi(&m, 0, 0).unwrap();
        let noise = thermal_noise_dbm(DEFAULT_BANDWIDTH_HZ) + DEFAULT_UE_NOISE_FIGURE_DB;
        assert!((sinr(&m, 0, 0, &[0]).unwrap() - (s - noise)).abs() < 1e-12);
        let quiet = m.with_thermal_noise(-400.0);
        assert!(sinr(&quiet, 0, 0, &[0, 1]).unwrap().abs() < 1e-9);
        assert!(sinr(&m, 0, 0, &[1]).is_err());
    }

    #[test]
    fn thermal_noise_default() {
        assert!((thermal_noise_dbm(100e6) + 94.0).abs() < 1e-12);
    }

    #[test]
    fn two_rus_single_pair() {
        let m = LinkGainMatrix::with_defaults(vec![vec![70.0, 90.0], vec![95.0, 72.0]]).unwrap();
        let plan = plan_exhaustive(&m).unwrap();
        assert_eq!(plan.scores.len(), 1);
        assert_eq!(plan.best_pair, (0, 1));
        let want = (sinr(&m, 0, 0, &[0, 1]).unwrap().max(sinr(&m, 1, 0, &[0, 1]).unwrap())
            + sinr(&m, 0, 1, &[0, 1]).unwrap().max(sinr(&m, 1, 1, &[0, 1]).unwrap()))
            / 2.0;
        assert!((plan.best_score_db - want).abs() < 1e-12);
        assert_eq!(plan.score(1, 0), Some(plan.best_score_db));
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let m = LinkGainMatrix::with_defaults(vec![vec![80.0; 3]; 4]).unwrap();
        let plan = plan_exhaustive(&m).unwrap();
        assert_eq!(plan.scores.len(), 6);
        assert_eq!(plan.best_pair, (0, 1));
    }

    #[test]
    fn too_few_rus() {
        let m = LinkGainMatrix::with_defaults(vec![vec![80.0; 3]]).unwrap();
        assert!(plan_exhaustive(&m).is_err());
    }

    #[test]
    fn csv_and_sidecar() {
        let rows = LinkGainMatrix::read_path_loss_csv("# ru x ue\n70, 80\n90,100\n").unwrap();
        assert_eq!(rows, vec![vec![70.0, 80.0], vec![90.0, 100.0]]);
        let err = LinkGainMatrix::read_path_loss_csv("70,80\n90,x\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { row: 2, .. }), "{err}");
        let sc: Sidecar = serde_json::from_str(r#"{"ru":[{"attenuation_db":0}],"bandwidth_hz":20e6}"#).unwrap();
        let m = LinkGainMatrix::from_sidecar(rows, &sc).unwrap();
        assert_eq!(m.ru_params()[0].attenuation_db, 0.0);
        assert_eq!(m.ru_params()[0].power_dbm, 24.0);
        assert_eq!(m.ru_params()[1].attenuation_db, 20.0);
        assert!((m.thermal_noise_dbm() - thermal_noise_dbm(20e6)).abs() < 1e-12);
        assert!(LinkGainMatrix::with_defaults(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn matrix_csv_is_symmetric() {
        let m = LinkGainMatrix::with_defaults(vec![vec![70.0], vec![80.0], vec![75.0]]).unwrap();
        let csv = plan_exhaustive(&m).unwrap().to_matrix_csv();
        let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').skip(1).collect()).collect();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row[i], "");
            for (j, cell) in row.iter().enumerate() {
                assert_eq!(*cell, rows[j][i]);
            }
        }
    }
}
