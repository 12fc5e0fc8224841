//! Sounding code sequences.
//!
//! Four families are supported: GLFSR m-sequences, Gold sequences built from
//! a preferred pair of m-sequences, 802.11ad-style Golay complementary pairs,
//! and loosely synchronous (LS) sequences built from a Golay pair without an
//! interference-free window.
//!
//! Bits map to chips as `0 -> +1`, `1 -> -1`.

mod golay;
mod lfsr;

pub use golay::{generate_golay, generate_ls, golay_pair, GolayKind};
pub use lfsr::{default_gold_pair, generate_glfsr, generate_gold, m_sequence_bits, primitive_polynomial, Polynomial};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Code family tag carried by every [`CodeSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Glfsr,
    Gold,
    GolayA,
    GolayB,
    LooselySynchronous,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Glfsr => "glfsr",
            Family::Gold => "gold",
            Family::GolayA => "golay_a",
            Family::GolayB => "golay_b",
            Family::LooselySynchronous => "ls",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glfsr" => Ok(Family::Glfsr),
            "gold" => Ok(Family::Gold),
            "golay_a" | "golaya" | "ga" => Ok(Family::GolayA),
            "golay_b" | "golayb" | "gb" => Ok(Family::GolayB),
            "ls" | "loosely_synchronous" => Ok(Family::LooselySynchronous),
            other => Err(Error::invalid(format!("unknown sequence family '{other}'"))),
        }
    }
}

/// Generator parameters recorded alongside the chips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceParams {
    Glfsr {
        degree: u32,
        polynomial: Polynomial,
        mask: u32,
        seed: u32,
    },
    Gold {
        poly1: Polynomial,
        poly2: Polynomial,
        shift: usize,
    },
    Golay {
        length: usize,
        delays: Vec<usize>,
        weights: Vec<i8>,
    },
    Ls {
        base_pair_length: usize,
    },
    /// Chips read back from a text file; generator parameters are not known.
    Imported,
}

/// A bipolar code sequence. Every chip is exactly `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSequence {
    family: Family,
    chips: Vec<i8>,
    params: SequenceParams,
}

impl CodeSequence {
    /// Builds a sequence from bipolar chips, rejecting anything outside `{-1, +1}`.
    pub fn new(family: Family, chips: Vec<i8>, params: SequenceParams) -> Result<Self> {
        if chips.is_empty() {
            return Err(Error::invalid("sequence must contain at least one chip"));
        }
        if let Some(pos) = chips.iter().position(|&c| c != 1 && c != -1) {
            return Err(Error::invalid(format!(
                "chip {pos} is {} (must be -1 or +1)",
                chips[pos]
            )));
        }
        Ok(Self { family, chips, params })
    }

    pub(crate) fn from_bits(family: Family, bits: &[u8], params: SequenceParams) -> Self {
        let chips = bits.iter().map(|&b| bit_to_chip(b)).collect();
        Self { family, chips, params }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn chips(&self) -> &[i8] {
        &self.chips
    }

    pub fn params(&self) -> &SequenceParams {
        &self.params
    }

    /// Number of chips `N`.
    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    /// Cyclically rotates the chips left by `k` positions.
    pub fn rotated(&self, k: usize) -> Self {
        let mut chips = self.chips.clone();
        let n = chips.len();
        chips.rotate_left(k % n);
        Self {
            family: self.family,
            chips,
            params: self.params.clone(),
        }
    }

    /// Plain-text export: a `# family=<name>` header, then one chip per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("# family={}\n", self.family);
        for &c in &self.chips {
            out.push_str(if c > 0 { "+1\n" } else { "-1\n" });
        }
        out
    }

    /// Parses the format written by [`CodeSequence::to_text`]. Without a
    /// family header the family defaults to GLFSR.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut family = None;
        let mut chips = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(name) = comment.trim().strip_prefix("family=") {
                    family = Some(name.trim().parse()?);
                }
                continue;
            }
            let chip = match line {
                "+1" | "1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Malformed {
                        row: i + 1,
                        message: format!("expected +1 or -1, got '{other}'"),
                    })
                }
            };
            chips.push(chip);
        }
        CodeSequence::new(family.unwrap_or(Family::Glfsr), chips, SequenceParams::Imported)
    }
}

#[inline]
pub(crate) fn bit_to_chip(bit: u8) -> i8 {
    if bit & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Correlation mode for [`autocorrelation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationMode {
    /// Indices wrap modulo `N`.
    Periodic,
    /// The sequence is zero-extended outside `0..N`.
    Aperiodic,
}

/// Autocorrelation `chi(k) = sum_n c(n) c(n + k)` for lags `0..N`.
///
/// Values are exact integers since chips are `+-1`.
pub fn autocorrelation(seq: &CodeSequence, mode: CorrelationMode) -> Vec<i64> {
    let c = seq.chips();
    let n = c.len();
    (0..n)
        .map(|k| match mode {
            CorrelationMode::Periodic => (0..n).map(|i| i64::from(c[i]) * i64::from(c[(i + k) % n])).sum(),
            CorrelationMode::Aperiodic => (0..n - k).map(|i| i64::from(c[i]) * i64::from(c[i + k])).sum(),
        })
        .collect()
}

/// Periodic cross-correlation `sum_n a(n) b((n + k) mod N)` for lags `0..N`.
pub fn periodic_cross_correlation(a: &[i8], b: &[i8]) -> Result<Vec<i64>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n > 4096 {
        return Ok(fft_cross_correlation(a, b));
    }
    Ok((0..n)
        .map(|k| (0..n).map(|i| i64::from(a[i]) * i64::from(b[(i + k) % n])).sum())
        .collect())
}

fn fft_cross_correlation(a: &[i8], b: &[i8]) -> Vec<i64> {
    use num_complex::Complex64;
    use rustfft::FftPlanner;

    let n = a.len();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect();
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x.conj() * y).collect();
    inv.process(&mut prod);
    prod.iter().map(|z| (z.re / n as f64).round() as i64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_aperiodic() {
        let seq = CodeSequence::new(Family::Glfsr, vec![1; 4], SequenceParams::Imported).unwrap();
        assert_eq!(autocorrelation(&seq, CorrelationMode::Aperiodic), vec![4, 3, 2, 1]);
    }

    #[test]
    fn lag_zero_is_length() {
        let seq = generate_glfsr(7, 0, 5).unwrap();
        assert_eq!(autocorrelation(&seq, CorrelationMode::Periodic)[0], 127);
    }

    #[test]
    fn rejects_non_bipolar_chips() {
        assert!(CodeSequence::new(Family::Gold, vec![1, 0, -1], SequenceParams::Imported).is_err());
        assert!(CodeSequence::new(Family::Gold, vec![], SequenceParams::Imported).is_err());
    }

    #[test]
    fn text_round_trip() {
        let seq = generate_glfsr(5, 0, 1).unwrap();
        let back = CodeSequence::from_text(&seq.to_text()).unwrap();
        assert_eq!(back.chips(), seq.chips());
        assert_eq!(back.family(), Family::Glfsr);
    }

    #[test]
    fn text_rejects_garbage() {
        let err = CodeSequence::from_text("+1\n-1\n0.5\n").unwrap_err();
        assert!(matches!(err, Error::Malformed { row: 3, .. }));
    }

    #[test]
    fn fft_matches_direct() {
        let a = generate_glfsr(9, 0, 1).unwrap();
        let b = generate_glfsr(9, 0, 77).unwrap();
        let direct: Vec<i64> = {
            let (a, b) = (a.chips(), b.chips());
            let n = a.len();
            (0..n)
                .map(|k| (0..n).map(|i| (a[i] * b[(i + k) % n]) as i64).sum())
                .collect()
        };
        assert_eq!(fft_cross_correlation(a.chips(), b.chips()), direct);
    }

    #[test]
    fn family_parse() {
        assert_eq!("GLFSR".parse::<Family>().unwrap(), Family::Glfsr);
        assert_eq!("ls".parse::<Family>().unwrap(), Family::LooselySynchronous);
        assert!("zadoff".parse::<Family>().is_err());
    }
}
