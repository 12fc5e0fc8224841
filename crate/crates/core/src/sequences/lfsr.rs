//! Shift-register generators: Galois LFSR (GLFSR) and Gold sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{periodic_cross_correlation, CodeSequence, Family, SequenceParams};
use crate::{Error, Result};

/// GF(2) polynomial; bit `k` holds the coefficient of `x^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub u32);

impl Polynomial {
    /// Builds a polynomial from its nonzero exponents, e.g. `[6, 1, 0]`.
    pub fn from_exponents(exps: &[u32]) -> Self {
        Polynomial(exps.iter().fold(0, |acc, &e| acc | (1 << e)))
    }

    pub fn degree(&self) -> u32 {
        31u32.saturating_sub(self.0.leading_zeros())
    }

    pub fn exponents(&self) -> Vec<u32> {
        (0..32).rev().filter(|&e| self.0 >> e & 1 == 1).collect()
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                e => format!("x^{e}"),
            })
            .collect();
        f.write_str(&terms.join("+"))
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    /// Accepts `x^6+x+1`, `z^6+z^5+z^2+z+1`, or a hex mask such as `0x43`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(hex) = s.strip_prefix("0x") {
            let v = u32::from_str_radix(hex, 16).map_err(|e| Error::invalid(format!("bad polynomial '{s}': {e}")))?;
            return Ok(Polynomial(v));
        }
        let mut bits = 0u32;
        for term in s.split('+') {
            let term = term.trim();
            let exp = if term == "1" {
                0
            } else if let Some(rest) = term.strip_prefix(['x', 'z']) {
                match rest.strip_prefix('^') {
                    Some(e) => e
                        .parse::<u32>()
                        .map_err(|e| Error::invalid(format!("bad exponent in '{term}': {e}")))?,
                    None if rest.is_empty() => 1,
                    None => return Err(Error::invalid(format!("bad term '{term}'"))),
                }
            } else {
                return Err(Error::invalid(format!("bad term '{term}'")));
            };
            if exp > 31 {
                return Err(Error::invalid(format!("exponent {exp} too large")));
            }
            bits |= 1 << exp;
        }
        Ok(Polynomial(bits))
    }
}

/// Primitive feedback polynomial used for each supported GLFSR degree.
///
/// | degree | polynomial |
/// |---|---|
/// | 2 | x^2+x+1 |
/// | 3 | x^3+x^2+1 |
/// | 4 | x^4+x^3+1 |
/// | 5 | x^5+x^3+1 |
/// | 6 | x^6+x^5+1 |
/// | 7 | x^7+x^6+1 |
/// | 8 | x^8+x^6+x^5+x^4+1 |
/// | 9 | x^9+x^5+1 |
/// | 10 | x^10+x^7+1 |
/// | 11 | x^11+x^9+1 |
/// | 12 | x^12+x^11+x^10+x^4+1 |
/// | 13 | x^13+x^12+x^11+x^8+1 |
/// | 14 | x^14+x^13+x^12+x^2+1 |
/// | 15 | x^15+x^14+1 |
/// | 16 | x^16+x^15+x^13+x^4+1 |
pub fn primitive_polynomial(degree: u32) -> Option<Polynomial> {
    let exps: &[u32] = match degree {
        2 => &[2, 1, 0],
        3 => &[3, 2, 0],
        4 => &[4, 3, 0],
        5 => &[5, 3, 0],
        6 => &[6, 5, 0],
        7 => &[7, 6, 0],
        8 => &[8, 6, 5, 4, 0],
        9 => &[9, 5, 0],
        10 => &[10, 7, 0],
        11 => &[11, 9, 0],
        12 => &[12, 11, 10, 4, 0],
        13 => &[13, 12, 11, 8, 0],
        14 => &[14, 13, 12, 2, 0],
        15 => &[15, 14, 0],
        16 => &[16, 15, 13, 4, 0],
        _ => return None,
    };
    Some(Polynomial::from_exponents(exps))
}

/// Galois LFSR m-sequence generator.
///
/// The register shifts right; when the bit shifted out is 1 the register is
/// XORed with the toggle mask `polynomial >> 1`. The emitted bit is the
/// register LSB XOR the parity of `register & mask`, so a zero mask yields the
/// plain m-sequence and any other legal mask yields a time offset of it.
///
/// `seed` is the initial register content and must be nonzero.
pub fn generate_glfsr(degree: u32, mask: u32, seed: u32) -> Result<CodeSequence> {
    let polynomial =
        primitive_polynomial(degree).ok_or_else(|| Error::invalid(format!("GLFSR degree {degree} not in 2..=16")))?;
    let limit = 1u32 << degree;
    if seed == 0 {
        return Err(Error::invalid(
            "GLFSR seed must be nonzero (register would lock at all-zeros)",
        ));
    }
    if seed >= limit {
        return Err(Error::invalid(format!("seed {seed:#x} does not fit in {degree} bits")));
    }
    if mask >= limit {
        return Err(Error::invalid(format!("mask {mask:#x} does not fit in {degree} bits")));
    }
    if mask == 1 {
        // LSB ^ LSB: the output would be constant zero.
        return Err(Error::invalid("mask 0x1 cancels the register output"));
    }

    let toggle = polynomial.0 >> 1;
    let n = (limit - 1) as usize;
    let mut state = seed;
    let mut bits = Vec::with_capacity(n);
    for _ in 0..n {
        let out = (state & 1) ^ ((state & mask).count_ones() & 1);
        bits.push(out as u8);
        let lsb = state & 1;
        state >>= 1;
        if lsb == 1 {
            state ^= toggle;
        }
    }
    Ok(CodeSequence::from_bits(
        Family::Glfsr,
        &bits,
        SequenceParams::Glfsr {
            degree,
            polynomial,
            mask,
            seed,
        },
    ))
}

/// One period of the Fibonacci-form m-sequence of `poly`.
///
/// For `p(x) = x^m + sum_{k<m} c_k x^k` the bits satisfy
/// `s[n+m] = sum_k c_k s[n+k] (mod 2)`, with `s[i]` = bit `i` of `seed`.
/// Fails if `poly` is not primitive (period shorter than `2^m - 1`).
pub fn m_sequence_bits(poly: Polynomial, seed: u32) -> Result<Vec<u8>> {
    let m = poly.degree();
    if !(2..=20).contains(&m) {
        return Err(Error::invalid(format!("polynomial degree {m} not in 2..=20")));
    }
    if poly.0 & 1 == 0 {
        return Err(Error::invalid(format!("{poly} has no constant term")));
    }
    let mask = (1u32 << m) - 1;
    let seed = seed & mask;
    if seed == 0 {
        return Err(Error::invalid("m-sequence seed must be nonzero"));
    }
    let taps = poly.0 & mask;
    let n = (1usize << m) - 1;
    // window bit i holds s[t + i]
    let mut window = seed;
    let mut bits = Vec::with_capacity(n);
    for step in 0..n {
        bits.push((window & 1) as u8);
        let next = (window & taps).count_ones() & 1;
        window = (window >> 1) | (next << (m - 1));
        if window == seed && step + 1 < n {
            return Err(Error::invalid(format!("{poly} is not primitive (period {})", step + 1)));
        }
    }
    Ok(bits)
}

/// Gold-sequence set bound `t(m) = 1 + 2^floor((m+2)/2)`.
fn gold_bound(m: u32) -> i64 {
    1 + (1i64 << ((m + 2) / 2))
}

/// Default preferred pairs by degree, used by front-ends that only take a degree.
pub fn default_gold_pair(degree: u32) -> Option<(Polynomial, Polynomial)> {
    let (a, b): (&[u32], &[u32]) = match degree {
        5 => (&[5, 2, 0], &[5, 4, 3, 2, 0]),
        6 => (&[6, 1, 0], &[6, 5, 2, 1, 0]),
        7 => (&[7, 3, 0], &[7, 3, 2, 1, 0]),
        9 => (&[9, 4, 0], &[9, 6, 4, 3, 0]),
        10 => (&[10, 3, 0], &[10, 8, 3, 2, 0]),
        11 => (&[11, 2, 0], &[11, 8, 5, 2, 0]),
        _ => return None,
    };
    Some((Polynomial::from_exponents(a), Polynomial::from_exponents(b)))
}

/// Gold sequence `u XOR (v shifted by shift)` from a preferred pair.
///
/// Both m-sequences start from register fill 1. The pair is accepted only if
/// the periodic cross-correlation of the two m-sequences takes values in
/// `{-1, -t(m), t(m) - 2}`.
pub fn generate_gold(poly1: Polynomial, poly2: Polynomial, shift: usize) -> Result<CodeSequence> {
    let m = poly1.degree();
    if m != poly2.degree() {
        return Err(Error::invalid(format!(
            "polynomial degrees differ: {} vs {}",
            m,
            poly2.degree()
        )));
    }
    let u = m_sequence_bits(poly1, 1)?;
    let v = m_sequence_bits(poly2, 1)?;
    let n = u.len();
    if shift >= n {
        return Err(Error::invalid(format!("shift {shift} must be < {n}")));
    }

    let to_chips = |bits: &[u8]| -> Vec<i8> { bits.iter().map(|&b| super::bit_to_chip(b)).collect() };
    let xc = periodic_cross_correlation(&to_chips(&u), &to_chips(&v))?;
    let t = gold_bound(m);
    if let Some(bad) = xc.iter().find(|&&x| x != -1 && x != -t && x != t - 2) {
        return Err(Error::NotPreferredPair(format!(
            "{poly1} / {poly2}: cross-correlation value {bad} outside {{-1, {}, {}}}",
            -t,
            t - 2
        )));
    }

    let bits: Vec<u8> = (0..n).map(|i| u[i] ^ v[(i + shift) % n]).collect();
    Ok(CodeSequence::from_bits(
        Family::Gold,
        &bits,
        SequenceParams::Gold { poly1, poly2, shift },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::{autocorrelation, CorrelationMode};
    use std::collections::BTreeSet;

    #[test]
    fn polynomial_parse_and_display() {
        let p: Polynomial = "z^6+z^5+z^2+z+1".parse().unwrap();
        assert_eq!(p, Polynomial::from_exponents(&[6, 5, 2, 1, 0]));
        assert_eq!(p.degree(), 6);
        assert_eq!(p.to_string(), "x^6+x^5+x^2+x+1");
        assert_eq!("0x43".parse::<Polynomial>().unwrap(), "x^6+x+1".parse().unwrap());
        assert!("y^3+1".parse::<Polynomial>().is_err());
    }

    #[test]
    fn glfsr_degree_8_length() {
        let seq = generate_glfsr(8, 0, 1).unwrap();
        assert_eq!(seq.len(), 255);
    }

    #[test]
    fn glfsr_degree_2_autocorrelation() {
        let seq = generate_glfsr(2, 0, 1).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(autocorrelation(&seq, CorrelationMode::Periodic), vec![3, -1, -1]);
    }

    #[test]
    fn every_table_polynomial_is_maximal() {
        for degree in 2..=16 {
            let seq = generate_glfsr(degree, 0, 1).unwrap();
            let n = (1usize << degree) - 1;
            assert_eq!(seq.len(), n);
            // balance property of an m-sequence: 2^(m-1) ones
            let ones = seq.chips().iter().filter(|&&c| c == -1).count();
            assert_eq!(ones, 1 << (degree - 1), "degree {degree}");
            assert!(m_sequence_bits(primitive_polynomial(degree).unwrap(), 1).is_ok());
        }
    }

    #[test]
    fn glfsr_mask_gives_shifted_m_sequence() {
        let plain = generate_glfsr(6, 0, 1).unwrap();
        let masked = generate_glfsr(6, 0b10110, 1).unwrap();
        let found = (0..plain.len()).any(|k| plain.rotated(k).chips() == masked.chips());
        assert!(found);
    }

    #[test]
    fn glfsr_rejects_bad_inputs() {
        assert!(generate_glfsr(8, 0, 0).is_err());
        assert!(generate_glfsr(1, 0, 1).is_err());
        assert!(generate_glfsr(17, 0, 1).is_err());
        assert!(generate_glfsr(4, 0, 16).is_err());
        assert!(generate_glfsr(4, 1, 1).is_err());
    }

    #[test]
    fn non_primitive_rejected() {
        // x^4+x^2+1 = (x^2+x+1)^2
        let p = Polynomial::from_exponents(&[4, 2, 0]);
        assert!(m_sequence_bits(p, 1).is_err());
    }

    #[test]
    fn gold_degree_6_from_default_polynomials() {
        let p1: Polynomial = "z^6+z+1".parse().unwrap();
        let p2: Polynomial = "z^6+z^5+z^2+z+1".parse().unwrap();
        let seq = generate_gold(p1, p2, 0).unwrap();
        assert_eq!(seq.len(), 63);
    }

    #[test]
    fn gold_parent_cross_correlation_is_three_valued() {
        for degree in [5u32, 6] {
            let (p1, p2) = default_gold_pair(degree).unwrap();
            let chips = |p| -> Vec<i8> {
                m_sequence_bits(p, 1)
                    .unwrap()
                    .iter()
                    .map(|&b| if b == 0 { 1 } else { -1 })
                    .collect()
            };
            let (u, v) = (chips(p1), chips(p2));
            let n = u.len();
            let values: BTreeSet<i64> = (0..n)
                .map(|k| (0..n).map(|i| (u[i] * v[(i + k) % n]) as i64).sum())
                .collect();
            assert!(values.len() <= 3, "degree {degree}: {values:?}");
            if degree == 6 {
                assert_eq!(values, BTreeSet::from([-17, -1, 15]));
            }
        }
    }

    #[test]
    fn default_pairs_are_preferred() {
        for degree in [5, 6, 7, 9, 10, 11] {
            let (p1, p2) = default_gold_pair(degree).unwrap();
            let seq = generate_gold(p1, p2, 3).unwrap();
            assert_eq!(seq.len(), (1 << degree) - 1);
        }
    }

    #[test]
    fn gold_rejects_degenerate_and_mismatched() {
        let p1: Polynomial = "x^6+x+1".parse().unwrap();
        assert!(matches!(generate_gold(p1, p1, 0), Err(Error::NotPreferredPair(_))));
        let p5 = Polynomial::from_exponents(&[5, 2, 0]);
        assert!(generate_gold(p1, p5, 0).is_err());
        let p2: Polynomial = "x^6+x^5+x^2+x+1".parse().unwrap();
        assert!(generate_gold(p1, p2, 63).is_err());
    }
}
