//! Golay complementary pairs and LS sequences derived from them.

use super::{CodeSequence, Family, SequenceParams};
use crate::{Error, Result};

/// Which member of a Golay pair to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GolayKind {
    A,
    B,
}

// Delay and weight vectors of the recursive construction. The 32/64/128
// entries follow the 802.11ad Ga/Gb definitions; length 2 is the base pair.
fn construction(length: usize) -> Option<(&'static [usize], &'static [i8])> {
    match length {
        2 => Some((&[1], &[1])),
        32 => Some((&[1, 4, 8, 2, 16], &[-1, 1, -1, 1, -1])),
        64 => Some((&[2, 1, 4, 8, 16, 32], &[1, 1, -1, -1, 1, -1])),
        128 => Some((&[1, 8, 2, 4, 16, 32, 64], &[-1, -1, -1, -1, 1, -1, -1])),
        _ => None,
    }
}

/// Recursive delay-and-weight Golay pair.
///
/// Starting from `a_0 = b_0 = delta`, each stage computes
/// `a_k(n) = w_k a_{k-1}(n) + b_{k-1}(n - d_k)` and
/// `b_k(n) = w_k a_{k-1}(n) - b_{k-1}(n - d_k)`.
/// The delays must be distinct powers of two so every stage doubles the length
/// without overlap.
pub fn golay_pair(delays: &[usize], weights: &[i8]) -> Result<(Vec<i8>, Vec<i8>)> {
    if delays.len() != weights.len() {
        return Err(Error::invalid("delay and weight vectors differ in length"));
    }
    let len = 1usize << delays.len();
    let mut sorted = delays.to_vec();
    sorted.sort_unstable();
    if sorted.iter().enumerate().any(|(i, &d)| d != 1 << i) {
        return Err(Error::invalid(format!(
            "delays {delays:?} are not a permutation of 1, 2, .., {}",
            len / 2
        )));
    }
    if weights.iter().any(|&w| w != 1 && w != -1) {
        return Err(Error::invalid("weights must be +-1"));
    }

    let mut a = vec![0i8; len];
    let mut b = vec![0i8; len];
    a[0] = 1;
    b[0] = 1;
    for (&d, &w) in delays.iter().zip(weights) {
        let (pa, pb) = (a.clone(), b.clone());
        for n in 0..len {
            let wa = w * pa[n];
            let db = if n >= d { pb[n - d] } else { 0 };
            a[n] = wa + db;
            b[n] = wa - db;
        }
    }
    Ok((a, b))
}

/// Golay sequence `Ga_L` or `Gb_L`, `L` in `{2, 32, 64, 128}`.
pub fn generate_golay(length: usize, which: GolayKind) -> Result<CodeSequence> {
    let (delays, weights) = construction(length)
        .ok_or_else(|| Error::invalid(format!("unsupported Golay length {length} (expected 2, 32, 64 or 128)")))?;
    let (a, b) = golay_pair(delays, weights)?;
    let (family, chips) = match which {
        GolayKind::A => (Family::GolayA, a),
        GolayKind::B => (Family::GolayB, b),
    };
    CodeSequence::new(
        family,
        chips,
        SequenceParams::Golay {
            length,
            delays: delays.to_vec(),
            weights: weights.to_vec(),
        },
    )
}

/// LS sequence `A || B` built from the Golay pair of `base_pair_length`,
/// using only the `{-1, +1}` codeset (no zero-valued interference-free window).
pub fn generate_ls(base_pair_length: usize) -> Result<CodeSequence> {
    let (delays, weights) = construction(base_pair_length).ok_or_else(|| {
        Error::invalid(format!(
            "unsupported LS base pair length {base_pair_length} (expected 2, 32, 64 or 128)"
        ))
    })?;
    let (mut a, b) = golay_pair(delays, weights)?;
    a.extend_from_slice(&b);
    CodeSequence::new(Family::LooselySynchronous, a, SequenceParams::Ls { base_pair_length })
}
