//! Bit quantization of an energy grid, plus bit-sequence utilities.
//!
//! Each output bit looks at a 2x2 patch of the grid: the energy step between
//! adjacent bands in one frame, minus the same step in the previous frame.
//! A strictly positive difference emits 1, anything else (including an exact
//! tie) emits 0. Scanning runs row-major — frames outermost — so two devices
//! that agree on the grid agree on bit order.

use crate::error::{Error, Result};
use crate::spectral::EnergyMatrix;

/// A sequence of bits produced by quantization; also the unit the protocol
/// stages (reconciliation, entropy estimation) operate on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSequence {
    bits: Vec<u8>, // each element is 0 or 1
}

impl BitSequence {
    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self {
            bits: bits.into_iter().map(u8::from).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i] != 0
    }

    /// Raw 0/1 bytes, one per bit.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().map(|&b| b != 0)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// First `n` bits as a new sequence.
    pub fn truncated(&self, n: usize) -> BitSequence {
        BitSequence {
            bits: self.bits[..n.min(self.bits.len())].to_vec(),
        }
    }

    /// Concatenate several sequences.
    pub fn concat<'a, I: IntoIterator<Item = &'a BitSequence>>(parts: I) -> BitSequence {
        let mut bits = Vec::new();
        for p in parts {
            bits.extend_from_slice(&p.bits);
        }
        BitSequence { bits }
    }

    /// Hex encoding, most-significant bit first; the final nibble is padded
    /// with trailing zero bits when the length is not a multiple of four.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.bits.len().div_ceil(4));
        for chunk in self.bits.chunks(4) {
            let mut nibble = 0u8;
            for (pos, &bit) in chunk.iter().enumerate() {
                nibble |= bit << (3 - pos);
            }
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    /// Inverse of [`to_hex`]: decode `bit_len` bits from a hex string.
    /// The padding bits beyond `bit_len` must be zero.
    pub fn from_hex(hex: &str, bit_len: usize) -> Result<Self> {
        if bit_len > hex.len() * 4 {
            return Err(Error::InvalidHex(format!(
                "{bit_len} bits requested but '{hex}' only holds {}",
                hex.len() * 4
            )));
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let nibble = c
                .to_digit(16)
                .ok_or_else(|| Error::InvalidHex(format!("non-hex character '{c}'")))?
                as u8;
            for pos in 0..4 {
                bits.push((nibble >> (3 - pos)) & 1);
            }
        }
        if bits[bit_len..].iter().any(|&b| b != 0) {
            return Err(Error::InvalidHex(format!(
                "nonzero padding past bit {bit_len} in '{hex}'"
            )));
        }
        bits.truncate(bit_len);
        Ok(Self { bits })
    }
}

/// The four-cell difference the quantizer thresholds at grid position
/// (`frame`, `band`): frames `frame` and `frame - 1`, bands `band` and
/// `band + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellDiff {
    pub frame: usize,
    pub band: usize,
    pub value: f64,
}

/// Compute the thresholded difference at one grid position.
/// Requires `1 <= frame < frames` and `band < bands - 1`.
pub fn cell_diff(m: &EnergyMatrix, frame: usize, band: usize) -> CellDiff {
    assert!(frame >= 1 && frame < m.frames() && band + 1 < m.bands());
    let value = m.value(frame, band) - m.value(frame, band + 1)
        - (m.value(frame - 1, band) - m.value(frame - 1, band + 1));
    CellDiff { frame, band, value }
}

/// Quantize an energy grid into `(frames - 1) * (bands - 1)` bits.
///
/// Bit (i, j), scanned with frames outermost, is 1 exactly when the
/// four-cell difference at that position is strictly positive; ties give 0.
/// The rule only sees differences, so any positive rescaling of the grid or
/// any per-frame/per-band additive offset leaves the output unchanged.
pub fn quantize(m: &EnergyMatrix) -> Result<BitSequence> {
    if m.frames() < 2 || m.bands() < 2 {
        return Err(Error::GridTooSmall {
            frames: m.frames(),
            bands: m.bands(),
        });
    }
    let mut bits = Vec::with_capacity((m.frames() - 1) * (m.bands() - 1));
    for i in 1..m.frames() {
        for j in 0..m.bands() - 1 {
            bits.push(u8::from(cell_diff(m, i, j).value > 0.0));
        }
    }
    Ok(BitSequence { bits })
}

/// Fraction of positions where two equal-length, non-empty sequences differ.
pub fn bit_error_rate(a: &BitSequence, b: &BitSequence) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("bit sequences"));
    }
    let mismatches = a
        .bits
        .iter()
        .zip(&b.bits)
        .filter(|(x, y)| x != y)
        .count();
    Ok(mismatches as f64 / a.len() as f64)
}
