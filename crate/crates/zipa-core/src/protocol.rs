//! Pairing-protocol stages that sit on top of quantization: aligning two
//! devices' recordings, accepting or rejecting a candidate key, and
//! estimating the entropy of generated bit streams.

use crate::buffer::SampleBuffer;
use crate::error::{Error, Result};
use crate::fft::convolve_full;
use crate::quantize::BitSequence;
use std::collections::HashMap;

/// Default floor on the best correlation before alignment counts as found.
pub const DEFAULT_SYNC_FLOOR: f64 = 0.5;

/// Outcome of a successful alignment search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncResult {
    /// Offset (in samples, non-negative here since the search space is
    /// `0..=max_lag`) at which the snippet best matches the local buffer.
    pub offset: i64,
    /// Pearson correlation at that offset.
    pub correlation: f64,
}

/// Locate `snippet` inside `local` by maximizing the Pearson correlation
/// over lags `0..=max_lag`, using the default correlation floor.
pub fn synchronize(
    local: &SampleBuffer,
    snippet: &SampleBuffer,
    max_lag: usize,
) -> Result<SyncResult> {
    synchronize_with_floor(local, snippet, max_lag, DEFAULT_SYNC_FLOOR)
}

/// [`synchronize`] with an explicit correlation floor.
///
/// The lag scan runs as one FFT cross-correlation plus prefix sums, and the
/// winning lag's coefficient is recomputed directly so the returned value is
/// the plain-definition Pearson coefficient at that offset. Ties prefer the
/// smallest lag. A zero-variance snippet (or a search where every window is
/// degenerate) is a "no variance" error; a best correlation below the floor
/// is a "sync failed" error.
pub fn synchronize_with_floor(
    local: &SampleBuffer,
    snippet: &SampleBuffer,
    max_lag: usize,
    floor: f64,
) -> Result<SyncResult> {
    if snippet.is_empty() {
        return Err(Error::Empty("snippet"));
    }
    if local.sample_rate() != snippet.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: local.sample_rate(),
            right: snippet.sample_rate(),
        });
    }
    let n = snippet.len();
    let need = n + max_lag;
    if local.len() < need {
        return Err(Error::LagOutOfRange {
            need,
            have: local.len(),
        });
    }

    let s = snippet.samples();
    let seg = &local.samples()[..need];

    let s1: f64 = s.iter().sum();
    let s2: f64 = s.iter().map(|x| x * x).sum();
    let var_s = s2 - s1 * s1 / n as f64;
    // Relative threshold: variance indistinguishable from rounding noise of
    // the magnitudes involved counts as degenerate.
    let degenerate = |var: f64, sumsq: f64| var <= 1e-12 * sumsq.max(f64::MIN_POSITIVE);
    if degenerate(var_s, s2) {
        return Err(Error::NoVariance);
    }

    // Cross-correlation c[lag] = sum_i s[i] * seg[lag + i] for all lags at
    // once: convolve the segment with the reversed snippet and read the
    // aligned slice.
    let mut reversed = s.to_vec();
    reversed.reverse();
    let conv = convolve_full(seg, &reversed);

    // Windowed sums via prefix sums for the mean/variance terms.
    let mut p1 = vec![0.0f64; need + 1];
    let mut p2 = vec![0.0f64; need + 1];
    for (i, &x) in seg.iter().enumerate() {
        p1[i + 1] = p1[i] + x;
        p2[i + 1] = p2[i] + x * x;
    }

    let mut best: Option<(usize, f64)> = None;
    for lag in 0..=max_lag {
        let w1 = p1[lag + n] - p1[lag];
        let w2 = p2[lag + n] - p2[lag];
        let var_w = w2 - w1 * w1 / n as f64;
        if degenerate(var_w, w2) {
            continue;
        }
        let cov = conv[lag + n - 1] - s1 * w1 / n as f64;
        let r = cov / (var_s * var_w).sqrt();
        if best.is_none_or(|(_, br)| r > br) {
            best = Some((lag, r));
        }
    }

    let (lag, _) = best.ok_or(Error::NoVariance)?;
    // Recompute the winner's coefficient from the definition, so the
    // reported value does not inherit FFT rounding.
    let correlation = pearson(s, &seg[lag..lag + n]);
    if correlation < floor {
        return Err(Error::SyncFailed {
            best: correlation,
            floor,
        });
    }
    Ok(SyncResult {
        offset: lag as i64,
        correlation,
    })
}

/// Plain-definition Pearson coefficient of two equal-length slices.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

/// Verdict of comparing a local key against a remote one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconciliationOutcome {
    pub accepted: bool,
    pub mismatched_bits: usize,
    pub threshold: usize,
}

/// Accept the pairing when the Hamming distance between the two keys is at
/// most `threshold` (inclusive). Symmetric in its arguments.
pub fn reconcile(
    local: &BitSequence,
    remote: &BitSequence,
    threshold: usize,
) -> Result<ReconciliationOutcome> {
    if local.len() != remote.len() {
        return Err(Error::LengthMismatch {
            left: local.len(),
            right: remote.len(),
        });
    }
    if local.is_empty() {
        return Err(Error::Empty("keys"));
    }
    let mismatched_bits = local
        .bits()
        .iter()
        .zip(remote.bits())
        .filter(|(a, b)| a != b)
        .count();
    Ok(ReconciliationOutcome {
        accepted: mismatched_bits <= threshold,
        mismatched_bits,
        threshold,
    })
}

/// Plug-in (maximum-likelihood) Shannon entropy of the stream viewed as
/// non-overlapping `symbol_bits`-wide symbols, in bits per symbol.
///
/// A trailing partial symbol is discarded; fewer than two complete symbols
/// is an "insufficient data" error. The result lies in `[0, symbol_bits]`.
pub fn entropy_per_symbol(bits: &BitSequence, symbol_bits: usize) -> Result<f64> {
    if symbol_bits == 0 || symbol_bits > 24 {
        return Err(Error::InvalidSymbolWidth(symbol_bits));
    }
    let n_symbols = bits.len() / symbol_bits;
    if n_symbols < 2 {
        return Err(Error::InsufficientData { symbols: n_symbols });
    }
    let mut counts: HashMap<u32, u64> = HashMap::new();
    for s in 0..n_symbols {
        let mut symbol = 0u32;
        for b in 0..symbol_bits {
            symbol = (symbol << 1) | bits.bits()[s * symbol_bits + b] as u32;
        }
        *counts.entry(symbol).or_insert(0) += 1;
    }
    let total = n_symbols as f64;
    let mut h = 0.0;
    for &c in counts.values() {
        let p = c as f64 / total;
        h -= p * p.log2();
    }
    Ok(h)
}
