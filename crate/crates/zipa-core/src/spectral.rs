//! Windowed spectral analysis: slicing a buffer into non-overlapping frames
//! and summing spectral energy into frequency bands.
//!
//! The resulting frame-by-band grid is the shared language of the quantizer
//! (which turns it into bits) and the attack (which shapes a signal to force
//! chosen values into its cells).

use crate::buffer::SampleBuffer;
use crate::error::{Error, Result};
use crate::exec;
use crate::fft::ForwardFft;

/// Layout of the analysis grid: frame length in samples plus a band split
/// of the frequency interval `[band_lo_hz, band_hi_hz]`.
///
/// Bands partition the interval into `num_bands` equal widths. Transform
/// bins are assigned to the band containing their center frequency; bins
/// outside the interval are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct GridParams {
    frame_len: usize,
    num_bands: usize,
    band_lo_hz: f64,
    band_hi_hz: f64,
}

impl GridParams {
    /// Validated constructor. `frame_len` must be a power of two (the frame
    /// transform relies on it), `num_bands >= 2`, and `0 <= lo < hi`.
    pub fn new(frame_len: usize, num_bands: usize, band_lo_hz: f64, band_hi_hz: f64) -> Result<Self> {
        if frame_len == 0 || !frame_len.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "frame_len {frame_len} must be a nonzero power of two"
            )));
        }
        if num_bands < 2 {
            return Err(Error::InvalidGrid(format!(
                "num_bands {num_bands} must be at least 2"
            )));
        }
        if !(band_lo_hz.is_finite() && band_hi_hz.is_finite()) || band_lo_hz < 0.0 || band_lo_hz >= band_hi_hz {
            return Err(Error::InvalidGrid(format!(
                "band range [{band_lo_hz}, {band_hi_hz}] must satisfy 0 <= lo < hi"
            )));
        }
        Ok(Self {
            frame_len,
            num_bands,
            band_lo_hz,
            band_hi_hz,
        })
    }

    /// The layout used throughout the experiments: 1024-sample frames with
    /// 16 bands across 1-9 kHz, sized for 48 kHz audio.
    pub fn default_48k() -> Self {
        Self::new(1024, 16, 1000.0, 9000.0).expect("default grid is valid")
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn num_bands(&self) -> usize {
        self.num_bands
    }

    pub fn band_lo_hz(&self) -> f64 {
        self.band_lo_hz
    }

    pub fn band_hi_hz(&self) -> f64 {
        self.band_hi_hz
    }

    pub fn band_width_hz(&self) -> f64 {
        (self.band_hi_hz - self.band_lo_hz) / self.num_bands as f64
    }

    /// Center frequency of band `j`.
    pub fn band_center_hz(&self, j: usize) -> f64 {
        assert!(j < self.num_bands);
        self.band_lo_hz + (j as f64 + 0.5) * self.band_width_hz()
    }

    /// Which band holds frequency `hz`, if any.
    fn band_of(&self, hz: f64) -> Option<usize> {
        if hz < self.band_lo_hz || hz > self.band_hi_hz {
            return None;
        }
        let j = ((hz - self.band_lo_hz) / self.band_width_hz()) as usize;
        Some(j.min(self.num_bands - 1))
    }
}

/// A frames-by-bands grid of non-negative spectral energies, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMatrix {
    frames: usize,
    bands: usize,
    values: Vec<f64>,
}

impl EnergyMatrix {
    /// Build from row-major values; every entry must be finite and >= 0.
    pub fn new(frames: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != frames * bands {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: frames * bands,
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy value at flat index {idx} is negative or non-finite"
            )));
        }
        Ok(Self {
            frames,
            bands,
            values,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn value(&self, frame: usize, band: usize) -> f64 {
        assert!(frame < self.frames && band < self.bands);
        self.values[frame * self.bands + band]
    }

    pub fn row(&self, frame: usize) -> &[f64] {
        assert!(frame < self.frames);
        &self.values[frame * self.bands..(frame + 1) * self.bands]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows rotated downward by `k` (row 0 becomes row k), same shape.
    pub fn rotated_rows(&self, k: usize) -> EnergyMatrix {
        let k = k % self.frames.max(1);
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.frames {
            let src = (i + self.frames - k) % self.frames;
            values.extend_from_slice(&self.values[src * self.bands..(src + 1) * self.bands]);
        }
        EnergyMatrix {
            frames: self.frames,
            bands: self.bands,
            values,
        }
    }
}

/// Compute the frame-by-band energy grid of `buffer`.
///
/// Frames are consecutive, non-overlapping, rectangular-windowed slices of
/// `frame_len` samples; a trailing partial frame is discarded. Each frame is
/// transformed and `|X_k|^2` is accumulated into the band holding bin `k`'s
/// center frequency, with one-sided weights (2/N interior, 1/N at DC and
/// Nyquist) so that a row sums to that frame's time-domain energy restricted
/// to the band interval (Parseval).
///
/// Needs at least two full frames and a band range below Nyquist.
pub fn energy_matrix(buffer: &SampleBuffer, params: &GridParams) -> Result<EnergyMatrix> {
    let n = params.frame_len;
    let rate = buffer.sample_rate() as f64;
    let nyquist = rate / 2.0;
    if params.band_hi_hz > nyquist {
        return Err(Error::InvalidBandRange {
            lo: params.band_lo_hz,
            hi: params.band_hi_hz,
            nyquist,
        });
    }
    let frames = buffer.len() / n;
    if frames < 2 {
        return Err(Error::InsufficientFrames {
            have: buffer.len(),
            frames,
            need_frames: 2,
        });
    }

    // Bin k of an N-point transform is centered at k * rate / N. Precompute
    // each one-sided bin's target band and Parseval weight.
    let half = n / 2;
    let mut assignment: Vec<Option<(usize, f64)>> = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let hz = k as f64 * rate / n as f64;
        let weight = if k == 0 || k == half { 1.0 } else { 2.0 } / n as f64;
        assignment.push(params.band_of(hz).map(|j| (j, weight)));
    }

    let fft = ForwardFft::new(n);
    let samples = buffer.samples();
    let bands = params.num_bands;
    let rows: Vec<Vec<f64>> = exec::map_indexed(frames, |i| {
        let spectrum = fft.transform(&samples[i * n..(i + 1) * n]);
        let mut row = vec![0.0; bands];
        for (k, slot) in assignment.iter().enumerate() {
            if let Some((j, w)) = slot {
                row[*j] += w * spectrum[k].norm_sqr();
            }
        }
        row
    });

    let mut values = Vec::with_capacity(frames * bands);
    for row in rows {
        values.extend_from_slice(&row);
    }
    EnergyMatrix::new(frames, bands, values)
}
