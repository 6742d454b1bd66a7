//! Mono sample buffers and WAV file I/O.
//!
//! Samples are `f64` throughout; the numeric contracts elsewhere in the
//! crate (Parseval checks, convolution oracles) need the headroom. WAV
//! support covers little-endian RIFF with 16-bit PCM or 32-bit float
//! payloads. Multichannel files collapse to channel 0 with a warning.

use crate::error::{Error, Result};
use std::path::Path;

/// An immutable mono audio buffer tagged with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl SampleBuffer {
    /// Build a buffer, rejecting a zero sample rate or non-finite samples.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if let Some(idx) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Internal constructor for samples we produced ourselves.
    pub(crate) fn trusted(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(sample_rate > 0);
        debug_assert!(samples.iter().all(|x| x.is_finite()));
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Mean squared sample value.
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }
}

/// Sample encodings supported for WAV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Pcm16,
    Float32,
}

/// What `read_wav` found in the file, for callers that care about
/// provenance (channel count before the mono collapse, encoding).
#[derive(Debug, Clone, Copy)]
pub struct WavSourceInfo {
    pub channels: u16,
    pub format: WavFormat,
}

/// Read a WAV file into a mono buffer.
///
/// Multichannel files keep channel 0 only; a warning is logged when that
/// happens. Encodings other than 16-bit PCM and 32-bit float are rejected.
pub fn read_wav<P: AsRef<Path>>(path: P) -> Result<SampleBuffer> {
    let (buffer, info) = read_wav_report(&path)?;
    if info.channels > 1 {
        log::warn!(
            "{}: {} channels; keeping channel 0 only",
            path.as_ref().display(),
            info.channels
        );
    }
    Ok(buffer)
}

/// Like [`read_wav`] but also reports the source layout.
pub fn read_wav_report<P: AsRef<Path>>(path: P) -> Result<(SampleBuffer, WavSourceInfo)> {
    let mut reader = hound::WavReader::open(&path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1);

    let (samples, format) = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => {
            let raw: std::result::Result<Vec<i16>, _> = reader.samples::<i16>().collect();
            let raw = raw.map_err(wav_err)?;
            // Same full-scale factor as the writer, so a round trip costs
            // at most half a quantization step.
            let scaled = raw
                .iter()
                .step_by(channels as usize)
                .map(|&s| s as f64 / 32767.0)
                .collect();
            (scaled, WavFormat::Pcm16)
        }
        (hound::SampleFormat::Float, 32) => {
            let raw: std::result::Result<Vec<f32>, _> = reader.samples::<f32>().collect();
            let raw = raw.map_err(wav_err)?;
            let scaled = raw
                .iter()
                .step_by(channels as usize)
                .map(|&s| s as f64)
                .collect();
            (scaled, WavFormat::Float32)
        }
        (fmt, bits) => {
            return Err(Error::Wav(format!(
                "unsupported encoding: {bits}-bit {}",
                match fmt {
                    hound::SampleFormat::Int => "PCM",
                    hound::SampleFormat::Float => "float",
                }
            )));
        }
    };

    let buffer = SampleBuffer::new(samples, spec.sample_rate)?;
    Ok((
        buffer,
        WavSourceInfo {
            channels: spec.channels,
            format,
        },
    ))
}

/// Write a mono buffer to a WAV file in the requested encoding.
///
/// PCM output clamps to [-1, 1] and rounds; float output casts to `f32`.
pub fn write_wav<P: AsRef<Path>>(path: P, buffer: &SampleBuffer, format: WavFormat) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    match format {
        WavFormat::Pcm16 => {
            for &x in buffer.samples() {
                let clamped = x.clamp(-1.0, 1.0);
                let q = (clamped * 32767.0).round() as i16;
                writer.write_sample(q).map_err(wav_err)?;
            }
        }
        WavFormat::Float32 => {
            for &x in buffer.samples() {
                writer.write_sample(x as f32).map_err(wav_err)?;
            }
        }
    }
    writer.finalize().map_err(wav_err)
}

fn wav_err(e: hound::Error) -> Error {
    Error::Wav(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_sample_rate() {
        assert!(matches!(
            SampleBuffer::new(vec![0.0], 0),
            Err(Error::ZeroSampleRate)
        ));
    }

    #[test]
    fn rejects_non_finite_samples() {
        assert!(matches!(
            SampleBuffer::new(vec![0.0, f64::NAN], 48_000),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn silence_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("silence.wav");
        let buf = SampleBuffer::new(vec![0.0; 480], 48_000).unwrap();
        write_wav(&path, &buf, WavFormat::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 48_000);
        assert_eq!(back.samples(), buf.samples());
    }

    #[test]
    fn sine_round_trip_error_is_within_one_lsb() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sine.wav");
        let rate = 48_000u32;
        let samples: Vec<f64> = (0..rate as usize)
            .map(|i| (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin() * 0.9)
            .collect();
        let buf = SampleBuffer::new(samples, rate).unwrap();
        write_wav(&path, &buf, WavFormat::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        let max_err = buf
            .samples()
            .iter()
            .zip(back.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err <= 1.0 / 32768.0, "max error {max_err}");
    }

    #[test]
    fn float_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f32.wav");
        let samples: Vec<f64> = (0..1000).map(|i| ((i as f64) * 0.013).sin()).collect();
        let buf = SampleBuffer::new(samples, 44_100).unwrap();
        write_wav(&path, &buf, WavFormat::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        for (a, b) in buf.samples().iter().zip(back.samples()) {
            assert_eq!(*a as f32, *b as f32);
        }
    }

    #[test]
    fn stereo_collapses_to_channel_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        // Left channel counts up, right channel is constant noise.
        for i in 0..100i16 {
            writer.write_sample(i * 100).unwrap();
            writer.write_sample(-32768i16).unwrap();
        }
        writer.finalize().unwrap();

        let (buf, info) = read_wav_report(&path).unwrap();
        assert_eq!(info.channels, 2);
        assert_eq!(buf.len(), 100);
        for (i, &x) in buf.samples().iter().enumerate() {
            assert!((x - (i as f64 * 100.0) / 32767.0).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_header_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bogus.wav");
        std::fs::write(&path, b"RIFFnot really a wav file").unwrap();
        assert!(matches!(read_wav(&path), Err(Error::Wav(_))));
    }

    #[test]
    fn unsupported_encoding_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pcm8.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8_000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..16 {
            writer.write_sample(0i8).unwrap();
        }
        writer.finalize().unwrap();
        match read_wav(&path) {
            Err(Error::Wav(msg)) => assert!(msg.contains("unsupported encoding"), "{msg}"),
            other => panic!("expected unsupported-encoding error, got {other:?}"),
        }
    }
}
