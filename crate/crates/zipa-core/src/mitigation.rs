//! Impulse-response mitigation.
//!
//! Devices that share a room can each measure the room's impulse response
//! with an exponential sine sweep; deconvolving recordings by the measured
//! response whitens the shared coloration. An adversary outside the room
//! can only estimate its channel at poor SNR, so deconvolution amplifies —
//! rather than removes — the difference between its recordings and the
//! legitimate ones. [`mitigation_experiment`] measures that amplification.

use crate::buffer::SampleBuffer;
use crate::channel::{
    convolve, db_to_power, perturbed_legit_ir, seeded_stream, simulate, wall_ir, ChannelScenario,
    ImpulseResponse, STREAM_EST_A, STREAM_EST_B, STREAM_EST_C,
};
use crate::error::{Error, Result};
use crate::fft::{convolve_full, next_pow2, FftPair};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;

/// Peak-detection threshold for [`estimate_ir`]: the compressed sweep's
/// peak must exceed this multiple of the result's RMS. The extreme values
/// of broadband noise reach roughly 5x RMS over the lengths involved here,
/// while a real sweep compresses to a peak orders of magnitude above RMS,
/// so 8x separates the two cleanly.
const PEAK_DETECTION_FACTOR: f64 = 8.0;

/// Parameters of an exponential (logarithmic) sine sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    pub amplitude: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            f_start_hz: 100.0,
            f_end_hz: 20_000.0,
            duration_s: 1.0,
            amplitude: 0.8,
        }
    }
}

impl SweepSpec {
    /// Check the band, duration, and amplitude against a target rate.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_start_hz.is_finite() && self.f_end_hz.is_finite())
            || self.f_start_hz <= 0.0
            || self.f_start_hz >= self.f_end_hz
            || self.f_end_hz >= nyquist
        {
            return Err(Error::InvalidSweep(format!(
                "band {} Hz .. {} Hz must satisfy 0 < start < end < Nyquist ({nyquist} Hz)",
                self.f_start_hz, self.f_end_hz
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::InvalidSweep(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::InvalidSweep(format!(
                "amplitude must lie in (0, 1], got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// Generate an exponential sweep and its inverse filter.
///
/// The sweep's instantaneous frequency rises exponentially from
/// `f_start_hz` to `f_end_hz`; the inverse is the time-reversed sweep with
/// an exponential amplitude taper compensating the pink energy slope,
/// normalized so `convolve(sweep, inverse)` peaks at 1 — a band-limited
/// impulse.
pub fn exp_sweep(spec: &SweepSpec, sample_rate: u32) -> Result<(SampleBuffer, SampleBuffer)> {
    spec.validate(sample_rate)?;
    let n = (spec.duration_s * sample_rate as f64).round() as usize;
    if n < 2 {
        return Err(Error::InvalidSweep(format!(
            "duration {}s yields fewer than 2 samples",
            spec.duration_s
        )));
    }
    let t_total = spec.duration_s;
    let k = (spec.f_end_hz / spec.f_start_hz).ln();
    let phase_scale = std::f64::consts::TAU * spec.f_start_hz * t_total / k;

    // Raised-cosine fades keep the ends from splattering broadband energy:
    // a couple of cycles of the local frequency at each end.
    let fade_in = ((2.0 * sample_rate as f64 / spec.f_start_hz) as usize).min(n / 4);
    let fade_out = ((2.0 * sample_rate as f64 / spec.f_end_hz) as usize)
        .max(64)
        .min(n / 4);
    let fade = |i: usize| -> f64 {
        let mut g = 1.0;
        if i < fade_in {
            g *= 0.5 - 0.5 * (std::f64::consts::PI * i as f64 / fade_in as f64).cos();
        }
        if i >= n - fade_out {
            let r = (n - 1 - i) as f64 / fade_out as f64;
            g *= 0.5 - 0.5 * (std::f64::consts::PI * r).cos();
        }
        g
    };

    let mut sweep = Vec::with_capacity(n);
    let mut inverse = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sample_rate as f64;
        let phase = phase_scale * ((t * k / t_total).exp() - 1.0);
        let x = spec.amplitude * fade(i) * phase.sin();
        sweep.push(x);
        // Weight each moment by its instantaneous frequency: the sweep
        // lingers on low frequencies, so they must count for less in the
        // inverse for the compressed pulse's spectrum to come out flat.
        // (Kept <= 1 by anchoring the taper at the high end.)
        inverse.push(x * ((t / t_total - 1.0) * k).exp());
    }
    inverse.reverse();

    // Normalize the inverse so the compressed pulse peaks at exactly 1.
    let pulse = convolve_full(&sweep, &inverse);
    let peak = pulse.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    if peak == 0.0 {
        return Err(Error::InvalidSweep("sweep is identically zero".into()));
    }
    for v in inverse.iter_mut() {
        *v /= peak;
    }

    Ok((
        SampleBuffer::trusted(sweep, sample_rate),
        SampleBuffer::trusted(inverse, sample_rate),
    ))
}

/// Recover a channel's impulse response from a recording of the sweep.
///
/// Convolving the recording with the inverse filter compresses the sweep
/// into a pulse at the channel delay; the response is read off from the
/// pulse onward, truncated to `ir_len` taps and normalized so its largest
/// tap is 1. A recording that never contains the sweep produces no
/// detectable pulse and is rejected.
pub fn estimate_ir(
    recorded: &SampleBuffer,
    inverse: &SampleBuffer,
    ir_len: usize,
) -> Result<ImpulseResponse> {
    if recorded.sample_rate() != inverse.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: recorded.sample_rate(),
            right: inverse.sample_rate(),
        });
    }
    if recorded.is_empty() || inverse.is_empty() {
        return Err(Error::Empty("sweep recording"));
    }
    if ir_len == 0 {
        return Err(Error::InvalidParameter("ir_len must be positive".into()));
    }

    let pulse = convolve_full(recorded.samples(), inverse.samples());
    let (peak_at, peak) = pulse
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.abs()))
        .fold((0, 0.0f64), |best, cur| if cur.1 > best.1 { cur } else { best });
    let rms = (pulse.iter().map(|v| v * v).sum::<f64>() / pulse.len() as f64).sqrt();
    if peak < PEAK_DETECTION_FACTOR * rms || peak == 0.0 {
        return Err(Error::SweepNotFound {
            peak,
            rms,
            factor: PEAK_DETECTION_FACTOR,
        });
    }

    let signed_peak = pulse[peak_at];
    let mut taps: Vec<f64> = pulse[peak_at..pulse.len().min(peak_at + ir_len)]
        .iter()
        .map(|v| v / signed_peak)
        .collect();
    taps.resize(ir_len, 0.0);
    ImpulseResponse::new(taps, recorded.sample_rate())
}

/// Wiener-regularized deconvolution: spectral division of the recording by
/// the response, damped by `eps` where the response has little energy, and
/// truncated back to the recording length.
pub fn deconvolve(recording: &SampleBuffer, ir: &ImpulseResponse, eps: f64) -> Result<SampleBuffer> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    if recording.sample_rate() != ir.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: recording.sample_rate(),
            right: ir.sample_rate(),
        });
    }
    if recording.is_empty() {
        return Err(Error::Empty("recording"));
    }

    let fft_len = next_pow2(recording.len() + ir.len());
    let pair = FftPair::new(fft_len);
    let y = pair.forward_real(recording.samples());
    let h = pair.forward_real(ir.taps());
    let x: Vec<Complex<f64>> = y
        .iter()
        .zip(&h)
        .map(|(yk, hk)| yk * hk.conj() / (hk.norm_sqr() + eps))
        .collect();
    let mut out = pair.inverse_real(x);
    out.truncate(recording.len());
    Ok(SampleBuffer::trusted(out, recording.sample_rate()))
}

/// RMS of the sample-wise difference after normalizing both inputs to unit
/// RMS: 0 for identical shapes, 2 for exact opposites, and about sqrt(2)
/// for unrelated signals.
pub fn rms_distance(a: &SampleBuffer, b: &SampleBuffer) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::Empty("rms distance input"));
    }
    let (ra, rb) = (a.rms(), b.rms());
    if ra == 0.0 || rb == 0.0 {
        return Err(Error::ZeroRms);
    }
    let n = a.len() as f64;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| {
            let d = x / ra - y / rb;
            d * d
        })
        .sum();
    Ok((sum / n).sqrt())
}

/// Knobs of the mitigation experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigationParams {
    pub sweep: SweepSpec,
    /// Taps kept of each estimated response.
    pub ir_len: usize,
    /// Deconvolution regularizer.
    pub eps: f64,
    /// SNR of the legitimate devices' sweep recordings (they share the
    /// quiet room with the sweep source).
    pub legit_est_snr_db: f64,
    /// SNR of the adversary's sweep recording: poor, because the adversary
    /// must measure through the wall from outside.
    pub adversary_est_snr_db: f64,
}

impl Default for MitigationParams {
    fn default() -> Self {
        Self {
            sweep: SweepSpec::default(),
            ir_len: 4096,
            eps: 1e-6,
            legit_est_snr_db: 35.0,
            adversary_est_snr_db: 0.0,
        }
    }
}

/// The two separation ratios the experiment compares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigationOutcome {
    /// distance(legit_a, adversary) / distance(legit_a, legit_b) on raw
    /// recordings.
    pub raw_ratio: f64,
    /// The same ratio after each device deconvolves its recording by its
    /// own estimated impulse response.
    pub deconvolved_ratio: f64,
}

fn noisy_sweep_recording(
    sweep: &SampleBuffer,
    channel: &ImpulseResponse,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SampleBuffer> {
    let clean = convolve(sweep, channel)?;
    if !snr_db.is_finite() {
        return Ok(clean);
    }
    let sigma = (clean.power() * db_to_power(-snr_db)).sqrt();
    let samples = clean
        .samples()
        .iter()
        .map(|&x| x + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(SampleBuffer::trusted(samples, clean.sample_rate()))
}

/// Run the full mitigation experiment on one scenario.
///
/// Records the session, then has each device measure its own channel with
/// the sweep — the legitimate devices at good SNR, the adversary at the
/// configured poor SNR — and deconvolves each recording by its own
/// estimate. Returns the legit/adversary separation ratio before and after
/// deconvolution.
pub fn mitigation_experiment(
    scenario: &ChannelScenario,
    params: &MitigationParams,
) -> Result<MitigationOutcome> {
    let rate = scenario.context.sample_rate();
    let rec = simulate(scenario)?;
    let (sweep, inverse) = exp_sweep(&params.sweep, rate)?;

    let d_ab = rms_distance(&rec.legit_a, &rec.legit_b)?;
    let d_ac = rms_distance(&rec.legit_a, &rec.adversary)?;
    if d_ab == 0.0 {
        return Err(Error::DegenerateScenario(
            "legitimate devices produced identical recordings",
        ));
    }
    let raw_ratio = d_ac / d_ab;

    // Each device's own channel, exactly as simulate used them. The
    // adversary measures its room path from its side of the wall; the
    // context it records additionally passed the wall, which it cannot
    // probe with a sweep — one reason its estimate helps it so little.
    let ir_b = perturbed_legit_ir(scenario)?;
    let wall = wall_ir(rate, scenario.wall_lowpass_hz, scenario.wall_atten_db)?;
    let ir_c = scenario.adversary_ir.compose(&wall)?;

    let estimate = |channel: &ImpulseResponse, snr_db: f64, stream: u64| -> Result<ImpulseResponse> {
        let mut rng = seeded_stream(scenario.seed, stream);
        let recorded = noisy_sweep_recording(&sweep, channel, snr_db, &mut rng)?;
        estimate_ir(&recorded, &inverse, params.ir_len)
    };
    let est_a = estimate(&scenario.legit_ir, params.legit_est_snr_db, STREAM_EST_A)?;
    let est_b = estimate(&ir_b, params.legit_est_snr_db, STREAM_EST_B)?;
    let est_c = estimate(&ir_c, params.adversary_est_snr_db, STREAM_EST_C)?;

    let dec_a = deconvolve(&rec.legit_a, &est_a, params.eps)?;
    let dec_b = deconvolve(&rec.legit_b, &est_b, params.eps)?;
    let dec_c = deconvolve(&rec.adversary, &est_c, params.eps)?;

    let d_ab_dec = rms_distance(&dec_a, &dec_b)?;
    let d_ac_dec = rms_distance(&dec_a, &dec_c)?;
    if d_ab_dec == 0.0 {
        return Err(Error::DegenerateScenario(
            "deconvolved legitimate recordings are identical",
        ));
    }

    Ok(MitigationOutcome {
        raw_ratio,
        deconvolved_ratio: d_ac_dec / d_ab_dec,
    })
}
