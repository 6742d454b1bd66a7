//! Acoustic scenario simulation.
//!
//! Models the geometry of the experiments: a context source inside the
//! protected room, two legitimate devices inside, and an adversary outside
//! behind an attenuating wall who both records the (muffled) context and
//! plays the injection signal. Everything is rendered by superposition:
//! room-colored context, gain-scaled injection, and seeded device noise.

use crate::buffer::SampleBuffer;
use crate::error::{Error, Result};
use crate::fft::convolve_full;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::path::PathBuf;

/// Finite impulse response of a room or channel segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    taps: Vec<f64>,
    sample_rate: u32,
}

impl ImpulseResponse {
    /// Validated constructor: taps must be non-empty, finite, and not all
    /// zero (an all-zero channel transmits nothing and breaks deconvolution).
    pub fn new(taps: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::ZeroSampleRate);
        }
        if taps.is_empty() {
            return Err(Error::InvalidImpulse("impulse response has no taps"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidImpulse("impulse response has non-finite taps"));
        }
        if taps.iter().all(|&t| t == 0.0) {
            return Err(Error::InvalidImpulse("impulse response is identically zero"));
        }
        Ok(Self { taps, sample_rate })
    }

    /// The identity channel: a single unit tap.
    pub fn unit(sample_rate: u32) -> Self {
        Self {
            taps: vec![1.0],
            sample_rate,
        }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Sum of squared taps.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t * t).sum()
    }

    /// Series composition: the channel that applies `self` then `other`.
    pub fn compose(&self, other: &ImpulseResponse) -> Result<ImpulseResponse> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::SampleRateMismatch {
                left: self.sample_rate,
                right: other.sample_rate,
            });
        }
        ImpulseResponse::new(convolve_full(&self.taps, &other.taps), self.sample_rate)
    }
}

/// Linear convolution of a signal with a channel, truncated to the input
/// length so recordings stay time-aligned with their source.
pub fn convolve(buffer: &SampleBuffer, ir: &ImpulseResponse) -> Result<SampleBuffer> {
    if buffer.sample_rate() != ir.sample_rate() {
        return Err(Error::SampleRateMismatch {
            left: buffer.sample_rate(),
            right: ir.sample_rate(),
        });
    }
    if ir.len() == 1 {
        let g = ir.taps()[0];
        let samples = buffer.samples().iter().map(|&x| g * x).collect();
        return Ok(SampleBuffer::trusted(samples, buffer.sample_rate()));
    }
    let mut full = convolve_full(buffer.samples(), ir.taps());
    full.truncate(buffer.len());
    Ok(SampleBuffer::trusted(full, buffer.sample_rate()))
}

/// Mapping from nominal loudness levels (dBA) to injection-to-context
/// power ratios (dB).
///
/// Sound-pressure levels are physical quantities a pure simulation cannot
/// realize, so each level is translated to a power ratio at the receiving
/// device through this table. The default values are calibration artifacts
/// chosen so the bit-error-rate ladder of the gain experiment comes out in
/// the intended order; only the monotone ordering is meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    /// (level_dba, gain_db), sorted ascending by level.
    entries: Vec<(f64, f64)>,
}

impl Default for CalibrationTable {
    fn default() -> Self {
        Self {
            entries: vec![(50.0, -15.0), (70.0, -3.0), (85.0, 6.0), (95.0, 12.0)],
        }
    }
}

impl CalibrationTable {
    /// Validated constructor: levels must be distinct and gains strictly
    /// increasing with level (louder injection, higher ratio).
    pub fn new(mut entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidCalibration("table is empty".into()));
        }
        if entries
            .iter()
            .any(|(l, g)| !l.is_finite() || !g.is_finite())
        {
            return Err(Error::InvalidCalibration("non-finite entry".into()));
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidCalibration(format!(
                    "duplicate level {}",
                    pair[0].0
                )));
            }
            if pair[0].1 >= pair[1].1 {
                return Err(Error::InvalidCalibration(format!(
                    "gain must increase with level, but {} dBA -> {} dB and {} dBA -> {} dB",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn levels(&self) -> Vec<f64> {
        self.entries.iter().map(|(l, _)| *l).collect()
    }

    /// Look up the power ratio for a level, erroring with the list of known
    /// levels on a miss.
    pub fn gain_for_level(&self, level_dba: f64) -> Result<f64> {
        self.entries
            .iter()
            .find(|(l, _)| *l == level_dba)
            .map(|(_, g)| *g)
            .ok_or_else(|| Error::UnknownLevel {
                level: level_dba,
                known: self.levels(),
            })
    }
}

/// What plays inside the room while keys are being generated.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextKind {
    /// Nonstationary pink-ish noise with conversational bursts and pauses.
    SpeechLike { rms: f64 },
    /// Stationary white noise.
    White { rms: f64 },
    /// A mono recording loaded from disk, passed through unchanged.
    Wav(PathBuf),
}

/// Generate (or load) a context signal. Synthetic kinds are exactly
/// reproducible per seed and normalized to the requested RMS; the WAV kind
/// is a passthrough of the file and ignores `duration_s` and `seed`.
pub fn synth_context(
    kind: &ContextKind,
    duration_s: f64,
    sample_rate: u32,
    seed: u64,
) -> Result<SampleBuffer> {
    if sample_rate == 0 {
        return Err(Error::ZeroSampleRate);
    }
    match kind {
        ContextKind::Wav(path) => crate::buffer::read_wav(path),
        ContextKind::White { rms } => {
            let n = duration_samples(duration_s, sample_rate)?;
            check_rms_target(*rms)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut samples: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            normalize_rms(&mut samples, *rms);
            Ok(SampleBuffer::trusted(samples, sample_rate))
        }
        ContextKind::SpeechLike { rms } => {
            let n = duration_samples(duration_s, sample_rate)?;
            check_rms_target(*rms)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut samples = speech_like(n, sample_rate, &mut rng);
            normalize_rms(&mut samples, *rms);
            Ok(SampleBuffer::trusted(samples, sample_rate))
        }
    }
}

fn duration_samples(duration_s: f64, sample_rate: u32) -> Result<usize> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n = (duration_s * sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::InvalidParameter(format!(
            "duration {duration_s}s yields zero samples at {sample_rate} Hz"
        )));
    }
    Ok(n)
}

fn check_rms_target(rms: f64) -> Result<()> {
    if !(rms.is_finite() && rms > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target RMS must be positive, got {rms}"
        )));
    }
    Ok(())
}

fn normalize_rms(samples: &mut [f64], target: f64) {
    let power: f64 = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    if power > 0.0 {
        let scale = target / power.sqrt();
        for x in samples.iter_mut() {
            *x *= scale;
        }
    }
}

/// A two-pole bandpass section (constant peak gain) whose center frequency
/// can be retuned while it runs.
struct Resonator {
    b0: f64,
    a1: f64,
    a2: f64,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(center_hz: f64, q: f64, rate: f64) -> Self {
        let mut r = Resonator {
            b0: 0.0,
            a1: 0.0,
            a2: 0.0,
            x1: 0.0,
            x2: 0.0,
            y1: 0.0,
            y2: 0.0,
        };
        r.tune(center_hz, q, rate);
        r
    }

    fn tune(&mut self, center_hz: f64, q: f64, rate: f64) {
        let omega = std::f64::consts::TAU * center_hz / rate;
        let alpha = omega.sin() / (2.0 * q);
        let a0 = 1.0 + alpha;
        self.b0 = alpha / a0;
        self.a1 = -2.0 * omega.cos() / a0;
        self.a2 = (1.0 - alpha) / a0;
    }

    fn tick(&mut self, x: f64) -> f64 {
        let y = self.b0 * (x - self.x2) - self.a1 * self.y1 - self.a2 * self.y2;
        self.x2 = self.x1;
        self.x1 = x;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Pink-ish noise (Paul Kellet's filter) under a burst/pause envelope with
/// 2-8 Hz amplitude modulation during bursts, imitating conversation
/// dynamics: sustained utterances separated by near-silent gaps.
///
/// Two slowly roving resonators ride on the pink bed the way formants ride
/// on breath noise, concentrating most of the mid-band power into one or
/// two narrow moving bands at a time, and a lognormal loudness drift gives
/// utterances the wide level range of real conversation. Both matter for
/// how this context competes with narrowband interference: single
/// time-frequency cells frequently hold far more, or far less, than the
/// average share of the total power.
fn speech_like(n: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rate = sample_rate as f64;
    // Kellet's pink filter state.
    let (mut b0, mut b1, mut b2, mut b3, mut b4, mut b5, mut b6) =
        (0.0f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut pink = |rng: &mut ChaCha8Rng| -> f64 {
        let w: f64 = rng.sample(StandardNormal);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        let out = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
        out * 0.11
    };

    // Voiced energy concentrates low: roll the bed off above the first
    // harmonics so the upper bands hold almost none of the long-term power,
    // the way conversational spectra fall steeply past a few kilohertz.
    const BED_POLE_HZ: f64 = 700.0;
    let bed_alpha = 1.0 - (-std::f64::consts::TAU * BED_POLE_HZ / rate).exp();
    let mut bed_lp = 0.0f64;

    // Two formants rove in separate halves of the speech band: a strong
    // low one and a weaker high one, so the context presents narrowband
    // power at two distinct levels on top of the rolled-off bed. The mixes
    // are amplitude ratios against the bed after RMS balancing.
    const F1_RANGE_HZ: (f64, f64) = (1600.0, 3400.0);
    const F2_RANGE_HZ: (f64, f64) = (3200.0, 4800.0);
    const FORMANT_Q: f64 = 16.0;
    const F1_MIX: f64 = 1.3;
    const F2_MIX: f64 = 0.8;
    // Lognormal loudness drift: sigma in nats and its correlation time.
    const LOUDNESS_SIGMA: f64 = 0.9;
    const LOUDNESS_TAU_S: f64 = 0.35;
    const RETUNE: usize = 480; // coefficient/envelope update cadence, 10 ms

    let mut centers = [2000.0f64, 4000.0];
    let ranges = [F1_RANGE_HZ, F2_RANGE_HZ];
    let mut formants = [
        Resonator::new(centers[0], FORMANT_Q, rate),
        Resonator::new(centers[1], FORMANT_Q, rate),
    ];
    let mut loudness = 0.0f64; // AR(1) state, unit variance
    let rho = (-(RETUNE as f64 / rate) / LOUDNESS_TAU_S).exp();

    let ramp = (0.010 * rate) as usize; // 10 ms attack/release
    let mut pink_bed = Vec::with_capacity(n);
    let mut formant_parts = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut envelope = Vec::with_capacity(n);
    let mut speaking = true;
    while pink_bed.len() < n {
        let seg_s = if speaking {
            0.8 + 1.7 * rng.random::<f64>()
        } else {
            0.15 + 0.35 * rng.random::<f64>()
        };
        let seg_len = ((seg_s * rate) as usize).max(2 * ramp + 1);
        let mod_hz = 2.0 + 6.0 * rng.random::<f64>();
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        for s in 0..seg_len {
            if pink_bed.len() == n {
                break;
            }
            if pink_bed.len() % RETUNE == 0 {
                // Random-walk the formant centers in log frequency,
                // reflecting at their range edges, and step the loudness.
                for ((center, resonator), (lo_hz, hi_hz)) in
                    centers.iter_mut().zip(formants.iter_mut()).zip(ranges)
                {
                    let mut lf = center.ln() + 0.06 * rng.sample::<f64, _>(StandardNormal);
                    let (lo, hi) = (lo_hz.ln(), hi_hz.ln());
                    if lf < lo {
                        lf = 2.0 * lo - lf;
                    }
                    if lf > hi {
                        lf = 2.0 * hi - lf;
                    }
                    *center = lf.exp().clamp(lo_hz, hi_hz);
                    resonator.tune(*center, FORMANT_Q, rate);
                }
                loudness = rho * loudness
                    + (1.0 - rho * rho).sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            let gate = if s < ramp {
                0.5 - 0.5 * (std::f64::consts::PI * s as f64 / ramp as f64).cos()
            } else if s >= seg_len - ramp {
                let r = (seg_len - 1 - s) as f64 / ramp as f64;
                0.5 - 0.5 * (std::f64::consts::PI * r).cos()
            } else {
                1.0
            };
            let env = if speaking {
                let t = s as f64 / rate;
                let modulation =
                    0.5 - 0.5 * (std::f64::consts::TAU * mod_hz * t + phase).cos();
                gate * (0.35 + 0.65 * modulation) * (LOUDNESS_SIGMA * loudness).exp()
            } else {
                // Residual breath noise: far below the 10%-of-peak pause
                // threshold but never exactly silent.
                0.01
            };
            bed_lp += bed_alpha * (pink(rng) - bed_lp);
            pink_bed.push(bed_lp);
            let excitation: f64 = rng.sample(StandardNormal);
            formant_parts[0].push(formants[0].tick(excitation));
            formant_parts[1].push(formants[1].tick(excitation));
            envelope.push(env);
        }
        speaking = !speaking;
    }

    // Balance each formant against the pink bed by overall RMS, then mix
    // under the shared envelope.
    let power = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
    let pink_power = power(&pink_bed);
    let g1 = F1_MIX * (pink_power / power(&formant_parts[0])).sqrt();
    let g2 = F2_MIX * (pink_power / power(&formant_parts[1])).sqrt();
    (0..n)
        .map(|i| envelope[i] * (pink_bed[i] + g1 * formant_parts[0][i] + g2 * formant_parts[1][i]))
        .collect()
}

/// Low-pass wall transmission: a windowed-sinc filter with unity passband
/// gain scaled by the attenuation, or a single scaled tap when the cutoff
/// does not restrict the band.
/// How fast the wall's transmission falls off above its corner frequency.
/// Double-leaf partitions lose transmission rapidly with frequency, and the
/// gradual slope (rather than a brickwall cutoff) is what lets a loudness
/// sweep drag the injected pattern above the room floor band by band.
pub const WALL_ROLLOFF_DB_PER_OCTAVE: f64 = 17.5;

pub fn wall_ir(sample_rate: u32, lowpass_hz: f64, atten_db: f64) -> Result<ImpulseResponse> {
    if sample_rate == 0 {
        return Err(Error::ZeroSampleRate);
    }
    if !atten_db.is_finite() || !lowpass_hz.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wall parameters must be finite, got lowpass {lowpass_hz} Hz at {atten_db} dB"
        )));
    }
    let amp = db_to_amplitude(atten_db);
    let nyquist = sample_rate as f64 / 2.0;
    if lowpass_hz <= 0.0 || lowpass_hz >= nyquist {
        return ImpulseResponse::new(vec![amp], sample_rate);
    }
    // Linear-phase FIR by frequency sampling: flat at `atten_db` up to the
    // corner, then falling at WALL_ROLLOFF_DB_PER_OCTAVE.
    let half = 128usize;
    let len = 2 * half + 1;
    let magnitude = |hz: f64| -> f64 {
        if hz <= lowpass_hz {
            amp
        } else {
            amp * db_to_amplitude(-WALL_ROLLOFF_DB_PER_OCTAVE * (hz / lowpass_hz).log2())
        }
    };
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            let m = i as f64 - half as f64;
            let mut acc = magnitude(0.0);
            for k in 1..=half {
                let hz = k as f64 * sample_rate as f64 / len as f64;
                acc += 2.0 * magnitude(hz) * (std::f64::consts::TAU * k as f64 * m / len as f64).cos();
            }
            // Hamming window against frequency-sampling ripple.
            let w = 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / (len - 1) as f64).cos();
            acc / len as f64 * w
        })
        .collect();
    // The window shaves a little passband gain; restore the DC level.
    let dc: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t *= amp / dc;
    }
    ImpulseResponse::new(taps, sample_rate)
}

/// A small synthetic room: unit direct path plus an exponentially decaying
/// diffuse tail whose total energy sits `reflect_db` below the direct path.
pub fn synthetic_room_ir(
    sample_rate: u32,
    len: usize,
    reflect_db: f64,
    seed: u64,
) -> Result<ImpulseResponse> {
    if sample_rate == 0 {
        return Err(Error::ZeroSampleRate);
    }
    if len == 0 {
        return Err(Error::InvalidImpulse("impulse response has no taps"));
    }
    let mut taps = vec![0.0f64; len];
    taps[0] = 1.0;
    if len > 1 && reflect_db > f64::NEG_INFINITY {
        if !reflect_db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reflected energy must be finite or -inf, got {reflect_db}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tail_energy = 0.0;
        for (k, tap) in taps.iter_mut().enumerate().skip(1) {
            let decay = (-4.0 * k as f64 / len as f64).exp();
            let v: f64 = rng.sample::<f64, _>(StandardNormal) * decay;
            *tap = v;
            tail_energy += v * v;
        }
        let scale = (db_to_power(reflect_db) / tail_energy).sqrt();
        for tap in taps.iter_mut().skip(1) {
            *tap *= scale;
        }
    }
    ImpulseResponse::new(taps, sample_rate)
}

/// A room dominated by a few strong discrete echoes (plus a faint tail):
/// heavy comb filtering that makes band energies highly sensitive to time
/// shifts, unlike the smooth diffuse tail of [`synthetic_room_ir`].
pub fn dispersive_room_ir(sample_rate: u32, seed: u64) -> Result<ImpulseResponse> {
    if sample_rate == 0 {
        return Err(Error::ZeroSampleRate);
    }
    let rate = sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Echo delays in milliseconds, jittered so no seed aligns with a frame.
    let echoes = [(3.1, 0.55), (5.7, -0.35), (8.9, 0.22)];
    let jitter: Vec<f64> = (0..echoes.len())
        .map(|_| 0.9 + 0.2 * rng.random::<f64>())
        .collect();
    let max_delay = echoes
        .iter()
        .zip(&jitter)
        .map(|((ms, _), j)| (ms * j / 1000.0 * rate) as usize)
        .max()
        .unwrap_or(0);
    let tail = 128usize;
    let mut taps = vec![0.0f64; max_delay + 1 + tail];
    taps[0] = 1.0;
    for ((ms, gain), j) in echoes.iter().zip(&jitter) {
        let at = (ms * j / 1000.0 * rate) as usize;
        taps[at] += gain;
    }
    let tail_scale = db_to_amplitude(-18.0) / (tail as f64).sqrt();
    for k in 0..tail {
        let decay = (-3.0 * k as f64 / tail as f64).exp();
        taps[max_delay + 1 + k] += rng.sample::<f64, _>(StandardNormal) * tail_scale * decay;
    }
    ImpulseResponse::new(taps, sample_rate)
}

/// Full description of one simulated recording session.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScenario {
    /// The signal playing inside the room.
    pub context: SampleBuffer,
    /// The adversary's injection waveform, if any; tiled to context length.
    pub injection: Option<SampleBuffer>,
    /// Injection-to-context power ratio realized at the legitimate device.
    pub injection_gain_db: f64,
    /// Room path from the context source to the legitimate devices.
    pub legit_ir: ImpulseResponse,
    /// Room path from the context source toward the adversary (before the
    /// wall).
    pub adversary_ir: ImpulseResponse,
    /// Device noise floor relative to the received context power
    /// (`-inf` disables noise).
    pub noise_db: f64,
    /// Energy of the second legitimate device's private receive-path
    /// perturbation, relative to its unit direct tap (`-inf` disables it,
    /// making both legitimate devices hear identical signals up to noise).
    pub device_perturb_db: f64,
    /// Length of the perturbation filter.
    pub device_perturb_taps: usize,
    /// Wall attenuation applied to the context on its way out to the
    /// adversary.
    pub wall_atten_db: f64,
    /// Wall low-pass cutoff; values at or above Nyquist (or <= 0) make the
    /// wall purely attenuating.
    pub wall_lowpass_hz: f64,
    /// Seed for every random draw in the simulation.
    pub seed: u64,
}

impl ChannelScenario {
    /// A scenario with the default acoustics: unit room responses, -40 dB
    /// device noise, -25 dB device diversity, and a -20 dB wall low-passed
    /// at 2 kHz.
    pub fn new(context: SampleBuffer, seed: u64) -> Self {
        let rate = context.sample_rate();
        Self {
            context,
            injection: None,
            injection_gain_db: 0.0,
            legit_ir: ImpulseResponse::unit(rate),
            adversary_ir: ImpulseResponse::unit(rate),
            noise_db: -40.0,
            device_perturb_db: -25.0,
            device_perturb_taps: 64,
            wall_atten_db: -20.0,
            wall_lowpass_hz: 2000.0,
            seed,
        }
    }
}

/// The three time-aligned, equal-length buffers a session produces.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecording {
    pub legit_a: SampleBuffer,
    pub legit_b: SampleBuffer,
    pub adversary: SampleBuffer,
}

// Seeded noise streams, kept distinct by ChaCha stream id so adding a
// consumer never shifts the draws of another.
const STREAM_NOISE_A: u64 = 1;
const STREAM_NOISE_B: u64 = 2;
const STREAM_NOISE_C: u64 = 3;
const STREAM_PERTURB: u64 = 4;
pub(crate) const STREAM_EST_A: u64 = 5;
pub(crate) const STREAM_EST_B: u64 = 6;
pub(crate) const STREAM_EST_C: u64 = 7;

pub(crate) fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The second legitimate device's private receive path: a unit direct tap
/// followed by a short seeded FIR tail, modeling the slightly different
/// position and hardware through which device B hears the same room —
/// everything it records, the injection included, passes through this
/// filter. Returns `None` when the perturbation is disabled (`-inf`).
pub(crate) fn device_chain_ir(scenario: &ChannelScenario) -> Result<Option<ImpulseResponse>> {
    if scenario.device_perturb_db == f64::NEG_INFINITY {
        return Ok(None);
    }
    if !scenario.device_perturb_db.is_finite() || scenario.device_perturb_taps == 0 {
        return Err(Error::InvalidParameter(format!(
            "device perturbation {} dB over {} taps is invalid",
            scenario.device_perturb_db, scenario.device_perturb_taps
        )));
    }
    let mut rng = seeded_stream(scenario.seed, STREAM_PERTURB);
    let taps = scenario.device_perturb_taps;
    let mut tail: Vec<f64> = (0..taps)
        .map(|k| {
            let decay = (-3.0 * k as f64 / taps as f64).exp();
            rng.sample::<f64, _>(StandardNormal) * decay
        })
        .collect();
    let energy: f64 = tail.iter().map(|x| x * x).sum();
    // Tail energy sits device_perturb_db below the unit direct tap.
    let scale = (db_to_power(scenario.device_perturb_db) / energy).sqrt();
    for p in tail.iter_mut() {
        *p *= scale;
    }
    let mut taps_out = Vec::with_capacity(taps + 1);
    taps_out.push(1.0);
    taps_out.extend(tail);
    ImpulseResponse::new(taps_out, scenario.legit_ir.sample_rate()).map(Some)
}

/// Device B's effective context channel: the shared room response composed
/// with its private receive path. This is what device B would measure if it
/// probed its own channel.
pub(crate) fn perturbed_legit_ir(scenario: &ChannelScenario) -> Result<ImpulseResponse> {
    match device_chain_ir(scenario)? {
        None => Ok(scenario.legit_ir.clone()),
        Some(chain) => scenario.legit_ir.compose(&chain),
    }
}

pub(crate) fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub(crate) fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

fn tile(src: &[f64], len: usize) -> Vec<f64> {
    src.iter().copied().cycle().take(len).collect()
}

fn add_noise(samples: &mut [f64], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma == 0.0 {
        return;
    }
    for x in samples.iter_mut() {
        *x += sigma * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Render the three devices' recordings.
///
/// - `legit_a` = context through the legitimate room path, plus the
///   injection as it penetrates the wall into the room, scaled to the
///   configured power ratio, plus noise. The wall's gradual high-frequency
///   rolloff means louder playback drags progressively higher bands of the
///   injected pattern above the room's own sound, while bands far past the
///   corner stay buried no matter the level.
/// - `legit_b` = the same scene (room context plus injection) heard through
///   the device's own secondary receive path — a unit tap plus a small
///   seeded perturbation filter — with independent noise. Routing the
///   perturbation around the whole scene, rather than around the context
///   alone, keeps the two legitimate devices acoustically distinct even
///   when the injection dominates what they hear.
/// - `adversary` = context through the adversary-side path and then the
///   wall (attenuated, low-passed), plus the injection heard at the source,
///   plus independent noise. The at-source term is the raw synthesized
///   waveform, not the victim-calibrated `g`-scaled copy: the adversary's
///   own recording chain sits next to its speaker and captures the playback
///   at a fixed level regardless of how loud the attack is driven into the
///   room, so only the legitimate devices' mix moves with the gain setting.
///
/// The injection is tiled (or truncated) to the context length and filtered
/// through the wall on its way into the room; its gain `g` is chosen so
/// that `g^2 *` (walled injection power) sits exactly `injection_gain_db`
/// above the received context power at `legit_a`. Noise power is referenced
/// to the same received context power.
pub fn simulate(scenario: &ChannelScenario) -> Result<DeviceRecording> {
    let context = &scenario.context;
    if context.is_empty() {
        return Err(Error::EmptyContext);
    }
    let rate = context.sample_rate();
    let n = context.len();

    let room_a = convolve(context, &scenario.legit_ir)?;
    let wall = wall_ir(rate, scenario.wall_lowpass_hz, scenario.wall_atten_db)?;
    let adversary_path = scenario.adversary_ir.compose(&wall)?;
    let room_c = convolve(context, &adversary_path)?;

    let context_power = room_a.power();

    // Injection, tiled once. The legitimate devices receive the copy that
    // crossed the wall, scaled to the configured gain; the adversary hears
    // its own playback raw at the source.
    let injection: Option<(Vec<f64>, Vec<f64>, f64)> = match &scenario.injection {
        None => None,
        Some(inj) => {
            if inj.sample_rate() != rate {
                return Err(Error::SampleRateMismatch {
                    left: rate,
                    right: inj.sample_rate(),
                });
            }
            if inj.is_empty() {
                return Err(Error::SilentInjection);
            }
            if !scenario.injection_gain_db.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "injection gain must be finite, got {} dB",
                    scenario.injection_gain_db
                )));
            }
            let raw = tile(inj.samples(), n);
            let walled =
                convolve(&SampleBuffer::trusted(raw.clone(), rate), &wall)?.into_samples();
            let inj_power: f64 = walled.iter().map(|x| x * x).sum::<f64>() / n as f64;
            if inj_power == 0.0 {
                return Err(Error::SilentInjection);
            }
            if context_power == 0.0 {
                return Err(Error::SilentContext);
            }
            let g = (context_power / inj_power * db_to_power(scenario.injection_gain_db)).sqrt();
            Some((raw, walled, g))
        }
    };

    let sigma = if scenario.noise_db == f64::NEG_INFINITY {
        0.0
    } else if scenario.noise_db.is_finite() {
        (context_power * db_to_power(scenario.noise_db)).sqrt()
    } else {
        return Err(Error::InvalidParameter(format!(
            "noise floor must be finite or -inf, got {} dB",
            scenario.noise_db
        )));
    };

    let mut a = room_a.samples().to_vec();
    let mut c = room_c.samples().to_vec();
    if let Some((raw, walled, g)) = &injection {
        for ((xa, xc), (r, w)) in a
            .iter_mut()
            .zip(c.iter_mut())
            .zip(raw.iter().zip(walled.iter()))
        {
            *xa += g * w;
            *xc += r;
        }
    }
    // Device B hears the same scene as device A, filtered by its own
    // receive path.
    let mut b = match device_chain_ir(scenario)? {
        None => a.clone(),
        Some(chain) => {
            let scene = SampleBuffer::trusted(a.clone(), rate);
            convolve(&scene, &chain)?.into_samples()
        }
    };
    add_noise(&mut a, sigma, &mut seeded_stream(scenario.seed, STREAM_NOISE_A));
    add_noise(&mut b, sigma, &mut seeded_stream(scenario.seed, STREAM_NOISE_B));
    add_noise(&mut c, sigma, &mut seeded_stream(scenario.seed, STREAM_NOISE_C));

    Ok(DeviceRecording {
        legit_a: SampleBuffer::trusted(a, rate),
        legit_b: SampleBuffer::trusted(b, rate),
        adversary: SampleBuffer::trusted(c, rate),
    })
}
