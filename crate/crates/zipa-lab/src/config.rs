//! TOML experiment configuration.
//!
//! One file describes one experiment run: the acoustic scenario, the
//! analysis grid, the injection, and a section of knobs for the selected
//! experiment. Everything is validated up front so a bad file fails before
//! any simulation starts, and the mandatory seed makes every run
//! reproducible byte-for-byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use zipa_core::{
    read_wav, synth_context, synthetic_room_ir, wall_ir, CalibrationTable, ChannelScenario,
    ContextKind, GridParams, ImpulseResponse, SampleBuffer, SweepSpec,
};

/// Top-level configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabConfig {
    /// Master seed; every random stream in the run derives from it.
    pub seed: u64,
    /// Sample rate for all synthesis and analysis.
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    /// Where the CSV lands (a `.meta.json` sidecar goes next to it).
    pub output: PathBuf,
    pub grid: GridConfig,
    pub scenario: ScenarioConfig,
    /// Injection description; absent means no attack signal exists at all.
    pub attack: Option<AttackConfig>,
    pub ber_vs_gain: Option<BerVsGainConfig>,
    pub shift_sweep: Option<ShiftSweepConfig>,
    pub entropy: Option<EntropyConfig>,
    pub mitigation: Option<MitigationConfig>,
    pub pipeline: Option<PipelineConfig>,
}

fn default_sample_rate() -> u32 {
    48_000
}

/// Spectral analysis grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub frame_len: usize,
    pub num_bands: usize,
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridParams> {
        GridParams::new(self.frame_len, self.num_bands, self.band_lo_hz, self.band_hi_hz)
            .context("invalid [grid]")
    }
}

/// Ambient context source.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContextConfig {
    Speech { rms: f64 },
    White { rms: f64 },
    Wav { path: PathBuf },
}

impl ContextConfig {
    pub fn kind(&self) -> ContextKind {
        match self {
            ContextConfig::Speech { rms } => ContextKind::SpeechLike { rms: *rms },
            ContextConfig::White { rms } => ContextKind::White { rms: *rms },
            ContextConfig::Wav { path } => ContextKind::Wav(path.clone()),
        }
    }
}

/// Impulse-response source for a room path.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IrConfig {
    /// Pass-through (anechoic point-blank path).
    Unit,
    /// Synthetic exponentially decaying reflections.
    Room { taps: usize, reflect_db: f64, seed: u64 },
    /// A handful of discrete echoes plus a short tail.
    Dispersive { seed: u64 },
    /// Taps loaded from a mono WAV file.
    Wav { path: PathBuf },
}

impl IrConfig {
    pub fn build(&self, sample_rate: u32) -> Result<ImpulseResponse> {
        match self {
            IrConfig::Unit => Ok(ImpulseResponse::unit(sample_rate)),
            IrConfig::Room { taps, reflect_db, seed } => {
                synthetic_room_ir(sample_rate, *taps, *reflect_db, *seed)
                    .context("invalid room impulse response")
            }
            IrConfig::Dispersive { seed } => zipa_core::dispersive_room_ir(sample_rate, *seed)
                .context("invalid dispersive impulse response"),
            IrConfig::Wav { path } => {
                let buffer = read_wav(path)
                    .with_context(|| format!("loading impulse response {}", path.display()))?;
                if buffer.sample_rate() != sample_rate {
                    bail!(
                        "impulse response {} has sample rate {}, expected {}",
                        path.display(),
                        buffer.sample_rate(),
                        sample_rate
                    );
                }
                ImpulseResponse::new(buffer.samples().to_vec(), sample_rate)
                    .context("invalid impulse response WAV")
            }
        }
    }
}

/// The acoustic scene shared by the experiments.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Simulated duration per trial, in seconds.
    pub duration_s: f64,
    pub context: ContextConfig,
    #[serde(default = "default_noise_db")]
    pub noise_db: f64,
    #[serde(default = "default_perturb_db")]
    pub device_perturb_db: f64,
    #[serde(default = "default_perturb_taps")]
    pub device_perturb_taps: usize,
    #[serde(default = "default_wall_atten_db")]
    pub wall_atten_db: f64,
    #[serde(default = "default_wall_lowpass_hz")]
    pub wall_lowpass_hz: f64,
    pub legit_ir: IrConfig,
    pub adversary_ir: IrConfig,
}

fn default_noise_db() -> f64 {
    -40.0
}
fn default_perturb_db() -> f64 {
    -25.0
}
fn default_perturb_taps() -> usize {
    64
}
fn default_wall_atten_db() -> f64 {
    -20.0
}
fn default_wall_lowpass_hz() -> f64 {
    2_000.0
}

impl ScenarioConfig {
    /// Assemble a concrete scenario around a synthesized context.
    pub fn build(
        &self,
        sample_rate: u32,
        context_seed: u64,
        scenario_seed: u64,
        injection: Option<SampleBuffer>,
        injection_gain_db: f64,
    ) -> Result<ChannelScenario> {
        let context = synth_context(&self.context.kind(), self.duration_s, sample_rate, context_seed)
            .context("synthesizing context")?;
        let mut scenario = ChannelScenario::new(context, scenario_seed);
        scenario.injection = injection;
        scenario.injection_gain_db = injection_gain_db;
        scenario.noise_db = self.noise_db;
        scenario.device_perturb_db = self.device_perturb_db;
        scenario.device_perturb_taps = self.device_perturb_taps;
        scenario.wall_atten_db = self.wall_atten_db;
        scenario.wall_lowpass_hz = self.wall_lowpass_hz;
        scenario.legit_ir = self.legit_ir.build(sample_rate)?;
        scenario.adversary_ir = self.adversary_ir.build(sample_rate)?;
        // Fail on a nonsensical wall before any experiment spends time.
        wall_ir(sample_rate, self.wall_atten_db, self.wall_lowpass_hz)
            .context("invalid wall filter")?;
        Ok(scenario)
    }
}

/// Injection signal description (always the alternating grid pattern; the
/// planner for arbitrary targets lives in the core library).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    /// Frames per plan period before tiling.
    #[serde(default = "default_attack_frames")]
    pub frames: usize,
    pub a_high: f64,
    #[serde(default)]
    pub a_low: f64,
}

fn default_attack_frames() -> usize {
    64
}

/// One bar of the loudness ladder: either no injection at all or a named
/// calibration level.
#[derive(Debug, Clone, PartialEq)]
pub enum GainLevel {
    None,
    Dba(f64),
}

impl GainLevel {
    pub fn label(&self) -> String {
        match self {
            GainLevel::None => "none".to_string(),
            GainLevel::Dba(level) => format!("{level}"),
        }
    }
}

impl<'de> Deserialize<'de> for GainLevel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        if raw == "none" {
            return Ok(GainLevel::None);
        }
        raw.parse::<f64>()
            .map(GainLevel::Dba)
            .map_err(|_| serde::de::Error::custom(format!("unknown gain level {raw:?}")))
    }
}

/// Loudness-ladder experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BerVsGainConfig {
    pub trials: usize,
    pub levels: Vec<GainLevel>,
    /// Overrides the built-in loudness-to-gain table when present
    /// (`[[dBA, dB], ...]`).
    #[serde(default)]
    pub calibration: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub sync: SyncConfig,
}

impl BerVsGainConfig {
    pub fn table(&self) -> Result<CalibrationTable> {
        match &self.calibration {
            Some(entries) => CalibrationTable::new(entries.clone()).context("invalid calibration"),
            None => Ok(CalibrationTable::default()),
        }
    }
}

/// How devices locate each other's harvest window.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncConfig {
    /// Broadcast snippet length, seconds.
    pub snippet_s: f64,
    /// Largest random misalignment the search must cover, seconds.
    pub max_offset_s: f64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self { snippet_s: 0.5, max_offset_s: 0.25 }
    }
}

/// Injection-alignment sweep.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSweepConfig {
    /// Gain level for the scenario rows.
    pub gain: GainLevel,
    /// Shift step in samples; must sample the frame at least 16 times.
    pub step: usize,
    #[serde(default)]
    pub calibration: Option<Vec<(f64, f64)>>,
}

impl ShiftSweepConfig {
    pub fn table(&self) -> Result<CalibrationTable> {
        match &self.calibration {
            Some(entries) => CalibrationTable::new(entries.clone()).context("invalid calibration"),
            None => Ok(CalibrationTable::default()),
        }
    }
}

/// Key-stream entropy experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyConfig {
    pub gain: GainLevel,
    /// Frames per key window.
    pub window_frames: usize,
    /// Bits kept from each window's key.
    pub key_bits: usize,
    /// Smallest acceptable concatenated stream.
    pub min_total_bits: usize,
    #[serde(default)]
    pub calibration: Option<Vec<(f64, f64)>>,
}

impl EntropyConfig {
    pub fn table(&self) -> Result<CalibrationTable> {
        match &self.calibration {
            Some(entries) => CalibrationTable::new(entries.clone()).context("invalid calibration"),
            None => Ok(CalibrationTable::default()),
        }
    }
}

/// Deconvolution-mitigation experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MitigationConfig {
    pub trials: usize,
    #[serde(default = "default_ir_len")]
    pub ir_len: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_legit_snr")]
    pub legit_est_snr_db: f64,
    #[serde(default = "default_adversary_snr")]
    pub adversary_est_snr_db: f64,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn default_ir_len() -> usize {
    4096
}
fn default_eps() -> f64 {
    1e-6
}
fn default_legit_snr() -> f64 {
    35.0
}
fn default_adversary_snr() -> f64 {
    0.0
}

/// Probe-sweep parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    pub amplitude: f64,
}

impl SweepConfig {
    pub fn build(&self) -> SweepSpec {
        SweepSpec {
            f_start_hz: self.f_start_hz,
            f_end_hz: self.f_end_hz,
            duration_s: self.duration_s,
            amplitude: self.amplitude,
        }
    }
}

/// End-to-end pairing walkthrough.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Reconciliation accepts when mismatches <= fraction * key length.
    pub threshold_fraction: f64,
    /// Injection gain when an [attack] section is present.
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default)]
    pub sync: SyncConfig,
}

impl LabConfig {
    /// Parse and validate a config file; returns the config together with
    /// the raw bytes (hashed into the result metadata).
    pub fn load(path: &Path) -> Result<(LabConfig, Vec<u8>)> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let text = std::str::from_utf8(&bytes).context("config is not UTF-8")?;
        let config: LabConfig = toml::from_str(text)
            .with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok((config, bytes))
    }

    /// Structural checks that do not need any synthesis.
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            bail!("sample_rate must be positive");
        }
        let grid = self.grid.build()?;
        if self.scenario.duration_s <= 0.0 || self.scenario.duration_s.is_nan() {
            bail!("scenario.duration_s must be positive");
        }
        match &self.scenario.context {
            ContextConfig::Speech { rms } | ContextConfig::White { rms }
                if *rms <= 0.0 || rms.is_nan() =>
            {
                bail!("context rms must be positive")
            }
            _ => {}
        }
        if let Some(attack) = &self.attack {
            if attack.frames < 2 {
                bail!("attack.frames must be at least 2");
            }
            if !(attack.a_high > attack.a_low && attack.a_low >= 0.0) {
                bail!("attack amplitudes must satisfy a_high > a_low >= 0");
            }
        }
        if let Some(cfg) = &self.ber_vs_gain {
            if cfg.trials == 0 {
                bail!("ber_vs_gain.trials must be at least 1");
            }
            if cfg.levels.is_empty() {
                bail!("ber_vs_gain.levels must not be empty");
            }
            let table = cfg.table()?;
            for level in &cfg.levels {
                if let GainLevel::Dba(dba) = level {
                    table.gain_for_level(*dba).context("unknown gain level")?;
                }
                if *level != GainLevel::None && self.attack.is_none() {
                    bail!("ber_vs_gain has injection levels but no [attack] section");
                }
            }
            validate_sync(&cfg.sync, self.scenario.duration_s, self.sample_rate, &grid)?;
        }
        if let Some(cfg) = &self.shift_sweep {
            if self.attack.is_none() {
                bail!("shift_sweep requires an [attack] section");
            }
            if cfg.step == 0 || cfg.step > grid.frame_len() / 16 {
                bail!(
                    "shift_sweep.step must be in 1..={} to sample the frame densely",
                    grid.frame_len() / 16
                );
            }
            if let GainLevel::Dba(dba) = cfg.gain {
                cfg.table()?.gain_for_level(dba).context("unknown gain level")?;
            } else {
                bail!("shift_sweep.gain must name a calibration level");
            }
        }
        if let Some(cfg) = &self.entropy {
            if self.attack.is_none() {
                bail!("entropy requires an [attack] section");
            }
            if cfg.window_frames < 2 {
                bail!("entropy.window_frames must be at least 2");
            }
            let bits_per_window = (cfg.window_frames - 1) * (grid.num_bands() - 1);
            if cfg.key_bits == 0 || cfg.key_bits > bits_per_window {
                bail!(
                    "entropy.key_bits must be in 1..={bits_per_window} for {} windows of {} bands",
                    cfg.window_frames,
                    grid.num_bands()
                );
            }
            let frames = (self.scenario.duration_s * f64::from(self.sample_rate)) as usize
                / grid.frame_len();
            let windows = frames / cfg.window_frames;
            if windows * cfg.key_bits < cfg.min_total_bits {
                bail!(
                    "scenario too short: {} windows x {} bits < {} required",
                    windows,
                    cfg.key_bits,
                    cfg.min_total_bits
                );
            }
            if let GainLevel::Dba(dba) = cfg.gain {
                cfg.table()?.gain_for_level(dba).context("unknown gain level")?;
            } else {
                bail!("entropy.gain must name a calibration level");
            }
        }
        if let Some(cfg) = &self.mitigation {
            if cfg.trials == 0 {
                bail!("mitigation.trials must be at least 1");
            }
            if cfg.eps <= 0.0 || cfg.eps.is_nan() {
                bail!("mitigation.eps must be positive");
            }
            if cfg.ir_len == 0 {
                bail!("mitigation.ir_len must be positive");
            }
            if let Some(sweep) = &cfg.sweep {
                sweep.build().validate(self.sample_rate).context("invalid [mitigation.sweep]")?;
            }
        }
        if let Some(cfg) = &self.pipeline {
            if !(cfg.threshold_fraction > 0.0 && cfg.threshold_fraction < 1.0) {
                bail!("pipeline.threshold_fraction must be in (0, 1)");
            }
            validate_sync(&cfg.sync, self.scenario.duration_s, self.sample_rate, &grid)?;
        }
        Ok(())
    }
}

fn validate_sync(
    sync: &SyncConfig,
    duration_s: f64,
    sample_rate: u32,
    grid: &GridParams,
) -> Result<()> {
    if !(sync.snippet_s > 0.0 && sync.max_offset_s >= 0.0) {
        bail!("sync lengths must be positive");
    }
    let needed = sync.snippet_s + sync.max_offset_s;
    let frames_left = ((duration_s - sync.max_offset_s) * f64::from(sample_rate)) as usize
        / grid.frame_len().max(1);
    if needed >= duration_s || frames_left < 2 {
        bail!(
            "scenario.duration_s = {duration_s} leaves no room for a {}s snippet at {}s offset",
            sync.snippet_s,
            sync.max_offset_s
        );
    }
    Ok(())
}

/// SplitMix64-style derivation: one master seed fans out into disjoint
/// streams keyed by purpose and index.
pub fn derive_seed(base: u64, purpose: u64, index: u64) -> u64 {
    let mut z = base ^ (purpose << 56) ^ index;
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
