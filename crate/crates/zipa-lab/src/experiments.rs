//! The five experiments the harness can run.
//!
//! Each `run_*` function takes a validated [`LabConfig`], does all of its
//! randomness through seeds derived from the config's master seed, and
//! returns result rows plus named aggregates. Trials are independent and
//! fan out over the core library's execution helper, so the `parallel`
//! feature decides whether they use the thread pool; row order is fixed by
//! (level, trial) regardless.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zipa_core::exec::map_indexed;
use zipa_core::{
    bit_error_rate, checkerboard_plan, energy_matrix, entropy_per_symbol, exp_sweep,
    ideal_energy_matrix, mitigation_experiment, quantize, reconcile, shift, simulate, synchronize,
    synchronize_with_floor, synthesize, write_wav, BitSequence, CellPlan, DeviceRecording,
    EnergyMatrix, GridParams, InjectionSpec, MitigationParams, ReconciliationOutcome,
    SampleBuffer, SweepSpec, WavFormat,
};

use crate::config::{derive_seed, AttackConfig, GainLevel, LabConfig, SyncConfig};
use crate::report::{mean, stderr, ResultRow};

/// Rows plus human-readable summary and machine-readable aggregates.
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub aggregates: BTreeMap<String, f64>,
    pub summary: Vec<String>,
}

// Seed-derivation purposes; each (purpose, index) pair is its own stream.
const P_CONTEXT: u64 = 1;
const P_SCENARIO: u64 = 2;
const P_SYNC: u64 = 3;
const P_UNIFORM: u64 = 4;

/// The adversary ignores protocol failure rules and always takes its best
/// alignment guess, so its correlation floor is effectively disabled.
const ADVERSARY_SYNC_FLOOR: f64 = 1e-3;

fn build_injection(
    attack: &AttackConfig,
    grid: &GridParams,
    sample_rate: u32,
) -> Result<(CellPlan, SampleBuffer)> {
    let plan = checkerboard_plan(attack.frames, grid.num_bands())
        .context("building injection plan")?;
    let spec = InjectionSpec::new(grid.clone(), plan.clone(), attack.a_high, attack.a_low)
        .context("building injection spec")?;
    let signal = synthesize(&spec, sample_rate).context("synthesizing injection")?;
    Ok((plan, signal))
}

fn window(buffer: &SampleBuffer, start: usize, len: usize) -> Result<SampleBuffer> {
    let end = start + len;
    if end > buffer.len() {
        bail!("window {start}..{end} exceeds recording of {}", buffer.len());
    }
    SampleBuffer::new(buffer.samples()[start..end].to_vec(), buffer.sample_rate())
        .context("slicing window")
}

fn key_bits(buffer: &SampleBuffer, grid: &GridParams) -> Result<BitSequence> {
    let matrix = energy_matrix(buffer, grid).context("computing energy matrix")?;
    quantize(&matrix).context("quantizing")
}

/// Keys harvested by all three devices after locating a broadcast snippet
/// from the first legitimate device. Returns (legit_a, legit_b, adversary).
fn synchronized_keys(
    rec: &DeviceRecording,
    grid: &GridParams,
    sync: &SyncConfig,
    sample_rate: u32,
    sync_seed: u64,
) -> Result<(BitSequence, BitSequence, BitSequence)> {
    let rate = f64::from(sample_rate);
    let snippet_len = (sync.snippet_s * rate) as usize;
    let max_lag = (sync.max_offset_s * rate) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(sync_seed);
    let k = if max_lag == 0 { 0 } else { rng.random_range(0..=max_lag) };
    let snippet = window(&rec.legit_a, k, snippet_len)?;
    let offset_b = synchronize(&rec.legit_b, &snippet, max_lag)
        .context("legitimate device sync")?
        .offset as usize;
    let offset_c = synchronize_with_floor(&rec.adversary, &snippet, max_lag, ADVERSARY_SYNC_FLOOR)
        .context("adversary sync")?
        .offset as usize;
    let len = rec.legit_a.len() - max_lag;
    let key_a = key_bits(&window(&rec.legit_a, k, len)?, grid)?;
    let key_b = key_bits(&window(&rec.legit_b, offset_b, len)?, grid)?;
    let key_c = key_bits(&window(&rec.adversary, offset_c, len)?, grid)?;
    Ok((key_a, key_b, key_c))
}

/// Loudness ladder: how well the adversary's harvested key matches the
/// legitimate one as the injection gets louder relative to the room.
pub fn run_ber_vs_gain(config: &LabConfig) -> Result<ExperimentOutput> {
    let cfg = config
        .ber_vs_gain
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [ber_vs_gain] section"))?;
    let grid = config.grid.build()?;
    let table = cfg.table()?;
    let rate = config.sample_rate;
    let injection = match &config.attack {
        Some(attack) => Some(build_injection(attack, &grid, rate)?.1),
        None => None,
    };
    let levels: Vec<(String, Option<f64>)> = cfg
        .levels
        .iter()
        .map(|level| match level {
            GainLevel::None => Ok((level.label(), None)),
            GainLevel::Dba(dba) => Ok((level.label(), Some(table.gain_for_level(*dba)?))),
        })
        .collect::<zipa_core::Result<_>>()?;

    // One context and noise realization per trial, reused across levels, so
    // the ladder within a trial differs only in the injection gain.
    let per_trial = map_indexed(cfg.trials, |trial| -> Result<Vec<(f64, f64)>> {
        let ctx_seed = derive_seed(config.seed, P_CONTEXT, trial as u64);
        let scen_seed = derive_seed(config.seed, P_SCENARIO, trial as u64);
        let sync_seed = derive_seed(config.seed, P_SYNC, trial as u64);
        levels
            .iter()
            .map(|(_, gain)| {
                let scenario = config.scenario.build(
                    rate,
                    ctx_seed,
                    scen_seed,
                    gain.and(injection.clone()),
                    gain.unwrap_or(0.0),
                )?;
                let rec = simulate(&scenario)?;
                let (key_a, key_b, key_c) =
                    synchronized_keys(&rec, &grid, &cfg.sync, rate, sync_seed)?;
                Ok((bit_error_rate(&key_c, &key_a)?, bit_error_rate(&key_a, &key_b)?))
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut aggregates = BTreeMap::new();
    let mut summary = Vec::new();
    for (li, (label, gain)) in levels.iter().enumerate() {
        let adv: Vec<f64> = per_trial.iter().map(|t| t[li].0).collect();
        let leg: Vec<f64> = per_trial.iter().map(|t| t[li].1).collect();
        for (trial, t) in per_trial.iter().enumerate() {
            rows.push(ResultRow {
                experiment: "ber-vs-gain",
                variant: label.clone(),
                trial,
                variable: *gain,
                ber_adversary: Some(t[li].0),
                ber_legit: Some(t[li].1),
                ..ResultRow::default()
            });
        }
        aggregates.insert(format!("ber_adversary_mean[{label}]"), mean(&adv));
        aggregates.insert(format!("ber_adversary_stderr[{label}]"), stderr(&adv));
        aggregates.insert(format!("ber_legit_mean[{label}]"), mean(&leg));
        aggregates.insert(format!("ber_legit_stderr[{label}]"), stderr(&leg));
        summary.push(format!(
            "level {label:>4} ({}): adversary BER {:.3} +/- {:.3}, legit BER {:.3} +/- {:.3}",
            gain.map_or("no injection".to_string(), |g| format!("{g:+.1} dB")),
            mean(&adv),
            stderr(&adv),
            mean(&leg),
            stderr(&leg),
        ));
    }
    Ok(ExperimentOutput { rows, aggregates, summary })
}

/// Bits the injection plan predicts for `total_frames` of signal when the
/// victim's frame grid is offset by `rotation` whole frames into the plan.
fn rotated_prediction(
    plan: &CellPlan,
    rotation: usize,
    total_frames: usize,
    a_high: f64,
    a_low: f64,
) -> Result<BitSequence> {
    let period = plan.frames();
    let tiled = CellPlan::from_fn(total_frames, plan.bands(), |i, j| {
        plan.is_high((i + rotation) % period, j)
    })?;
    Ok(quantize(&ideal_energy_matrix(&tiled, a_high, a_low))?)
}

/// BER against the adversary's best whole-frame alignment guess. The
/// attacker cannot observe the victim's frame phase, so it decodes against
/// every rotation of its own plan and keeps the closest — exactly the
/// brute-force a real attacker would run on a key this short.
fn best_alignment_ber(key: &BitSequence, predictions: &[BitSequence]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for prediction in predictions {
        best = best.min(bit_error_rate(key, prediction)?);
    }
    Ok(best)
}

/// Injection-alignment sweep: how attack accuracy degrades as the injection
/// arrives shifted against the victim's frame grid.
pub fn run_shift_sweep(config: &LabConfig) -> Result<ExperimentOutput> {
    let cfg = config
        .shift_sweep
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [shift_sweep] section"))?;
    let attack = config
        .attack
        .as_ref()
        .ok_or_else(|| anyhow!("shift_sweep requires [attack]"))?;
    let grid = config.grid.build()?;
    let rate = config.sample_rate;
    let frame_len = grid.frame_len();
    let gain_db = match cfg.gain {
        GainLevel::Dba(dba) => cfg.table()?.gain_for_level(dba)?,
        GainLevel::None => bail!("shift_sweep.gain must name a calibration level"),
    };
    let (plan, injection) = build_injection(attack, &grid, rate)?;
    let shifts: Vec<usize> = (0..frame_len).step_by(cfg.step).chain([frame_len]).collect();

    // Scenario rows share one context/noise realization so the shift is the
    // only thing moving.
    let ctx_seed = derive_seed(config.seed, P_CONTEXT, 0);
    let scen_seed = derive_seed(config.seed, P_SCENARIO, 0);
    let probe = config
        .scenario
        .build(rate, ctx_seed, scen_seed, Some(injection.clone()), gain_db)?;
    let total_frames = probe.context.len() / frame_len;
    let predictions: Vec<BitSequence> = (0..plan.frames())
        .map(|r| rotated_prediction(&plan, r, total_frames, attack.a_high, attack.a_low))
        .collect::<Result<_>>()?;

    let scenario_rows = map_indexed(shifts.len(), |si| -> Result<(f64, f64)> {
        let shifted = shift(&injection, shifts[si] as i64)?;
        let scenario =
            config.scenario.build(rate, ctx_seed, scen_seed, Some(shifted), gain_db)?;
        let rec = simulate(&scenario)?;
        let len = total_frames * frame_len;
        let key_a = key_bits(&window(&rec.legit_a, 0, len)?, &grid)?;
        let key_b = key_bits(&window(&rec.legit_b, 0, len)?, &grid)?;
        let ber_attack = best_alignment_ber(&key_a, &predictions)?;
        Ok((ber_attack, bit_error_rate(&key_a, &key_b)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    // Clean rows: the bare injection period, no room, no noise — the grid
    // geometry alone. A whole-frame shift rotates plan rows exactly, so the
    // curve must repeat with period frame_len here.
    let clean_predictions: Vec<BitSequence> = (0..plan.frames())
        .map(|r| rotated_prediction(&plan, r, plan.frames(), attack.a_high, attack.a_low))
        .collect::<Result<_>>()?;
    let clean_rows = shifts
        .iter()
        .map(|&s| {
            let shifted = shift(&injection, s as i64)?;
            let key = key_bits(&shifted, &grid)?;
            best_alignment_ber(&key, &clean_predictions)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rows = Vec::new();
    for (si, &s) in shifts.iter().enumerate() {
        rows.push(ResultRow {
            experiment: "shift-sweep",
            variant: "scenario".to_string(),
            trial: 0,
            variable: Some(s as f64),
            ber_adversary: Some(scenario_rows[si].0),
            ber_legit: Some(scenario_rows[si].1),
            ..ResultRow::default()
        });
    }
    for (si, &s) in shifts.iter().enumerate() {
        rows.push(ResultRow {
            experiment: "shift-sweep",
            variant: "clean".to_string(),
            trial: 0,
            variable: Some(s as f64),
            ber_adversary: Some(clean_rows[si]),
            ..ResultRow::default()
        });
    }

    let worst = scenario_rows
        .iter()
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut aggregates = BTreeMap::new();
    aggregates.insert("ber_attack[shift0]".to_string(), scenario_rows[0].0);
    aggregates.insert("ber_attack_worst".to_string(), worst);
    aggregates.insert("clean[shift0]".to_string(), clean_rows[0]);
    aggregates.insert("clean[frame_len]".to_string(), *clean_rows.last().unwrap());
    let summary = vec![
        format!(
            "attack BER at shift 0: {:.3}; worst over {} shifts: {:.3}",
            scenario_rows[0].0,
            shifts.len(),
            worst
        ),
        format!(
            "clean periodicity: BER(0) = {:.3}, BER(frame_len) = {:.3}",
            clean_rows[0],
            clean_rows.last().unwrap()
        ),
    ];
    Ok(ExperimentOutput { rows, aggregates, summary })
}

/// Entropy of the key stream a victim generates while under attack, with
/// controls bracketing both ends of the scale.
pub fn run_entropy(config: &LabConfig) -> Result<ExperimentOutput> {
    let cfg = config
        .entropy
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [entropy] section"))?;
    let attack = config
        .attack
        .as_ref()
        .ok_or_else(|| anyhow!("entropy requires [attack]"))?;
    let grid = config.grid.build()?;
    let rate = config.sample_rate;
    let gain_db = match cfg.gain {
        GainLevel::Dba(dba) => cfg.table()?.gain_for_level(dba)?,
        GainLevel::None => bail!("entropy.gain must name a calibration level"),
    };
    let (_, injection) = build_injection(attack, &grid, rate)?;
    let ctx_seed = derive_seed(config.seed, P_CONTEXT, 0);
    let scen_seed = derive_seed(config.seed, P_SCENARIO, 0);

    let windowed_stream = |buffer: &SampleBuffer| -> Result<BitSequence> {
        let matrix = energy_matrix(buffer, &grid)?;
        let windows = matrix.frames() / cfg.window_frames;
        let bands = matrix.bands();
        let mut keys = Vec::with_capacity(windows);
        for w in 0..windows {
            let start = w * cfg.window_frames * bands;
            let values = matrix.values()[start..start + cfg.window_frames * bands].to_vec();
            let sub = EnergyMatrix::new(cfg.window_frames, bands, values)?;
            keys.push(quantize(&sub)?.truncated(cfg.key_bits));
        }
        Ok(BitSequence::concat(keys.iter()))
    };

    // Attack stream and its no-injection twin (same context, same noise).
    let attacked = config
        .scenario
        .build(rate, ctx_seed, scen_seed, Some(injection.clone()), gain_db)?;
    let attack_bits = windowed_stream(&simulate(&attacked)?.legit_a)?;
    if attack_bits.len() < cfg.min_total_bits {
        bail!(
            "only {} bits harvested, config requires {}",
            attack_bits.len(),
            cfg.min_total_bits
        );
    }
    let quiet = config.scenario.build(rate, ctx_seed, scen_seed, None, 0.0)?;
    let quiet_bits = windowed_stream(&simulate(&quiet)?.legit_a)?;

    // Bare injection, endlessly repeated: the pattern with nothing hiding it.
    let total_len = attacked.context.len();
    let mut tiled = Vec::with_capacity(total_len);
    while tiled.len() < total_len {
        let take = (total_len - tiled.len()).min(injection.len());
        tiled.extend_from_slice(&injection.samples()[..take]);
    }
    let clean_bits = windowed_stream(&SampleBuffer::new(tiled, rate)?)?;

    // Synthetic controls of the same length.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, P_UNIFORM, 0));
    let uniform_bits =
        BitSequence::from_bools((0..attack_bits.len()).map(|_| rng.random_range(0..2u8) == 1));
    let zero_bits = BitSequence::from_bools((0..attack_bits.len()).map(|_| false));

    let variants: Vec<(&str, &BitSequence)> = vec![
        ("attack", &attack_bits),
        ("no_injection", &quiet_bits),
        ("injection_only", &clean_bits),
        ("uniform_control", &uniform_bits),
        ("zero_control", &zero_bits),
    ];
    let mut rows = Vec::new();
    let mut aggregates = BTreeMap::new();
    let mut summary = Vec::new();
    for (name, bits) in variants {
        let entropy = entropy_per_symbol(bits, 8)?;
        rows.push(ResultRow {
            experiment: "entropy",
            variant: name.to_string(),
            trial: 0,
            entropy_bits: Some(entropy),
            ..ResultRow::default()
        });
        aggregates.insert(format!("entropy[{name}]"), entropy);
        aggregates.insert(format!("bits[{name}]"), bits.len() as f64);
        summary.push(format!("{name:>16}: {entropy:.3} bits/byte over {} bits", bits.len()));
    }
    Ok(ExperimentOutput { rows, aggregates, summary })
}

/// Deconvolution mitigation: measure legit/adversary separation before and
/// after each device deconvolves by its own estimated room response.
pub fn run_mitigation(config: &LabConfig) -> Result<ExperimentOutput> {
    let cfg = config
        .mitigation
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [mitigation] section"))?;
    let rate = config.sample_rate;
    let params = MitigationParams {
        sweep: cfg.sweep.as_ref().map_or_else(SweepSpec::default, |s| s.build()),
        ir_len: cfg.ir_len,
        eps: cfg.eps,
        legit_est_snr_db: cfg.legit_est_snr_db,
        adversary_est_snr_db: cfg.adversary_est_snr_db,
    };
    params.sweep.validate(rate)?;

    let outcomes = map_indexed(cfg.trials, |trial| -> Result<(f64, f64)> {
        let ctx_seed = derive_seed(config.seed, P_CONTEXT, trial as u64);
        let scen_seed = derive_seed(config.seed, P_SCENARIO, trial as u64);
        let scenario = config.scenario.build(rate, ctx_seed, scen_seed, None, 0.0)?;
        let out = mitigation_experiment(&scenario, &params)?;
        Ok((out.raw_ratio, out.deconvolved_ratio))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for (trial, (raw, deconvolved)) in outcomes.iter().enumerate() {
        rows.push(ResultRow {
            experiment: "mitigation",
            variant: "trial".to_string(),
            trial,
            raw_ratio: Some(*raw),
            deconvolved_ratio: Some(*deconvolved),
            ..ResultRow::default()
        });
    }
    let raw: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let deconvolved: Vec<f64> = outcomes.iter().map(|o| o.1).collect();
    let amplified = outcomes.iter().filter(|o| o.1 > o.0).count();
    let mut aggregates = BTreeMap::new();
    aggregates.insert("raw_ratio_mean".to_string(), mean(&raw));
    aggregates.insert("deconvolved_ratio_mean".to_string(), mean(&deconvolved));
    aggregates.insert("amplified_trials".to_string(), amplified as f64);
    aggregates.insert("trials".to_string(), cfg.trials as f64);
    let summary = vec![format!(
        "raw ratio {:.2}, deconvolved ratio {:.2}; amplified in {amplified}/{} trials",
        mean(&raw),
        mean(&deconvolved),
        cfg.trials
    )];
    Ok(ExperimentOutput { rows, aggregates, summary })
}

/// What one full pairing attempt looks like, stage by stage.
pub struct PipelineReport {
    pub duration_s: f64,
    pub sync_offset_expected: usize,
    pub sync_offset_b: usize,
    pub sync_corr_b: f64,
    pub sync_offset_adversary: usize,
    pub sync_corr_adversary: f64,
    pub key_len: usize,
    pub key_a_prefix: String,
    pub key_b_prefix: String,
    pub threshold: usize,
    pub ber_legit: f64,
    pub legit: ReconciliationOutcome,
    pub ber_adversary: f64,
    pub adversary: ReconciliationOutcome,
}

/// Harvest, synchronize, quantize, reconcile — once — and report every
/// intermediate artifact.
pub fn run_pipeline_demo(config: &LabConfig) -> Result<PipelineReport> {
    let cfg = config
        .pipeline
        .as_ref()
        .ok_or_else(|| anyhow!("config has no [pipeline] section"))?;
    let grid = config.grid.build()?;
    let rate = config.sample_rate;
    let injection = match &config.attack {
        Some(attack) => Some(build_injection(attack, &grid, rate)?.1),
        None => None,
    };
    let scenario = config.scenario.build(
        rate,
        derive_seed(config.seed, P_CONTEXT, 0),
        derive_seed(config.seed, P_SCENARIO, 0),
        injection,
        cfg.gain_db,
    )?;
    let rec = simulate(&scenario)?;

    let sync_seed = derive_seed(config.seed, P_SYNC, 0);
    let ratef = f64::from(rate);
    let snippet_len = (cfg.sync.snippet_s * ratef) as usize;
    let max_lag = (cfg.sync.max_offset_s * ratef) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(sync_seed);
    let k = if max_lag == 0 { 0 } else { rng.random_range(0..=max_lag) };
    let snippet = window(&rec.legit_a, k, snippet_len)?;
    let found_b = synchronize(&rec.legit_b, &snippet, max_lag)?;
    let found_c =
        synchronize_with_floor(&rec.adversary, &snippet, max_lag, ADVERSARY_SYNC_FLOOR)?;

    let len = rec.legit_a.len() - max_lag;
    let key_a = key_bits(&window(&rec.legit_a, k, len)?, &grid)?;
    let key_b = key_bits(&window(&rec.legit_b, found_b.offset as usize, len)?, &grid)?;
    let key_c = key_bits(&window(&rec.adversary, found_c.offset as usize, len)?, &grid)?;

    let threshold = (cfg.threshold_fraction * key_a.len() as f64).floor() as usize;
    let legit = reconcile(&key_a, &key_b, threshold)?;
    let adversary = reconcile(&key_a, &key_c, threshold)?;
    let prefix = |key: &BitSequence| {
        let hex = key.to_hex();
        hex[..hex.len().min(16)].to_string()
    };
    Ok(PipelineReport {
        duration_s: config.scenario.duration_s,
        sync_offset_expected: k,
        sync_offset_b: found_b.offset as usize,
        sync_corr_b: found_b.correlation,
        sync_offset_adversary: found_c.offset as usize,
        sync_corr_adversary: found_c.correlation,
        key_len: key_a.len(),
        key_a_prefix: prefix(&key_a),
        key_b_prefix: prefix(&key_b),
        threshold,
        ber_legit: bit_error_rate(&key_a, &key_b)?,
        legit,
        ber_adversary: bit_error_rate(&key_a, &key_c)?,
        adversary,
    })
}

/// Export the attack and probe waveforms as WAV files.
pub fn run_synth(config: &LabConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let rate = config.sample_rate;
    let mut written = Vec::new();
    if let Some(attack) = &config.attack {
        let grid = config.grid.build()?;
        let (_, injection) = build_injection(attack, &grid, rate)?;
        // Simultaneous band sines can sum past full scale; rescale to a
        // playable peak. The quantizer only sees energy ratios, so a common
        // positive factor changes nothing about the induced bits.
        let peak = injection.samples().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let samples = if peak > 0.9 {
            injection.samples().iter().map(|x| x * 0.9 / peak).collect()
        } else {
            injection.samples().to_vec()
        };
        let path = out_dir.join("injection.wav");
        write_wav(&path, &SampleBuffer::new(samples, rate)?, WavFormat::Pcm16)
            .context("writing injection.wav")?;
        written.push(path);
    }
    let sweep_spec = config
        .mitigation
        .as_ref()
        .and_then(|m| m.sweep.as_ref())
        .map_or_else(SweepSpec::default, |s| s.build());
    let (sweep, _) = exp_sweep(&sweep_spec, rate).context("generating sweep")?;
    let path = out_dir.join("sweep.wav");
    write_wav(&path, &sweep, WavFormat::Pcm16).context("writing sweep.wav")?;
    written.push(path);
    Ok(written)
}
