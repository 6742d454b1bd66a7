//! Command-line front end: one subcommand per experiment, a `--config`
//! pointing at a TOML description, and CSV/JSON outputs whose bytes depend
//! only on the config and its seed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use zipa_lab::config::LabConfig;
use zipa_lab::experiments::{
    run_ber_vs_gain, run_entropy, run_mitigation, run_pipeline_demo, run_shift_sweep, run_synth,
    ExperimentOutput,
};
use zipa_lab::report::{sha256_hex, write_report, RunMeta};

#[derive(Parser)]
#[command(
    name = "zipa-lab",
    about = "Simulation laboratory for ambient-audio pairing: attack and mitigation experiments",
    version
)]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the `output` path from the config.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Walk one pairing attempt through every stage and print the artifacts.
    Pipeline,
    /// Adversary key accuracy across injection loudness levels.
    BerVsGain,
    /// Attack accuracy as the injection slides against the frame grid.
    ShiftSweep,
    /// Entropy of key streams harvested under attack, with controls.
    Entropy,
    /// Legit/adversary separation before and after deconvolution.
    Mitigation,
    /// Export the injection and probe-sweep waveforms as WAV files.
    Synth {
        /// Directory for the WAV files.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(cli: &Cli) -> Result<(LabConfig, Vec<u8>)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("--config <FILE> is required"))?;
    LabConfig::load(path)
}

fn emit(cli: &Cli, config: &LabConfig, raw: &[u8], name: &'static str, out: ExperimentOutput) -> Result<()> {
    let output = cli.output.clone().unwrap_or_else(|| config.output.clone());
    let meta = RunMeta {
        experiment: name,
        seed: config.seed,
        config_sha256: sha256_hex(raw),
        rows: out.rows.len(),
        aggregates: out.aggregates,
    };
    write_report(&output, &out.rows, &meta)?;
    for line in &out.summary {
        println!("{line}");
    }
    println!("wrote {} rows to {}", out.rows.len(), output.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Pipeline => {
            let (config, _) = load(&cli)?;
            let report = run_pipeline_demo(&config)?;
            println!("harvest: {:.1} s of audio on three devices", report.duration_s);
            println!(
                "synchronize: snippet planted at {}; device B found {} (r = {:.3}), adversary found {} (r = {:.3})",
                report.sync_offset_expected,
                report.sync_offset_b,
                report.sync_corr_b,
                report.sync_offset_adversary,
                report.sync_corr_adversary,
            );
            println!(
                "quantize: {} bits per key; A starts {}..., B starts {}...",
                report.key_len, report.key_a_prefix, report.key_b_prefix
            );
            println!(
                "reconcile (threshold {} bits): legit BER {:.3} -> {}, adversary BER {:.3} -> {}",
                report.threshold,
                report.ber_legit,
                if report.legit.accepted { "accepted" } else { "rejected" },
                report.ber_adversary,
                if report.adversary.accepted { "accepted" } else { "rejected" },
            );
            Ok(())
        }
        Command::BerVsGain => {
            let (config, raw) = load(&cli)?;
            let out = run_ber_vs_gain(&config)?;
            emit(&cli, &config, &raw, "ber-vs-gain", out)
        }
        Command::ShiftSweep => {
            let (config, raw) = load(&cli)?;
            let out = run_shift_sweep(&config)?;
            emit(&cli, &config, &raw, "shift-sweep", out)
        }
        Command::Entropy => {
            let (config, raw) = load(&cli)?;
            let out = run_entropy(&config)?;
            emit(&cli, &config, &raw, "entropy", out)
        }
        Command::Mitigation => {
            let (config, raw) = load(&cli)?;
            let out = run_mitigation(&config)?;
            emit(&cli, &config, &raw, "mitigation", out)
        }
        Command::Synth { out_dir } => {
            let (config, _) = load(&cli)?;
            for path in run_synth(&config, out_dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
