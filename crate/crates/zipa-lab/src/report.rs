//! Result serialization: a fixed-schema CSV per run plus a JSON sidecar
//! carrying the seed, the config hash, and per-run aggregates. Formatting
//! is pinned (six decimal places, fixed column order, `\n` line endings) so
//! the same config and seed always produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// One observation. Columns not meaningful for an experiment stay empty.
#[derive(Debug, Clone, Default)]
pub struct ResultRow {
    /// Experiment id (matches the subcommand name).
    pub experiment: &'static str,
    /// Sub-series within the experiment (gain label, scenario/clean, ...).
    pub variant: String,
    pub trial: usize,
    /// Independent variable: gain in dB or shift in samples.
    pub variable: Option<f64>,
    pub ber_adversary: Option<f64>,
    pub ber_legit: Option<f64>,
    pub entropy_bits: Option<f64>,
    pub raw_ratio: Option<f64>,
    pub deconvolved_ratio: Option<f64>,
}

impl ResultRow {
    /// Range checks mirroring what downstream consumers assume.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("ber_adversary", self.ber_adversary),
            ("ber_legit", self.ber_legit),
        ] {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    bail!("{name} = {v} outside [0, 1]");
                }
            }
        }
        if let Some(v) = self.entropy_bits {
            if !(0.0..=8.0).contains(&v) {
                bail!("entropy_bits = {v} outside [0, 8]");
            }
        }
        for (name, value) in [
            ("raw_ratio", self.raw_ratio),
            ("deconvolved_ratio", self.deconvolved_ratio),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    bail!("{name} = {v} is not a finite non-negative ratio");
                }
            }
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str =
    "experiment,variant,trial,variable,ber_adversary,ber_legit,entropy_bits,raw_ratio,deconvolved_ratio";

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => String::new(),
    }
}

/// Render rows to the final CSV text.
pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        row.validate()?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.experiment,
            row.variant,
            row.trial,
            fmt_opt(row.variable),
            fmt_opt(row.ber_adversary),
            fmt_opt(row.ber_legit),
            fmt_opt(row.entropy_bits),
            fmt_opt(row.raw_ratio),
            fmt_opt(row.deconvolved_ratio),
        ));
    }
    Ok(out)
}

/// Sidecar metadata written next to the CSV.
#[derive(Debug, Serialize)]
pub struct RunMeta {
    pub experiment: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub rows: usize,
    /// Per-run summary statistics, keyed by a stable name.
    pub aggregates: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Sidecar path: `results/foo.csv` -> `results/foo.meta.json`.
pub fn meta_path(output: &Path) -> PathBuf {
    output.with_extension("meta.json")
}

/// Write the CSV and its sidecar, creating parent directories as needed.
pub fn write_report(output: &Path, rows: &[ResultRow], meta: &RunMeta) -> Result<()> {
    let csv = to_csv(rows)?;
    if let Some(parent) = output.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    fs::write(output, csv).with_context(|| format!("writing {}", output.display()))?;
    let mut json = serde_json::to_string_pretty(meta).context("encoding metadata")?;
    json.push('\n');
    let side = meta_path(output);
    fs::write(&side, json).with_context(|| format!("writing {}", side.display()))?;
    Ok(())
}

/// Mean of a sample.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean (0 for a single observation).
pub fn stderr(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (var / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row() -> ResultRow {
        ResultRow {
            experiment: "ber-vs-gain",
            variant: "95".to_string(),
            trial: 3,
            variable: Some(12.0),
            ber_adversary: Some(0.2),
            ber_legit: Some(0.11),
            ..ResultRow::default()
        }
    }

    #[test]
    fn csv_layout_is_stable() {
        let text = to_csv(&[sample_row()]).unwrap();
        assert_eq!(
            text,
            format!("{CSV_HEADER}\nber-vs-gain,95,3,12.000000,0.200000,0.110000,,,\n")
        );
    }

    #[test]
    fn out_of_range_rates_are_rejected() {
        let mut row = sample_row();
        row.ber_adversary = Some(1.5);
        assert!(to_csv(&[row]).is_err());
        let mut row = sample_row();
        row.entropy_bits = Some(9.0);
        assert!(to_csv(&[row]).is_err());
    }

    #[test]
    fn sha256_matches_known_vector() {
        // SHA-256 of the empty string, a published constant.
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn mean_and_stderr_match_hand_computation() {
        let values = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&values), 2.5);
        // Sample variance 5/3, stderr = sqrt(5/12).
        assert!((stderr(&values) - (5.0f64 / 12.0).sqrt()).abs() < 1e-12);
        assert_eq!(stderr(&[7.0]), 0.0);
    }

    #[test]
    fn report_files_land_next_to_each_other() {
        let dir = tempfile::tempdir().unwrap();
        let output = dir.path().join("nested/run.csv");
        let meta = RunMeta {
            experiment: "entropy",
            seed: 1,
            config_sha256: sha256_hex(b"x"),
            rows: 1,
            aggregates: BTreeMap::new(),
        };
        let row = ResultRow {
            experiment: "entropy",
            variant: "attack".into(),
            entropy_bits: Some(7.0),
            ..ResultRow::default()
        };
        write_report(&output, &[row], &meta).unwrap();
        assert!(output.exists());
        assert!(meta_path(&output).exists());
        let json = std::fs::read_to_string(meta_path(&output)).unwrap();
        assert!(json.contains("config_sha256"));
    }
}
