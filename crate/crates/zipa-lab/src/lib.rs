//! Experiment harness for the ambient-audio pairing laboratory.
//!
//! The binary in this crate is a thin CLI over three layers:
//!
//! - [`config`]: TOML experiment descriptions, validated before anything
//!   runs, with a mandatory master seed;
//! - [`experiments`]: the runnable studies (loudness ladder, alignment
//!   sweep, key-stream entropy, deconvolution mitigation, and a pipeline
//!   walkthrough);
//! - [`report`]: deterministic CSV output plus a JSON sidecar carrying the
//!   config hash and summary aggregates.

pub mod config;
pub mod experiments;
pub mod report;
