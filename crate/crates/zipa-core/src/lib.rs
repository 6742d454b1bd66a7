//! Simulation core for ambient-audio device pairing and the signal
//! injection attack against it.
//!
//! Co-located devices can derive a shared key from the sound around them:
//! each device records the ambient context, aligns its recording with its
//! peer's, converts spectral energy differences into bits, and accepts the
//! pairing when the bit sequences are close enough. This crate implements
//! that pipeline and the laboratory around it:
//!
//! - [`buffer`], [`spectral`]: sample buffers, WAV plumbing, and the
//!   frames-by-bands energy matrix every stage consumes.
//! - [`quantize`]: the energy-difference bit quantizer and bit metrics.
//! - [`protocol`]: cross-correlation synchronization, reconciliation, and
//!   entropy estimation.
//! - [`attack`]: checkerboard and arbitrary-pattern injection signals that
//!   force the quantizer's output.
//! - [`channel`]: the simulated acoustic scene — room responses, wall
//!   attenuation, device noise — producing what each device records.
//! - [`mitigation`]: sweep-based impulse-response estimation and
//!   deconvolution, which amplifies the legit/adversary separation.
//!
//! The `parallel` feature (on by default) runs data-parallel loops on a
//! rayon thread pool; disabling it yields a dependency-light sequential
//! build with identical results.

pub mod attack;
pub mod buffer;
pub mod channel;
pub mod error;
pub mod exec;
mod fft;
pub mod mitigation;
pub mod protocol;
pub mod quantize;
pub mod spectral;

pub use attack::{
    checkerboard_plan, ideal_energy_matrix, plan_for_target, predicted_bits, shift, synthesize,
    CellPlan, InjectionSpec,
};
pub use buffer::{read_wav, write_wav, SampleBuffer, WavFormat};
pub use channel::{
    convolve, dispersive_room_ir, simulate, synth_context, synthetic_room_ir, wall_ir,
    CalibrationTable, ChannelScenario, ContextKind, DeviceRecording, ImpulseResponse,
};
pub use error::{Error, Result};
pub use mitigation::{
    deconvolve, estimate_ir, exp_sweep, mitigation_experiment, rms_distance, MitigationOutcome,
    MitigationParams, SweepSpec,
};
pub use protocol::{
    entropy_per_symbol, reconcile, synchronize, synchronize_with_floor, ReconciliationOutcome,
    SyncResult,
};
pub use quantize::{bit_error_rate, quantize, BitSequence};
pub use spectral::{energy_matrix, EnergyMatrix, GridParams};
