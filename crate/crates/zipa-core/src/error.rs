//! Shared error type for the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across buffers, spectral analysis, the
/// protocol stages, and the channel/mitigation simulations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample rate must be positive")]
    ZeroSampleRate,

    #[error("buffer contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("insufficient frames: {have} samples provide {frames} full frames, need at least {need_frames}")]
    InsufficientFrames {
        have: usize,
        frames: usize,
        need_frames: usize,
    },

    #[error("invalid band range: [{lo} Hz, {hi} Hz] must satisfy 0 <= lo < hi <= Nyquist ({nyquist} Hz)")]
    InvalidBandRange { lo: f64, hi: f64, nyquist: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too small: {frames} x {bands} (need at least 2 x 2)")]
    GridTooSmall { frames: usize, bands: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid hex bit string: {0}")]
    InvalidHex(String),

    #[error("no variance in correlation input")]
    NoVariance,

    #[error("sync failed: best correlation {best:.4} below floor {floor:.4}")]
    SyncFailed { best: f64, floor: f64 },

    #[error("lag range too large: need {need} samples of local audio, have {have}")]
    LagOutOfRange { need: usize, have: usize },

    #[error("symbol width {0} is outside the supported range 1..=24 bits")]
    InvalidSymbolWidth(usize),

    #[error("insufficient data: {symbols} complete symbols, need at least 2")]
    InsufficientData { symbols: usize },

    #[error("unrealizable target: no cell assignment reproduces the requested bits")]
    UnrealizableTarget,

    #[error("band center {center_hz} Hz is at or above the Nyquist frequency {nyquist} Hz")]
    BandAboveNyquist { center_hz: f64, nyquist: f64 },

    #[error("invalid amplitudes: need a_high >= a_low >= 0 and finite, got a_high {a_high}, a_low {a_low}")]
    InvalidAmplitudes { a_high: f64, a_low: f64 },

    #[error("shift magnitude {shift} must be smaller than the buffer length {len}")]
    ShiftTooLarge { shift: i64, len: usize },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    SampleRateMismatch { left: u32, right: u32 },

    #[error("empty context")]
    EmptyContext,

    #[error("context power is zero; cannot realize an injection gain against it")]
    SilentContext,

    #[error("injection signal is silent; cannot realize a power ratio")]
    SilentInjection,

    #[error("unknown level {level} dBA; known levels: {known:?}")]
    UnknownLevel { level: f64, known: Vec<f64> },

    #[error("invalid calibration table: {0}")]
    InvalidCalibration(String),

    #[error("invalid impulse response: {0}")]
    InvalidImpulse(&'static str),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("sweep not found: peak {peak:.3e} below {factor} x RMS {rms:.3e} of the deconvolved recording")]
    SweepNotFound { peak: f64, rms: f64, factor: f64 },

    #[error("regularization epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),

    #[error("zero RMS input to a normalized distance")]
    ZeroRms,

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("WAV error: {0}")]
    Wav(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
