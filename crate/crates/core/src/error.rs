use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("grid too coarse: dt = {dt:.3e} s but at most {limit:.3e} s is allowed for this Nyquist rate")]
    GridTooCoarse { dt: f64, limit: f64 },

    #[error("signal is identically zero; SNR scaling is undefined")]
    ZeroSignal,

    #[error("slice count {slices} exceeds nyquist_rate / band_width = {limit:.3}")]
    TooManySlices { slices: usize, limit: f64 },

    #[error("invalid front-end parameters: {0}")]
    InvalidFrontEnd(String),

    #[error("sample period is not an integer multiple of the grid step (ratio {ratio:.6})")]
    NonIntegerDecimation { ratio: f64 },

    #[error("alternation count must be odd, got {0}")]
    EvenAlternations(usize),

    #[error("filter cutoff {cutoff:.3e} Hz must lie below the grid Nyquist frequency {nyquist:.3e} Hz")]
    CutoffTooHigh { cutoff: f64, nyquist: f64 },

    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,

    #[error("rank-deficient system: estimated rank {rank} of {cols} columns{context}")]
    RankDeficient {
        rank: usize,
        cols: usize,
        context: String,
    },

    #[error("frequency grid misaligned: slice width / bin spacing = {ratio:.6} is not an integer")]
    MisalignedGrid { ratio: f64 },

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
