//! Sub-Nyquist acquisition of sparse multiband signals with a bank of random
//! sign-mixing channels, plus the blind support-recovery and reconstruction
//! pipeline and a Monte Carlo experiment harness.
//!
//! The pieces, in signal order:
//!
//! - [`model`]: the multiband signal class, test-signal synthesis on a dense
//!   grid, calibrated noise, ground-truth slice support, parameter checks.
//! - [`frontend`]: sign patterns, mixing waveforms, the anti-alias lowpass,
//!   and the mix/filter/decimate simulation producing the sample streams.
//! - [`spectral`]: waveform Fourier coefficients, the measurement matrix and
//!   slice scalings, spectrum slicing, and analytic stream predictions.
//! - [`recovery`]: correlation-frame construction, simultaneous orthogonal
//!   matching pursuit, blind support estimation, and pseudoinverse
//!   reconstruction.
//! - [`numerics`]: the small dense kernels behind it all (symmetric
//!   eigendecomposition, complex least squares, DFT, convolution).
//! - [`harness`]: seeded experiment driver reproducing the recovery-rate
//!   sweep over channel counts and noise levels, with CSV outputs.

pub mod error;
pub mod frontend;
pub mod harness;
pub mod model;
pub mod numerics;
pub mod recovery;
pub mod spectral;

pub use error::{Error, Result};
