//! Frequency-domain algebra of the acquisition chain: Fourier coefficients of
//! the mixing waveforms, the measurement matrix linking spectrum slices to
//! stream spectra, spectrum slicing, and analytic stream predictions.
//!
//! The spectrum of the input is cut into `M` slices of width `1/T`; slice `i`
//! (1-based) holds `X(f + (i - n0 - 1)/T)` for `f` in the baseband
//! `F0 = [-1/(2T), 1/(2T)]`, with `n0 = (M-1)/2`. Stream `i` sees the
//! weighted slice sum `sum_n c_in X(f - n/T)`, where `c_in` are the Fourier
//! coefficients of mixing waveform `i`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::{FrontEndParams, SignMatrix};
use crate::model::{sinc, DenseGrid, MultibandSignal};
use crate::numerics::CMatrix;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fourier coefficient `c_{i,n}` of mixing waveform `i` (0-based channel).
///
/// Closed form: `(1/2pi) (sum_k a_ik e^{-j w0 n k}) (1 - e^{-j w0 n}) / (j n)`
/// with `w0 = 2 pi / M`; at `n = 0` the limit `(1/M) sum_k a_ik`, and zero at
/// every other multiple of `M`.
pub fn fourier_coeff(signs: &SignMatrix, channel: usize, n: i64) -> Complex64 {
    let m = signs.alternations() as i64;
    let w0 = TWO_PI / m as f64;
    let dft: Complex64 = (0..m)
        .map(|k| Complex64::from_polar(signs.sign(channel, k as usize), -w0 * (n * k) as f64))
        .sum();
    if n == 0 {
        dft / m as f64
    } else if n.rem_euclid(m) == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        let gate = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -w0 * n as f64);
        dft * gate / Complex64::new(0.0, TWO_PI * n as f64)
    }
}

/// `c_{i,n}` for all `n` in `-n_max ..= n_max`.
pub fn fourier_coeff_row(signs: &SignMatrix, channel: usize, n_max: i64) -> Vec<Complex64> {
    (-n_max..=n_max)
        .map(|n| fourier_coeff(signs, channel, n))
        .collect()
}

/// The measurement system: `A = S F` with the slice scalings `d_n`, so that
/// column `col(n) = n + n0 + 1` of `A` times `d_n` reproduces `c_{i,n}`
/// entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    /// `m x M` complex matrix `S F`.
    pub matrix: CMatrix,
    /// Per-column scaling `d_n`, `n = col - n0` (0-based column).
    pub scalings: Vec<Complex64>,
    /// Half shift count, `(M - 1) / 2`.
    pub n0: usize,
    /// Slice width is `1 / t_period`.
    pub t_period: f64,
}

impl MeasurementMatrix {
    pub fn channels(&self) -> usize {
        self.matrix.rows()
    }

    pub fn slices(&self) -> usize {
        self.matrix.cols()
    }

    /// Harmonic index of a 0-based column.
    pub fn harmonic(&self, col: usize) -> i64 {
        col as i64 - self.n0 as i64
    }

    /// Center frequency of the slice behind a 0-based column.
    pub fn slice_center(&self, col: usize) -> f64 {
        self.harmonic(col) as f64 / self.t_period
    }

    /// Row subset for recovery from the first `count` channels.
    pub fn take_channels(&self, count: usize) -> Self {
        assert!(count >= 1 && count <= self.channels());
        Self {
            matrix: CMatrix::from_fn(count, self.slices(), |i, j| self.matrix[(i, j)]),
            scalings: self.scalings.clone(),
            n0: self.n0,
            t_period: self.t_period,
        }
    }

    /// Arbitrary row subset, in the given order.
    pub fn select_channels(&self, rows: &[usize]) -> Self {
        Self {
            matrix: CMatrix::from_fn(rows.len(), self.slices(), |i, j| {
                self.matrix[(rows[i], j)]
            }),
            scalings: self.scalings.clone(),
            n0: self.n0,
            t_period: self.t_period,
        }
    }

    /// CSV dump with complex entries as re/im pairs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# channels = {}\n", self.channels()));
        out.push_str(&format!("# slices = {}\n", self.slices()));
        out.push_str(&format!("# n0 = {}\n", self.n0));
        out.push_str(&format!("# t_period_s = {}\n", self.t_period));
        let fmt_row = |row: &[Complex64]| {
            row.iter()
                .flat_map(|z| [format!("{}", z.re), format!("{}", z.im)])
                .collect::<Vec<_>>()
                .join(",")
        };
        out.push_str("# scalings\n");
        out.push_str(&fmt_row(&self.scalings));
        out.push('\n');
        out.push_str("# matrix rows\n");
        for i in 0..self.channels() {
            let row: Vec<Complex64> = (0..self.slices()).map(|j| self.matrix[(i, j)]).collect();
            out.push_str(&fmt_row(&row));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut n0 = None;
        let mut t_period = None;
        let mut rows: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::ConfigParse {
                line: lineno + 1,
                msg,
            };
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    match k.trim() {
                        "n0" => {
                            n0 = Some(v.trim().parse::<usize>().map_err(|e| err(e.to_string()))?)
                        }
                        "t_period_s" => {
                            t_period =
                                Some(v.trim().parse::<f64>().map_err(|e| err(e.to_string()))?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let nums: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|p| p.trim().parse::<f64>()).collect();
            let nums = nums.map_err(|e| err(e.to_string()))?;
            if nums.len() % 2 != 0 {
                return Err(err("odd number of values in re/im row".into()));
            }
            rows.push(
                nums.chunks(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            );
        }
        if rows.len() < 2 {
            return Err(Error::InvalidConfig("matrix CSV has too few rows".into()));
        }
        let scalings = rows.remove(0);
        let slices = scalings.len();
        if rows.iter().any(|r| r.len() != slices) {
            return Err(Error::InvalidConfig("ragged matrix CSV".into()));
        }
        Ok(Self {
            matrix: CMatrix::from_fn(rows.len(), slices, |i, j| rows[i][j]),
            scalings,
            n0: n0.ok_or(Error::InvalidConfig("matrix CSV missing n0".into()))?,
            t_period: t_period.ok_or(Error::InvalidConfig("matrix CSV missing t_period_s".into()))?,
        })
    }
}

/// Builds `A = S F` and the scalings `d_n` for an odd alternation count.
///
/// `F[k, col] = e^{-j w0 n k}` with `n = col - n0`, `d_n = (1 - e^{-j w0 n}) /
/// (j 2 pi n)` and `d_0 = 1/M`.
pub fn build_measurement_matrix(signs: &SignMatrix, nyquist_rate: f64) -> Result<MeasurementMatrix> {
    let m_slices = signs.alternations();
    if m_slices % 2 == 0 {
        return Err(Error::EvenAlternations(m_slices));
    }
    let n0 = (m_slices - 1) / 2;
    let w0 = TWO_PI / m_slices as f64;
    let matrix = CMatrix::from_fn(signs.channels(), m_slices, |i, col| {
        let n = col as i64 - n0 as i64;
        (0..m_slices)
            .map(|k| Complex64::from_polar(signs.sign(i, k), -w0 * (n * k as i64) as f64))
            .sum()
    });
    let scalings = (0..m_slices)
        .map(|col| {
            let n = col as i64 - n0 as i64;
            if n == 0 {
                Complex64::new(1.0 / m_slices as f64, 0.0)
            } else {
                let gate = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -w0 * n as f64);
                gate / Complex64::new(0.0, TWO_PI * n as f64)
            }
        })
        .collect();
    Ok(MeasurementMatrix {
        matrix,
        scalings,
        n0,
        t_period: m_slices as f64 / nyquist_rate,
    })
}

/// A spectrum sampled on a slice-aligned frequency grid: `M` slices times
/// `bins_per_slice` cell-centered bins, covering `[-M/(2T), M/(2T)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySpectrum {
    pub values: Vec<Complex64>,
    pub bin_spacing: f64,
    /// Frequency of bin 0 (cell center).
    pub f_start: f64,
}

impl FrequencySpectrum {
    /// Samples a spectrum function on the aligned grid.
    pub fn sample(
        spectrum: impl Fn(f64) -> Complex64,
        m_slices: usize,
        t_period: f64,
        bins_per_slice: usize,
    ) -> Self {
        let bin_spacing = 1.0 / (t_period * bins_per_slice as f64);
        let f_lo = -(m_slices as f64) / (2.0 * t_period);
        let f_start = f_lo + bin_spacing / 2.0;
        let values = (0..m_slices * bins_per_slice)
            .map(|u| spectrum(f_start + u as f64 * bin_spacing))
            .collect();
        Self {
            values,
            bin_spacing,
            f_start,
        }
    }

    pub fn freq_at(&self, u: usize) -> f64 {
        self.f_start + u as f64 * self.bin_spacing
    }
}

/// The slice rearrangement of a spectrum: entry `(i, r)` is the input spectrum
/// at slice `i+1`'s `r`-th in-band offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedSpectrum {
    /// In-band offsets within `(-1/(2T), 1/(2T))`, shared by all slices.
    pub offsets: Vec<f64>,
    /// `M x bins_per_slice`; row `i` (0-based) is slice `i+1`.
    pub slices: CMatrix,
}

/// Cuts a sampled spectrum into the `M` slice vectors.
///
/// Requires the slice width `1/T` to be an integer number of bins; anything
/// else is a misaligned grid.
pub fn slice_spectrum(
    spectrum: &FrequencySpectrum,
    m_slices: usize,
    t_period: f64,
) -> Result<SlicedSpectrum> {
    let ratio = 1.0 / (t_period * spectrum.bin_spacing);
    let bins_per_slice = ratio.round();
    if (ratio - bins_per_slice).abs() > 1e-9 * ratio {
        return Err(Error::MisalignedGrid { ratio });
    }
    let q = bins_per_slice as usize;
    if spectrum.values.len() != m_slices * q {
        return Err(Error::MisalignedGrid {
            ratio: spectrum.values.len() as f64 / q as f64,
        });
    }
    // bin r's in-band offset: absolute frequency minus the slice center,
    // which is the same value in every slice by construction of the grid
    let n0 = (m_slices - 1) / 2;
    let offsets: Vec<f64> = (0..q)
        .map(|r| spectrum.freq_at(r) + n0 as f64 / t_period)
        .collect();
    let slices = CMatrix::from_fn(m_slices, q, |i, r| spectrum.values[i * q + r]);
    Ok(SlicedSpectrum { offsets, slices })
}

/// Inverse of [`slice_spectrum`]: lays the slice vectors back out flat.
pub fn reassemble_spectrum(
    sliced: &SlicedSpectrum,
    bin_spacing: f64,
    t_period: f64,
) -> FrequencySpectrum {
    let m_slices = sliced.slices.rows();
    let q = sliced.slices.cols();
    let f_lo = -(m_slices as f64) / (2.0 * t_period);
    let f_start = f_lo + bin_spacing / 2.0;
    let mut values = Vec::with_capacity(m_slices * q);
    for i in 0..m_slices {
        for r in 0..q {
            values.push(sliced.slices[(i, r)]);
        }
    }
    FrequencySpectrum {
        values,
        bin_spacing,
        f_start,
    }
}

/// Analytic spectrum of a multiband test signal: each band pair contributes
/// `sqrt(E/B)/2` on `[±f_c - B/2, ±f_c + B/2]`.
pub fn multiband_spectrum(sig: &MultibandSignal) -> impl Fn(f64) -> Complex64 + '_ {
    move |f: f64| {
        let b = sig.params.band_width;
        let mut acc = 0.0;
        for (&fc, &e) in sig.carriers.iter().zip(sig.params.energies.iter()) {
            let level = (e / b).sqrt() / 2.0;
            if (f - fc).abs() <= b / 2.0 {
                acc += level;
            }
            if (f + fc).abs() <= b / 2.0 {
                acc += level;
            }
        }
        Complex64::new(acc, 0.0)
    }
}

/// Spectrum of a rendered grid signal: `X(f) = dt sum_j x_j e^{-j 2 pi f t_j}`.
pub fn grid_dtft(x: &DenseGrid) -> impl Fn(f64) -> Complex64 + '_ {
    let dt = x.dt();
    move |f: f64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in x.values.iter().enumerate() {
            acc += Complex64::from_polar(v, -TWO_PI * f * x.time_at(j));
        }
        acc * dt
    }
}

/// Predicted stream spectrum of every channel at the given baseband
/// frequencies: `P_i(f) = sum_{n=-n0}^{n0} c_{i,n} X(f - n/T)`.
pub fn predict_dtft(
    spectrum: impl Fn(f64) -> Complex64,
    signs: &SignMatrix,
    t_period: f64,
    freqs: &[f64],
) -> CMatrix {
    let m_slices = signs.alternations();
    let n0 = ((m_slices - 1) / 2) as i64;
    // X(f - n/T) for every probe frequency and shift, shared across channels
    let shifted = CMatrix::from_fn(freqs.len(), m_slices, |fi, col| {
        let n = col as i64 - n0;
        spectrum(freqs[fi] - n as f64 / t_period)
    });
    CMatrix::from_fn(signs.channels(), freqs.len(), |i, fi| {
        (0..m_slices)
            .map(|col| {
                let n = col as i64 - n0;
                fourier_coeff(signs, i, n) * shifted[(fi, col)]
            })
            .sum()
    })
}

/// Predicted stream samples under an ideal lowpass: the inverse transform of
/// [`predict_dtft`] evaluated at the decimated sample instants, using the grid
/// rendering of the input as the spectrum.
pub fn predict_stream_samples(
    x: &DenseGrid,
    signs: &SignMatrix,
    params: &FrontEndParams,
) -> Result<CMatrix> {
    let dt = x.dt();
    let t_s = params.period();
    let ratio = t_s / dt;
    let decim = ratio.round();
    if (ratio - decim).abs() > 1e-6 {
        return Err(Error::NonIntegerDecimation { ratio });
    }
    let decim = decim as usize;
    let out_len = (x.len() - params.decimation_offset) / decim;
    let m_slices = params.alternations;
    let n0 = (m_slices - 1) / 2;

    // g[k][col] = (dt/T) sum_j x_j sinc((t_k - t_j)/T) e^{+j 2 pi (col-n0) t_j / T}
    let mut g = CMatrix::zeros(out_len, m_slices);
    let phases: Vec<Complex64> = x
        .times()
        .map(|t| Complex64::from_polar(1.0, TWO_PI * t / t_s))
        .collect();
    for k in 0..out_len {
        let t_k = x.time_at(params.decimation_offset + k * decim);
        let mut base: Vec<Complex64> = (0..x.len())
            .map(|j| {
                let w = x.values[j] * sinc((t_k - x.time_at(j)) / t_s);
                Complex64::from_polar(w, -TWO_PI * n0 as f64 * x.time_at(j) / t_s)
            })
            .collect();
        for col in 0..m_slices {
            g[(k, col)] = base.iter().sum::<Complex64>() * (dt / t_s);
            if col + 1 < m_slices {
                for (b, p) in base.iter_mut().zip(phases.iter()) {
                    *b *= p;
                }
            }
        }
    }

    let mut out = CMatrix::zeros(signs.channels(), out_len);
    for i in 0..signs.channels() {
        let coeffs = fourier_coeff_row(signs, i, n0 as i64);
        for k in 0..out_len {
            out[(i, k)] = (0..m_slices).map(|col| coeffs[col] * g[(k, col)]).sum();
        }
    }
    Ok(out)
}
