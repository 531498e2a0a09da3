//! Analog acquisition chain: per-channel sign mixing, lowpass filtering with
//! cutoff `1/(2 T_s)`, and decimation to rate `1/T_s`.
//!
//! Each channel multiplies the input by a `T_p`-periodic waveform that holds
//! one of `M` signs per period, then filters and samples. With `T_s = T_p =
//! M / f_nyq` every channel produces one low-rate stream; all channels share
//! sample instants.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{sinc, DenseGrid};

/// The `m x M` pattern of `±1` signs defining all mixing waveforms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    channels: usize,
    alternations: usize,
    entries: Vec<i8>,
    /// Seed the pattern was drawn from (provenance for run manifests).
    pub seed: u64,
}

impl SignMatrix {
    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn alternations(&self) -> usize {
        self.alternations
    }

    /// Sign of channel `i` (0-based) in chip `k`, exactly `+1` or `-1`.
    pub fn sign(&self, channel: usize, chip: usize) -> f64 {
        self.entries[channel * self.alternations + chip] as f64
    }

    pub fn from_rows(rows: Vec<Vec<i8>>, seed: u64) -> Result<Self> {
        let channels = rows.len();
        let alternations = rows.first().map_or(0, |r| r.len());
        if channels == 0 || alternations == 0 {
            return Err(Error::InvalidFrontEnd(
                "sign matrix needs at least one channel and one chip".into(),
            ));
        }
        let mut entries = Vec::with_capacity(channels * alternations);
        for row in &rows {
            if row.len() != alternations {
                return Err(Error::InvalidFrontEnd("ragged sign matrix".into()));
            }
            for &v in row {
                if v != 1 && v != -1 {
                    return Err(Error::InvalidFrontEnd(format!(
                        "sign entries must be ±1, got {v}"
                    )));
                }
            }
            entries.extend_from_slice(row);
        }
        Ok(Self {
            channels,
            alternations,
            entries,
            seed,
        })
    }

    /// Keep only the first `count` channels.
    pub fn take_channels(&self, count: usize) -> Self {
        assert!(count >= 1 && count <= self.channels);
        Self {
            channels: count,
            alternations: self.alternations,
            entries: self.entries[..count * self.alternations].to_vec(),
            seed: self.seed,
        }
    }

    /// Arbitrary channel subset, in the given order.
    pub fn select_channels(&self, rows: &[usize]) -> Self {
        assert!(!rows.is_empty() && rows.iter().all(|&r| r < self.channels));
        let mut entries = Vec::with_capacity(rows.len() * self.alternations);
        for &r in rows {
            entries
                .extend_from_slice(&self.entries[r * self.alternations..(r + 1) * self.alternations]);
        }
        Self {
            channels: rows.len(),
            alternations: self.alternations,
            entries,
            seed: self.seed,
        }
    }

    /// Mixing waveform value `p_i(t)`: the sign of the chip containing `t`,
    /// extended `t_period`-periodically. Chips are half-open on the right.
    pub fn waveform(&self, channel: usize, t: f64, t_period: f64) -> f64 {
        let m = self.alternations as f64;
        let frac = t / t_period - (t / t_period).floor();
        // the small nudge absorbs rounding when t sits on a chip boundary
        let mut k = (m * frac + 1e-9).floor() as usize;
        if k >= self.alternations {
            k = 0;
        }
        self.sign(channel, k)
    }
}

/// Draws an `m x M` matrix of i.i.d. uniform `±1` signs, deterministic given
/// the seed.
pub fn generate_signs(channels: usize, alternations: usize, seed: u64) -> Result<SignMatrix> {
    if channels == 0 || alternations == 0 {
        return Err(Error::InvalidFrontEnd(
            "sign matrix needs at least one channel and one chip".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..channels * alternations)
        .map(|_| if rng.gen::<bool>() { 1i8 } else { -1i8 })
        .collect();
    Ok(SignMatrix {
        channels,
        alternations,
        entries,
        seed,
    })
}

/// How the analog anti-alias lowpass is realized on the rendering grid.
///
/// `Ideal` evaluates the exact bandlimiting kernel `(dt/T) sinc(t/T)` over
/// the whole window, which on a finite grid reproduces the ideal rectangular
/// response precisely. `Fir` uses a Hamming windowed-sinc of the given order;
/// its transition band attenuates content near the slice edges (`±1/(2T)`),
/// which any straddling band occupies, so it serves as a non-ideality knob
/// rather than the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterSpec {
    Ideal,
    Fir { taps: usize },
}

/// Acquisition parameters. The analyzed configuration ties the waveform
/// period and the sampling period together: `T_p = T_s = M / f_nyq`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndParams {
    /// Channel count `m`.
    pub channels: usize,
    /// Sign alternations per period, `M`.
    pub alternations: usize,
    /// Nyquist rate of the signal class, Hz.
    pub nyquist_rate: f64,
    /// Anti-alias lowpass realization.
    pub filter: FilterSpec,
    /// Index (in decimated-rate units on the compensated output) of the first
    /// retained sample.
    pub decimation_offset: usize,
}

impl FrontEndParams {
    /// Mixing period `T_p = T_s = M / f_nyq` in seconds.
    pub fn period(&self) -> f64 {
        self.alternations as f64 / self.nyquist_rate
    }

    /// Lowpass cutoff `1/(2 T_s)` in Hz.
    pub fn cutoff(&self) -> f64 {
        1.0 / (2.0 * self.period())
    }

    /// The reference acquisition setup: 51 channels, 51 alternations,
    /// 10 GHz Nyquist rate, ideal anti-alias filter.
    pub fn reference() -> Self {
        Self {
            channels: 51,
            alternations: 51,
            nyquist_rate: 10e9,
            filter: FilterSpec::Ideal,
            decimation_offset: 0,
        }
    }
}

/// The `m` decimated channel outputs, with their common sampling grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStreams {
    /// One sequence per channel, equal lengths.
    pub streams: Vec<Vec<f64>>,
    /// Sampling rate `1/T_s` in Hz.
    pub rate: f64,
    /// Absolute time of sample 0 (shared by all channels).
    pub t_first: f64,
    /// Seed of the sign pattern that produced the streams.
    pub sign_seed: u64,
}

impl SampleStreams {
    pub fn channels(&self) -> usize {
        self.streams.len()
    }

    pub fn len(&self) -> usize {
        self.streams.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Absolute time of sample `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.t_first + k as f64 / self.rate
    }

    /// Snapshot vector across channels at sample index `k`.
    pub fn snapshot(&self, k: usize) -> Vec<f64> {
        self.streams.iter().map(|s| s[k]).collect()
    }

    /// Keep only the first `count` channels.
    pub fn take_channels(&self, count: usize) -> Self {
        assert!(count >= 1 && count <= self.channels());
        Self {
            streams: self.streams[..count].to_vec(),
            rate: self.rate,
            t_first: self.t_first,
            sign_seed: self.sign_seed,
        }
    }

    /// CSV dump: metadata comments, then one column per channel.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# rate_hz = {}\n", self.rate));
        out.push_str(&format!("# t_first_s = {}\n", self.t_first));
        out.push_str(&format!("# sign_seed = {}\n", self.sign_seed));
        let header: Vec<String> = (0..self.channels()).map(|i| format!("ch{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for k in 0..self.len() {
            let row: Vec<String> = self.streams.iter().map(|s| format!("{}", s[k])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rate = None;
        let mut t_first = None;
        let mut sign_seed = 0u64;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut saw_header = false;
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
                        "rate_hz" => rate = Some(v.trim().parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?),
                        "t_first_s" => t_first = Some(v.trim().parse().map_err(|e: std::num::ParseFloatError| err(e.to_string()))?),
                        "sign_seed" => sign_seed = v.trim().parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?,
                        _ => {}
                    }
                }
                continue;
            }
            if !saw_header {
                saw_header = true; // column names
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|p| p.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| err(e.to_string()))?);
        }
        let rate = rate.ok_or(Error::InvalidFrontEnd("CSV is missing rate_hz".into()))?;
        let t_first = t_first.ok_or(Error::InvalidFrontEnd("CSV is missing t_first_s".into()))?;
        let channels = rows.first().map_or(0, |r| r.len());
        if channels == 0 {
            return Err(Error::InvalidFrontEnd("CSV has no samples".into()));
        }
        let mut streams = vec![Vec::with_capacity(rows.len()); channels];
        for row in &rows {
            if row.len() != channels {
                return Err(Error::InvalidFrontEnd("ragged CSV rows".into()));
            }
            for (c, v) in row.iter().enumerate() {
                streams[c].push(*v);
            }
        }
        Ok(Self {
            streams,
            rate,
            t_first,
            sign_seed,
        })
    }
}

/// Linear-phase Hamming windowed-sinc lowpass with `taps + 1` coefficients
/// and unity DC gain. `physical_cutoff` is in Hz relative to `grid_rate`.
pub fn design_lowpass(taps: usize, physical_cutoff: f64, grid_rate: f64) -> Result<Vec<f64>> {
    if taps < 2 {
        return Err(Error::InvalidFrontEnd(format!(
            "FIR order must be at least 2, got {taps}"
        )));
    }
    if !(physical_cutoff > 0.0) || physical_cutoff >= grid_rate / 2.0 {
        return Err(Error::CutoffTooHigh {
            cutoff: physical_cutoff,
            nyquist: grid_rate / 2.0,
        });
    }
    let fc = physical_cutoff / grid_rate; // cycles per sample
    let center = taps as f64 / 2.0;
    let mut h: Vec<f64> = (0..=taps)
        .map(|l| {
            let x = l as f64 - center;
            let ideal = 2.0 * fc * sinc(2.0 * fc * x);
            let w = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * l as f64 / taps as f64).cos();
            ideal * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v /= sum;
    }
    Ok(h)
}

/// Frequency response of a real FIR at `f` Hz for a filter running at
/// `grid_rate` samples/s.
pub fn filter_response(h: &[f64], f: f64, grid_rate: f64) -> num_complex::Complex64 {
    let w = -2.0 * std::f64::consts::PI * f / grid_rate;
    h.iter()
        .enumerate()
        .map(|(l, &hl)| num_complex::Complex64::from_polar(hl, w * l as f64))
        .sum()
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let ratio = num / den;
    let rounded = ratio.round();
    if (ratio - rounded).abs() < 1e-6 && rounded >= 1.0 {
        Some(rounded as usize)
    } else {
        None
    }
}

/// Runs the acquisition chain on a rendered signal: per channel, multiply by
/// the mixing waveform, lowpass with the designed FIR (group delay
/// compensated), and keep every `T_s/dt`-th sample; all channels share sample
/// instants. Convolution edges are zero padded.
pub fn simulate(x: &DenseGrid, signs: &SignMatrix, params: &FrontEndParams) -> Result<SampleStreams> {
    if signs.alternations() != params.alternations {
        return Err(Error::InvalidFrontEnd(format!(
            "sign matrix has {} alternations, params say {}",
            signs.alternations(),
            params.alternations
        )));
    }
    let dt = x.dt();
    let grid_rate = 1.0 / dt;
    if grid_rate < 2.0 * params.nyquist_rate * (1.0 - 1e-12) {
        return Err(Error::GridTooCoarse {
            dt,
            limit: 1.0 / (2.0 * params.nyquist_rate),
        });
    }
    let t_s = params.period();
    let decim = integer_ratio(t_s, dt).ok_or(Error::NonIntegerDecimation { ratio: t_s / dt })?;

    let n = x.len();
    let offset = params.decimation_offset;
    if offset >= n {
        return Err(Error::InvalidFrontEnd(format!(
            "decimation offset {offset} is outside the grid"
        )));
    }
    if offset >= n {
        return Err(Error::InvalidFrontEnd(format!(
            "decimation offset {offset} is outside the grid"
        )));
    }
    let out_len = (n - offset) / decim;
    if out_len == 0 {
        return Err(Error::InvalidFrontEnd(
            "grid too short for even one output sample".into(),
        ));
    }

    // the filter kernel indexed by signed grid-sample offset around `center`;
    // for the ideal filter this is the exact bandlimiting kernel over the
    // whole window, for the FIR the designed taps with the group delay
    // already absorbed into the center index
    let (kernel, center): (Vec<f64>, usize) = match params.filter {
        FilterSpec::Ideal => {
            let k: Vec<f64> = (-(n as i64 - 1)..n as i64)
                .map(|i| dt / t_s * sinc(i as f64 * dt / t_s))
                .collect();
            (k, n - 1)
        }
        FilterSpec::Fir { taps } => {
            if taps % 2 != 0 {
                return Err(Error::InvalidFrontEnd(format!(
                    "FIR order must be even for exact group-delay compensation, got {taps}"
                )));
            }
            let h = design_lowpass(taps, params.cutoff(), grid_rate)?;
            (h, taps / 2)
        }
    };

    // out_i[g] = sum_j x_j p_i(t_j) kernel[center + g - j], zero padded.
    // The chip index of t_j is channel independent, so the kernel sums group
    // by chip class once and every channel reduces to an M-term dot product.
    let t_p = params.period();
    let m_chips = params.alternations;
    let chips: Vec<usize> = (0..n)
        .map(|j| {
            let t = x.time_at(j);
            let frac = t / t_p - (t / t_p).floor();
            let mut c = (m_chips as f64 * frac + 1e-9).floor() as usize;
            if c >= m_chips {
                c = 0;
            }
            c
        })
        .collect();

    let mut streams = vec![Vec::with_capacity(out_len); signs.channels()];
    let mut per_chip = vec![0.0f64; m_chips];
    for k in 0..out_len {
        let g = offset + k * decim;
        let j_lo = (g + center + 1).saturating_sub(kernel.len());
        let j_hi = (g + center).min(n - 1);
        per_chip.iter_mut().for_each(|v| *v = 0.0);
        for j in j_lo..=j_hi {
            per_chip[chips[j]] += x.values[j] * kernel[center + g - j];
        }
        for (channel, stream) in streams.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (c, &w) in per_chip.iter().enumerate() {
                acc += signs.sign(channel, c) * w;
            }
            stream.push(acc);
        }
    }

    Ok(SampleStreams {
        streams,
        rate: 1.0 / t_s,
        t_first: x.time_at(offset),
        sign_seed: signs.seed,
    })
}
