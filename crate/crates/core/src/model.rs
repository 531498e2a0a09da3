//! Multiband signal model: parameter validation, test-signal synthesis on a
//! dense time grid, calibrated noise, and ground-truth spectral-slice support.
//!
//! A signal in the model is bandlimited to `[-f_nyq/2, f_nyq/2]` and occupies
//! at most `2N` spectral intervals of width `B`, arranged as `N` mirror pairs
//! around randomly drawn carriers. Test signals are sums of sinc-shaped bands,
//! `sum_i sqrt(E_i B) sinc(B t) cos(2 pi f_i t)`.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// `sin(pi x) / (pi x)`, with the limit value 1 at `x = 0`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Static description of the signal class: Nyquist rate, number of band
/// pairs, per-band width, and per-band energies.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Nyquist rate `f_nyq` in Hz; the signal is bandlimited to `±f_nyq/2`.
    pub nyquist_rate: f64,
    /// Number of band pairs `N`.
    pub band_count: usize,
    /// Width `B` of each band in Hz.
    pub band_width: f64,
    /// Energy coefficient per band pair, length `band_count`, all positive.
    pub energies: Vec<f64>,
}

impl ModelParams {
    pub fn new(
        nyquist_rate: f64,
        band_count: usize,
        band_width: f64,
        energies: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            nyquist_rate,
            band_count,
            band_width,
            energies,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nyquist_rate > 0.0) {
            return Err(Error::InvalidModel("nyquist_rate must be positive".into()));
        }
        if !(self.band_width > 0.0) {
            return Err(Error::InvalidModel("band_width must be positive".into()));
        }
        if self.band_count == 0 {
            return Err(Error::InvalidModel("band_count must be at least 1".into()));
        }
        if self.energies.len() != self.band_count {
            return Err(Error::InvalidModel(format!(
                "expected {} energies, got {}",
                self.band_count,
                self.energies.len()
            )));
        }
        if self.energies.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::InvalidModel("energies must be positive".into()));
        }
        let occupied = 2.0 * self.band_count as f64 * self.band_width;
        if occupied > self.nyquist_rate {
            return Err(Error::InvalidModel(format!(
                "occupied bandwidth 2*N*B = {occupied:.3e} Hz exceeds the Nyquist rate"
            )));
        }
        Ok(())
    }
}

/// One concrete signal: model parameters plus a carrier per band pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MultibandSignal {
    pub params: ModelParams,
    /// Carrier frequencies in Hz, one per band pair.
    pub carriers: Vec<f64>,
}

impl MultibandSignal {
    /// Builds a signal, rejecting any carrier whose band would stick out of
    /// `±f_nyq/2`.
    pub fn new(params: ModelParams, carriers: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if carriers.len() != params.band_count {
            return Err(Error::InvalidModel(format!(
                "expected {} carriers, got {}",
                params.band_count,
                carriers.len()
            )));
        }
        let half = params.nyquist_rate / 2.0;
        for &f in &carriers {
            if f.abs() + params.band_width / 2.0 > half {
                return Err(Error::InvalidModel(format!(
                    "carrier {f:.6e} Hz puts a band edge beyond ±f_nyq/2"
                )));
            }
        }
        Ok(Self { params, carriers })
    }

    /// Draws carriers uniformly at random, re-drawing any that would push a
    /// band edge beyond `±f_nyq/2`. Deterministic given the seed.
    pub fn draw(params: ModelParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self::draw_with(params, &mut rng))
    }

    /// Same as [`MultibandSignal::draw`] but from a caller-owned generator.
    pub fn draw_with(params: ModelParams, rng: &mut impl Rng) -> Self {
        let half = params.nyquist_rate / 2.0;
        let limit = half - params.band_width / 2.0;
        let carriers = (0..params.band_count)
            .map(|_| loop {
                let f = rng.gen_range(-half..half);
                if f.abs() <= limit {
                    break f;
                }
            })
            .collect();
        Self { params, carriers }
    }

    /// Evaluates the signal formula at an arbitrary time.
    pub fn value_at(&self, t: f64) -> f64 {
        let b = self.params.band_width;
        self.carriers
            .iter()
            .zip(self.params.energies.iter())
            .map(|(&f, &e)| (e * b).sqrt() * sinc(b * t) * (2.0 * std::f64::consts::PI * f * t).cos())
            .sum()
    }
}

/// Time window and point count for rendering a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl GridSpec {
    /// Symmetric window of `n_points` cells spanning `±half_width`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Self {
        Self {
            t_start: -half_width,
            t_end: half_width,
            n_points,
        }
    }
}

/// Equispaced real sequence over a time window. Samples sit at cell centers:
/// `t_j = t_start + (j + 1/2) dt` with `dt = (t_end - t_start) / n_points`,
/// the midpoint discretization of the underlying continuous-time waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub values: Vec<f64>,
}

impl DenseGrid {
    pub fn from_spec(spec: &GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(spec.n_points, values.len());
        Self {
            t_start: spec.t_start,
            t_end: spec.t_end,
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.values.len() as f64
    }

    /// Sample time of grid index `j`.
    pub fn time_at(&self, j: usize) -> f64 {
        self.t_start + (j as f64 + 0.5) * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time_at(j))
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            t_start: self.t_start,
            t_end: self.t_end,
            n_points: self.len(),
        }
    }
}

/// Renders the signal on the grid. Rejects grids with fewer than two points
/// or coarser than twice the signal's Nyquist rate.
pub fn synthesize(sig: &MultibandSignal, grid: &GridSpec) -> Result<DenseGrid> {
    if grid.n_points < 2 || !(grid.t_end > grid.t_start) {
        return Err(Error::InvalidModel(
            "grid needs at least 2 points and a positive time span".into(),
        ));
    }
    let dt = (grid.t_end - grid.t_start) / grid.n_points as f64;
    let limit = 1.0 / (2.0 * sig.params.nyquist_rate);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse { dt, limit });
    }
    let values = (0..grid.n_points)
        .map(|j| sig.value_at(grid.t_start + (j as f64 + 0.5) * dt))
        .collect();
    Ok(DenseGrid::from_spec(grid, values))
}

/// Target signal-to-noise ratio; noiseless is an explicit variant rather than
/// a large dB value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Noiseless,
    Db(f64),
}

impl fmt::Display for Snr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Snr::Noiseless => write!(f, "noiseless"),
            Snr::Db(v) => write!(f, "{v}"),
        }
    }
}

/// Which logarithmic SNR definition `add_noise` targets.
///
/// `NormRatio10Log` is `10 log10(||x|| / ||w||)`, the literal definition used
/// by the reference experiment; `NormRatio20Log` is the conventional
/// `20 log10(||x|| / ||w||)` (i.e. dB on the energy ratio).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrConvention {
    #[default]
    NormRatio10Log,
    NormRatio20Log,
}

impl SnrConvention {
    fn norm_ratio(self, snr_db: f64) -> f64 {
        match self {
            SnrConvention::NormRatio10Log => 10f64.powf(snr_db / 10.0),
            SnrConvention::NormRatio20Log => 10f64.powf(snr_db / 20.0),
        }
    }
}

/// Adds white Gaussian noise scaled so that the norm ratio hits the target
/// SNR exactly. Returns `(x + w, w)`. Deterministic given the seed.
pub fn add_noise(
    x: &DenseGrid,
    snr: Snr,
    convention: SnrConvention,
    seed: u64,
) -> Result<(DenseGrid, DenseGrid)> {
    let zero = DenseGrid {
        t_start: x.t_start,
        t_end: x.t_end,
        values: vec![0.0; x.len()],
    };
    let snr_db = match snr {
        Snr::Noiseless => return Ok((x.clone(), zero)),
        Snr::Db(v) => v,
    };
    let x_norm = x.norm();
    if x_norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..x.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let w_norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if w_norm == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let target = x_norm / convention.norm_ratio(snr_db);
    let scale = target / w_norm;
    for v in &mut w {
        *v *= scale;
    }
    let noisy = DenseGrid {
        t_start: x.t_start,
        t_end: x.t_end,
        values: x.values.iter().zip(w.iter()).map(|(a, b)| a + b).collect(),
    };
    let noise = DenseGrid {
        t_start: x.t_start,
        t_end: x.t_end,
        values: w,
    };
    Ok((noisy, noise))
}

/// Ordered set of occupied spectrum-slice indices, 1-based in `{1..M}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet {
    indices: BTreeSet<usize>,
}

impl SupportSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self {
            indices: indices.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, i: usize) {
        self.indices.insert(i);
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn is_superset_of(&self, other: &Self) -> bool {
        other.indices.is_subset(&self.indices)
    }

    /// Mirror slice of index `i` for an `M`-slice spectrum: `M + 1 - i`.
    pub fn mirror_index(m_slices: usize, i: usize) -> usize {
        m_slices + 1 - i
    }

    /// Whether the set is closed under slice mirroring.
    pub fn is_mirror_symmetric(&self, m_slices: usize) -> bool {
        self.iter()
            .all(|i| self.contains(Self::mirror_index(m_slices, i)))
    }

    /// Semicolon-joined indices, e.g. `"3;21;31"`; empty set serializes as `-`.
    pub fn to_field(&self) -> String {
        if self.is_empty() {
            return "-".into();
        }
        self.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn parse_field(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Some(Self::new());
        }
        let mut set = Self::new();
        for part in s.split(';') {
            set.insert(part.trim().parse().ok()?);
        }
        Some(set)
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Computes which of the `M` spectrum slices the signal's bands touch.
///
/// Slice `i` (1-based) covers `[(i - n0 - 1)/T - 1/(2T), (i - n0 - 1)/T + 1/(2T)]`
/// with `T = M / f_nyq` and `n0 = (M - 1) / 2`; a slice is occupied when a
/// band (or its mirror) overlaps it with positive measure.
pub fn true_support(sig: &MultibandSignal, m_slices: usize) -> Result<SupportSet> {
    let limit = sig.params.nyquist_rate / sig.params.band_width;
    if (m_slices as f64) > limit * (1.0 + 1e-12) {
        return Err(Error::TooManySlices {
            slices: m_slices,
            limit,
        });
    }
    let t_period = m_slices as f64 / sig.params.nyquist_rate;
    let n0 = (m_slices - 1) / 2;
    let slice_half = 1.0 / (2.0 * t_period);
    let b_half = sig.params.band_width / 2.0;

    let mut support = SupportSet::new();
    for &carrier in &sig.carriers {
        for center in [carrier, -carrier] {
            let (lo, hi) = (center - b_half, center + b_half);
            for i in 1..=m_slices {
                let slice_center = (i as f64 - n0 as f64 - 1.0) / t_period;
                if lo < slice_center + slice_half && hi > slice_center - slice_half {
                    support.insert(i);
                }
            }
        }
    }
    Ok(support)
}

/// One pass/fail line of a parameter validation report.
#[derive(Debug, Clone)]
pub struct Condition {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Result of checking the acquisition parameters against the uniqueness
/// conditions, plus the achieved and minimal average sampling rates.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub conditions: Vec<Condition>,
    /// Average sampling rate `m / T` in Hz.
    pub average_rate: f64,
    /// Minimal rate for blind perfect reconstruction, `4 N B` in Hz.
    pub minimal_rate: f64,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        writeln!(f, "average sampling rate: {:.6e} Hz", self.average_rate)?;
        write!(f, "minimal blind rate 4NB: {:.6e} Hz", self.minimal_rate)
    }
}

/// Checks the slice count against `f_nyq / B` and the channel count against
/// the `2N` (known support) or `4N` (blind) requirement.
pub fn validate_parameters(
    params: &ModelParams,
    m_slices: usize,
    channels: usize,
    blind: bool,
) -> ValidationReport {
    let limit = params.nyquist_rate / params.band_width;
    let cond1 = Condition {
        name: "slice width at least band width (M <= f_nyq/B)".into(),
        pass: (m_slices as f64) <= limit * (1.0 + 1e-12),
        detail: format!("M = {m_slices}, f_nyq/B = {limit:.3}"),
    };
    let needed = if blind { 4 } else { 2 } * params.band_count;
    let cond2 = Condition {
        name: format!(
            "enough channels (m >= {}N)",
            if blind { 4 } else { 2 }
        ),
        pass: channels >= needed,
        detail: format!("m = {channels}, required {needed}"),
    };
    let t_period = m_slices as f64 / params.nyquist_rate;
    ValidationReport {
        conditions: vec![cond1, cond2],
        average_rate: channels as f64 / t_period,
        minimal_rate: 4.0 * params.band_count as f64 * params.band_width,
    }
}

/// Plain-text key-value record of a signal description, for experiment
/// reproducibility.
pub fn signal_to_record(sig: &MultibandSignal) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "nyquist_rate_hz = {}\nband_count = {}\nband_width_hz = {}\nenergies = {}\ncarriers_hz = {}\n",
        sig.params.nyquist_rate,
        sig.params.band_count,
        sig.params.band_width,
        join(&sig.params.energies),
        join(&sig.carriers),
    )
}

/// Parses the record format written by [`signal_to_record`].
pub fn signal_from_record(text: &str) -> Result<MultibandSignal> {
    let mut nyquist = None;
    let mut count = None;
    let mut width = None;
    let mut energies: Option<Vec<f64>> = None;
    let mut carriers: Option<Vec<f64>> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::ConfigParse {
            line: lineno + 1,
            msg: "expected key = value".into(),
        })?;
        let parse_f64 = |v: &str| {
            v.trim().parse::<f64>().map_err(|e| Error::ConfigParse {
                line: lineno + 1,
                msg: e.to_string(),
            })
        };
        let parse_list = |v: &str| -> Result<Vec<f64>> {
            v.split(',').map(|p| parse_f64(p)).collect()
        };
        match key.trim() {
            "nyquist_rate_hz" => nyquist = Some(parse_f64(value)?),
            "band_count" => {
                count = Some(value.trim().parse::<usize>().map_err(|e| Error::ConfigParse {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?)
            }
            "band_width_hz" => width = Some(parse_f64(value)?),
            "energies" => energies = Some(parse_list(value)?),
            "carriers_hz" => carriers = Some(parse_list(value)?),
            other => {
                return Err(Error::ConfigParse {
                    line: lineno + 1,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
    }
    let missing = |what: &str| Error::InvalidModel(format!("record is missing {what}"));
    let params = ModelParams::new(
        nyquist.ok_or_else(|| missing("nyquist_rate_hz"))?,
        count.ok_or_else(|| missing("band_count"))?,
        width.ok_or_else(|| missing("band_width_hz"))?,
        energies.ok_or_else(|| missing("energies"))?,
    )?;
    MultibandSignal::new(params, carriers.ok_or_else(|| missing("carriers_hz"))?)
}

/// The reference experiment's model parameters: N = 3 band pairs of 40 MHz
/// within a 10 GHz Nyquist band, energies 1, 2, 3.
pub fn reference_model() -> ModelParams {
    ModelParams {
        nyquist_rate: 10e9,
        band_count: 3,
        band_width: 40e6,
        energies: vec![1.0, 2.0, 3.0],
    }
}

/// The reference rendering window: 4000 cells over `±200/f_nyq`.
pub fn reference_grid(params: &ModelParams) -> GridSpec {
    GridSpec::symmetric(200.0 / params.nyquist_rate, 4000)
}
