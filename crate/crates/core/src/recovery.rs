//! Blind recovery pipeline: correlation-frame construction, joint-sparse
//! support search by simultaneous orthogonal matching pursuit, and
//! known-support reconstruction through the pseudoinverse.
//!
//! The streams are reduced to a finite frame `V` via the correlation matrix
//! `Q = sum_k a[k] a[k]^T` (eigenvectors above a noise threshold, scaled by
//! the square roots of their eigenvalues). SOMP then explains `V` greedily
//! with dictionary columns; the union of chosen columns estimates the joint
//! support of the slice spectra.
//!
//! One wrinkle: the stored measurement convention pairs column `col(n)` with
//! scaling `d_n` so that `A_{i,col(n)} d_n` equals the waveform coefficient
//! `c_{i,n}`. Real mixing waveforms make the physical stream relation the
//! entrywise conjugate of that convention, so reconstruction applies
//! `conj(A_S)` and divides by `conj(d_n)`. Support search is unaffected: the
//! snapshots are real, and conjugating the dictionary only mirrors which
//! column explains which slice, a symmetry the mirror-closed supports of real
//! signals already have.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frontend::SampleStreams;
use crate::model::{sinc, DenseGrid, GridSpec, SupportSet};
use crate::numerics::{hermitian_eig, CMatrix, QrLstsq, RMatrix};
use crate::spectral::MeasurementMatrix;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Default relative eigenvalue threshold separating signal from noise space.
///
/// Small enough to keep the slice with the weaker share of a band that
/// straddles a slice boundary, large enough to discard window-leakage and
/// moderate noise.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// Relative residual at which SOMP declares the frame fully explained.
pub const RESIDUAL_EXIT: f64 = 1e-9;

/// Frame for the measurement span: correlation matrix, its spectrum, and the
/// kept (scaled) eigenvectors.
#[derive(Debug, Clone)]
pub struct CorrelationFrame {
    /// `Q[i][k] = sum_n a_i[n] a_k[n]`.
    pub correlation: RMatrix,
    /// All eigenvalues of `Q`, descending.
    pub eigenvalues: Vec<f64>,
    /// Kept eigenvectors scaled by `sqrt(lambda)`, one column each.
    pub basis: CMatrix,
    /// The relative threshold used to keep columns.
    pub threshold: f64,
}

impl CorrelationFrame {
    /// Number of kept columns.
    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    /// True when nothing rose above the threshold (e.g. all-zero streams).
    pub fn is_empty(&self) -> bool {
        self.rank() == 0
    }
}

/// Builds the correlation frame from the streams, keeping eigenvectors with
/// `lambda > threshold * lambda_max`. All-zero streams yield an empty frame
/// rather than an error.
pub fn build_frame(streams: &SampleStreams, threshold: f64) -> Result<CorrelationFrame> {
    let m = streams.channels();
    if m == 0 || streams.is_empty() {
        return Err(Error::InvalidConfig("cannot build a frame from empty streams".into()));
    }
    let mut q = RMatrix::zeros(m, m);
    for k in 0..streams.len() {
        for i in 0..m {
            let ai = streams.streams[i][k];
            for j in i..m {
                q[(i, j)] += ai * streams.streams[j][k];
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            q[(i, j)] = q[(j, i)];
        }
    }
    let eig = hermitian_eig(&q)?;
    let lambda_max = eig.values[0];
    let kept: Vec<usize> = if lambda_max <= 0.0 {
        Vec::new()
    } else {
        (0..m)
            .filter(|&k| eig.values[k] > threshold * lambda_max)
            .collect()
    };
    let basis = CMatrix::from_fn(m, kept.len(), |i, c| {
        let k = kept[c];
        Complex64::new(eig.values[k].max(0.0).sqrt() * eig.vectors[(i, k)], 0.0)
    });
    Ok(CorrelationFrame {
        correlation: q,
        eigenvalues: eig.values,
        basis,
        threshold,
    })
}

/// A finite joint-sparse system `V ≈ A U` with a greedy search budget.
#[derive(Debug, Clone)]
pub struct MmvProblem {
    /// Dictionary `A`, one column per candidate slice.
    pub dictionary: CMatrix,
    /// Frame columns to explain.
    pub measurements: CMatrix,
    /// Maximum number of columns to select.
    pub sparsity_budget: usize,
    /// Residual Frobenius-norm-squared level at which the search halts.
    pub stop_energy: f64,
}

impl MmvProblem {
    /// Problem with the default exit level `(1e-9 ||V||_F)^2`.
    pub fn new(dictionary: CMatrix, measurements: CMatrix, sparsity_budget: usize) -> Self {
        let stop = (RESIDUAL_EXIT * measurements.frobenius_norm()).powi(2);
        Self {
            dictionary,
            measurements,
            sparsity_budget,
            stop_energy: stop,
        }
    }
}

/// Everything the greedy search decided, in pick order.
#[derive(Debug, Clone)]
pub struct SompOutcome {
    /// Selected dictionary columns (0-based), in selection order.
    pub selection: Vec<usize>,
    /// Residual Frobenius norm squared before each pick, plus the final one;
    /// length `selection.len() + 1`.
    pub residual_energies: Vec<f64>,
    /// Final residual Frobenius norm.
    pub residual_norm: f64,
    /// Whether any projection hit a rank-deficient selected submatrix and
    /// fell back to the rank-truncated pseudoinverse.
    pub rank_deficient: bool,
}

impl SompOutcome {
    /// Selected columns as 1-based slice indices.
    pub fn support(&self) -> SupportSet {
        SupportSet::from_indices(self.selection.iter().map(|&c| c + 1))
    }

    /// Number of picks a given stop level would have kept: the first point
    /// where the residual energy fell to or below `stop_energy`.
    pub fn picks_at_stop(&self, stop_energy: f64) -> usize {
        for (picks, &e) in self.residual_energies.iter().enumerate() {
            if e <= stop_energy {
                return picks;
            }
        }
        self.selection.len()
    }
}

/// Simultaneous orthogonal matching pursuit.
///
/// Each iteration scores every unselected column by the l2 norm over frame
/// columns of its normalized correlation with the residual, takes the best
/// (lowest index on ties), and re-projects the frame onto the span of the
/// selection. Stops at the sparsity budget or when the residual energy
/// reaches `stop_energy`.
pub fn somp(prob: &MmvProblem) -> SompOutcome {
    let a = &prob.dictionary;
    let cols = a.cols();
    let col_norms: Vec<f64> = (0..cols).map(|j| a.column_norm(j)).collect();

    let mut residual = prob.measurements.clone();
    let mut selection: Vec<usize> = Vec::new();
    let mut selected = vec![false; cols];
    let mut residual_energies = Vec::new();
    let mut rank_deficient = false;

    for _ in 0..prob.sparsity_budget {
        let energy = residual.frobenius_norm().powi(2);
        residual_energies.push(energy);
        if energy <= prob.stop_energy {
            break;
        }
        // score every unselected column
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cols {
            if selected[j] || col_norms[j] == 0.0 {
                continue;
            }
            let mut score = 0.0;
            for r in 0..residual.cols() {
                let mut dot = Complex64::new(0.0, 0.0);
                for i in 0..a.rows() {
                    dot += a[(i, j)].conj() * residual[(i, r)];
                }
                score += dot.norm_sqr();
            }
            let score = score.sqrt() / col_norms[j];
            let better = match best {
                None => true,
                Some((_, s)) => score > s,
            };
            if better {
                best = Some((j, score));
            }
        }
        let Some((j, score)) = best else { break };
        if score <= 0.0 {
            break;
        }
        selection.push(j);
        selected[j] = true;

        let picked = a.select_columns(&selection);
        let factor = QrLstsq::factor(&picked);
        let coef = if factor.is_full_rank() {
            factor.solve(&prob.measurements).expect("full rank solve")
        } else {
            rank_deficient = true;
            factor.solve_truncated(&prob.measurements)
        };
        residual = prob.measurements.sub(&picked.matmul(&coef));
    }
    residual_energies.push(residual.frobenius_norm().powi(2));

    SompOutcome {
        selection,
        residual_norm: residual_energies.last().unwrap().sqrt(),
        residual_energies,
        rank_deficient,
    }
}

/// Knobs for the blind support search.
#[derive(Debug, Clone, Copy)]
pub struct RecoveryOptions {
    /// SOMP budget; the pipeline clamps it to the channel count.
    pub sparsity_budget: usize,
    /// Relative eigenvalue threshold for the frame.
    pub threshold: f64,
}

impl RecoveryOptions {
    /// Budget `4 N` (the joint sparsity bound for `N` band pairs) with the
    /// default noise threshold.
    pub fn for_band_count(band_count: usize) -> Self {
        Self {
            sparsity_budget: 4 * band_count,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Result of the blind support search.
#[derive(Debug, Clone)]
pub struct SupportEstimate {
    /// Slices selected before the residual fell to the frame's noise floor.
    pub support: SupportSet,
    /// Everything the full budget selected; a superset of `support` that can
    /// absorb window-leakage and noise directions.
    pub extended_support: SupportSet,
    /// Residual Frobenius norm at the stop point.
    pub residual_norm: f64,
    /// Number of frame columns that survived the threshold.
    pub frame_rank: usize,
    /// See [`SompOutcome::rank_deficient`].
    pub rank_deficient: bool,
}

/// Composes frame construction and SOMP into the blind support estimate.
///
/// The search halts once the residual energy is indistinguishable from the
/// frame's own noise floor (`threshold * lambda_max`), which also serves as
/// the model-order rule under noise.
pub fn recover_support(
    streams: &SampleStreams,
    meas: &MeasurementMatrix,
    opts: &RecoveryOptions,
) -> Result<SupportEstimate> {
    if meas.channels() != streams.channels() {
        return Err(Error::InvalidConfig(format!(
            "measurement matrix has {} rows but streams have {} channels",
            meas.channels(),
            streams.channels()
        )));
    }
    let frame = build_frame(streams, opts.threshold)?;
    if frame.is_empty() {
        return Ok(SupportEstimate {
            support: SupportSet::new(),
            extended_support: SupportSet::new(),
            residual_norm: 0.0,
            frame_rank: 0,
            rank_deficient: false,
        });
    }
    let budget = opts.sparsity_budget.min(streams.channels()).max(1);
    let prob = MmvProblem::new(meas.matrix.clone(), frame.basis.clone(), budget);
    let outcome = somp(&prob);
    let stop_energy = (opts.threshold * frame.eigenvalues[0]).max(prob.stop_energy);
    let picks = outcome.picks_at_stop(stop_energy);
    Ok(SupportEstimate {
        support: SupportSet::from_indices(outcome.selection[..picks].iter().map(|&c| c + 1)),
        extended_support: outcome.support(),
        residual_norm: outcome.residual_energies[picks].sqrt(),
        frame_rank: frame.rank(),
        rank_deficient: outcome.rank_deficient,
    })
}

/// Reconstruction output: per-slice baseband sequences at the stream rate and
/// the resynthesized waveform.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `(slice index 1-based, baseband sequence)` per recovered slice.
    pub baseband: Vec<(usize, Vec<Complex64>)>,
    pub grid: DenseGrid,
}

/// Known-support reconstruction: applies the pseudoinverse of the conjugated
/// support columns snapshot-by-snapshot (valid because the matrix does not
/// depend on frequency), then resynthesizes by sinc interpolation, slice
/// modulation, and summation, taking the real part.
pub fn reconstruct(
    streams: &SampleStreams,
    meas: &MeasurementMatrix,
    support: &SupportSet,
    grid: &GridSpec,
) -> Result<Reconstruction> {
    if meas.channels() != streams.channels() {
        return Err(Error::InvalidConfig(format!(
            "measurement matrix has {} rows but streams have {} channels",
            meas.channels(),
            streams.channels()
        )));
    }
    let t_period = meas.t_period;
    if ((1.0 / streams.rate) - t_period).abs() > 1e-9 * t_period {
        return Err(Error::InvalidConfig(
            "stream rate does not match the measurement matrix period".into(),
        ));
    }
    let n = grid.n_points;
    let dt = (grid.t_end - grid.t_start) / n as f64;
    if support.is_empty() {
        return Ok(Reconstruction {
            baseband: Vec::new(),
            grid: DenseGrid::from_spec(grid, vec![0.0; n]),
        });
    }
    let cols: Vec<usize> = support.iter().map(|i| i - 1).collect();
    if cols.iter().any(|&c| c >= meas.slices()) {
        return Err(Error::InvalidConfig(format!(
            "support {support} has slices beyond {}",
            meas.slices()
        )));
    }
    if cols.len() > streams.channels() {
        return Err(Error::RankDeficient {
            rank: streams.channels(),
            cols: cols.len(),
            context: format!(" (support {support} larger than the channel count)"),
        });
    }

    // physical relation uses the conjugate of the stored convention
    let a_s = CMatrix::from_fn(streams.channels(), cols.len(), |i, c| {
        meas.matrix[(i, cols[c])].conj()
    });
    let factor = QrLstsq::factor(&a_s);
    if !factor.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: factor.rank(),
            cols: cols.len(),
            context: format!(" for support {support}"),
        });
    }
    let len = streams.len();
    let snapshots = CMatrix::from_fn(streams.channels(), len, |i, k| {
        Complex64::new(streams.streams[i][k], 0.0)
    });
    let u = factor.solve(&snapshots)?;

    // baseband sequences: divide out the conjugated slice scaling
    let baseband: Vec<(usize, Vec<Complex64>)> = cols
        .iter()
        .enumerate()
        .map(|(row, &col)| {
            let d_bar = meas.scalings[col].conj();
            let seq: Vec<Complex64> = (0..len).map(|k| u[(row, k)] / d_bar).collect();
            (col + 1, seq)
        })
        .collect();

    // sinc interpolation at the grid times; when grid and stream instants
    // share a common step the kernel only needs integer offsets, so build a
    // table once
    let sample_times: Vec<f64> = (0..len).map(|k| streams.time_at(k)).collect();
    let grid_time = |j: usize| grid.t_start + (j as f64 + 0.5) * dt;
    let aligned_step = {
        let first_off = (sample_times[0] - grid_time(0)) / dt;
        let step = (1.0 / streams.rate) / dt;
        let ok = (first_off - first_off.round()).abs() < 1e-6
            && (step - step.round()).abs() < 1e-6
            && step.round() >= 1.0;
        ok.then(|| (first_off.round() as i64, step.round() as i64))
    };
    let kernel: Option<Vec<f64>> = aligned_step.map(|(first, step)| {
        let max_off = (n as i64 + first.abs() + step * len as i64) as usize;
        (0..=max_off)
            .map(|i| sinc(i as f64 * dt / t_period))
            .collect()
    });

    let mut values = vec![0.0f64; n];
    let mut interp = vec![Complex64::new(0.0, 0.0); n];
    for (row, &col) in cols.iter().enumerate() {
        let d_bar = meas.scalings[col].conj();
        for v in interp.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for k in 0..len {
            let coef = u[(row, k)] / d_bar;
            match (&kernel, aligned_step) {
                (Some(table), Some((first, step))) => {
                    let j_k = first + step * k as i64;
                    for (j, v) in interp.iter_mut().enumerate() {
                        *v += coef * table[(j as i64 - j_k).unsigned_abs() as usize];
                    }
                }
                _ => {
                    let t_k = sample_times[k];
                    for (j, v) in interp.iter_mut().enumerate() {
                        *v += coef * sinc((grid_time(j) - t_k) / t_period);
                    }
                }
            }
        }
        let center = meas.slice_center(col);
        for (j, v) in interp.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, TWO_PI * center * grid_time(j));
            values[j] += (v * phase).re;
        }
    }

    Ok(Reconstruction {
        baseband,
        grid: DenseGrid::from_spec(grid, values),
    })
}
