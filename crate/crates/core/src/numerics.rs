//! Dense numerical kernels used by the rest of the crate: a symmetric
//! eigensolver, complex least squares, the plain DFT and convolution.
//!
//! Everything here targets the small problem sizes of this crate (matrices up
//! to a couple hundred rows); clarity and accuracy win over asymptotics.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for RMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real(r: &RMatrix) -> Self {
        Self::from_fn(r.rows(), r.cols(), |i, j| Complex64::new(r[(i, j)], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Keep the listed columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate-transpose times `rhs`.
    pub fn hermitian_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "hermitian_matmul dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self[(k, i)].conj();
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Eigenvalues, sorted descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as matrix columns, same order as `values`.
    pub vectors: RMatrix,
}

const HERMITIAN_TOL: f64 = 1e-8;

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix.
///
/// The input must be symmetric within `1e-8` relative to its largest entry;
/// anything else is rejected. For complex Hermitian data the callers in this
/// crate only ever need the real specialization (stream correlation matrices
/// are real), so that is what is implemented.
pub fn hermitian_eig(q: &RMatrix) -> Result<Eigen> {
    let n = q.rows();
    if q.cols() != n {
        return Err(Error::NotHermitian);
    }
    let scale = q.max_abs().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > HERMITIAN_TOL * scale {
                return Err(Error::NotHermitian);
            }
        }
    }

    let mut a = q.clone();
    // symmetrize exactly so rounding in the caller cannot bias the sweep
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v = RMatrix::identity(n);

    let frob = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * frob {
            break;
        }
        for p in 0..n {
            for q_ in (p + 1)..n {
                let apq = a[(p, q_)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q_, q_)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[(p, p)];
                let aqq = a[(q_, q_)];
                a[(p, p)] = app - t * apq;
                a[(q_, q_)] = aqq + t * apq;
                a[(p, q_)] = 0.0;
                a[(q_, p)] = 0.0;
                for i in 0..n {
                    if i != p && i != q_ {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q_)];
                        a[(i, p)] = aip - s * (aiq + tau * aip);
                        a[(p, i)] = a[(i, p)];
                        a[(i, q_)] = aiq + s * (aip - tau * aiq);
                        a[(q_, i)] = a[(i, q_)];
                    }
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q_)];
                    v[(i, p)] = vip - s * (viq + tau * vip);
                    v[(i, q_)] = viq + s * (vip - tau * viq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = RMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// Column-pivoted Householder QR of a complex matrix, for least squares.
#[derive(Debug, Clone)]
pub struct QrLstsq {
    /// Householder vectors in the strict lower part, R on and above the diagonal.
    w: CMatrix,
    /// 2 / ||v||^2 per reflector.
    inv_vnorms: Vec<f64>,
    /// Column permutation: working column j came from input column `piv[j]`.
    piv: Vec<usize>,
    rank: usize,
    diag: Vec<f64>,
}

const RANK_TOL: f64 = 1e-12;

impl QrLstsq {
    pub fn factor(a: &CMatrix) -> Self {
        let (m, k) = (a.rows(), a.cols());
        assert!(m >= k, "least squares needs rows >= cols ({m} < {k})");
        let mut w = a.clone();
        let mut piv: Vec<usize> = (0..k).collect();
        let mut inv_vnorms = vec![0.0; k];
        let mut diag = vec![0.0; k];

        for j in 0..k {
            // pivot: bring the column with the largest remaining norm to j
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..k {
                let nrm: f64 = (j..m).map(|i| w[(i, c)].norm_sqr()).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = c;
                }
            }
            if best != j {
                for i in 0..m {
                    let tmp = w[(i, j)];
                    w[(i, j)] = w[(i, best)];
                    w[(i, best)] = tmp;
                }
                piv.swap(j, best);
            }

            let norm = best_norm.max(0.0).sqrt();
            diag[j] = norm;
            if norm == 0.0 {
                inv_vnorms[j] = 0.0;
                continue;
            }
            let x0 = w[(j, j)];
            let phase = if x0.norm() > 0.0 {
                x0 / x0.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let beta = -phase * norm;
            // v = x - beta e1, stored in place of the column
            w[(j, j)] = x0 - beta;
            let vnorm_sqr: f64 = (j..m).map(|i| w[(i, j)].norm_sqr()).sum();
            if vnorm_sqr == 0.0 {
                inv_vnorms[j] = 0.0;
                w[(j, j)] = beta;
                continue;
            }
            inv_vnorms[j] = 2.0 / vnorm_sqr;
            // apply the reflector to the trailing columns
            for c in (j + 1)..k {
                let mut dot = Complex64::new(0.0, 0.0);
                for i in j..m {
                    dot += w[(i, j)].conj() * w[(i, c)];
                }
                dot *= inv_vnorms[j];
                for i in j..m {
                    let vj = w[(i, j)];
                    w[(i, c)] -= vj * dot;
                }
            }
            // the column itself becomes beta in row j (zeros below are implicit)
            // keep v below the diagonal; the diagonal entry of R goes in a side slot
            // so swap: store beta on the diagonal and v_0 separately.
            let v0 = w[(j, j)];
            w[(j, j)] = beta;
            // fold v0 into the scaling so only the sub-diagonal part of v is stored
            // explicitly: v = [v0, w[j+1.., j]]. We keep v0 by rescaling the stored
            // tail and inv_vnorm; simpler is to stash v0 where a unit entry would be.
            // Re-store v with unit leading entry: v' = v / v0, adjust inv_vnorm.
            if v0.norm() > 0.0 {
                for i in (j + 1)..m {
                    let scaled = w[(i, j)] / v0;
                    w[(i, j)] = scaled;
                }
                inv_vnorms[j] *= v0.norm_sqr();
            } else {
                inv_vnorms[j] = 0.0;
            }
        }

        let d0 = diag[0].max(f64::MIN_POSITIVE);
        let mut rank = 0;
        for j in 0..k {
            if diag[j] > RANK_TOL * d0 {
                rank = j + 1;
            } else {
                break;
            }
        }
        Self {
            w,
            inv_vnorms,
            piv,
            rank,
            diag,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cols(&self) -> usize {
        self.w.cols()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.w.cols()
    }

    /// Ratio of the largest to smallest pivoted column norm; a cheap
    /// conditioning estimate.
    pub fn cond_estimate(&self) -> f64 {
        let last = self.diag[self.w.cols() - 1];
        if last == 0.0 {
            f64::INFINITY
        } else {
            self.diag[0] / last
        }
    }

    /// Apply Q^H to the columns of `y` in place.
    fn apply_qh(&self, y: &mut CMatrix) {
        let (m, k) = (self.w.rows(), self.w.cols());
        for j in 0..k {
            if self.inv_vnorms[j] == 0.0 {
                continue;
            }
            for c in 0..y.cols() {
                // v has unit leading entry at row j, stored tail below
                let mut dot = y[(j, c)];
                for i in (j + 1)..m {
                    dot += self.w[(i, j)].conj() * y[(i, c)];
                }
                dot *= self.inv_vnorms[j];
                y[(j, c)] -= dot;
                for i in (j + 1)..m {
                    let vij = self.w[(i, j)];
                    y[(i, c)] -= vij * dot;
                }
            }
        }
    }

    fn solve_with_rank(&self, y: &CMatrix, rank: usize) -> CMatrix {
        let k = self.w.cols();
        let mut qy = y.clone();
        self.apply_qh(&mut qy);
        let mut x = CMatrix::zeros(k, y.cols());
        for c in 0..y.cols() {
            for jr in (0..rank).rev() {
                let mut acc = qy[(jr, c)];
                for jc in (jr + 1)..rank {
                    acc -= self.w[(jr, jc)] * x[(self.piv[jc], c)];
                }
                x[(self.piv[jr], c)] = acc / self.w[(jr, jr)];
            }
        }
        x
    }

    /// Least-squares solve for every column of `y`; errors when the factored
    /// matrix is rank deficient.
    pub fn solve(&self, y: &CMatrix) -> Result<CMatrix> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: self.w.cols(),
                context: String::new(),
            });
        }
        Ok(self.solve_with_rank(y, self.rank))
    }

    /// Rank-truncated least-squares solve: uses only the pivoted columns that
    /// pass the rank test and zeros the coefficients of the rest. The fitted
    /// value `A x` still minimizes the residual.
    pub fn solve_truncated(&self, y: &CMatrix) -> CMatrix {
        self.solve_with_rank(y, self.rank)
    }
}

/// Minimize `||a x - y||` over `x`, for a full-column-rank `a`.
pub fn lstsq_apply(a: &CMatrix, y: &CMatrix) -> Result<CMatrix> {
    QrLstsq::factor(a).solve(y)
}

/// Plain discrete Fourier transform, `X[k] = sum_n x[n] e^{-2 pi i k n / N}`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    assert!(n > 0, "dft of empty input");
    let w0 = -2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                acc += xj * Complex64::from_polar(1.0, w0 * (k * j % n) as f64);
            }
            acc
        })
        .collect()
}

/// Inverse of [`dft`], including the `1/N` scaling.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    assert!(n > 0, "idft of empty input");
    let w0 = 2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &xj) in x.iter().enumerate() {
                acc += xj * Complex64::from_polar(1.0, w0 * (k * j % n) as f64);
            }
            acc / n as f64
        })
        .collect()
}

/// DFT of a real sequence.
pub fn dft_real(x: &[f64]) -> Vec<Complex64> {
    let buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(&buf)
}

/// Full (zero-padded) linear convolution; output length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert!(!a.is_empty() && !b.is_empty(), "convolve of empty input");
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rng: &mut impl Rng) -> RMatrix {
        // sum of outer products, like a stream correlation matrix
        let snapshots = n + 3;
        let mut q = RMatrix::zeros(n, n);
        for _ in 0..snapshots {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..n {
                for j in 0..n {
                    q[(i, j)] += v[i] * v[j];
                }
            }
        }
        q
    }

    #[test]
    fn eig_identity() {
        let eig = hermitian_eig(&RMatrix::identity(7)).unwrap();
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_diagonal_sorted() {
        let mut q = RMatrix::zeros(3, 3);
        q[(0, 0)] = 3.0;
        q[(1, 1)] = 1.0;
        q[(2, 2)] = 2.0;
        let eig = hermitian_eig(&q).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        // axis eigenvectors up to sign
        assert!((eig.vectors[(0, 0)].abs() - 1.0).abs() < 1e-14);
        assert!((eig.vectors[(2, 1)].abs() - 1.0).abs() < 1e-14);
        assert!((eig.vectors[(1, 2)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let n = 3 + (trial % 7) * 8; // up to 51
            let q = random_psd(n, &mut rng);
            let eig = hermitian_eig(&q).unwrap();
            // residual ||Q - V L V^T||_F / ||Q||_F
            let mut recon = RMatrix::zeros(n, n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        recon[(i, j)] +=
                            eig.values[k] * eig.vectors[(i, k)] * eig.vectors[(j, k)];
                    }
                }
            }
            let mut err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    err += (recon[(i, j)] - q[(i, j)]).powi(2);
                }
            }
            assert!(err.sqrt() / q.frobenius_norm() < 1e-8);
            // orthonormal eigenvectors
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n)
                        .map(|i| eig.vectors[(i, a)] * eig.vectors[(i, b)])
                        .sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn eig_trace_matches_eigenvalue_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_psd(23, &mut rng);
        let eig = hermitian_eig(&q).unwrap();
        let trace: f64 = (0..23).map(|i| q[(i, i)]).sum();
        let sum: f64 = eig.values.iter().sum();
        assert!((trace - sum).abs() <= 1e-8 * trace.abs());
    }

    #[test]
    fn eig_rejects_non_symmetric() {
        let mut q = RMatrix::identity(3);
        q[(0, 1)] = 0.5;
        assert!(matches!(hermitian_eig(&q), Err(Error::NotHermitian)));
    }

    fn random_cmatrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn lstsq_identity_returns_rhs() {
        let a = CMatrix::from_real(&RMatrix::identity(5));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_cmatrix(5, 2, &mut rng);
        let x = lstsq_apply(&a, &y).unwrap();
        for i in 0..5 {
            for j in 0..2 {
                assert!((x[(i, j)] - y[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lstsq_orthogonal_rhs_gives_zero() {
        // columns of a span the first two axes; y lives on the third
        let a = CMatrix::from_fn(3, 2, |i, j| {
            Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let y = CMatrix::from_fn(3, 1, |i, _| Complex64::new(if i == 2 { 4.0 } else { 0.0 }, 0.0));
        let x = lstsq_apply(&a, &y).unwrap();
        assert!(x[(0, 0)].norm() < 1e-14);
        assert!(x[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn lstsq_recovers_planted_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let a = random_cmatrix(51, 12, &mut rng);
            let z = random_cmatrix(12, 3, &mut rng);
            let y = a.matmul(&z);
            let x = lstsq_apply(&a, &y).unwrap();
            let err = x.sub(&z).frobenius_norm() / z.frobenius_norm();
            assert!(err < 1e-9, "planted recovery error {err}");
            // residual orthogonal to the columns
            let resid = a.matmul(&x).sub(&y);
            let gram = a.hermitian_matmul(&resid);
            assert!(gram.frobenius_norm() < 1e-8 * y.frobenius_norm());
        }
    }

    #[test]
    fn lstsq_pseudoinverse_contract() {
        // applying the solve to the matrix itself gives the identity when the
        // columns are independent
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..5 {
            let a = random_cmatrix(20, 7, &mut rng);
            let pinv_a = lstsq_apply(&a, &a).unwrap();
            for i in 0..7 {
                for j in 0..7 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((pinv_a[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn lstsq_square_system_is_exact_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cmatrix(8, 8, &mut rng);
        let z = random_cmatrix(8, 1, &mut rng);
        let y = a.matmul(&z);
        let x = lstsq_apply(&a, &y).unwrap();
        assert!(x.sub(&z).frobenius_norm() / z.frobenius_norm() < 1e-10);
    }

    #[test]
    fn lstsq_reports_rank_deficiency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let base = random_cmatrix(10, 1, &mut rng);
        // two identical columns
        let a = CMatrix::from_fn(10, 2, |i, _| base[(i, 0)]);
        let y = random_cmatrix(10, 1, &mut rng);
        match lstsq_apply(&a, &y) {
            Err(Error::RankDeficient { rank, cols, .. }) => {
                assert_eq!(rank, 1);
                assert_eq!(cols, 2);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        // the truncated path still minimizes the residual
        let f = QrLstsq::factor(&a);
        let x = f.solve_truncated(&y);
        let resid = a.matmul(&x).sub(&y);
        let gram = a.hermitian_matmul(&resid);
        assert!(gram.frobenius_norm() < 1e-8 * y.frobenius_norm());
    }

    #[test]
    fn dft_of_constant_is_dc_only() {
        let x = vec![Complex64::new(2.5, 0.0); 8];
        let spec = dft(&x);
        assert!((spec[0] - Complex64::new(20.0, 0.0)).norm() < 1e-12);
        for k in 1..8 {
            assert!(spec[k].norm() < 1e-12);
        }
    }

    #[test]
    fn dft_matches_definition_and_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in [1usize, 2, 7, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let spec = dft(&x);
            // defining sum, evaluated independently without the modular phase trick
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &xj) in x.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * (k as f64) * (j as f64) / n as f64;
                    acc += xj * Complex64::from_polar(1.0, ang);
                }
                assert!((spec[k] - acc).norm() < 1e-10);
            }
            let back = idft(&spec);
            for (a, b) in back.iter().zip(x.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn dft_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let x: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let y: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let sum: Vec<Complex64> = x.iter().zip(y.iter()).map(|(a, b)| a + b).collect();
        let lhs = dft(&sum);
        let fx = dft(&x);
        let fy = dft(&y);
        for k in 0..16 {
            assert!((lhs[k] - (fx[k] + fy[k])).norm() < 1e-10);
        }
    }

    #[test]
    fn convolution_hand_example() {
        assert_eq!(convolve(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
    }
}
