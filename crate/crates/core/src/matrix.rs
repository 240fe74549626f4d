//! Dense complex matrix primitives.
//!
//! Everything the channel model decomposes is Hermitian (correlation
//! matrices, Gramians `G G^H`), so the eigendecomposition surface is
//! Hermitian-only by design. Eigenvalues are reported in non-increasing
//! order everywhere.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::RngState;

/// Dense complex matrix with row-major logical indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    pub fn from_real_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::from_fn(rows, cols, |i, j| Complex64::new(f(i, j), 0.0))
    }

    /// Builds from entries listed row by row. Errors when the entry count
    /// does not equal `rows * cols` or any entry is non-finite.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let m = Self::from_fn(rows, cols, |i, j| entries[i * cols + j]);
        m.ensure_finite()?;
        Ok(m)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_real_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.inner[(row, col)] = value;
    }

    pub fn entries_row_major(&self) -> Vec<Complex64> {
        let (r, c) = (self.rows(), self.cols());
        (0..r)
            .flat_map(|i| (0..c).map(move |j| (i, j)))
            .map(|(i, j)| self.inner[(i, j)])
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite("matrix entry".into()))
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: &self.inner * Complex64::new(factor, 0.0),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self {
            inner: &self.inner * &rhs.inner,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.rows() != rhs.rows() || self.cols() != rhs.cols() {
            return Err(Error::DimensionMismatch("subtraction shapes differ".into()));
        }
        Ok(Self {
            inner: &self.inner - &rhs.inner,
        })
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `A A^H` (left Gramian), always Hermitian PSD.
    pub fn gram_left(&self) -> Self {
        Self {
            inner: &self.inner * self.inner.adjoint(),
        }
    }

    /// `A^H A` (right Gramian), always Hermitian PSD.
    pub fn gram_right(&self) -> Self {
        Self {
            inner: self.inner.adjoint() * &self.inner,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.inner.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermitian symmetry, `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm();
                dev = dev.max(d);
            }
        }
        dev
    }

    fn is_exactly_diagonal(&self) -> bool {
        let n = self.rows();
        for i in 0..n {
            for j in 0..n {
                let z = self.inner[(i, j)];
                if i != j && (z.re != 0.0 || z.im != 0.0) {
                    return false;
                }
                if i == j && z.im != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    fn is_real(&self) -> bool {
        self.inner.iter().all(|z| z.im == 0.0)
    }
}

/// Eigendecomposition `A = U Λ U^H` of a Hermitian matrix, eigenvalues in
/// non-increasing order with eigenvector columns aligned.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// Rebuilds `U Λ U^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let lambda = ComplexMatrix::diagonal(&self.eigenvalues);
        self.eigenvectors
            .mul(&lambda)
            .and_then(|ul| ul.mul(&self.eigenvectors.adjoint()))
            .unwrap_or_else(|_| ComplexMatrix::zeros(n, n))
    }
}

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_CLAMP_TOL: f64 = 1e-12;

fn sort_non_increasing(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable sort: ties keep their input order.
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    order
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input must be square and Hermitian within `1e-12` (relative to its
/// largest entry); it is symmetrized before decomposition. Diagonal inputs
/// take an exact fast path whose eigenvectors are permutation columns of the
/// identity, so identity matrices decompose to identity eigenvectors rather
/// than an arbitrary unitary basis.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.ensure_finite()?;
    let scale = a.max_abs_entry().max(1.0);
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { max_deviation: dev });
    }

    let n = a.rows();
    if a.is_exactly_diagonal() {
        let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        let order = sort_non_increasing(&diag);
        let eigenvalues = order.iter().map(|&k| diag[k]).collect();
        let eigenvectors = ComplexMatrix::from_real_fn(n, n, |i, j| {
            if i == order[j] {
                1.0
            } else {
                0.0
            }
        });
        return Ok(HermitianEig {
            eigenvalues,
            eigenvectors,
        });
    }

    // Symmetrize, then hand off to the dense solver. Real-valued inputs use
    // the real symmetric path, which is substantially faster for the large
    // Toeplitz spectra.
    if a.is_real() {
        let sym = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (a.inner[(i, j)].re + a.inner[(j, i)].re)
        });
        let eig = sym.symmetric_eigen();
        let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = sort_non_increasing(&raw);
        let eigenvalues = order.iter().map(|&k| raw[k]).collect();
        let eigenvectors = ComplexMatrix::from_real_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        return Ok(HermitianEig {
            eigenvalues,
            eigenvectors,
        });
    }

    let sym = DMatrix::from_fn(n, n, |i, j| {
        0.5 * (a.inner[(i, j)] + a.inner[(j, i)].conj())
    });
    let eig = sym.symmetric_eigen();
    let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = sort_non_increasing(&raw);
    let eigenvalues = order.iter().map(|&k| raw[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues of a Hermitian matrix, non-increasing, without eigenvectors.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues need a square matrix".into(),
        ));
    }
    a.ensure_finite()?;
    let scale = a.max_abs_entry().max(1.0);
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { max_deviation: dev });
    }
    let n = a.rows();
    let mut values: Vec<f64> = if a.is_real() {
        let sym = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (a.inner[(i, j)].re + a.inner[(j, i)].re)
        });
        sym.symmetric_eigenvalues().iter().copied().collect()
    } else {
        let sym = DMatrix::from_fn(n, n, |i, j| {
            0.5 * (a.inner[(i, j)] + a.inner[(j, i)].conj())
        });
        sym.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(values)
}

/// Hermitian PSD square root `S` with `S S = A`.
///
/// Eigenvalues in `[-1e-12, 0)` are treated as rounding noise and clamped to
/// zero; anything more negative is rejected so genuinely indefinite inputs
/// are not silently accepted.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_CLAMP_TOL {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue: min,
        });
    }
    let roots: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > 0.0 { l.sqrt() } else { 0.0 })
        .collect();
    let lambda = ComplexMatrix::diagonal(&roots);
    eig.eigenvectors
        .mul(&lambda)?
        .mul(&eig.eigenvectors.adjoint())
}

/// Draws a matrix of i.i.d. circularly-symmetric complex Gaussian entries:
/// real and imaginary parts are independent `N(0, variance/2)`.
pub fn sample_complex_gaussian(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut RngState,
) -> Result<ComplexMatrix> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "variance must be finite and positive, got {variance}"
        )));
    }
    let sigma = (variance / 2.0).sqrt();
    let mut entries = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let (re, im) = rng.next_normal_pair();
        entries.push(Complex64::new(sigma * re, sigma * im));
    }
    ComplexMatrix::from_row_major(rows, cols, &entries)
}

/// Exponential correlation matrix: entry `(k, l)` is `r^{|k-l|}`.
/// Requires `0 <= r < 1` (the Wiener-class Toeplitz regime).
pub fn exponential_toeplitz(n: usize, r: f64) -> Result<ComplexMatrix> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::OutOfRange(format!(
            "exponential correlation needs r in [0, 1), got {r}"
        )));
    }
    Ok(ComplexMatrix::from_real_fn(n, n, |i, j| {
        r.powi((i as i32 - j as i32).abs())
    }))
}

/// Non-increasing eigenvalues of `G G^H`, computed on the smaller Gramian
/// side for stability and cost. Tiny negative rounding is clamped to zero.
/// Only the `min(rows, cols)` possibly-nonzero eigenvalues are returned; the
/// remainder are structural zeros.
pub fn gram_eigenvalues(g: &ComplexMatrix) -> Result<Vec<f64>> {
    g.ensure_finite()?;
    let gram = if g.rows() <= g.cols() {
        g.gram_left()
    } else {
        g.gram_right()
    };
    let mut values = hermitian_eigenvalues(&gram)?;
    for v in &mut values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(values)
}

/// `log2 det(I + eta G G^H)` in bits, evaluated through the eigenvalues of
/// the Gramian rather than a determinant, so large systems stay stable.
pub fn log_det_id_plus(eta: f64, g: &ComplexMatrix) -> Result<f64> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "eta must be finite and non-negative, got {eta}"
        )));
    }
    let values = gram_eigenvalues(g)?;
    let nats: f64 = values.iter().map(|&l| (1.0 + eta * l).ln()).sum();
    Ok(nats / std::f64::consts::LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, rng: &mut RngState) -> ComplexMatrix {
        let raw = sample_complex_gaussian(n, n, 1.0, rng).unwrap();
        let adj = raw.adjoint();
        ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (raw.get(i, j) + adj.get(i, j)))
    }

    #[test]
    fn diagonal_eig_is_a_permutation() {
        let eig = hermitian_eig(&ComplexMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 2.0, 1.0]);
        // Columns are identity columns permuted to match the sorted values.
        let v = &eig.eigenvectors;
        assert_eq!(v.get(0, 0).re, 1.0);
        assert_eq!(v.get(2, 1).re, 1.0);
        assert_eq!(v.get(1, 2).re, 1.0);
    }

    #[test]
    fn identity_eig_keeps_identity_vectors() {
        let eig = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0; 4]);
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(eig.eigenvectors.get(i, j).re, expect);
            }
        }
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = RngState::new(3);
        for &n in &[2usize, 5, 17, 64, 256] {
            let a = random_hermitian(n, &mut rng);
            let eig = hermitian_eig(&a).unwrap();
            let err = eig.reconstruct().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
            assert!(err < 1e-10, "reconstruction error {err} at n={n}");
            let ortho = eig
                .eigenvectors
                .gram_right()
                .sub(&ComplexMatrix::identity(n))
                .unwrap()
                .frobenius_norm();
            assert!(ortho < 1e-10, "orthonormality defect {ortho} at n={n}");
        }
    }

    #[test]
    fn eig_rejects_non_square_and_non_hermitian() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            hermitian_eig(&rect),
            Err(Error::DimensionMismatch(_))
        ));
        let mut skew = ComplexMatrix::zeros(2, 2);
        skew.set(0, 1, Complex64::new(1.0, 0.0));
        skew.set(1, 0, Complex64::new(-1.0, 0.0));
        assert!(matches!(hermitian_eig(&skew), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn eig_rejects_non_finite() {
        let mut a = ComplexMatrix::identity(2);
        a.set(0, 0, Complex64::new(f64::NAN, 0.0));
        assert!(matches!(hermitian_eig(&a), Err(Error::NonFinite(_))));
    }

    #[test]
    fn psd_sqrt_diagonal() {
        let s = psd_sqrt(&ComplexMatrix::diagonal(&[4.0, 9.0])).unwrap();
        assert!((s.get(0, 0).re - 2.0).abs() < 1e-12);
        assert!((s.get(1, 1).re - 3.0).abs() < 1e-12);
        let id = psd_sqrt(&ComplexMatrix::identity(5)).unwrap();
        assert!(id.sub(&ComplexMatrix::identity(5)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_reconstructs_toeplitz() {
        let a = exponential_toeplitz(8, 0.3).unwrap();
        let s = psd_sqrt(&a).unwrap();
        let err = s.mul(&s).unwrap().sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(err < 1e-10, "sqrt reconstruction error {err}");
    }

    #[test]
    fn psd_sqrt_rejects_indefinite() {
        let a = ComplexMatrix::diagonal(&[1.0, -0.5]);
        assert!(matches!(
            psd_sqrt(&a),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn psd_sqrt_fixes_projectors() {
        // A rank-k orthogonal projector is its own PSD square root.
        let mut rng = RngState::new(9);
        let a = random_hermitian(6, &mut rng);
        let eig = hermitian_eig(&a).unwrap();
        let picks: Vec<f64> = (0..6).map(|i| if i < 3 { 1.0 } else { 0.0 }).collect();
        let proj = eig
            .eigenvectors
            .mul(&ComplexMatrix::diagonal(&picks))
            .unwrap()
            .mul(&eig.eigenvectors.adjoint())
            .unwrap();
        // sqrt amplifies rounding near zero eigenvalues to ~sqrt(eps).
        let s = psd_sqrt(&proj).unwrap();
        assert!(s.sub(&proj).unwrap().frobenius_norm() < 1e-7);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn toeplitz_matches_small_case() {
        let t = exponential_toeplitz(3, 0.5).unwrap();
        let expect = [
            [1.0, 0.5, 0.25],
            [0.5, 1.0, 0.5],
            [0.25, 0.5, 1.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(i, j).re - expect[i][j]).abs() < 1e-15);
            }
        }
        assert!(exponential_toeplitz(4, 1.0).is_err());
        assert!(exponential_toeplitz(4, -0.1).is_err());
        let r0 = exponential_toeplitz(4, 0.0).unwrap();
        assert!(r0.sub(&ComplexMatrix::identity(4)).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn toeplitz_unit_trace_average() {
        let t = exponential_toeplitz(128, 0.3).unwrap();
        assert!((t.trace().re / 128.0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn toeplitz_eigenvalues_respect_symbol_bounds() {
        // Symbol extrema for r = 0.5: [(1-r)/(1+r), (1+r)/(1-r)] = [1/3, 3].
        let eig = hermitian_eigenvalues(&exponential_toeplitz(64, 0.5).unwrap()).unwrap();
        let (lo, hi) = (1.0 / 3.0, 3.0);
        for &l in &eig {
            assert!(l > lo - 1e-9 && l < hi + 1e-9, "eigenvalue {l} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn sampler_is_deterministic_and_rejects_bad_variance() {
        let a = sample_complex_gaussian(4, 3, 0.5, &mut RngState::new(11)).unwrap();
        let b = sample_complex_gaussian(4, 3, 0.5, &mut RngState::new(11)).unwrap();
        assert_eq!(a.entries_row_major(), b.entries_row_major());
        assert!(sample_complex_gaussian(2, 2, 0.0, &mut RngState::new(1)).is_err());
        assert!(sample_complex_gaussian(2, 2, -1.0, &mut RngState::new(1)).is_err());
    }

    #[test]
    fn sampler_second_moment() {
        // 1e6 entries of variance 1/1000: the mean of |theta|^2 lands within
        // a five-sigma band of the law of large numbers.
        let var = 1.0 / 1000.0;
        let m = sample_complex_gaussian(1000, 1000, var, &mut RngState::new(7)).unwrap();
        let mean: f64 = m
            .entries_row_major()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / 1.0e6;
        assert!(
            (0.00095..=0.00105).contains(&mean),
            "sample mean {mean} outside the 5-sigma band"
        );
    }

    #[test]
    fn log_det_basics() {
        let id2 = ComplexMatrix::identity(2);
        assert!((log_det_id_plus(1.0, &id2).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(log_det_id_plus(0.0, &id2).unwrap(), 0.0);
        assert!(log_det_id_plus(f64::NAN, &id2).is_err());
        assert!(log_det_id_plus(-1.0, &id2).is_err());
    }

    #[test]
    fn log_det_from_singular_values() {
        // Singular values (2, 1) at eta = 3: log2(13) + log2(4).
        let g = ComplexMatrix::diagonal(&[2.0, 1.0]);
        let expect = 13.0f64.log2() + 4.0f64.log2();
        assert!((log_det_id_plus(3.0, &g).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn log_det_side_independent() {
        let mut rng = RngState::new(21);
        let g = sample_complex_gaussian(3, 7, 1.0, &mut rng).unwrap();
        let a = log_det_id_plus(0.7, &g).unwrap();
        let b = log_det_id_plus(0.7, &g.adjoint()).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
