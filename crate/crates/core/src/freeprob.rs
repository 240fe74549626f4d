//! Empirical spectral transforms and their product relations.
//!
//! The Stieltjes transform `G(s) = ∫ dF(λ)/(λ - s)`, the auxiliary transform
//! `Υ(s) = ∫ sλ/(1 - sλ) dF(λ)` and the S-transform
//! `S(z) = (z+1)/z · Υ^{-1}(z)` are evaluated as exact finite sums over
//! empirical eigenvalue distributions — never smoothed. Inversions are done
//! on the negative real axis, where `Υ` is strictly monotone for
//! non-negative spectra; this is the only region the asymptotic analysis
//! needs (`s = -η`).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eigenvalues, ComplexMatrix};

const POLE_TOL: f64 = 1e-12;
const INVERSION_TOL: f64 = 1e-12;

/// Empirical eigenvalue distribution: uniform weight `1/n` on each sample.
#[derive(Debug, Clone)]
pub struct EmpiricalSpectrum {
    values: Vec<f64>,
}

impl EmpiricalSpectrum {
    /// Sorted (non-decreasing) spectrum from raw eigenvalues.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectrum sample".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    /// Spectrum of a Hermitian matrix.
    pub fn from_hermitian(a: &ComplexMatrix) -> Result<Self> {
        Self::new(hermitian_eigenvalues(a)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Fraction of samples indistinguishable from zero.
    pub fn zero_mass(&self) -> f64 {
        let zeros = self.values.iter().filter(|v| v.abs() <= POLE_TOL).count();
        zeros as f64 / self.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }

    /// All pairwise products `scale * a_j * b_k`: the empirical realization
    /// of a product of two independent spectral variables.
    pub fn product(&self, other: &Self, scale: f64) -> Result<Self> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for &a in &self.values {
            for &b in &other.values {
                out.push(scale * a * b);
            }
        }
        Self::new(out)
    }

    fn ensure_non_negative(&self) -> Result<()> {
        if self.min() < -POLE_TOL {
            return Err(Error::InvalidInput(format!(
                "spectrum has negative mass (min {:.3e})",
                self.min()
            )));
        }
        Ok(())
    }
}

/// Which transform a [`TransformEvaluation`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    Stieltjes,
    Upsilon,
    STransform,
}

/// One evaluated transform point.
#[derive(Debug, Clone, Copy)]
pub struct TransformEvaluation {
    pub kind: TransformKind,
    pub argument: Complex64,
    pub value: Complex64,
}

/// Stieltjes transform `(1/n) Σ 1/(λ_k - s)`. Real arguments must stay at
/// least `1e-12` away from every eigenvalue.
pub fn stieltjes(spectrum: &EmpiricalSpectrum, s: Complex64) -> Result<Complex64> {
    if s.im.abs() <= POLE_TOL {
        let nearest = spectrum
            .values()
            .iter()
            .map(|l| (l - s.re).abs())
            .fold(f64::INFINITY, f64::min);
        if nearest <= POLE_TOL {
            return Err(Error::SpectrumCollision(format!(
                "s = {} is within {POLE_TOL:e} of an eigenvalue",
                s.re
            )));
        }
    }
    let sum: Complex64 = spectrum
        .values()
        .iter()
        .map(|&l| (Complex64::new(l, 0.0) - s).inv())
        .sum();
    Ok(sum / spectrum.len() as f64)
}

/// `Υ(s) = (1/n) Σ s λ_k / (1 - s λ_k)`. Satisfies
/// `Υ(s) = -1 - (1/s) G(1/s)`.
pub fn upsilon(spectrum: &EmpiricalSpectrum, s: Complex64) -> Result<Complex64> {
    if s.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if s.im.abs() <= POLE_TOL {
        let pole = 1.0 / s.re;
        let nearest = spectrum
            .values()
            .iter()
            .map(|l| (l - pole).abs())
            .fold(f64::INFINITY, f64::min);
        if nearest <= POLE_TOL {
            return Err(Error::SpectrumCollision(format!(
                "1/s = {pole} is within {POLE_TOL:e} of an eigenvalue"
            )));
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let sum: Complex64 = spectrum
        .values()
        .iter()
        .map(|&l| {
            let sl = s * l;
            sl / (one - sl)
        })
        .sum();
    Ok(sum / spectrum.len() as f64)
}

fn upsilon_real(spectrum: &EmpiricalSpectrum, s: f64) -> f64 {
    spectrum
        .values()
        .iter()
        .map(|&l| {
            let sl = s * l;
            sl / (1.0 - sl)
        })
        .sum::<f64>()
        / spectrum.len() as f64
}

fn upsilon_real_derivative(spectrum: &EmpiricalSpectrum, s: f64) -> f64 {
    spectrum
        .values()
        .iter()
        .map(|&l| {
            let d = 1.0 - s * l;
            l / (d * d)
        })
        .sum::<f64>()
        / spectrum.len() as f64
}

/// Inverts `Υ` on the negative real axis: returns `s <= 0` with
/// `Υ(s) = z` to within `1e-12`. For a non-negative spectrum `Υ` is
/// strictly increasing on `s < 0`, ranging over `(-(1 - mass_at_zero), 0]`,
/// so the root is bracketed and unique.
pub fn upsilon_inverse(spectrum: &EmpiricalSpectrum, z: f64) -> Result<f64> {
    spectrum.ensure_non_negative()?;
    if z == 0.0 {
        return Ok(0.0);
    }
    let infimum = -(1.0 - spectrum.zero_mass());
    if !(infimum..0.0).contains(&z) {
        return Err(Error::OutOfRange(format!(
            "z = {z} outside the attainable range ({infimum}, 0]"
        )));
    }

    // Bracket by doubling, then bisect, then polish with Newton.
    let mut lo = -1.0;
    let mut guard = 0;
    while upsilon_real(spectrum, lo) > z {
        lo *= 2.0;
        guard += 1;
        if guard > 600 {
            return Err(Error::OutOfRange(format!(
                "failed to bracket Υ^-1({z}); spectrum may be degenerate"
            )));
        }
    }
    let mut hi = 0.0;
    let mut mid = lo;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let val = upsilon_real(spectrum, mid);
        if (val - z).abs() <= INVERSION_TOL {
            break;
        }
        if val < z {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= f64::EPSILON * lo.abs().max(1e-300) {
            break;
        }
    }
    let mut s = mid;
    for _ in 0..4 {
        let f = upsilon_real(spectrum, s) - z;
        if f.abs() <= INVERSION_TOL * 0.01 {
            break;
        }
        let d = upsilon_real_derivative(spectrum, s);
        if d <= 0.0 {
            break;
        }
        let step = f / d;
        let next = s - step;
        if next >= 0.0 {
            break;
        }
        s = next;
    }
    Ok(s)
}

/// S-transform `S(z) = (z+1)/z · Υ^{-1}(z)`, for `z` in `(-1, 0)`.
pub fn s_transform(spectrum: &EmpiricalSpectrum, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Err(Error::InvalidInput("S-transform undefined at z = 0".into()));
    }
    let inv = upsilon_inverse(spectrum, z)?;
    Ok((z + 1.0) / z * inv)
}

/// Convenience wrapper returning a typed evaluation record.
pub fn evaluate(
    spectrum: &EmpiricalSpectrum,
    kind: TransformKind,
    argument: Complex64,
) -> Result<TransformEvaluation> {
    let value = match kind {
        TransformKind::Stieltjes => stieltjes(spectrum, argument)?,
        TransformKind::Upsilon => upsilon(spectrum, argument)?,
        TransformKind::STransform => {
            if argument.im.abs() > POLE_TOL {
                return Err(Error::InvalidInput(
                    "S-transform is evaluated on the real axis".into(),
                ));
            }
            Complex64::new(s_transform(spectrum, argument.re)?, 0.0)
        }
    };
    Ok(TransformEvaluation {
        kind,
        argument,
        value,
    })
}

/// Closed-form S-transform of `A A^H` for `A` with i.i.d. zero-mean entries
/// of variance `a/p`, where `n/p -> zeta`: `S(z) = 1 / (a (1 + zeta z))`.
pub fn wishart_s_transform(a: f64, zeta: f64, z: f64) -> f64 {
    1.0 / (a * (1.0 + zeta * z))
}

/// Deviation of the rectangular swap relation
/// `S_{AB}(z) = (z+1)/(z+ξ) · S_{BA}(z/ξ)` evaluated from two empirical
/// spectra with aspect ratio `ξ`, maximized over `z_grid`. The relation is
/// exact zero-eigenvalue bookkeeping at finite size, so deviations beyond
/// rounding indicate a transform bug (or a deliberately corrupted `ξ`).
pub fn swap_relation_deviation(
    spectrum_ab: &EmpiricalSpectrum,
    spectrum_ba: &EmpiricalSpectrum,
    xi: f64,
    z_grid: &[f64],
) -> Result<f64> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::InvalidInput(format!("aspect ratio xi = {xi}")));
    }
    let mut worst: f64 = 0.0;
    for &z in z_grid {
        let lhs = s_transform(spectrum_ab, z)?;
        let rhs = (z + 1.0) / (z + xi) * s_transform(spectrum_ba, z / xi)?;
        let denom = rhs.abs().max(1e-300);
        worst = worst.max((lhs - rhs).abs() / denom);
    }
    Ok(worst)
}

/// Spectra of `AB` and `BA` for a compatible pair, with the non-Hermitian
/// product's spectrum recovered from the Hermitian one through the shared
/// nonzero eigenvalues plus `|n - p|` structural zeros.
pub fn product_pair_spectra(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
) -> Result<(EmpiricalSpectrum, EmpiricalSpectrum)> {
    if a.cols() != b.rows() || b.cols() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "expected n x p and p x n, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let p = a.cols();
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    let herm_tol = 1e-10;
    let ab_herm = ab.hermitian_deviation() <= herm_tol * ab.max_abs_entry().max(1.0);
    let ba_herm = ba.hermitian_deviation() <= herm_tol * ba.max_abs_entry().max(1.0);

    let clamp = |mut v: Vec<f64>| -> Result<Vec<f64>> {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidInput(format!(
                "product has negative eigenvalues (min {min:.3e})"
            )));
        }
        for x in &mut v {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        Ok(v)
    };

    let pad_from = |values: &[f64], target: usize| -> Vec<f64> {
        let mut nonzero: Vec<f64> = values.iter().copied().filter(|v| *v > POLE_TOL).collect();
        while nonzero.len() < target {
            nonzero.push(0.0);
        }
        nonzero
    };

    match (ab_herm, ba_herm) {
        (true, true) => Ok((
            EmpiricalSpectrum::new(clamp(hermitian_eigenvalues(&ab)?)?)?,
            EmpiricalSpectrum::new(clamp(hermitian_eigenvalues(&ba)?)?)?,
        )),
        (true, false) => {
            let ev = clamp(hermitian_eigenvalues(&ab)?)?;
            let derived = pad_from(&ev, p);
            Ok((EmpiricalSpectrum::new(ev)?, EmpiricalSpectrum::new(derived)?))
        }
        (false, true) => {
            let ev = clamp(hermitian_eigenvalues(&ba)?)?;
            let derived = pad_from(&ev, n);
            Ok((EmpiricalSpectrum::new(derived)?, EmpiricalSpectrum::new(ev)?))
        }
        (false, false) => Err(Error::InvalidInput(
            "neither AB nor BA is Hermitian; cannot obtain their spectra \
             with the Hermitian-only eigensolver"
                .into(),
        )),
    }
}

/// Max relative deviation of the rectangular swap relation for a concrete
/// `n x p` / `p x n` pair whose products have non-negative real spectra.
/// The z-grid is placed inside the attainable range of both transforms.
pub fn product_swap_deviation(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let (spec_ab, spec_ba) = product_pair_spectra(a, b)?;
    let xi = a.cols() as f64 / a.rows() as f64;
    let nonzero_fraction = 1.0 - spec_ab.zero_mass();
    if nonzero_fraction <= 0.0 {
        return Err(Error::InvalidInput("product is identically zero".into()));
    }
    let z_lo = -nonzero_fraction;
    let grid: Vec<f64> = (1..=9).map(|k| z_lo * (k as f64) / 10.0).collect();
    swap_relation_deviation(&spec_ab, &spec_ba, xi, &grid)
}

/// Predicted S-transform of the composed chain Gramian from the per-level
/// spectra: `S_N(z) · Π_i (ρ_{i-1}/a_i) · 1/(z+ρ_{i-1}) · S_{i-1}(z/ρ_{i-1})`.
///
/// `level_spectra` holds the N+1 spectra of `M_i^H M_i`, `rho` the N+1
/// antenna ratios, and `hop_gains` the N per-hop pathloss gains `a_i`.
pub fn chain_s_transform(
    level_spectra: &[EmpiricalSpectrum],
    rho: &[f64],
    hop_gains: &[f64],
    z: f64,
) -> Result<f64> {
    let n = hop_gains.len();
    if level_spectra.len() != n + 1 || rho.len() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "need N+1 spectra and ratios for N = {n} hops"
        )));
    }
    if rho.iter().any(|r| *r <= 0.0) || hop_gains.iter().any(|a| *a <= 0.0) {
        return Err(Error::InvalidInput(
            "antenna ratios and pathloss gains must be positive".into(),
        ));
    }
    let mut value = s_transform(&level_spectra[n], z)?;
    for i in 1..=n {
        let rho_prev = rho[i - 1];
        value *= rho_prev / hop_gains[i - 1] / (z + rho_prev)
            * s_transform(&level_spectra[i - 1], z / rho_prev)?;
    }
    Ok(value)
}

/// Spectral density symbol of the exponential-correlation Toeplitz family:
/// `f_r(λ) = (1 - r²) / |1 - r e^{jλ}|²`.
pub fn toeplitz_symbol(r: f64, angle: f64) -> f64 {
    (1.0 - r * r) / (1.0 - 2.0 * r * angle.cos() + r * r)
}

/// Averages `g` against the Toeplitz symbol:
/// `(1/2π) ∫ g(f_r(λ)) dλ`, by uniform periodic quadrature, which is
/// spectrally accurate for these smooth integrands. This is the limit of
/// `(1/n) Σ g(λ_k)` over the eigenvalues of the size-n Toeplitz matrices.
pub fn szego_functional(r: f64, g: impl Fn(f64) -> f64, points: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::OutOfRange(format!(
            "symbol parameter r must be in [0, 1), got {r}"
        )));
    }
    if points == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one point".into()));
    }
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let sum: f64 = (0..points)
        .map(|k| g(toeplitz_symbol(r, step * k as f64)))
        .sum();
    Ok(sum / points as f64)
}

/// Reports the largest eigenvalue of a family of spectra indexed by size;
/// bounded growth across sizes is the empirical signature of a compactly
/// supported limit distribution.
pub fn support_growth(
    sizes: &[usize],
    mut build: impl FnMut(usize) -> Result<EmpiricalSpectrum>,
) -> Result<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let spectrum = build(n)?;
        out.push((n, spectrum.max()));
    }
    Ok(out)
}
