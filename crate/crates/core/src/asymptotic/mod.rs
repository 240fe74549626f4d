//! The asymptotic mutual information and its fixed-point system.
//!
//! As all antenna counts grow with ratios `ρ_i = k_i/k_N`, the mutual
//! information per source antenna converges to
//!
//! `I = (1/ρ_0) Σ_i ρ_i E[log(1 + η (a_{i+1}/ρ_i) h_i^N Λ_i)]
//!      - N (log e / ρ_0) η Π_i h_i`
//!
//! where `Λ_i` follows the limiting spectrum of `M_i^H M_i`, `a_{N+1} = 1`,
//! and `h_0..h_N` solve the N+1 coupled equations
//!
//! `Π_j h_j = ρ_i E[ h_i^N Λ_i / (ρ_i/a_{i+1} + η h_i^N Λ_i) ]`.
//!
//! Internally everything is computed in natural log; bits appear only at
//! the output boundary.

mod elliptic;
mod engine;
mod scenarios;

pub use elliptic::complete_elliptic_k;
pub use scenarios::{
    closed_form_single_hop_iid, multi_hop_exponential, multi_hop_uncorrelated,
    one_sided_exponential, single_hop_correlated,
};

use crate::error::{Error, Result};
use crate::freeprob::{toeplitz_symbol, EmpiricalSpectrum};

/// Distribution of one level's `Λ_i`.
#[derive(Debug, Clone)]
pub enum SpectralInput {
    /// All mass at a single non-negative value.
    PointMass(f64),
    /// Finite sample spectrum, exact weights `1/n`.
    Empirical(EmpiricalSpectrum),
    /// Separable exponential-correlation limit: `Λ = scale · f_r(λ) f_t(ν)`
    /// with independent uniform angles, evaluated by periodic quadrature.
    ToeplitzProduct {
        r_receive: f64,
        r_transmit: f64,
        scale: f64,
    },
}

impl SpectralInput {
    pub fn point(value: f64) -> Self {
        Self::PointMass(value)
    }
}

/// Atoms with uniform weights; the common form all inputs reduce to.
#[derive(Debug, Clone)]
pub(crate) enum PreparedInput {
    Point(f64),
    Samples(Vec<f64>),
}

impl PreparedInput {
    pub(crate) fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        match self {
            Self::Point(v) => g(*v),
            Self::Samples(vs) => vs.iter().map(|&v| g(v)).sum::<f64>() / vs.len() as f64,
        }
    }

    pub(crate) fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub(crate) fn zero_mass(&self) -> f64 {
        match self {
            Self::Point(v) => {
                if *v == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Samples(vs) => {
                vs.iter().filter(|v| **v <= 1e-300).count() as f64 / vs.len() as f64
            }
        }
    }
}

const QUADRATURE_REFINE_TOL: f64 = 1e-10;

fn toeplitz_product_probe(r_receive: f64, r_transmit: f64, scale: f64, points: usize) -> (f64, f64) {
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let mut p_log = 0.0;
    let mut p_rat = 0.0;
    if r_receive == 0.0 || r_transmit == 0.0 {
        let r = if r_receive == 0.0 { r_transmit } else { r_receive };
        for k in 0..points {
            let v = scale * toeplitz_symbol(r, step * k as f64);
            p_log += (1.0 + v).ln();
            p_rat += v / (1.0 + v);
        }
        let n = points as f64;
        (p_log / n, p_rat / n)
    } else {
        for j in 0..points {
            let fr = toeplitz_symbol(r_receive, step * j as f64);
            for k in 0..points {
                let v = scale * fr * toeplitz_symbol(r_transmit, step * k as f64);
                p_log += (1.0 + v).ln();
                p_rat += v / (1.0 + v);
            }
        }
        let n = (points * points) as f64;
        (p_log / n, p_rat / n)
    }
}

fn toeplitz_product_atoms(r_receive: f64, r_transmit: f64, scale: f64) -> Result<Vec<f64>> {
    for r in [r_receive, r_transmit] {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::OutOfRange(format!(
                "correlation parameter {r} outside [0, 1)"
            )));
        }
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spectral scale must be positive, got {scale}"
        )));
    }
    let single_sided = r_receive == 0.0 || r_transmit == 0.0;
    let mut points = if single_sided { 1024 } else { 512 };
    let cap = if single_sided { 16384 } else { 2048 };
    loop {
        let coarse = toeplitz_product_probe(r_receive, r_transmit, scale, points);
        let fine = toeplitz_product_probe(r_receive, r_transmit, scale, points * 2);
        let delta = (coarse.0 - fine.0).abs().max((coarse.1 - fine.1).abs());
        if delta < QUADRATURE_REFINE_TOL || points * 2 > cap {
            break;
        }
        points *= 2;
    }
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let atoms = if single_sided {
        let r = if r_receive == 0.0 { r_transmit } else { r_receive };
        (0..points)
            .map(|k| scale * toeplitz_symbol(r, step * k as f64))
            .collect()
    } else {
        let mut out = Vec::with_capacity(points * points);
        for j in 0..points {
            let fr = toeplitz_symbol(r_receive, step * j as f64);
            for k in 0..points {
                out.push(scale * fr * toeplitz_symbol(r_transmit, step * k as f64));
            }
        }
        out
    };
    Ok(atoms)
}

pub(crate) fn prepare_input(input: &SpectralInput) -> Result<PreparedInput> {
    match input {
        SpectralInput::PointMass(v) => {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "point mass must be finite and non-negative, got {v}"
                )));
            }
            Ok(PreparedInput::Point(*v))
        }
        SpectralInput::Empirical(spectrum) => {
            if spectrum.min() < -1e-12 {
                return Err(Error::InvalidInput(format!(
                    "spectrum has negative mass (min {:.3e})",
                    spectrum.min()
                )));
            }
            Ok(PreparedInput::Samples(
                spectrum.values().iter().map(|v| v.max(0.0)).collect(),
            ))
        }
        SpectralInput::ToeplitzProduct {
            r_receive,
            r_transmit,
            scale,
        } => {
            if *r_receive == 0.0 && *r_transmit == 0.0 {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::InvalidInput(format!("spectral scale {scale}")));
                }
                return Ok(PreparedInput::Point(*scale));
            }
            Ok(PreparedInput::Samples(toeplitz_product_atoms(
                *r_receive,
                *r_transmit,
                *scale,
            )?))
        }
    }
}

/// Solver knobs. Defaults: absolute residual `1e-11` on every equation,
/// at most `10^4` outer evaluations.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 10_000,
        }
    }
}

/// `R_i(x) = ρ_i E[x^N Λ_i / (c_i + η x^N Λ_i)]`, `c_i = ρ_i / a_{i+1}`,
/// over arbitrary prepared level spectra.
struct GenericSystem<'a> {
    prepared: &'a [PreparedInput],
    eta: f64,
    rho: &'a [f64],
    next_gain: &'a [f64],
    hops: i32,
}

impl engine::FixedPointSystem for GenericSystem<'_> {
    fn levels(&self) -> usize {
        self.prepared.len()
    }

    fn rhs(&self, i: usize, x: f64) -> f64 {
        let c = self.rho[i] / self.next_gain[i];
        let xn = x.powi(self.hops);
        let eta = self.eta;
        self.rho[i]
            * self.prepared[i].expect(|l| {
                let t = xn * l;
                t / (c + eta * t)
            })
    }

    fn rhs_sup(&self, i: usize) -> f64 {
        if self.eta == 0.0 {
            f64::INFINITY
        } else {
            self.rho[i] * (1.0 - self.prepared[i].zero_mass()) / self.eta
        }
    }

    fn rhs_derivative(&self, i: usize, x: f64) -> f64 {
        let c = self.rho[i] / self.next_gain[i];
        let n = self.hops;
        let xn1 = x.powi(n - 1);
        let xn = xn1 * x;
        let eta = self.eta;
        self.rho[i]
            * n as f64
            * self.prepared[i].expect(|l| {
                let d = c + eta * xn * l;
                xn1 * l * c / (d * d)
            })
    }
}

/// Solution of the fixed-point system plus diagnostics.
#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    /// `h_0..h_N`.
    pub h: Vec<f64>,
    /// Asymptotic mutual information in bits per source antenna.
    pub mi: f64,
    /// Max absolute defect over the N+1 equations.
    pub residual: f64,
    /// Outer iterations (system evaluations) spent.
    pub iterations: usize,
    pub converged: bool,
    /// True when some level's spectrum carries no mass, which forces
    /// `Π h_j = 0` and zero mutual information.
    pub degenerate: bool,
}

fn validate_system(
    levels: usize,
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
) -> Result<Vec<f64>> {
    if rho.len() != levels || hop_gains.len() + 1 != levels {
        return Err(Error::DimensionMismatch(format!(
            "need {levels} ratios and {} hop gains, got {} and {}",
            levels - 1,
            rho.len(),
            hop_gains.len()
        )));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidInput("antenna ratios must be positive".into()));
    }
    if hop_gains.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidInput("pathloss gains must be positive".into()));
    }
    // a_{i+1} per level i in 0..=N, with a_{N+1} = 1.
    let mut next_gain: Vec<f64> = hop_gains.to_vec();
    next_gain.push(1.0);
    Ok(next_gain)
}

/// Solves the N+1 fixed-point equations for `h_0..h_N`.
///
/// `inputs` are the level spectra of `M_0^H M_0 .. M_N^H M_N`, `rho` the
/// antenna ratios `ρ_0..ρ_N`, `hop_gains` the per-hop pathloss `a_1..a_N`
/// (the trailing convention `a_{N+1} = 1` is applied internally).
///
/// Each equation is strictly increasing in its own `h_i`, so for a trial
/// product value `u` every `h_i(u)` is a bracketed monotone inversion, and
/// the system collapses to the scalar consistency equation
/// `Π_i h_i(u) = u`, solved by scan plus bisection plus Newton polish. The
/// reported solution is the one with the smallest product; no uniqueness is
/// claimed.
pub fn solve_fixed_point(
    inputs: &[SpectralInput],
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
    config: &SolverConfig,
) -> Result<FixedPointSolution> {
    let levels = inputs.len();
    if levels < 2 {
        return Err(Error::InvalidInput(
            "need at least two levels (one hop)".into(),
        ));
    }
    let next_gain = validate_system(levels, eta, rho, hop_gains)?;
    let prepared: Vec<PreparedInput> = inputs.iter().map(prepare_input).collect::<Result<_>>()?;

    if prepared.iter().any(|p| p.mean() == 0.0) {
        return Ok(FixedPointSolution {
            h: vec![0.0; levels],
            mi: 0.0,
            residual: 0.0,
            iterations: 0,
            converged: true,
            degenerate: true,
        });
    }

    let hops = levels - 1;
    let system = GenericSystem {
        prepared: &prepared,
        eta,
        rho,
        next_gain: &next_gain,
        hops: hops as i32,
    };
    let solved = engine::solve_system(&system, config)?;
    let mi = mutual_information_nats(&prepared, &solved.h, eta, rho, &next_gain)
        / (rho[0] * std::f64::consts::LN_2);
    Ok(FixedPointSolution {
        h: solved.h,
        mi,
        residual: solved.residual,
        iterations: solved.iterations,
        converged: true,
        degenerate: false,
    })
}

fn mutual_information_nats(
    prepared: &[PreparedInput],
    h: &[f64],
    eta: f64,
    rho: &[f64],
    next_gain: &[f64],
) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    let hops = (h.len() - 1) as i32;
    let product: f64 = h.iter().product();
    let mut total = 0.0;
    for (i, input) in prepared.iter().enumerate() {
        let coeff = eta * next_gain[i] / rho[i] * h[i].powi(hops);
        total += rho[i] * input.expect(|l| (1.0 + coeff * l).ln());
    }
    total - hops as f64 * eta * product
}

/// Evaluates the asymptotic mutual information (bits per source antenna)
/// for a converged solution. Zero SNR short-circuits to exactly zero.
pub fn asymptotic_mi(
    solution: &FixedPointSolution,
    inputs: &[SpectralInput],
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
) -> Result<f64> {
    if !solution.converged {
        return Err(Error::UnconvergedSolution);
    }
    if solution.degenerate || eta == 0.0 {
        return Ok(0.0);
    }
    let levels = inputs.len();
    if solution.h.len() != levels {
        return Err(Error::DimensionMismatch(format!(
            "solution has {} levels, inputs have {levels}",
            solution.h.len()
        )));
    }
    let next_gain = validate_system(levels, eta, rho, hop_gains)?;
    let prepared: Vec<PreparedInput> = inputs.iter().map(prepare_input).collect::<Result<_>>()?;
    Ok(
        mutual_information_nats(&prepared, &solution.h, eta, rho, &next_gain)
            / (rho[0] * std::f64::consts::LN_2),
    )
}

/// Analytic derivative `dI/dη = Π h_i / (ρ_0 ln 2)` against a central
/// finite difference of the solved mutual information; returns
/// `(analytic, numeric)` in bits per unit `η`.
pub fn mi_derivative_check(
    inputs: &[SpectralInput],
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
    step: f64,
    config: &SolverConfig,
) -> Result<(f64, f64)> {
    if !(step.is_finite() && step > 0.0 && eta - step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 < step < eta, got step {step} at eta {eta}"
        )));
    }
    let center = solve_fixed_point(inputs, eta, rho, hop_gains, config)?;
    let analytic = center.h.iter().product::<f64>() / (rho[0] * std::f64::consts::LN_2);
    let hi = solve_fixed_point(inputs, eta + step, rho, hop_gains, config)?.mi;
    let lo = solve_fixed_point(inputs, eta - step, rho, hop_gains, config)?.mi;
    Ok((analytic, (hi - lo) / (2.0 * step)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve_iid(eta: f64, p0: f64) -> FixedPointSolution {
        solve_fixed_point(
            &[SpectralInput::PointMass(p0), SpectralInput::PointMass(1.0)],
            eta,
            &[1.0, 1.0],
            &[1.0],
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn single_hop_point_mass_closed_form() {
        // eta * P0 = 2 with P0 = 1: h_0 = h_1 = 1/2.
        let sol = solve_iid(2.0, 1.0);
        assert!((sol.h[0] - 0.5).abs() < 1e-10, "h0 = {}", sol.h[0]);
        assert!((sol.h[1] - 0.5).abs() < 1e-10, "h1 = {}", sol.h[1]);
        assert!(sol.residual <= 1e-11);
        // General eta: h_0 = 2/(1+sqrt(1+4ηP0)), h_1 = (sqrt(1+4ηP0)-1)/(2η).
        for &(eta, p0) in &[(0.1, 1.0), (1.0, 3.0), (25.0, 0.4)] {
            let sol = solve_iid(eta, p0);
            let s = (1.0 + 4.0 * eta * p0).sqrt();
            assert!((sol.h[0] - 2.0 / (1.0 + s)).abs() < 1e-9);
            assert!((sol.h[1] - (s - 1.0) / (2.0 * eta)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_eta_symmetric_case() {
        let sol = solve_iid(0.0, 1.0);
        assert!((sol.h[0] - 1.0).abs() < 1e-10);
        assert!((sol.h[1] - 1.0).abs() < 1e-10);
        assert_eq!(sol.mi, 0.0);
    }

    #[test]
    fn two_hop_symmetric_cubic() {
        // All point masses 1, rho = a = 1, eta = 1: common h solves
        // h^3 + h - 1 = 0.
        let inputs = vec![SpectralInput::PointMass(1.0); 3];
        let sol = solve_fixed_point(
            &inputs,
            1.0,
            &[1.0, 1.0, 1.0],
            &[1.0, 1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        let mut root = 0.6823278038280193f64;
        // Polish the frozen oracle root to full precision.
        for _ in 0..3 {
            root -= (root.powi(3) + root - 1.0) / (3.0 * root * root + 1.0);
        }
        for &h in &sol.h {
            assert!((h - root).abs() < 1e-10, "h = {h} vs cubic root {root}");
        }
        let prod: f64 = sol.h.iter().product();
        assert!((prod - root.powi(3)).abs() < 1e-10);
        // Mutual information from the solved h:
        // 3 log2(1 + h^2) - 2 log2(e) * h^3.
        let expect = 3.0 * (1.0 + root * root).log2()
            - 2.0 * std::f64::consts::LOG2_E * root.powi(3);
        assert!((sol.mi - expect).abs() < 1e-9, "mi {} vs {expect}", sol.mi);
    }

    #[test]
    fn degenerate_zero_spectrum_reported() {
        let sol = solve_fixed_point(
            &[SpectralInput::PointMass(0.0), SpectralInput::PointMass(1.0)],
            1.0,
            &[1.0, 1.0],
            &[1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.mi, 0.0);
        assert_eq!(sol.h.iter().product::<f64>(), 0.0);
    }

    #[test]
    fn residual_meets_tolerance_on_empirical_spectra() {
        let spectrum = EmpiricalSpectrum::new(vec![0.2, 0.5, 0.9, 1.4, 2.2, 3.0]).unwrap();
        let inputs = vec![
            SpectralInput::Empirical(spectrum.clone()),
            SpectralInput::Empirical(spectrum.scaled(0.7).unwrap()),
            SpectralInput::PointMass(1.3),
        ];
        let rho = [0.5, 2.0, 1.0];
        let gains = [0.8, 1.7];
        let sol =
            solve_fixed_point(&inputs, 3.0, &rho, &gains, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.residual <= 1e-11, "residual {}", sol.residual);
        // Check the equations directly.
        let prepared: Vec<PreparedInput> =
            inputs.iter().map(|i| prepare_input(i).unwrap()).collect();
        let next_gain = [gains[0], gains[1], 1.0];
        let prod: f64 = sol.h.iter().product();
        for i in 0..3 {
            let c = rho[i] / next_gain[i];
            let hn = sol.h[i].powi(2);
            let rhs = rho[i] * prepared[i].expect(|l| hn * l / (c + 3.0 * hn * l));
            assert!((prod - rhs).abs() <= 1e-11, "equation {i} defect");
        }
    }

    #[test]
    fn mi_is_monotone_in_eta_and_zero_at_origin() {
        let inputs = vec![
            SpectralInput::ToeplitzProduct {
                r_receive: 0.0,
                r_transmit: 0.3,
                scale: 1.0,
            },
            SpectralInput::PointMass(1.0),
        ];
        let mut last = 0.0;
        for k in 0..8 {
            let eta = 10f64.powf(-2.0 + k as f64 * 0.5);
            let sol = solve_fixed_point(
                &inputs,
                eta,
                &[1.0, 1.0],
                &[1.0],
                &SolverConfig::default(),
            )
            .unwrap();
            assert!(sol.mi >= last, "mi not monotone at eta {eta}");
            last = sol.mi;
        }
        let zero = solve_fixed_point(
            &inputs,
            0.0,
            &[1.0, 1.0],
            &[1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(zero.mi, 0.0);
    }

    #[test]
    fn spectral_input_permutation_invariance() {
        let a = EmpiricalSpectrum::new(vec![2.0, 0.4, 1.1, 0.9]).unwrap();
        let b = EmpiricalSpectrum::new(vec![0.9, 1.1, 0.4, 2.0]).unwrap();
        let mk = |s: EmpiricalSpectrum| {
            solve_fixed_point(
                &[SpectralInput::Empirical(s), SpectralInput::PointMass(1.0)],
                2.0,
                &[1.0, 1.0],
                &[1.0],
                &SolverConfig::default(),
            )
            .unwrap()
            .mi
        };
        assert_eq!(mk(a), mk(b));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let inputs = vec![
            SpectralInput::PointMass(1.0),
            SpectralInput::PointMass(1.0),
        ];
        let (analytic, numeric) = mi_derivative_check(
            &inputs,
            2.0,
            &[1.0, 1.0],
            &[1.0],
            1e-4,
            &SolverConfig::default(),
        )
        .unwrap();
        // At eta*P0 = 2: h0 h1 = 1/4, so dI/dη = 0.25 log2 e.
        assert!((analytic - 0.25 * std::f64::consts::LOG2_E).abs() < 1e-9);
        assert!((analytic - numeric).abs() < 1e-6);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let inputs = vec![SpectralInput::PointMass(1.0); 3];
        assert!(solve_fixed_point(
            &inputs,
            1.0,
            &[1.0, 1.0],
            &[1.0, 1.0],
            &SolverConfig::default()
        )
        .is_err());
        assert!(solve_fixed_point(
            &inputs,
            f64::NAN,
            &[1.0, 1.0, 1.0],
            &[1.0, 1.0],
            &SolverConfig::default()
        )
        .is_err());
    }

    #[test]
    fn unconverged_solution_rejected_by_mi() {
        let sol = FixedPointSolution {
            h: vec![1.0, 1.0],
            mi: 0.0,
            residual: 1.0,
            iterations: 0,
            converged: false,
            degenerate: false,
        };
        let inputs = [SpectralInput::PointMass(1.0), SpectralInput::PointMass(1.0)];
        assert!(matches!(
            asymptotic_mi(&sol, &inputs, 1.0, &[1.0, 1.0], &[1.0]),
            Err(Error::UnconvergedSolution)
        ));
    }
}
