//! Closed-form scenario paths for the asymptotic mutual information.
//!
//! Each path rewrites the generic fixed-point equations for one structured
//! family of level spectra — single-hop i.i.d., uncorrelated multi-hop,
//! exponential correlation (through complete elliptic integrals), and the
//! one-sided special case — and is used both as a fast path and as an
//! independent cross-check of the generic solver.

use super::elliptic::complete_elliptic_k;
use super::engine::{self, FixedPointSystem};
use super::{prepare_input, FixedPointSolution, SolverConfig, SpectralInput};
use crate::error::{Error, Result};
use crate::freeprob::toeplitz_symbol;

const LN_2: f64 = std::f64::consts::LN_2;

/// Asymptotic mutual information of the square uncorrelated single-hop
/// system with equal power allocation, as an explicit function of
/// `η P_0`:
///
/// `I = 2 log2((1 + s)/2) - log2(e) (s - 1)² / (4 η P_0)`,
/// `s = sqrt(1 + 4 η P_0)`.
pub fn closed_form_single_hop_iid(eta: f64, p0: f64) -> Result<f64> {
    if !(eta.is_finite() && eta > 0.0 && p0.is_finite() && p0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need positive eta and P0, got {eta} and {p0}"
        )));
    }
    let q = eta * p0;
    let s = (1.0 + 4.0 * q).sqrt();
    Ok(2.0 * ((1.0 + s) / 2.0).log2() - std::f64::consts::LOG2_E / (4.0 * q) * (s - 1.0).powi(2))
}

fn validate_scenario(
    rho: &[f64],
    hop_gains: &[f64],
    alpha: &[f64],
) -> Result<(usize, Vec<f64>)> {
    let hops = hop_gains.len();
    if hops == 0 {
        return Err(Error::InvalidInput("need at least one hop".into()));
    }
    if rho.len() != hops + 1 || alpha.len() != hops + 1 {
        return Err(Error::DimensionMismatch(format!(
            "need {} ratios and scaling coefficients for {hops} hops, got {} and {}",
            hops + 1,
            rho.len(),
            alpha.len()
        )));
    }
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0))
        || hop_gains.iter().any(|a| !(a.is_finite() && *a > 0.0))
    {
        return Err(Error::InvalidInput(
            "ratios and pathloss gains must be positive".into(),
        ));
    }
    if alpha.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(Error::InvalidInput(
            "scaling coefficients must be non-negative".into(),
        ));
    }
    // Per-level effective spectral scale A_i = a_{i+1} α_i².
    let coeff: Vec<f64> = (0..=hops)
        .map(|i| {
            let next_gain = if i < hops { hop_gains[i] } else { 1.0 };
            next_gain * alpha[i] * alpha[i]
        })
        .collect();
    Ok((hops, coeff))
}

fn degenerate_solution(levels: usize) -> FixedPointSolution {
    FixedPointSolution {
        h: vec![0.0; levels],
        mi: 0.0,
        residual: 0.0,
        iterations: 0,
        converged: true,
        degenerate: true,
    }
}

/// Per-level correlation shape parameters `c = (1-r)/(1+r)` under the
/// boundary conventions `r_{r,0} = r_{t,N+1} = 0`: level `i` pairs the
/// receive side of hop `i` with the transmit side of hop `i+1`.
fn level_shape(i: usize, hops: usize, r_receive: &[f64], r_transmit: &[f64]) -> (f64, f64) {
    let rr = if i == 0 { 0.0 } else { r_receive[i - 1] };
    let rt = if i == hops { 0.0 } else { r_transmit[i] };
    ((1.0 - rr) / (1.0 + rr), (1.0 - rt) / (1.0 + rt))
}

fn validate_correlations(r: &[f64], hops: usize, side: &str) -> Result<()> {
    if r.len() != hops {
        return Err(Error::DimensionMismatch(format!(
            "need {hops} {side} correlation parameters, got {}",
            r.len()
        )));
    }
    if r.iter().any(|v| !(0.0..1.0).contains(v)) {
        return Err(Error::OutOfRange(format!(
            "{side} correlation parameters must lie in [0, 1)"
        )));
    }
    Ok(())
}

/// Uniform average of `g` over the product of the two correlation symbols,
/// `(1/(2π)²) ∫∫ g(f_rr(λ) f_rt(ν)) dλ dν`, collapsing to a single angle
/// (or a constant) when a side is uncorrelated.
fn symbol_product_average(rr: f64, rt: f64, points: usize, g: impl Fn(f64) -> f64) -> f64 {
    let step = 2.0 * std::f64::consts::PI / points as f64;
    match (rr == 0.0, rt == 0.0) {
        (true, true) => g(1.0),
        (true, false) => {
            (0..points)
                .map(|k| g(toeplitz_symbol(rt, step * k as f64)))
                .sum::<f64>()
                / points as f64
        }
        (false, true) => {
            (0..points)
                .map(|k| g(toeplitz_symbol(rr, step * k as f64)))
                .sum::<f64>()
                / points as f64
        }
        (false, false) => {
            let mut total = 0.0;
            for j in 0..points {
                let fr = toeplitz_symbol(rr, step * j as f64);
                for k in 0..points {
                    total += g(fr * toeplitz_symbol(rt, step * k as f64));
                }
            }
            total / (points * points) as f64
        }
    }
}

/// Point-mass system: `R_i(x) = x^N A_i / (1 + η x^N A_i / ρ_i)`.
struct PointMassSystem<'a> {
    coeff: &'a [f64],
    rho: &'a [f64],
    eta: f64,
    hops: i32,
}

impl FixedPointSystem for PointMassSystem<'_> {
    fn levels(&self) -> usize {
        self.coeff.len()
    }

    fn rhs(&self, i: usize, x: f64) -> f64 {
        let t = x.powi(self.hops) * self.coeff[i];
        t / (1.0 + self.eta * t / self.rho[i])
    }

    fn rhs_sup(&self, i: usize) -> f64 {
        if self.eta == 0.0 {
            f64::INFINITY
        } else {
            self.rho[i] / self.eta
        }
    }

    fn rhs_derivative(&self, i: usize, x: f64) -> f64 {
        let xn1 = x.powi(self.hops - 1);
        let xi = self.eta * xn1 * x * self.coeff[i] / self.rho[i];
        self.hops as f64 * xn1 * self.coeff[i] / (1.0 + xi).powi(2)
    }
}

/// Uncorrelated multi-hop system with equal power allocation: the level
/// spectra are point masses `A_i = a_{i+1} α_i²`, so both the fixed point
/// and the mutual information are elementary.
pub fn multi_hop_uncorrelated(
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
    alpha: &[f64],
    config: &SolverConfig,
) -> Result<FixedPointSolution> {
    let (hops, coeff) = validate_scenario(rho, hop_gains, alpha)?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    if coeff.contains(&0.0) {
        return Ok(degenerate_solution(hops + 1));
    }
    let system = PointMassSystem {
        coeff: &coeff,
        rho,
        eta,
        hops: hops as i32,
    };
    let solved = engine::solve_system(&system, config)?;
    let mi = if eta == 0.0 {
        0.0
    } else {
        let product: f64 = solved.h.iter().product();
        let mut nats = 0.0;
        for i in 0..=hops {
            let xi = eta * solved.h[i].powi(hops as i32) * coeff[i] / rho[i];
            nats += rho[i] * (1.0 + xi).ln();
        }
        (nats - hops as f64 * eta * product) / (rho[0] * LN_2)
    };
    Ok(FixedPointSolution {
        h: solved.h,
        mi,
        residual: solved.residual,
        iterations: solved.iterations,
        converged: true,
        degenerate: false,
    })
}

/// Exponentially correlated system: `R_i` in complete-elliptic-integral
/// form. With `ξ = η x^N A_i / ρ_i`, `C = c_r c_t` and `T = c_t / c_r`,
///
/// `R_i(x) = (2/π) x^N A_i K(m_i) / (sqrt(C + ξ) sqrt(1/C + ξ))`,
/// `m_i = 1 - (T + ξ)(1/T + ξ) / ((1/C + ξ)(C + ξ))`.
struct EllipticSystem<'a> {
    coeff: &'a [f64],
    shapes: &'a [(f64, f64)],
    rho: &'a [f64],
    eta: f64,
    hops: i32,
}

impl FixedPointSystem for EllipticSystem<'_> {
    fn levels(&self) -> usize {
        self.coeff.len()
    }

    fn rhs(&self, i: usize, x: f64) -> f64 {
        let (c_r, c_t) = self.shapes[i];
        let t = x.powi(self.hops) * self.coeff[i];
        let xi = self.eta * t / self.rho[i];
        let c = c_r * c_t;
        let ratio = c_t / c_r;
        let m = 1.0
            - (ratio + xi) * (1.0 / ratio + xi) / ((1.0 / c + xi) * (c + xi));
        let m = m.clamp(0.0, 1.0 - 1e-15);
        let k = complete_elliptic_k(m).expect("clamped parameter");
        2.0 / std::f64::consts::PI * t * k / ((c + xi).sqrt() * (1.0 / c + xi).sqrt())
    }

    fn rhs_sup(&self, i: usize) -> f64 {
        if self.eta == 0.0 {
            f64::INFINITY
        } else {
            self.rho[i] / self.eta
        }
    }
}

/// Exponentially correlated multi-hop system with equal power allocation
/// and aligned precoders. The fixed point is solved through the elliptic
/// form of the equations; the mutual information is then the double
/// symbol integral per level. `quadrature_points` is the per-angle
/// resolution of that final integral.
#[allow(clippy::too_many_arguments)]
pub fn multi_hop_exponential(
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
    alpha: &[f64],
    r_receive: &[f64],
    r_transmit: &[f64],
    quadrature_points: usize,
    config: &SolverConfig,
) -> Result<FixedPointSolution> {
    let (hops, coeff) = validate_scenario(rho, hop_gains, alpha)?;
    validate_correlations(r_receive, hops, "receive")?;
    validate_correlations(r_transmit, hops, "transmit")?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    if quadrature_points == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one point".into()));
    }
    if coeff.contains(&0.0) {
        return Ok(degenerate_solution(hops + 1));
    }
    let shapes: Vec<(f64, f64)> = (0..=hops)
        .map(|i| level_shape(i, hops, r_receive, r_transmit))
        .collect();
    let system = EllipticSystem {
        coeff: &coeff,
        shapes: &shapes,
        rho,
        eta,
        hops: hops as i32,
    };
    let solved = engine::solve_system(&system, config)?;
    let mi = if eta == 0.0 {
        0.0
    } else {
        let product: f64 = solved.h.iter().product();
        let mut nats = 0.0;
        for i in 0..=hops {
            let xi = eta * solved.h[i].powi(hops as i32) * coeff[i] / rho[i];
            let rr = if i == 0 { 0.0 } else { r_receive[i - 1] };
            let rt = if i == hops { 0.0 } else { r_transmit[i] };
            nats += rho[i]
                * symbol_product_average(rr, rt, quadrature_points, |f| (1.0 + xi * f).ln());
        }
        (nats - hops as f64 * eta * product) / (rho[0] * LN_2)
    };
    Ok(FixedPointSolution {
        h: solved.h,
        mi,
        residual: solved.residual,
        iterations: solved.iterations,
        converged: true,
        degenerate: false,
    })
}

/// One-sided correlation (`r_{r,i} = 0`): the elliptic integral drops out,
/// `R_i(x) = x^N A_i / (sqrt(c_t + ξ) sqrt(1/c_t + ξ))`, and the mutual
/// information needs only a single symbol integral per level.
struct OneSidedSystem<'a> {
    coeff: &'a [f64],
    shapes: &'a [(f64, f64)],
    rho: &'a [f64],
    eta: f64,
    hops: i32,
}

impl FixedPointSystem for OneSidedSystem<'_> {
    fn levels(&self) -> usize {
        self.coeff.len()
    }

    fn rhs(&self, i: usize, x: f64) -> f64 {
        let c_t = self.shapes[i].1;
        let t = x.powi(self.hops) * self.coeff[i];
        let xi = self.eta * t / self.rho[i];
        t / ((c_t + xi).sqrt() * (1.0 / c_t + xi).sqrt())
    }

    fn rhs_sup(&self, i: usize) -> f64 {
        if self.eta == 0.0 {
            f64::INFINITY
        } else {
            self.rho[i] / self.eta
        }
    }
}

const ONE_SIDED_QUADRATURE: usize = 4096;

/// One-sided exponentially correlated multi-hop system (transmit-side
/// correlation only) with equal power allocation.
pub fn one_sided_exponential(
    eta: f64,
    rho: &[f64],
    hop_gains: &[f64],
    alpha: &[f64],
    r_transmit: &[f64],
    config: &SolverConfig,
) -> Result<FixedPointSolution> {
    let (hops, coeff) = validate_scenario(rho, hop_gains, alpha)?;
    validate_correlations(r_transmit, hops, "transmit")?;
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    if coeff.contains(&0.0) {
        return Ok(degenerate_solution(hops + 1));
    }
    let zeros = vec![0.0; hops];
    let shapes: Vec<(f64, f64)> = (0..=hops)
        .map(|i| level_shape(i, hops, &zeros, r_transmit))
        .collect();
    let system = OneSidedSystem {
        coeff: &coeff,
        shapes: &shapes,
        rho,
        eta,
        hops: hops as i32,
    };
    let solved = engine::solve_system(&system, config)?;
    let mi = if eta == 0.0 {
        0.0
    } else {
        let product: f64 = solved.h.iter().product();
        let mut nats = 0.0;
        for i in 0..=hops {
            let xi = eta * solved.h[i].powi(hops as i32) * coeff[i] / rho[i];
            let rt = if i == hops { 0.0 } else { r_transmit[i] };
            nats += rho[i]
                * symbol_product_average(0.0, rt, ONE_SIDED_QUADRATURE, |f| (1.0 + xi * f).ln());
        }
        (nats - hops as f64 * eta * product) / (rho[0] * LN_2)
    };
    Ok(FixedPointSolution {
        h: solved.h,
        mi,
        residual: solved.residual,
        iterations: solved.iterations,
        converged: true,
        degenerate: false,
    })
}

/// Correlated single-hop system: solves the two-equation system
///
/// `h_0 = E[Λ_1 / (1 + η Λ_1 h_1)]`,
/// `h_1 = E[Λ_0 / (1 + (η/ρ_0) Λ_0 h_0)]`
///
/// by damped alternation and returns
/// `C = E[log(1 + (η/ρ_0) Λ_0 h_0)] + (1/ρ_0) E[log(1 + η Λ_1 h_1)]
///      - (log e / ρ_0) η h_0 h_1`.
///
/// `Λ_0` is distributed as the transmit-correlation eigenvalues times the
/// caller's power allocation; `Λ_1` as the receive-correlation eigenvalues.
pub fn single_hop_correlated(
    eta: f64,
    rho0: f64,
    lambda0: &SpectralInput,
    lambda1: &SpectralInput,
    config: &SolverConfig,
) -> Result<FixedPointSolution> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(Error::InvalidInput(format!("rho0 = {rho0}")));
    }
    let l0 = prepare_input(lambda0)?;
    let l1 = prepare_input(lambda1)?;

    let rhs0 = |h1: f64| l1.expect(|l| l / (1.0 + eta * l * h1));
    let rhs1 = |h0: f64| l0.expect(|l| l / (1.0 + eta / rho0 * l * h0));

    let mut h0 = 1.0;
    let mut h1 = 1.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let damping = 0.5;
    while iterations < config.max_iterations {
        iterations += 1;
        h0 = (1.0 - damping) * h0 + damping * rhs0(h1);
        h1 = (1.0 - damping) * h1 + damping * rhs1(h0);
        residual = (h0 - rhs0(h1)).abs().max((h1 - rhs1(h0)).abs());
        if residual <= config.tolerance {
            break;
        }
    }
    if residual > config.tolerance {
        return Err(Error::SolverDidNotConverge {
            iterations,
            residual,
        });
    }
    let mi = if eta == 0.0 {
        0.0
    } else {
        let term0 = l0.expect(|l| (1.0 + eta / rho0 * l * h0).ln());
        let term1 = l1.expect(|l| (1.0 + eta * l * h1).ln());
        (term0 + term1 / rho0 - eta * h0 * h1 / rho0) / LN_2
    };
    Ok(FixedPointSolution {
        h: vec![h0, h1],
        mi,
        residual,
        iterations,
        converged: true,
        degenerate: false,
    })
}
