//! Scalar-product reduction of the fixed-point system.
//!
//! Every equation `Π_j h_j = R_i(h_i)` has a right side that is strictly
//! increasing in `h_i`, rising from 0 to `sup R_i` (`ρ_i (1 - mass0_i)/η`
//! for η > 0). Fixing the product at a trial value `u` therefore determines
//! every `h_i = R_i^{-1}(u)` by a bracketed monotone inversion, and the
//! whole system reduces to one scalar consistency equation
//! `F(u) = Π_i R_i^{-1}(u) - u = 0` on `(0, min_i sup R_i)`. `F` is
//! negative near zero (the product vanishes like `u^{(N+1)/N}`) and
//! positive at the upper end (some `h_i` blows up), so a sign change is
//! guaranteed; the solver takes the first one found by a geometric scan
//! and polishes it with bisection plus bracket-safeguarded Newton steps.
//! This is the same parameterization the Υ-transform derivation of the
//! system uses, with `u = Π_j h_j = -Υ(-η)/η`.

use crate::error::{Error, Result};

const INNER_REL_TOL: f64 = 1e-14;
const X_CAP: f64 = 1e60;
const SCAN_POINTS: usize = 96;

/// One fixed-point system: `Π_j h_j = rhs(i, h_i)` for each level `i`.
pub(crate) trait FixedPointSystem {
    fn levels(&self) -> usize;
    fn rhs(&self, i: usize, x: f64) -> f64;
    /// Supremum of `rhs(i, ·)`; may be infinite (η = 0).
    fn rhs_sup(&self, i: usize) -> f64;
    fn rhs_derivative(&self, i: usize, x: f64) -> f64 {
        let step = 1e-6 * x.abs().max(1e-9);
        let lo = (x - step).max(0.0);
        (self.rhs(i, x + step) - self.rhs(i, lo)) / (x + step - lo)
    }
}

pub(crate) struct Solved {
    pub h: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Monotone inversion `rhs(i, x) = u` for `x > 0`, warm-started from the
/// previous solution at this level.
fn invert(sys: &impl FixedPointSystem, i: usize, u: f64, guess: f64) -> f64 {
    let mut hi = guess.max(1e-12);
    let mut grow = 0;
    while sys.rhs(i, hi) < u {
        hi *= 4.0;
        grow += 1;
        if hi > X_CAP || grow > 600 {
            return X_CAP;
        }
    }
    let mut lo = 0.0;
    if guess > 0.0 && guess < hi && sys.rhs(i, guess) < u {
        lo = guess;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = sys.rhs(i, x) - u;
        if f.abs() <= INNER_REL_TOL * u.max(1e-100) {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = sys.rhs_derivative(i, x);
        let mut next = if d > 0.0 { x - f / d } else { 0.5 * (lo + hi) };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= f64::EPSILON * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

fn consistency(sys: &impl FixedPointSystem, u: f64, warm: &mut [f64]) -> f64 {
    let mut product = 1.0;
    for (i, slot) in warm.iter_mut().enumerate() {
        let x = invert(sys, i, u, *slot);
        *slot = x;
        product *= x;
    }
    product - u
}

pub(crate) fn solve_system(
    sys: &impl FixedPointSystem,
    config: &super::SolverConfig,
) -> Result<Solved> {
    let levels = sys.levels();
    let mut warm = vec![1.0; levels];
    let mut evals = 0usize;
    let budget = config.max_iterations.max(100);

    let mut u_end = (0..levels)
        .map(|i| sys.rhs_sup(i))
        .fold(f64::INFINITY, f64::min);
    if u_end.is_finite() {
        u_end *= 1.0 - 1e-12;
    } else {
        let mut u = 1.0;
        let mut w = warm.clone();
        loop {
            evals += 1;
            if consistency(sys, u, &mut w) > 0.0 {
                break;
            }
            u *= 4.0;
            if u > 1e150 {
                return Err(Error::SolverDidNotConverge {
                    iterations: evals,
                    residual: f64::INFINITY,
                });
            }
        }
        u_end = u;
    }

    // Geometric scan for the first sign change of F.
    let u_start = u_end * 1e-14;
    let ratio = (u_end / u_start).powf(1.0 / (SCAN_POINTS - 1) as f64);
    let mut prev_u = u_start;
    let mut prev_f = consistency(sys, prev_u, &mut warm);
    evals += 1;
    let mut bracket = None;
    if prev_f >= 0.0 {
        // Root sits below the scan window; walk down.
        let mut u = u_start;
        for _ in 0..60 {
            let u_next = u / 16.0;
            let f_next = consistency(sys, u_next, &mut warm);
            evals += 1;
            if f_next < 0.0 {
                bracket = Some((u_next, u));
                break;
            }
            u = u_next;
        }
    } else {
        let mut u = u_start;
        for _ in 1..SCAN_POINTS {
            u *= ratio;
            let f = consistency(sys, u, &mut warm);
            evals += 1;
            if f >= 0.0 {
                bracket = Some((prev_u, u));
                break;
            }
            prev_u = u;
            prev_f = f;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::SolverDidNotConverge {
        iterations: evals,
        residual: prev_f.abs(),
    })?;

    // Bisection with bracket-safeguarded Newton on u.
    let mut u = 0.5 * (lo + hi);
    let mut best_u = u;
    let mut best_f = f64::INFINITY;
    while evals < budget {
        let f = consistency(sys, u, &mut warm);
        evals += 1;
        if f.abs() < best_f {
            best_f = f.abs();
            best_u = u;
        }
        if f.abs() <= 0.1 * config.tolerance {
            break;
        }
        if f >= 0.0 {
            hi = u;
        } else {
            lo = u;
        }
        // F'(u) = Π h · Σ_j 1/(h_j R_j'(h_j)) - 1.
        let product: f64 = warm.iter().product();
        let mut slope_sum = 0.0;
        for (j, &hj) in warm.iter().enumerate() {
            let d = sys.rhs_derivative(j, hj);
            if d > 0.0 && hj > 0.0 {
                slope_sum += 1.0 / (hj * d);
            }
        }
        let fp = product * slope_sum - 1.0;
        let mut next = if fp.abs() > 1e-300 {
            u - f / fp
        } else {
            0.5 * (lo + hi)
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (hi - lo) <= f64::EPSILON * hi {
            break;
        }
        u = next;
    }

    let mut h = vec![0.0; levels];
    for (i, slot) in h.iter_mut().enumerate() {
        *slot = invert(sys, i, best_u, warm[i]);
    }
    let product: f64 = h.iter().product();
    let residual = (0..levels)
        .map(|i| (product - sys.rhs(i, h[i])).abs())
        .fold(0.0, f64::max);
    if residual > config.tolerance {
        return Err(Error::SolverDidNotConverge {
            iterations: evals,
            residual,
        });
    }
    Ok(Solved {
        h,
        residual,
        iterations: evals,
    })
}
