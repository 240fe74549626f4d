//! Precoder construction and power accounting.
//!
//! The mutual-information-maximizing precoders factor as
//! `P_0 = U_{t,1} Λ_{P_0}` and `P_i = U_{t,i+1} Λ_{P_i} U_{r,i}^H`: left
//! singular vectors aligned to the forward-hop transmit correlation
//! eigenbasis, right singular vectors to the backward-hop receive
//! correlation eigenbasis, both ordered by decreasing eigenvalue. Only the
//! singular values (the power allocation) remain free; picking them
//! optimally is out of scope, so callers supply them — usually the
//! equal-power coefficients computed here.

use crate::channel::PreparedNetwork;
use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig, ComplexMatrix};

/// Per-node average power budgets `P_0..P_{N-1}`.
#[derive(Debug, Clone)]
pub struct PowerBudget(Vec<f64>);

impl PowerBudget {
    pub fn new(per_level: Vec<f64>) -> Result<Self> {
        if per_level.is_empty() {
            return Err(Error::InvalidInput("empty power budget".into()));
        }
        if per_level.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidInput(
                "power budgets must be finite and positive".into(),
            ));
        }
        Ok(Self(per_level))
    }

    pub fn levels(&self) -> &[f64] {
        &self.0
    }
}

/// One level's precoder in factored and assembled form.
#[derive(Debug, Clone)]
pub struct PrecoderLevel {
    /// Left singular vectors (`U_{t,i+1}`).
    pub left: ComplexMatrix,
    /// Non-negative singular values, ordered to match the decreasing
    /// correlation eigenvalues.
    pub singular_values: Vec<f64>,
    /// Right singular vectors (`U_{r,i}`; identity at the source).
    pub right: ComplexMatrix,
    /// `P_i = left · diag(singular_values) · right^H`.
    pub matrix: ComplexMatrix,
}

/// Precoders for levels `0..N-1`.
#[derive(Debug, Clone)]
pub struct PrecoderSet {
    levels: Vec<PrecoderLevel>,
}

impl PrecoderSet {
    pub fn new(levels: Vec<PrecoderLevel>) -> Result<Self> {
        for (i, level) in levels.iter().enumerate() {
            let k = level.singular_values.len();
            if level.left.rows() != k
                || level.left.cols() != k
                || level.right.rows() != k
                || level.right.cols() != k
                || level.matrix.rows() != k
                || level.matrix.cols() != k
            {
                return Err(Error::DimensionMismatch(format!(
                    "inconsistent shapes at precoder level {i}"
                )));
            }
            if level.singular_values.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::InvalidInput(format!(
                    "negative or non-finite singular value at level {i}"
                )));
            }
        }
        Ok(Self { levels })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, i: usize) -> &PrecoderLevel {
        &self.levels[i]
    }

    pub fn matrix(&self, i: usize) -> &ComplexMatrix {
        &self.levels[i].matrix
    }

    /// Checks the level sizes against antenna counts `k_0..k_N`.
    pub fn check_dimensions(&self, antennas: &[usize]) -> Result<()> {
        if antennas.len() != self.levels.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} precoder levels for {} antenna levels",
                self.levels.len(),
                antennas.len()
            )));
        }
        for (i, level) in self.levels.iter().enumerate() {
            if level.matrix.rows() != antennas[i] {
                return Err(Error::DimensionMismatch(format!(
                    "precoder level {i} is {}x{}, level has {} antennas",
                    level.matrix.rows(),
                    level.matrix.cols(),
                    antennas[i]
                )));
            }
        }
        Ok(())
    }

    /// Largest defect of the factored form `P = U Λ V^H` against the
    /// assembled matrix, across levels.
    pub fn reassembly_defect(&self) -> f64 {
        self.levels
            .iter()
            .map(|level| {
                let lambda = ComplexMatrix::diagonal(&level.singular_values);
                level
                    .left
                    .mul(&lambda)
                    .and_then(|ul| ul.mul(&level.right.adjoint()))
                    .and_then(|p| p.sub(&level.matrix))
                    .map(|d| d.frobenius_norm())
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the aligned-singular-vector precoders from the network's cached
/// correlation matrices and caller-supplied singular values (one vector of
/// length `k_i` per level `i` in `0..N-1`).
///
/// Identity correlation blocks decompose to identity eigenvectors, so the
/// uncorrelated case yields diagonal precoders without special-casing.
pub fn optimal_precoders(
    net: &PreparedNetwork,
    singular_values: &[Vec<f64>],
) -> Result<PrecoderSet> {
    let n = net.num_hops();
    let antennas = net.antennas();
    if singular_values.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} singular-value vectors for {} precoding levels",
            singular_values.len(),
            n
        )));
    }
    let mut levels = Vec::with_capacity(n);
    for i in 0..n {
        let k = antennas[i];
        let sv = &singular_values[i];
        if sv.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "level {i} has {k} antennas but {} singular values",
                sv.len()
            )));
        }
        if sv.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "singular values at level {i} must be non-negative"
            )));
        }
        // Forward-hop transmit eigenbasis; hop i+1 is stored at index i.
        let left = hermitian_eig(net.transmit_correlation(i + 1))?.eigenvectors;
        let right = if i == 0 {
            ComplexMatrix::identity(k)
        } else {
            hermitian_eig(net.receive_correlation(i))?.eigenvectors
        };
        let lambda = ComplexMatrix::diagonal(sv);
        let matrix = left.mul(&lambda)?.mul(&right.adjoint())?;
        levels.push(PrecoderLevel {
            left,
            singular_values: sv.clone(),
            right,
            matrix,
        });
    }
    PrecoderSet::new(levels)
}

/// Equal-power scaling for identity correlations:
/// `α_0 = sqrt(P_0)`, `α_i = sqrt(P_i / (a_i P_{i-1}))`, `α_N = 1`.
pub fn equal_power_coeffs_uncorrelated(budget: &PowerBudget, gains: &[f64]) -> Result<Vec<f64>> {
    let n = gains.len();
    if budget.levels().len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} budgets for {n} hops",
            budget.levels().len()
        )));
    }
    if gains.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidInput("pathloss gains must be positive".into()));
    }
    let p = budget.levels();
    let mut alpha = Vec::with_capacity(n + 1);
    alpha.push(p[0].sqrt());
    for i in 1..n {
        alpha.push((p[i] / (gains[i - 1] * p[i - 1])).sqrt());
    }
    alpha.push(1.0);
    Ok(alpha)
}

/// Equal-power scaling meeting the budgets for any correlation model:
///
/// `α_i = sqrt( P_i/(a_i P_{i-1}) · tr(Λ_{r,i-1})/tr(Λ_{r,i})
///              · k_i / tr(Λ_{t,i} Λ_{r,i-1}) )`
///
/// with `Λ_{r,0} = I` and eigenvalue vectors ordered decreasing, paired by
/// index inside the mixed trace. `lambda_r[i-1]`/`lambda_t[i-1]` hold the
/// eigenvalues of hop i's receive/transmit correlation.
pub fn equal_power_coeffs_general(
    budget: &PowerBudget,
    gains: &[f64],
    lambda_r: &[Vec<f64>],
    lambda_t: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = gains.len();
    if budget.levels().len() != n || lambda_r.len() != n || lambda_t.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} budgets and {n} eigenvalue vectors per side"
        )));
    }
    if gains.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
        return Err(Error::InvalidInput("pathloss gains must be positive".into()));
    }
    for v in lambda_r.iter().chain(lambda_t) {
        if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::InvalidInput(
                "correlation eigenvalues must be non-negative".into(),
            ));
        }
    }
    let p = budget.levels();
    let trace = |v: &[f64]| v.iter().sum::<f64>();
    let mut alpha = Vec::with_capacity(n + 1);
    alpha.push(p[0].sqrt());
    for i in 1..n {
        // Receive eigenvalues of the previous level; level 0 has C_{r,0} = I.
        let k_prev = lambda_t[i - 1].len();
        let ones;
        let r_prev: &[f64] = if i == 1 {
            ones = vec![1.0; k_prev];
            &ones
        } else {
            &lambda_r[i - 2]
        };
        if lambda_t[i - 1].len() != r_prev.len() {
            return Err(Error::DimensionMismatch(format!(
                "hop {i}: transmit eigenvalues ({}) and previous receive \
                 eigenvalues ({}) differ in length",
                lambda_t[i - 1].len(),
                r_prev.len()
            )));
        }
        let k_i = lambda_r[i - 1].len() as f64;
        let mixed: f64 = lambda_t[i - 1]
            .iter()
            .zip(r_prev)
            .map(|(t, r)| t * r)
            .sum();
        let tr_r_i = trace(&lambda_r[i - 1]);
        if mixed <= 0.0 || tr_r_i <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "zero trace denominator at hop {i}"
            )));
        }
        let value = p[i] / (gains[i - 1] * p[i - 1]) * trace(r_prev) / tr_r_i * k_i / mixed;
        alpha.push(value.sqrt());
    }
    alpha.push(1.0);
    Ok(alpha)
}

/// Equal-power aligned precoders for a prepared network: general-model
/// coefficients applied as uniform singular values per level.
pub fn equal_power_precoders(net: &PreparedNetwork, budget: &PowerBudget) -> Result<PrecoderSet> {
    let n = net.num_hops();
    let antennas = net.antennas();
    let lambda_r: Vec<Vec<f64>> = (1..=n)
        .map(|hop| crate::matrix::hermitian_eigenvalues(net.receive_correlation(hop)))
        .collect::<Result<_>>()?;
    let lambda_t: Vec<Vec<f64>> = (1..=n)
        .map(|hop| crate::matrix::hermitian_eigenvalues(net.transmit_correlation(hop)))
        .collect::<Result<_>>()?;
    let alpha = equal_power_coeffs_general(budget, net.hop_gains(), &lambda_r, &lambda_t)?;
    let svs: Vec<Vec<f64>> = (0..n).map(|i| vec![alpha[i]; antennas[i]]).collect();
    optimal_precoders(net, &svs)
}

/// Closed-form average transmit power at each precoding level:
///
/// `tr E[x_i x_i^H] = a_i tr(P_i C_{r,i} P_i^H)
///                    · Π_{k<i} (a_k/k_k) tr(C_{t,k+1} P_k C_{r,k} P_k^H)`
///
/// with `a_0 = 1` and `C_{r,0} = I`. With the equal-power coefficients this
/// telescopes to exactly `k_i P_i` at every level.
pub fn transmit_power_audit(net: &PreparedNetwork, precoders: &PrecoderSet) -> Result<Vec<f64>> {
    let n = net.num_hops();
    precoders.check_dimensions(&net.antennas())?;
    let antennas = net.antennas();
    let gains = net.hop_gains();

    // tr(C_{t,k+1} P_k C_{r,k} P_k^H) per level k, with C_{r,0} = I.
    let mut forward_traces = Vec::with_capacity(n);
    // tr(P_i C_{r,i} P_i^H) per level i.
    let mut own_traces = Vec::with_capacity(n);
    for i in 0..n {
        let p = precoders.matrix(i);
        let p_cr_ph = if i == 0 {
            p.mul(&p.adjoint())?
        } else {
            p.mul(net.receive_correlation(i))?.mul(&p.adjoint())?
        };
        own_traces.push(p_cr_ph.trace().re);
        forward_traces.push(net.transmit_correlation(i + 1).mul(&p_cr_ph)?.trace().re);
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a_i = if i == 0 { 1.0 } else { gains[i - 1] };
        let mut value = a_i * own_traces[i];
        for k in 0..i {
            let a_k = if k == 0 { 1.0 } else { gains[k - 1] };
            value *= a_k / antennas[k] as f64 * forward_traces[k];
        }
        out.push(value);
    }
    Ok(out)
}

/// Simulated per-level average transmit powers: for each draw, the signal
/// at level `i` is `x_i = P_i H_i P_{i-1} ... H_1 P_0 y_0` with unit input
/// covariance, so its average power is `||P_i H_i ... P_0||_F²`. Returns
/// `(mean, stderr)` per level over `trials` seeded draws, the simulation
/// oracle for [`transmit_power_audit`].
#[allow(clippy::needless_range_loop)]
pub fn monte_carlo_transmit_power(
    net: &PreparedNetwork,
    precoders: &PrecoderSet,
    trials: usize,
    rng: &crate::rng::RngState,
) -> Result<Vec<(f64, f64)>> {
    if trials < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trials for a standard error, got {trials}"
        )));
    }
    let n = net.num_hops();
    precoders.check_dimensions(&net.antennas())?;
    let mut samples = vec![Vec::with_capacity(trials); n];
    for t in 0..trials {
        let mut sub = rng.substream(t as u64);
        let draw = crate::channel::draw_channels(net, &mut sub)?;
        let mut b = precoders.matrix(0).clone();
        samples[0].push(b.frobenius_norm().powi(2));
        for i in 1..n {
            b = precoders.matrix(i).mul(&draw.hops[i - 1])?.mul(&b)?;
            samples[i].push(b.frobenius_norm().powi(2));
        }
    }
    Ok(samples
        .into_iter()
        .map(|s| {
            let mean = s.iter().sum::<f64>() / trials as f64;
            let var = s.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            (mean, (var / trials as f64).sqrt())
        })
        .collect())
}
