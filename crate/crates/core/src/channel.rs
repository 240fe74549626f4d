//! The N-hop Kronecker channel model.
//!
//! Hop `i` (1-based) carries a `k_i x k_{i-1}` matrix
//! `H_i = C_{r,i}^{1/2} Θ_i C_{t,i}^{1/2}` whose i.i.d. Gaussian core has
//! per-entry variance `a_i / k_{i-1}`, `a_i = d_i^{-β}` being the pathloss
//! gain of the hop. Levels are numbered `0..=N`: level 0 is the source,
//! level N the destination, and levels `1..N` are relays. The composed
//! end-to-end channel is `G_N = H_N P_{N-1} ... H_1 P_0`.

use crate::error::{Error, Result};
use crate::matrix::{
    gram_eigenvalues, hermitian_eigenvalues, log_det_id_plus, psd_sqrt, sample_complex_gaussian,
    ComplexMatrix,
};
use crate::precoding::PrecoderSet;
use crate::rng::RngState;

/// Antenna correlation on one side of a hop.
#[derive(Debug, Clone)]
pub enum CorrelationSpec {
    Identity,
    /// Exponential model: entry `(k, l)` is `r^{|k-l|}` with `0 <= r < 1`.
    Exponential(f64),
    /// Explicit Hermitian PSD matrix with unit diagonal.
    Explicit(ComplexMatrix),
}

impl CorrelationSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Identity => Ok(()),
            Self::Exponential(r) => {
                if (0.0..1.0).contains(r) {
                    Ok(())
                } else {
                    Err(Error::OutOfRange(format!(
                        "exponential correlation parameter {r} outside [0, 1)"
                    )))
                }
            }
            Self::Explicit(m) => {
                if m.rows() != n || m.cols() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "correlation matrix is {}x{}, hop side has {n} antennas",
                        m.rows(),
                        m.cols()
                    )));
                }
                for i in 0..n {
                    let d = m.get(i, i);
                    if (d.re - 1.0).abs() > 1e-9 || d.im.abs() > 1e-9 {
                        return Err(Error::InvalidInput(format!(
                            "correlation diagonal entry ({i},{i}) = {d} is not 1"
                        )));
                    }
                }
                let min = hermitian_eigenvalues(m)?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if min < -1e-12 {
                    return Err(Error::NotPositiveSemidefinite {
                        min_eigenvalue: min,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn materialize(&self, n: usize) -> Result<ComplexMatrix> {
        self.validate(n)?;
        Ok(match self {
            Self::Identity => ComplexMatrix::identity(n),
            Self::Exponential(r) => crate::matrix::exponential_toeplitz(n, *r)?,
            Self::Explicit(m) => m.clone(),
        })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity) || matches!(self, Self::Exponential(r) if *r == 0.0)
    }
}

/// One hop of the relay chain.
#[derive(Debug, Clone)]
pub struct HopSpec {
    /// Antennas at the transmitting level (`k_{i-1}`).
    pub k_in: usize,
    /// Antennas at the receiving level (`k_i`).
    pub k_out: usize,
    /// Dimensionless hop length `d_i > 0`.
    pub distance: f64,
    /// Transmit-side correlation `C_{t,i}` (size `k_in`).
    pub transmit: CorrelationSpec,
    /// Receive-side correlation `C_{r,i}` (size `k_out`).
    pub receive: CorrelationSpec,
}

/// Full description of an N-hop network.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    /// Hops 1..=N, with matching interior dimensions.
    pub hops: Vec<HopSpec>,
    /// Pathloss exponent `β >= 0`; hop gain is `a_i = d_i^{-β}`.
    pub pathloss_exponent: f64,
    /// Per-node power budgets `P_0..P_{N-1}` (source and relays).
    pub powers: Vec<f64>,
    /// Noise parameter `η = 1/σ²` at the destination.
    pub eta: f64,
}

/// `d^{-β}`.
pub fn pathloss(distance: f64, beta: f64) -> Result<f64> {
    if !(distance.is_finite() && distance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "hop distance must be positive, got {distance}"
        )));
    }
    if !(beta.is_finite() && beta >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "pathloss exponent must be non-negative, got {beta}"
        )));
    }
    Ok(distance.powf(-beta))
}

impl NetworkSpec {
    pub fn num_hops(&self) -> usize {
        self.hops.len()
    }

    /// Antenna counts `k_0..k_N`.
    pub fn antennas(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        out.push(self.hops[0].k_in);
        out.extend(self.hops.iter().map(|h| h.k_out));
        out
    }

    /// Finite-size antenna ratios `ρ_i = k_i / k_N`.
    pub fn rho(&self) -> Vec<f64> {
        let ks = self.antennas();
        let k_last = *ks.last().unwrap() as f64;
        ks.iter().map(|&k| k as f64 / k_last).collect()
    }

    /// Per-hop gains `a_1..a_N`.
    pub fn hop_gains(&self) -> Result<Vec<f64>> {
        self.hops
            .iter()
            .map(|h| pathloss(h.distance, self.pathloss_exponent))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_hops();
        if n == 0 {
            return Err(Error::InvalidInput("network needs at least one hop".into()));
        }
        for (i, hop) in self.hops.iter().enumerate() {
            if hop.k_in == 0 || hop.k_out == 0 {
                return Err(Error::InvalidInput(format!(
                    "hop {} has a zero antenna count",
                    i + 1
                )));
            }
            hop.transmit.validate(hop.k_in)?;
            hop.receive.validate(hop.k_out)?;
            pathloss(hop.distance, self.pathloss_exponent)?;
            if i + 1 < n && hop.k_out != self.hops[i + 1].k_in {
                return Err(Error::DimensionMismatch(format!(
                    "hop {} receives on {} antennas but hop {} transmits on {}",
                    i + 1,
                    hop.k_out,
                    i + 2,
                    self.hops[i + 1].k_in
                )));
            }
        }
        if self.powers.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} power budgets for {} transmitting levels",
                self.powers.len(),
                n
            )));
        }
        if self.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidInput("power budgets must be positive".into()));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "noise parameter eta must be positive, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Validates and caches the correlation matrices and their PSD square
    /// roots, the dominant setup cost of repeated draws and sweeps.
    pub fn prepare(&self) -> Result<PreparedNetwork> {
        self.validate()?;
        let mut ct = Vec::new();
        let mut cr = Vec::new();
        let mut ct_sqrt = Vec::new();
        let mut cr_sqrt = Vec::new();
        for hop in &self.hops {
            let t = hop.transmit.materialize(hop.k_in)?;
            let r = hop.receive.materialize(hop.k_out)?;
            ct_sqrt.push(psd_sqrt(&t)?);
            cr_sqrt.push(psd_sqrt(&r)?);
            ct.push(t);
            cr.push(r);
        }
        Ok(PreparedNetwork {
            spec: self.clone(),
            gains: self.hop_gains()?,
            ct,
            cr,
            ct_sqrt,
            cr_sqrt,
        })
    }
}

/// Immutable prepared form of a [`NetworkSpec`]: correlation matrices and
/// square roots computed once.
#[derive(Debug, Clone)]
pub struct PreparedNetwork {
    spec: NetworkSpec,
    gains: Vec<f64>,
    ct: Vec<ComplexMatrix>,
    cr: Vec<ComplexMatrix>,
    ct_sqrt: Vec<ComplexMatrix>,
    cr_sqrt: Vec<ComplexMatrix>,
}

impl PreparedNetwork {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn num_hops(&self) -> usize {
        self.spec.num_hops()
    }

    pub fn antennas(&self) -> Vec<usize> {
        self.spec.antennas()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.spec.rho()
    }

    /// Gains `a_1..a_N`.
    pub fn hop_gains(&self) -> &[f64] {
        &self.gains
    }

    /// `C_{t,i}` for hop `i` in `1..=N`.
    pub fn transmit_correlation(&self, hop: usize) -> &ComplexMatrix {
        &self.ct[hop - 1]
    }

    /// `C_{r,i}` for hop `i` in `1..=N`.
    pub fn receive_correlation(&self, hop: usize) -> &ComplexMatrix {
        &self.cr[hop - 1]
    }

    pub fn transmit_correlation_sqrt(&self, hop: usize) -> &ComplexMatrix {
        &self.ct_sqrt[hop - 1]
    }

    pub fn receive_correlation_sqrt(&self, hop: usize) -> &ComplexMatrix {
        &self.cr_sqrt[hop - 1]
    }
}

/// One draw of the N hop matrices.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// `H_1..H_N`.
    pub hops: Vec<ComplexMatrix>,
    /// The raw i.i.d. cores `Θ_1..Θ_N` behind the hops.
    pub thetas: Vec<ComplexMatrix>,
    /// Seed of the substream that produced the draw.
    pub seed: u64,
}

/// Draws `H_i = C_{r,i}^{1/2} Θ_i C_{t,i}^{1/2}` with independent cores of
/// per-entry variance `a_i / k_{i-1}`.
pub fn draw_channels(net: &PreparedNetwork, rng: &mut RngState) -> Result<ChannelRealization> {
    let seed = rng.seed();
    let mut hops = Vec::with_capacity(net.num_hops());
    let mut thetas = Vec::with_capacity(net.num_hops());
    for (idx, hop) in net.spec.hops.iter().enumerate() {
        let variance = net.gains[idx] / hop.k_in as f64;
        let theta = sample_complex_gaussian(hop.k_out, hop.k_in, variance, rng)?;
        let h = net.cr_sqrt[idx].mul(&theta)?.mul(&net.ct_sqrt[idx])?;
        hops.push(h);
        thetas.push(theta);
    }
    Ok(ChannelRealization { hops, thetas, seed })
}

/// The deterministic level matrices `M_0..M_N`:
/// `M_0 = C_{t,1}^{1/2} P_0`, `M_i = C_{t,i+1}^{1/2} P_i C_{r,i}^{1/2}`,
/// `M_N = C_{r,N}^{1/2}`.
pub fn build_m_matrices(
    net: &PreparedNetwork,
    precoders: &PrecoderSet,
) -> Result<Vec<ComplexMatrix>> {
    let n = net.num_hops();
    precoders.check_dimensions(&net.antennas())?;
    let mut ms = Vec::with_capacity(n + 1);
    ms.push(net.ct_sqrt[0].mul(precoders.matrix(0))?);
    for i in 1..n {
        ms.push(
            net.ct_sqrt[i]
                .mul(precoders.matrix(i))?
                .mul(&net.cr_sqrt[i - 1])?,
        );
    }
    ms.push(net.cr_sqrt[n - 1].clone());
    Ok(ms)
}

/// End-to-end channel `G_N = H_N P_{N-1} ... H_1 P_0` (size `k_N x k_0`).
pub fn compose_end_to_end(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
) -> Result<ComplexMatrix> {
    let n = realization.hops.len();
    if precoders.num_levels() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} precoder levels for {} hops",
            precoders.num_levels(),
            n
        )));
    }
    let mut g = realization.hops[0].mul(precoders.matrix(0))?;
    for i in 1..n {
        g = realization.hops[i].mul(precoders.matrix(i))?.mul(&g)?;
    }
    Ok(g)
}

/// The same end-to-end channel in level form,
/// `G_N = M_N Θ_N M_{N-1} ... Θ_1 M_0`.
pub fn compose_from_levels(
    ms: &[ComplexMatrix],
    thetas: &[ComplexMatrix],
) -> Result<ComplexMatrix> {
    if ms.len() != thetas.len() + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} level matrices for {} cores",
            ms.len(),
            thetas.len()
        )));
    }
    let mut g = ms[0].clone();
    for (theta, m) in thetas.iter().zip(&ms[1..]) {
        g = m.mul(&theta.mul(&g)?)?;
    }
    Ok(g)
}

/// Instantaneous end-to-end mutual information per source antenna:
/// `log2 det(I + η G G^H) / k_0`, in bits.
pub fn instantaneous_mi(g: &ComplexMatrix, eta: f64, k0: usize) -> Result<f64> {
    if k0 == 0 {
        return Err(Error::InvalidInput("k0 must be positive".into()));
    }
    Ok(log_det_id_plus(eta, g)? / k0 as f64)
}

/// Instantaneous mutual information from precomputed Gramian eigenvalues,
/// so a sweep over `η` prices each grid point at O(k) flops.
pub fn mi_from_gram_eigenvalues(values: &[f64], eta: f64, k0: usize) -> f64 {
    values
        .iter()
        .map(|&l| (1.0 + eta * l).ln())
        .sum::<f64>()
        / std::f64::consts::LN_2
        / k0 as f64
}

/// Gramian spectra of `trials` independent end-to-end draws; trial `t` uses
/// substream `t` of `rng`, so the set is reproducible and order-independent.
pub fn monte_carlo_gram_spectra(
    net: &PreparedNetwork,
    precoders: &PrecoderSet,
    trials: usize,
    rng: &RngState,
) -> Result<Vec<Vec<f64>>> {
    (0..trials)
        .map(|t| {
            let mut sub = rng.substream(t as u64);
            let draw = draw_channels(net, &mut sub)?;
            let g = compose_end_to_end(&draw, precoders)?;
            gram_eigenvalues(&g)
        })
        .collect()
}

/// Sample mean and standard error of the instantaneous mutual information
/// over independent channel draws.
pub fn average_mi_monte_carlo(
    net: &PreparedNetwork,
    precoders: &PrecoderSet,
    eta: f64,
    trials: usize,
    rng: &RngState,
) -> Result<(f64, f64)> {
    if trials < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 trials for a standard error, got {trials}"
        )));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::InvalidInput(format!("eta = {eta}")));
    }
    let k0 = net.antennas()[0];
    let spectra = monte_carlo_gram_spectra(net, precoders, trials, rng)?;
    let samples: Vec<f64> = spectra
        .iter()
        .map(|s| mi_from_gram_eigenvalues(s, eta, k0))
        .collect();
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    Ok((mean, (var / trials as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoding::{optimal_precoders, PrecoderSet};

    fn uniform_network(n_hops: usize, k: usize, r_tx: f64, r_rx: f64) -> NetworkSpec {
        NetworkSpec {
            hops: (0..n_hops)
                .map(|_| HopSpec {
                    k_in: k,
                    k_out: k,
                    distance: 1.0,
                    transmit: if r_tx == 0.0 {
                        CorrelationSpec::Identity
                    } else {
                        CorrelationSpec::Exponential(r_tx)
                    },
                    receive: if r_rx == 0.0 {
                        CorrelationSpec::Identity
                    } else {
                        CorrelationSpec::Exponential(r_rx)
                    },
                })
                .collect(),
            pathloss_exponent: 2.0,
            powers: vec![1.0; n_hops],
            eta: 1.0,
        }
    }

    fn identity_precoders(net: &PreparedNetwork) -> PrecoderSet {
        let svs: Vec<Vec<f64>> = net.antennas()[..net.num_hops()]
            .iter()
            .map(|&k| vec![1.0; k])
            .collect();
        optimal_precoders(net, &svs).unwrap()
    }

    #[test]
    fn pathloss_basics() {
        assert_eq!(pathloss(1.0, 3.7).unwrap(), 1.0);
        assert!((pathloss(2.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((pathloss(3.0, 2.0).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!(pathloss(0.0, 2.0).is_err());
        assert!(pathloss(-1.0, 2.0).is_err());
    }

    #[test]
    fn validate_catches_dimension_breaks() {
        let mut spec = uniform_network(2, 4, 0.0, 0.0);
        spec.hops[1].k_in = 5;
        assert!(matches!(spec.validate(), Err(Error::DimensionMismatch(_))));
        let mut bad_power = uniform_network(2, 4, 0.0, 0.0);
        bad_power.powers = vec![1.0];
        assert!(bad_power.validate().is_err());
    }

    #[test]
    fn draw_is_deterministic_per_seed() {
        let net = uniform_network(2, 4, 0.3, 0.0).prepare().unwrap();
        let a = draw_channels(&net, &mut RngState::new(11)).unwrap();
        let b = draw_channels(&net, &mut RngState::new(11)).unwrap();
        for (x, y) in a.hops.iter().zip(&b.hops) {
            assert_eq!(x.entries_row_major(), y.entries_row_major());
        }
    }

    #[test]
    fn identity_correlation_yields_raw_gaussian() {
        let net = uniform_network(1, 5, 0.0, 0.0).prepare().unwrap();
        let draw = draw_channels(&net, &mut RngState::new(3)).unwrap();
        let diff = draw.hops[0].sub(&draw.thetas[0]).unwrap().frobenius_norm();
        assert!(diff < 1e-14);
    }

    #[test]
    fn hop_frobenius_mass_matches_expectation() {
        // E||H_1||_F^2 = tr(C_r) tr(C_t) a / k_in = k_out * a with unit
        // diagonals; averaged over many draws.
        let net = uniform_network(2, 4, 0.4, 0.2).prepare().unwrap();
        let root = RngState::new(11);
        let trials = 2000;
        let mut acc = 0.0;
        for t in 0..trials {
            let mut sub = root.substream(t);
            let draw = draw_channels(&net, &mut sub).unwrap();
            acc += draw.hops[0].frobenius_norm().powi(2);
        }
        let mean = acc / trials as f64;
        let expect = 4.0 * net.hop_gains()[0];
        assert!(
            (mean - expect).abs() / expect < 0.05,
            "E||H||_F^2 = {mean}, expected {expect}"
        );
    }

    #[test]
    fn m_matrices_identity_case() {
        let net = uniform_network(2, 3, 0.0, 0.0).prepare().unwrap();
        let pre = identity_precoders(&net);
        let ms = build_m_matrices(&net, &pre).unwrap();
        assert_eq!(ms.len(), 3);
        for m in &ms {
            assert!(m.sub(&ComplexMatrix::identity(3)).unwrap().frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn explicit_correlation_validation() {
        // Valid: Hermitian PSD with unit diagonal.
        let good = crate::matrix::exponential_toeplitz(3, 0.6).unwrap();
        assert!(CorrelationSpec::Explicit(good.clone()).validate(3).is_ok());
        assert!(CorrelationSpec::Explicit(good.clone()).validate(4).is_err());
        // Non-unit diagonal rejected.
        let scaled = good.scale(2.0);
        assert!(CorrelationSpec::Explicit(scaled).validate(3).is_err());
        // Indefinite matrix rejected.
        let mut indefinite = ComplexMatrix::identity(2);
        indefinite.set(0, 1, num_complex::Complex64::new(2.0, 0.0));
        indefinite.set(1, 0, num_complex::Complex64::new(2.0, 0.0));
        assert!(CorrelationSpec::Explicit(indefinite).validate(2).is_err());
    }

    #[test]
    fn m0_is_transmit_correlation_sqrt_times_precoder() {
        // With P_0 = I, the source level matrix is exactly C_{t,1}^{1/2}.
        let ct = crate::matrix::exponential_toeplitz(2, 0.6).unwrap();
        let spec = NetworkSpec {
            hops: vec![HopSpec {
                k_in: 2,
                k_out: 2,
                distance: 1.0,
                transmit: CorrelationSpec::Explicit(ct.clone()),
                receive: CorrelationSpec::Identity,
            }],
            pathloss_exponent: 0.0,
            powers: vec![1.0],
            eta: 1.0,
        };
        let net = spec.prepare().unwrap();
        let pre = PrecoderSet::new(vec![crate::precoding::PrecoderLevel {
            left: ComplexMatrix::identity(2),
            singular_values: vec![1.0, 1.0],
            right: ComplexMatrix::identity(2),
            matrix: ComplexMatrix::identity(2),
        }])
        .unwrap();
        let ms = build_m_matrices(&net, &pre).unwrap();
        let sqrt = crate::matrix::psd_sqrt(&ct).unwrap();
        assert!(ms[0].sub(&sqrt).unwrap().frobenius_norm() < 1e-12);
        assert!(ms[1].sub(&ComplexMatrix::identity(2)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn composition_orders_agree() {
        // H-form (hop products) and level form (M/Θ products) must compose
        // to the same matrix for the same draw.
        for &(hops, k) in &[(1usize, 4usize), (2, 6), (3, 5)] {
            let net = uniform_network(hops, k, 0.3, 0.2).prepare().unwrap();
            let pre = identity_precoders(&net);
            let draw = draw_channels(&net, &mut RngState::new(5)).unwrap();
            let direct = compose_end_to_end(&draw, &pre).unwrap();
            let ms = build_m_matrices(&net, &pre).unwrap();
            let via_levels = compose_from_levels(&ms, &draw.thetas).unwrap();
            let rel = direct.sub(&via_levels).unwrap().frobenius_norm()
                / direct.frobenius_norm();
            assert!(rel < 1e-10, "composition mismatch {rel} at N={hops}");
            assert_eq!(direct.rows(), k);
            assert_eq!(direct.cols(), k);
        }
    }

    #[test]
    fn single_hop_identity_composition_is_theta() {
        let net = uniform_network(1, 4, 0.0, 0.0).prepare().unwrap();
        let pre = identity_precoders(&net);
        let draw = draw_channels(&net, &mut RngState::new(9)).unwrap();
        let g = compose_end_to_end(&draw, &pre).unwrap();
        assert!(g.sub(&draw.thetas[0]).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn rectangular_chain_composes_to_kn_by_k0() {
        let spec = NetworkSpec {
            hops: vec![
                HopSpec {
                    k_in: 3,
                    k_out: 5,
                    distance: 1.0,
                    transmit: CorrelationSpec::Exponential(0.2),
                    receive: CorrelationSpec::Identity,
                },
                HopSpec {
                    k_in: 5,
                    k_out: 4,
                    distance: 2.0,
                    transmit: CorrelationSpec::Identity,
                    receive: CorrelationSpec::Exponential(0.4),
                },
            ],
            pathloss_exponent: 1.5,
            powers: vec![1.0, 1.0],
            eta: 1.0,
        };
        let net = spec.prepare().unwrap();
        let svs = vec![vec![1.0; 3], vec![1.0; 5]];
        let pre = optimal_precoders(&net, &svs).unwrap();
        let draw = draw_channels(&net, &mut RngState::new(2)).unwrap();
        let g = compose_end_to_end(&draw, &pre).unwrap();
        assert_eq!((g.rows(), g.cols()), (4, 3));
        let ms = build_m_matrices(&net, &pre).unwrap();
        assert_eq!(ms.len(), 3);
        let via_levels = compose_from_levels(&ms, &draw.thetas).unwrap();
        let rel = g.sub(&via_levels).unwrap().frobenius_norm() / g.frobenius_norm();
        assert!(rel < 1e-10);
        // Finite-size ratios are exact by definition here.
        assert_eq!(spec.rho(), vec![0.75, 1.25, 1.0]);
        assert!(instantaneous_mi(&g, 2.0, 3).unwrap() > 0.0);
    }

    #[test]
    fn instantaneous_mi_basics() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(instantaneous_mi(&id, 0.0, 2).unwrap(), 0.0);
        assert!((instantaneous_mi(&id, 1.0, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!(instantaneous_mi(&id, 1.0, 0).is_err());
    }

    #[test]
    fn instantaneous_mi_unitary_invariant() {
        let mut rng = RngState::new(23);
        let g = sample_complex_gaussian(6, 6, 1.0, &mut rng).unwrap();
        // Unitaries from the eigenvectors of random Hermitian matrices.
        let mk_unitary = |rng: &mut RngState| {
            let x = sample_complex_gaussian(6, 6, 1.0, rng).unwrap();
            let h = x.gram_left();
            crate::matrix::hermitian_eig(&h).unwrap().eigenvectors
        };
        let u = mk_unitary(&mut rng);
        let v = mk_unitary(&mut rng);
        let rotated = u.mul(&g).unwrap().mul(&v.adjoint()).unwrap();
        let a = instantaneous_mi(&g, 0.8, 6).unwrap();
        let b = instantaneous_mi(&rotated, 0.8, 6).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn monte_carlo_mean_and_spread() {
        let net = uniform_network(1, 8, 0.0, 0.0).prepare().unwrap();
        let pre = identity_precoders(&net);
        let root = RngState::new(4);
        assert!(average_mi_monte_carlo(&net, &pre, 1.0, 1, &root).is_err());
        let (mean0, se0) = average_mi_monte_carlo(&net, &pre, 0.0, 16, &root).unwrap();
        assert_eq!(mean0, 0.0);
        assert_eq!(se0, 0.0);
        // Standard error shrinks roughly like 1/sqrt(trials).
        let (_, se_small) = average_mi_monte_carlo(&net, &pre, 2.0, 100, &root).unwrap();
        let (_, se_large) = average_mi_monte_carlo(&net, &pre, 2.0, 400, &root).unwrap();
        let ratio = se_small / se_large;
        assert!(
            (1.2..3.6).contains(&ratio),
            "stderr ratio {ratio} too far from 2"
        );
    }

    #[test]
    fn mi_spread_shrinks_with_antennas() {
        for &(r_tx, label) in &[(0.0, "uncorrelated"), (0.3, "one-sided")] {
            let mut spreads = Vec::new();
            for &k in &[10usize, 50, 100] {
                let net = uniform_network(2, k, r_tx, 0.0).prepare().unwrap();
                let pre = identity_precoders(&net);
                let spectra =
                    monte_carlo_gram_spectra(&net, &pre, 12, &RngState::new(31)).unwrap();
                let samples: Vec<f64> = spectra
                    .iter()
                    .map(|s| mi_from_gram_eigenvalues(s, 10.0, k))
                    .collect();
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                    / (samples.len() - 1) as f64)
                    .sqrt();
                spreads.push(sd);
            }
            assert!(
                spreads[0] > spreads[1] && spreads[1] > spreads[2],
                "{label} spreads {spreads:?} not shrinking"
            );
        }
    }
}
