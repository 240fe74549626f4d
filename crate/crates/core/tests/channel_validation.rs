//! Monte Carlo validation of the channel model: the trace-product power
//! identity, simulated transmit powers against the closed-form audit, the
//! sampler's unitary invariance, and finite-size mutual information
//! against the asymptotic value.

use relaymi_core::asymptotic::{multi_hop_uncorrelated, SolverConfig};
use relaymi_core::channel::{
    compose_end_to_end, draw_channels, instantaneous_mi, CorrelationSpec, HopSpec, NetworkSpec,
};
use relaymi_core::matrix::{gram_eigenvalues, hermitian_eig, sample_complex_gaussian, ComplexMatrix};
use relaymi_core::precoding::{
    equal_power_coeffs_uncorrelated, equal_power_precoders, monte_carlo_transmit_power,
    transmit_power_audit, PowerBudget,
};
use relaymi_core::RngState;

/// For deterministic `A_0..A_i` and independent Gaussian cores of variance
/// `σ_k²`, the expected trace of the sandwiched product telescopes:
/// `E tr(Π A_k Θ_k A_0 A_0^H Π Θ_k^H A_k^H)
///   = tr(A_0 A_0^H) Π σ_k² tr(A_k A_k^H)`.
#[test]
fn trace_product_identity_random_chains() {
    let trials = 10_000;
    for &(levels, k) in &[(1usize, 8usize), (2, 6), (3, 4)] {
        let mut setup_rng = RngState::new(500 + levels as u64);
        let a: Vec<ComplexMatrix> = (0..=levels)
            .map(|_| sample_complex_gaussian(k, k, 1.0, &mut setup_rng).unwrap())
            .collect();
        let sigma_sq: Vec<f64> = (1..=levels).map(|j| 0.5 + 0.25 * j as f64).collect();

        let closed: f64 = a[0].gram_left().trace().re
            * (1..=levels)
                .map(|j| sigma_sq[j - 1] * a[j].gram_left().trace().re)
                .product::<f64>();

        let root = RngState::new(900 + levels as u64);
        let mut samples = Vec::with_capacity(trials);
        for t in 0..trials {
            let mut rng = root.substream(t as u64);
            let mut b = a[0].clone();
            for j in 1..=levels {
                let theta =
                    sample_complex_gaussian(k, k, sigma_sq[j - 1], &mut rng).unwrap();
                b = a[j].mul(&theta).unwrap().mul(&b).unwrap();
            }
            samples.push(b.frobenius_norm().powi(2));
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
            / (trials - 1) as f64;
        let stderr = (var / trials as f64).sqrt();
        assert!(
            (mean - closed).abs() <= 3.0 * stderr,
            "levels={levels}: mc {mean} vs closed {closed} (3σ = {})",
            3.0 * stderr
        );
    }
}

fn correlated_network(hops: usize, k: usize, r: f64) -> NetworkSpec {
    NetworkSpec {
        hops: (0..hops)
            .map(|_| HopSpec {
                k_in: k,
                k_out: k,
                distance: 1.0,
                transmit: CorrelationSpec::Exponential(r),
                receive: CorrelationSpec::Exponential(r),
            })
            .collect(),
        pathloss_exponent: 0.0,
        powers: vec![1.0; hops],
        eta: 1.0,
    }
}

#[test]
fn simulated_transmit_power_matches_audit() {
    let net = correlated_network(2, 8, 0.3).prepare().unwrap();
    let budget = PowerBudget::new(vec![1.0, 1.0]).unwrap();
    let precoders = equal_power_precoders(&net, &budget).unwrap();
    let audit = transmit_power_audit(&net, &precoders).unwrap();
    let mc = monte_carlo_transmit_power(&net, &precoders, 10_000, &RngState::new(77)).unwrap();
    for (level, ((mean, stderr), closed)) in mc.iter().zip(&audit).enumerate() {
        if *stderr <= 1e-9 * mean.abs() {
            assert!(
                (mean - closed).abs() < 1e-9 * closed.abs(),
                "level {level} deterministic"
            );
        } else {
            assert!(
                (mean - closed).abs() <= 3.0 * stderr,
                "level {level}: mc {mean} vs audit {closed}"
            );
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut d: f64 = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    while i < n && j < m {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

#[test]
fn sampler_singular_values_are_rotation_invariant() {
    // Independent draws, one sandwiched between random unitaries: their
    // singular-value samples must be statistically indistinguishable
    // (two-sample KS at the 1% level).
    for &n in &[48usize, 96] {
        let root = RngState::new(3000 + n as u64);
        let mut sv_plain = Vec::new();
        let mut sv_rotated = Vec::new();
        let mk_unitary = |rng: &mut RngState| {
            let x = sample_complex_gaussian(n, n, 1.0, rng).unwrap();
            hermitian_eig(&x.gram_left()).unwrap().eigenvectors
        };
        for t in 0..12 {
            let mut rng = root.substream(t);
            let theta_a = sample_complex_gaussian(n, n, 1.0 / n as f64, &mut rng).unwrap();
            let theta_b = sample_complex_gaussian(n, n, 1.0 / n as f64, &mut rng).unwrap();
            let u = mk_unitary(&mut rng);
            let v = mk_unitary(&mut rng);
            let rotated = u.mul(&theta_b).unwrap().mul(&v.adjoint()).unwrap();
            sv_plain.extend(gram_eigenvalues(&theta_a).unwrap().iter().map(|l| l.sqrt()));
            sv_rotated.extend(gram_eigenvalues(&rotated).unwrap().iter().map(|l| l.sqrt()));
        }
        let count = sv_plain.len() as f64;
        let d = ks_statistic(sv_plain, sv_rotated);
        // c(α = 0.01) = 1.628 for the two-sample test.
        let critical = 1.628 * (2.0 / count).sqrt();
        assert!(
            d < critical,
            "n={n}: KS statistic {d} above the 1% critical value {critical}"
        );
    }
}

#[test]
fn small_system_mi_tracks_asymptotic_value() {
    // K = 10, N = 2, uncorrelated at 10 dB: the Monte Carlo mean over 20
    // draws sits within 10% of the asymptotic value.
    let eta = 10.0;
    let net = correlated_network(2, 10, 0.0).prepare().unwrap();
    let budget = PowerBudget::new(vec![1.0, 1.0]).unwrap();
    let precoders = equal_power_precoders(&net, &budget).unwrap();
    let root = RngState::new(42);
    let trials = 20;
    let mut mean = 0.0;
    for t in 0..trials {
        let mut rng = root.substream(t);
        let draw = draw_channels(&net, &mut rng).unwrap();
        let g = compose_end_to_end(&draw, &precoders).unwrap();
        mean += instantaneous_mi(&g, eta, 10).unwrap();
    }
    mean /= trials as f64;
    let alpha = equal_power_coeffs_uncorrelated(&budget, net.hop_gains()).unwrap();
    let asymptotic = multi_hop_uncorrelated(
        eta,
        &[1.0, 1.0, 1.0],
        net.hop_gains(),
        &alpha,
        &SolverConfig::default(),
    )
    .unwrap()
    .mi;
    assert!(
        (mean - asymptotic).abs() / asymptotic < 0.10,
        "mc mean {mean} vs asymptotic {asymptotic}"
    );
}
