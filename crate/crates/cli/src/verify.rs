//! Numerical verification of the transform identities and the power
//! accounting, at configurable sizes. Every check reports its measured
//! deviation against a fixed tolerance; any failure drives a nonzero exit.

use std::time::Instant;

use relaymi_core::asymptotic::SpectralInput;
use relaymi_core::channel::{CorrelationSpec, HopSpec, NetworkSpec};
use relaymi_core::freeprob::{
    chain_s_transform, product_pair_spectra, s_transform, stieltjes, support_growth,
    swap_relation_deviation, szego_functional, upsilon, upsilon_inverse, wishart_s_transform,
    EmpiricalSpectrum,
};
use relaymi_core::matrix::{exponential_toeplitz, sample_complex_gaussian};
use relaymi_core::precoding::{
    equal_power_precoders, monte_carlo_transmit_power, transmit_power_audit, PowerBudget,
};
use relaymi_core::{Complex64, RngState};

use crate::config::VerifyConfig;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub wall_ms: u64,
    pub note: String,
}

fn run_check(
    name: &'static str,
    tolerance: f64,
    body: impl FnOnce() -> Result<(f64, String), CliError>,
) -> Result<CheckResult, CliError> {
    let start = Instant::now();
    let (deviation, note) = body()?;
    Ok(CheckResult {
        name,
        deviation,
        tolerance,
        passed: deviation <= tolerance,
        wall_ms: start.elapsed().as_millis() as u64,
        note,
    })
}

fn core_err(e: relaymi_core::Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn verification_network(k: usize, hops: usize, r: f64) -> NetworkSpec {
    NetworkSpec {
        hops: (0..hops)
            .map(|_| HopSpec {
                k_in: k,
                k_out: k,
                distance: 1.0,
                transmit: if r == 0.0 {
                    CorrelationSpec::Identity
                } else {
                    CorrelationSpec::Exponential(r)
                },
                receive: if r == 0.0 {
                    CorrelationSpec::Identity
                } else {
                    CorrelationSpec::Exponential(r)
                },
            })
            .collect(),
        pathloss_exponent: 0.0,
        powers: vec![1.0; hops],
        eta: 1.0,
    }
}

/// Large-Wishart S-transform against the closed form `1/(1+z)`.
fn check_wishart(cfg: &VerifyConfig, rng: &RngState) -> Result<CheckResult, CliError> {
    let n = cfg.wishart_size;
    run_check("wishart-s-transform", 0.02, || {
        let mut sub = rng.substream(101);
        let theta =
            sample_complex_gaussian(n, n, 1.0 / n as f64, &mut sub).map_err(core_err)?;
        let spectrum = EmpiricalSpectrum::from_hermitian(&theta.gram_left()).map_err(core_err)?;
        let mut worst = 0.0f64;
        for k in 1..=9 {
            let z = -0.1 * k as f64;
            let got = s_transform(&spectrum, z).map_err(core_err)?;
            let want = wishart_s_transform(1.0, 1.0, z);
            worst = worst.max((got - want).abs() / want.abs());
        }
        Ok((worst, format!("n={n}, z in [-0.9,-0.1]")))
    })
}

/// Rectangular swap relation `S_AB(z) = (z+1)/(z+ξ) S_BA(z/ξ)`; exact at
/// finite size, so only transform plumbing can break it. `xi_scale`
/// deliberately corrupts the aspect ratio for fault injection.
fn check_swap_relation(cfg: &VerifyConfig, rng: &RngState) -> Result<CheckResult, CliError> {
    let (n, p) = (cfg.swap_rows, cfg.swap_cols);
    let xi_scale = cfg.xi_scale;
    run_check("rectangular-swap-relation", 1e-8, || {
        let mut sub = rng.substream(202);
        let a = sample_complex_gaussian(n, p, 1.0, &mut sub).map_err(core_err)?;
        let (spec_ab, spec_ba) = product_pair_spectra(&a, &a.adjoint()).map_err(core_err)?;
        let nonzero = 1.0 - spec_ab.zero_mass();
        let grid: Vec<f64> = (1..=9).map(|k| -nonzero * k as f64 / 10.0).collect();
        let xi = p as f64 / n as f64 * xi_scale;
        let dev = swap_relation_deviation(&spec_ab, &spec_ba, xi, &grid).map_err(core_err)?;
        Ok((dev, format!("{n}x{p}, xi scale {xi_scale}")))
    })
}

/// Composed-channel S-transform against the per-level product prediction.
fn check_chain(cfg: &VerifyConfig, rng: &RngState) -> Result<CheckResult, CliError> {
    let k = cfg.chain_antennas;
    let hops = cfg.chain_hops;
    let r = cfg.correlation;
    run_check("chain-s-transform", 0.05, || {
        let net = verification_network(k, hops, r).prepare().map_err(core_err)?;
        let budget = PowerBudget::new(vec![1.0; hops]).map_err(core_err)?;
        let precoders = equal_power_precoders(&net, &budget).map_err(core_err)?;
        let ms = relaymi_core::channel::build_m_matrices(&net, &precoders).map_err(core_err)?;
        let level_spectra: Vec<EmpiricalSpectrum> = ms
            .iter()
            .map(|m| EmpiricalSpectrum::from_hermitian(&m.gram_right()))
            .collect::<Result<_, _>>()
            .map_err(core_err)?;
        let mut sub = rng.substream(303);
        let draw = relaymi_core::channel::draw_channels(&net, &mut sub).map_err(core_err)?;
        let g = relaymi_core::channel::compose_end_to_end(&draw, &precoders).map_err(core_err)?;
        let sampled = EmpiricalSpectrum::from_hermitian(&g.gram_left()).map_err(core_err)?;
        let rho = vec![1.0; hops + 1];
        let gains = vec![1.0; hops];
        let mut worst = 0.0f64;
        for i in 0..7 {
            let z = -0.8 + 0.1 * i as f64;
            let empirical = s_transform(&sampled, z).map_err(core_err)?;
            let predicted =
                chain_s_transform(&level_spectra, &rho, &gains, z).map_err(core_err)?;
            worst = worst.max((empirical - predicted).abs() / predicted.abs());
        }
        Ok((worst, format!("N={hops}, k={k}, r={r}")))
    })
}

/// Composed-channel Υ-transform against the per-level inverse transforms:
/// `s Υ_G^N(s) = Π_i (ρ_i/a_{i+1}) Υ_i^{-1}(Υ_G(s)/ρ_i)`.
fn check_upsilon_relation(cfg: &VerifyConfig, rng: &RngState) -> Result<CheckResult, CliError> {
    let k = cfg.chain_antennas;
    let hops = cfg.chain_hops;
    let r = cfg.correlation;
    run_check("upsilon-chain-relation", 0.05, || {
        let net = verification_network(k, hops, r).prepare().map_err(core_err)?;
        let budget = PowerBudget::new(vec![1.0; hops]).map_err(core_err)?;
        let precoders = equal_power_precoders(&net, &budget).map_err(core_err)?;
        let ms = relaymi_core::channel::build_m_matrices(&net, &precoders).map_err(core_err)?;
        let level_spectra: Vec<EmpiricalSpectrum> = ms
            .iter()
            .map(|m| EmpiricalSpectrum::from_hermitian(&m.gram_right()))
            .collect::<Result<_, _>>()
            .map_err(core_err)?;
        let mut sub = rng.substream(606);
        let draw = relaymi_core::channel::draw_channels(&net, &mut sub).map_err(core_err)?;
        let g = relaymi_core::channel::compose_end_to_end(&draw, &precoders).map_err(core_err)?;
        let sampled = EmpiricalSpectrum::from_hermitian(&g.gram_left()).map_err(core_err)?;
        let mut worst = 0.0f64;
        for &s in &[-0.5f64, -2.0, -8.0] {
            let t = upsilon(&sampled, Complex64::new(s, 0.0)).map_err(core_err)?.re;
            let lhs = s * t.powi(hops as i32);
            let mut rhs = 1.0;
            for spectrum in &level_spectra {
                rhs *= upsilon_inverse(spectrum, t).map_err(core_err)?;
            }
            worst = worst.max((lhs - rhs).abs() / rhs.abs());
        }
        Ok((worst, format!("N={hops}, k={k}, s in [-8,-0.5]")))
    })
}

/// Toeplitz eigenvalue averages must approach the symbol integral.
fn check_szego_trend(cfg: &VerifyConfig) -> Result<CheckResult, CliError> {
    let r = cfg.correlation;
    let sizes = cfg.szego_sizes.clone();
    run_check("szego-log-average-trend", 0.0, || {
        let target = szego_functional(r, |x| x.ln(), 8192).map_err(core_err)?;
        let mut errors = Vec::new();
        for &n in &sizes {
            let spectrum = EmpiricalSpectrum::from_hermitian(
                &exponential_toeplitz(n, r).map_err(core_err)?,
            )
            .map_err(core_err)?;
            let avg = spectrum.values().iter().map(|l| l.ln()).sum::<f64>() / n as f64;
            errors.push((avg - target).abs());
        }
        let monotone = errors.windows(2).all(|w| w[1] < w[0]);
        // Deviation 0 when the trend holds, 1 when it does not.
        Ok((
            if monotone { 0.0 } else { 1.0 },
            format!("errors {errors:?} over n={sizes:?}"),
        ))
    })
}

/// Monte Carlo transmit powers against the closed-form audit, and the
/// audit against the budgets under equal-power coefficients.
fn check_power_identity(cfg: &VerifyConfig, rng: &RngState) -> Result<CheckResult, CliError> {
    let k = cfg.power_antennas;
    let trials = cfg.power_trials;
    let r = cfg.correlation;
    run_check("transmit-power-identity", 1.0, || {
        let net = verification_network(k, 2, r).prepare().map_err(core_err)?;
        let budget = PowerBudget::new(vec![1.0, 1.0]).map_err(core_err)?;
        let precoders = equal_power_precoders(&net, &budget).map_err(core_err)?;
        let audit = transmit_power_audit(&net, &precoders).map_err(core_err)?;
        // Budget equality: audit must be k_i P_i to 1e-9 relative.
        let mut worst_budget = 0.0f64;
        for (i, a) in audit.iter().enumerate() {
            let want = k as f64 * net.spec().powers[i];
            worst_budget = worst_budget.max((a - want).abs() / want);
        }
        if worst_budget > 1e-9 {
            return Ok((
                f64::INFINITY,
                format!("closed-form audit misses budget by {worst_budget:.3e}"),
            ));
        }
        let sub = rng.substream(404);
        let mc = monte_carlo_transmit_power(&net, &precoders, trials, &sub).map_err(core_err)?;
        // Deviation in standard-error units; tolerance 3σ expressed as 1.0
        // after dividing by 3. A vanishing standard error means the level
        // is deterministic (the source power has no channel in it), where
        // only accumulation rounding remains.
        let mut worst_sigma = 0.0f64;
        for ((mean, stderr), closed) in mc.iter().zip(&audit) {
            if *stderr > 1e-9 * mean.abs() {
                worst_sigma = worst_sigma.max((mean - closed).abs() / (3.0 * stderr));
            } else {
                worst_sigma = worst_sigma.max((mean - closed).abs() / closed.abs() / 1e-9);
            }
        }
        Ok((
            worst_sigma,
            format!("k={k}, {trials} trials; worst |mc-closed| in 3σ units"),
        ))
    })
}

/// `Υ(s) = -1 - G(1/s)/s` as exact finite-sum bookkeeping.
fn check_upsilon_identity(rng: &RngState) -> Result<CheckResult, CliError> {
    run_check("upsilon-stieltjes-identity", 1e-12, || {
        let mut sub = rng.substream(505);
        let m = sample_complex_gaussian(64, 64, 1.0 / 64.0, &mut sub).map_err(core_err)?;
        let spectrum = EmpiricalSpectrum::from_hermitian(&m.gram_left()).map_err(core_err)?;
        let mut worst = 0.0f64;
        for &s in &[-0.25, -1.0, -3.0, -9.0] {
            let u = upsilon(&spectrum, Complex64::new(s, 0.0))
                .map_err(core_err)?
                .re;
            let g = stieltjes(&spectrum, Complex64::new(1.0 / s, 0.0))
                .map_err(core_err)?
                .re;
            worst = worst.max((u + 1.0 + g / s).abs());
        }
        Ok((worst, "n=64 Wishart, s in [-9,-0.25]".into()))
    })
}

/// Informational: largest eigenvalue across sizes stays bounded by the
/// symbol supremum, the empirical signature of compact support.
fn check_support_growth(cfg: &VerifyConfig) -> Result<CheckResult, CliError> {
    let r = cfg.correlation;
    run_check("toeplitz-support-growth", f64::INFINITY, || {
        let growth = support_growth(&[64, 256, 512], |n| {
            EmpiricalSpectrum::from_hermitian(&exponential_toeplitz(n, r)?)
        })
        .map_err(core_err)?;
        let bound = (1.0 + r) / (1.0 - r);
        let worst = growth
            .iter()
            .map(|(_, max)| max / bound)
            .fold(0.0f64, f64::max);
        Ok((worst, format!("max eigenvalue / symbol sup: {growth:?}")))
    })
}

/// Quadrature-input spot check: the separable-correlation spectral input
/// integrates the same symbol the scenario paths use.
fn check_symbol_input(cfg: &VerifyConfig) -> Result<CheckResult, CliError> {
    let r = cfg.correlation;
    run_check("symbol-input-mean", 1e-9, || {
        let input = SpectralInput::ToeplitzProduct {
            r_receive: 0.0,
            r_transmit: r,
            scale: 1.0,
        };
        // Mean of the symbol is exactly 1 (unit diagonal Toeplitz family).
        let sol = relaymi_core::asymptotic::solve_fixed_point(
            &[input, SpectralInput::PointMass(1.0)],
            0.0,
            &[1.0, 1.0],
            &[1.0],
            &relaymi_core::asymptotic::SolverConfig::default(),
        )
        .map_err(core_err)?;
        // At η = 0 with E[Λ0] = E[Λ1] = 1 the fixed point is h = (1, 1).
        let dev = (sol.h[0] - 1.0).abs().max((sol.h[1] - 1.0).abs());
        Ok((dev, format!("r={r}, eta=0 fixed point")))
    })
}

pub fn run_all(cfg: &VerifyConfig, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let rng = RngState::new(seed);
    Ok(vec![
        check_upsilon_identity(&rng)?,
        check_swap_relation(cfg, &rng)?,
        check_wishart(cfg, &rng)?,
        check_chain(cfg, &rng)?,
        check_upsilon_relation(cfg, &rng)?,
        check_szego_trend(cfg)?,
        check_power_identity(cfg, &rng)?,
        check_symbol_input(cfg)?,
        check_support_growth(cfg)?,
    ])
}

pub fn render_report(results: &[CheckResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>12} {:>10} {:>6} {:>8}  note\n",
        "check", "deviation", "tolerance", "pass", "wall_ms"
    ));
    for r in results {
        out.push_str(&format!(
            "{:<28} {:>12.3e} {:>10.1e} {:>6} {:>8}  {}\n",
            r.name,
            r.deviation,
            r.tolerance,
            if r.passed { "ok" } else { "FAIL" },
            r.wall_ms,
            r.note
        ));
    }
    let failures = results.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} checks, {} failed\n",
        results.len(),
        failures
    ));
    out
}

pub fn render_records(results: &[CheckResult], jsonl: bool) -> String {
    let mut out = String::new();
    if jsonl {
        for r in results {
            out.push_str(
                &serde_json::json!({
                    "check": r.name,
                    "deviation": r.deviation,
                    "tolerance": r.tolerance,
                    "passed": r.passed,
                    "wall_ms": r.wall_ms,
                    "note": r.note,
                })
                .to_string(),
            );
            out.push('\n');
        }
    } else {
        out.push_str("check,deviation,tolerance,passed,wall_ms,note\n");
        for r in results {
            out.push_str(&format!(
                "{},{},{},{},{},\"{}\"\n",
                r.name, r.deviation, r.tolerance, r.passed, r.wall_ms, r.note
            ));
        }
    }
    out
}
