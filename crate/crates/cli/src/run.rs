//! Sweep execution: asymptotic curves, Monte Carlo validation, and
//! antenna-convergence studies.

use std::time::Instant;

use rayon::prelude::*;

use relaymi_core::asymptotic::{
    closed_form_single_hop_iid, multi_hop_exponential, multi_hop_uncorrelated,
    one_sided_exponential, single_hop_correlated, solve_fixed_point, SolverConfig, SpectralInput,
};
use relaymi_core::channel::{
    build_m_matrices, monte_carlo_gram_spectra, mi_from_gram_eigenvalues, CorrelationSpec,
    HopSpec, NetworkSpec, PreparedNetwork,
};
use relaymi_core::freeprob::EmpiricalSpectrum;
use relaymi_core::matrix::hermitian_eigenvalues;
use relaymi_core::precoding::{
    equal_power_coeffs_uncorrelated, equal_power_precoders, optimal_precoders, PowerBudget,
    PrecoderSet,
};
use relaymi_core::{Error as CoreError, RngState};

use crate::config::{snr_db_to_eta, RunConfig, Scenario, SweepVariable};
use crate::records::SweepRecord;
use crate::CliError;

fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::SolverDidNotConverge { .. } => CliError::Solver(e.to_string()),
        other => CliError::Internal(other.to_string()),
    }
}

const EXP_MI_QUADRATURE: usize = 1024;

#[derive(Debug, Clone, Copy)]
pub struct AsymptoticPoint {
    pub mi: f64,
    pub residual: f64,
    pub iterations: usize,
}

pub struct ScenarioEngine<'a> {
    cfg: &'a RunConfig,
    solver: SolverConfig,
}

impl<'a> ScenarioEngine<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Self {
            cfg,
            solver: SolverConfig::default(),
        }
    }

    fn r_transmit(&self) -> Vec<f64> {
        self.cfg
            .network
            .r_transmit
            .clone()
            .unwrap_or_else(|| vec![0.0; self.cfg.num_hops()])
    }

    fn r_receive(&self) -> Vec<f64> {
        self.cfg
            .network
            .r_receive
            .clone()
            .unwrap_or_else(|| vec![0.0; self.cfg.num_hops()])
    }

    fn correlation(r: f64) -> CorrelationSpec {
        if r == 0.0 {
            CorrelationSpec::Identity
        } else {
            CorrelationSpec::Exponential(r)
        }
    }

    /// Network at the given antenna counts, with `η` from the base SNR.
    pub fn network_spec(&self, antennas: &[usize]) -> NetworkSpec {
        let net = &self.cfg.network;
        let r_tx = self.r_transmit();
        let r_rx = self.r_receive();
        NetworkSpec {
            hops: (0..self.cfg.num_hops())
                .map(|i| HopSpec {
                    k_in: antennas[i],
                    k_out: antennas[i + 1],
                    distance: net.hop_distances[i],
                    transmit: Self::correlation(r_tx[i]),
                    receive: Self::correlation(r_rx[i]),
                })
                .collect(),
            pathloss_exponent: net.pathloss_exponent,
            powers: net.powers.clone(),
            eta: snr_db_to_eta(net.snr_db),
        }
    }

    fn gains(&self) -> Result<Vec<f64>, CliError> {
        self.cfg
            .network
            .hop_distances
            .iter()
            .map(|d| {
                relaymi_core::channel::pathloss(*d, self.cfg.network.pathloss_exponent)
                    .map_err(core_err)
            })
            .collect()
    }

    fn rho(antennas: &[usize]) -> Vec<f64> {
        let k_last = *antennas.last().unwrap() as f64;
        antennas.iter().map(|&k| k as f64 / k_last).collect()
    }

    /// Source-level power allocation for the correlated single-hop
    /// scenario: the caller's vector, or equal power by default.
    fn source_allocation(&self, k0: usize) -> Vec<f64> {
        self.cfg
            .network
            .power_allocation
            .clone()
            .unwrap_or_else(|| vec![self.cfg.network.powers[0]; k0])
    }

    /// The deterministic asymptotic value at `η` for a network with the
    /// given antenna counts (which only enter through the ratios, except
    /// for the finite-spectrum scenarios).
    pub fn asymptotic_at(&self, eta: f64, antennas: &[usize]) -> Result<AsymptoticPoint, CliError> {
        let gains = self.gains()?;
        let rho = Self::rho(antennas);
        let budget = PowerBudget::new(self.cfg.network.powers.clone()).map_err(core_err)?;
        let alpha = equal_power_coeffs_uncorrelated(&budget, &gains).map_err(core_err)?;
        match self.cfg.scenario {
            Scenario::SingleHopIid => {
                let mi = closed_form_single_hop_iid(eta, self.cfg.network.powers[0])
                    .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi,
                    residual: 0.0,
                    iterations: 0,
                })
            }
            Scenario::MultiHopUncorrelated => {
                let sol = multi_hop_uncorrelated(eta, &rho, &gains, &alpha, &self.solver)
                    .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi: sol.mi,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
            Scenario::OneSidedExponential => {
                let sol = one_sided_exponential(
                    eta,
                    &rho,
                    &gains,
                    &alpha,
                    &self.r_transmit(),
                    &self.solver,
                )
                .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi: sol.mi,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
            Scenario::MultiHopExponential => {
                let sol = multi_hop_exponential(
                    eta,
                    &rho,
                    &gains,
                    &alpha,
                    &self.r_receive(),
                    &self.r_transmit(),
                    EXP_MI_QUADRATURE,
                    &self.solver,
                )
                .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi: sol.mi,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
            Scenario::SingleHopCorrelated => {
                let net = self.network_spec(antennas).prepare().map_err(core_err)?;
                let lambda_t = hermitian_eigenvalues(net.transmit_correlation(1))
                    .map_err(core_err)?;
                let allocation = self.source_allocation(antennas[0]);
                let lambda0: Vec<f64> = lambda_t
                    .iter()
                    .zip(&allocation)
                    .map(|(l, q)| l * q)
                    .collect();
                let lambda1 = hermitian_eigenvalues(net.receive_correlation(1))
                    .map_err(core_err)?;
                let sol = single_hop_correlated(
                    eta,
                    rho[0],
                    &SpectralInput::Empirical(EmpiricalSpectrum::new(lambda0).map_err(core_err)?),
                    &SpectralInput::Empirical(EmpiricalSpectrum::new(lambda1).map_err(core_err)?),
                    &self.solver,
                )
                .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi: sol.mi,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
            Scenario::Generic => {
                let net = self.network_spec(antennas).prepare().map_err(core_err)?;
                let precoders = self.mc_precoders(&net)?;
                let ms = build_m_matrices(&net, &precoders).map_err(core_err)?;
                let inputs: Vec<SpectralInput> = ms
                    .iter()
                    .map(|m| {
                        EmpiricalSpectrum::from_hermitian(&m.gram_right())
                            .map(SpectralInput::Empirical)
                    })
                    .collect::<Result<_, _>>()
                    .map_err(core_err)?;
                let sol = solve_fixed_point(&inputs, eta, &rho, &gains, &self.solver)
                    .map_err(core_err)?;
                Ok(AsymptoticPoint {
                    mi: sol.mi,
                    residual: sol.residual,
                    iterations: sol.iterations,
                })
            }
        }
    }

    /// Precoders used by the finite-size simulation: equal power over the
    /// aligned directions, except for the correlated single-hop scenario
    /// where the caller's allocation applies.
    pub fn mc_precoders(&self, net: &PreparedNetwork) -> Result<PrecoderSet, CliError> {
        match self.cfg.scenario {
            Scenario::SingleHopCorrelated => {
                let k0 = net.antennas()[0];
                let sv: Vec<f64> = self
                    .source_allocation(k0)
                    .iter()
                    .map(|q| q.sqrt())
                    .collect();
                optimal_precoders(net, &[sv]).map_err(core_err)
            }
            _ => {
                let budget = PowerBudget::new(self.cfg.network.powers.clone()).map_err(core_err)?;
                equal_power_precoders(net, &budget).map_err(core_err)
            }
        }
    }
}

fn summarize(samples: &[f64]) -> (f64, f64, f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let stderr = if samples.len() > 1 {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, stderr, min, max)
}

/// `asymptotic`: one deterministic record per SNR grid point.
pub fn cmd_asymptotic(cfg: &RunConfig) -> Result<Vec<SweepRecord>, CliError> {
    if cfg.sweep.variable != SweepVariable::SnrDb {
        return Err(CliError::Config(
            "sweep.variable: asymptotic sweeps run over snr_db".into(),
        ));
    }
    let engine = ScenarioEngine::new(cfg);
    let antennas = cfg.network.antennas.clone();
    cfg.sweep
        .grid
        .par_iter()
        .map(|&db| {
            let start = Instant::now();
            let point = engine.asymptotic_at(snr_db_to_eta(db), &antennas)?;
            Ok(SweepRecord {
                sweep_value: db,
                mi_asymptotic: point.mi,
                mi_mc_mean: None,
                mi_mc_stderr: None,
                mi_mc_min: None,
                mi_mc_max: None,
                residual: point.residual,
                iterations: point.iterations,
                wall_ms: start.elapsed().as_millis() as u64,
            })
        })
        .collect()
}

/// Per-(grid point, trial) instantaneous mutual information rows, for the
/// optional trial dump.
pub struct TrialDump {
    pub rows: Vec<(f64, usize, f64)>,
}

/// `simulate`: asymptotic value plus seeded Monte Carlo statistics per SNR
/// grid point. Channel draws are reused across the grid — the realization
/// does not depend on `η`, so each trial contributes one smooth curve, and
/// each trial's Gramian spectrum is computed once.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(Vec<SweepRecord>, TrialDump), CliError> {
    if cfg.sweep.variable != SweepVariable::SnrDb {
        return Err(CliError::Config(
            "sweep.variable: simulate sweeps run over snr_db".into(),
        ));
    }
    let mc = cfg
        .monte_carlo
        .as_ref()
        .ok_or_else(|| CliError::Config("monte_carlo: required for simulate".into()))?;
    let engine = ScenarioEngine::new(cfg);
    let antennas = cfg.network.antennas.clone();
    let k0 = antennas[0];

    let net = engine.network_spec(&antennas).prepare().map_err(core_err)?;
    let precoders = engine.mc_precoders(&net)?;
    let rng = RngState::new(mc.seed);
    let spectra = monte_carlo_gram_spectra(&net, &precoders, mc.trials, &rng).map_err(core_err)?;

    let records: Vec<SweepRecord> = cfg
        .sweep
        .grid
        .par_iter()
        .map(|&db| {
            let start = Instant::now();
            let eta = snr_db_to_eta(db);
            let point = engine.asymptotic_at(eta, &antennas)?;
            let samples: Vec<f64> = spectra
                .iter()
                .map(|s| mi_from_gram_eigenvalues(s, eta, k0))
                .collect();
            let (mean, stderr, min, max) = summarize(&samples);
            Ok(SweepRecord {
                sweep_value: db,
                mi_asymptotic: point.mi,
                mi_mc_mean: Some(mean),
                mi_mc_stderr: Some(stderr),
                mi_mc_min: Some(min),
                mi_mc_max: Some(max),
                residual: point.residual,
                iterations: point.iterations,
                wall_ms: start.elapsed().as_millis() as u64,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    if mc.dump_trials {
        for &db in &cfg.sweep.grid {
            let eta = snr_db_to_eta(db);
            for (t, s) in spectra.iter().enumerate() {
                rows.push((db, t, mi_from_gram_eigenvalues(s, eta, k0)));
            }
        }
    }
    Ok((records, TrialDump { rows }))
}

/// `convergence`: antenna sweep at the base SNR. Every level is set to the
/// grid's antenna count; scatter statistics across trials show the
/// concentration of the instantaneous mutual information as the system
/// grows.
pub fn cmd_convergence(cfg: &RunConfig) -> Result<Vec<SweepRecord>, CliError> {
    if cfg.sweep.variable != SweepVariable::Antennas {
        return Err(CliError::Config(
            "sweep.variable: convergence sweeps run over antennas".into(),
        ));
    }
    let mc = cfg
        .monte_carlo
        .as_ref()
        .ok_or_else(|| CliError::Config("monte_carlo: required for convergence".into()))?;
    let engine = ScenarioEngine::new(cfg);
    let eta = snr_db_to_eta(cfg.network.snr_db);
    let levels = cfg.network.antennas.len();
    let root = RngState::new(mc.seed);

    cfg.sweep
        .grid
        .par_iter()
        .enumerate()
        .map(|(k_idx, &grid_value)| {
            let start = Instant::now();
            let k = grid_value as usize;
            let antennas = vec![k; levels];
            let point = engine.asymptotic_at(eta, &antennas)?;
            let net = engine.network_spec(&antennas).prepare().map_err(core_err)?;
            let precoders = engine.mc_precoders(&net)?;
            // Distinct substream block per grid point keeps trials
            // independent across K and reproducible in any order.
            let block = root.substream(1_000_000 + k_idx as u64);
            let spectra =
                monte_carlo_gram_spectra(&net, &precoders, mc.trials, &block).map_err(core_err)?;
            let samples: Vec<f64> = spectra
                .iter()
                .map(|s| mi_from_gram_eigenvalues(s, eta, k))
                .collect();
            let (mean, stderr, min, max) = summarize(&samples);
            Ok(SweepRecord {
                sweep_value: grid_value,
                mi_asymptotic: point.mi,
                mi_mc_mean: Some(mean),
                mi_mc_stderr: Some(stderr),
                mi_mc_min: Some(min),
                mi_mc_max: Some(max),
                residual: point.residual,
                iterations: point.iterations,
                wall_ms: start.elapsed().as_millis() as u64,
            })
        })
        .collect()
}
