//! Run configuration: a single TOML file with strict schema checking.
//! Unknown keys are errors, not warnings — a typo in a scenario config must
//! not silently change the run.

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    SingleHopIid,
    SingleHopCorrelated,
    MultiHopUncorrelated,
    MultiHopExponential,
    OneSidedExponential,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    Antennas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Antenna counts `k_0..k_N`.
    pub antennas: Vec<usize>,
    /// Hop lengths `d_1..d_N` (dimensionless).
    pub hop_distances: Vec<f64>,
    pub pathloss_exponent: f64,
    /// Power budgets `P_0..P_{N-1}`.
    pub powers: Vec<f64>,
    /// Base SNR in dB; converted once to `η = 10^(dB/10)` at the boundary.
    /// Grid values override it in SNR sweeps.
    pub snr_db: f64,
    /// Per-hop transmit correlation parameters (exponential model).
    #[serde(default)]
    pub r_transmit: Option<Vec<f64>>,
    /// Per-hop receive correlation parameters (exponential model).
    #[serde(default)]
    pub r_receive: Option<Vec<f64>>,
    /// Eigen-direction power allocation for `single_hop_correlated`
    /// (defaults to equal power). Ordered to match decreasing correlation
    /// eigenvalues.
    #[serde(default)]
    pub power_allocation: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Also write one row per (grid point, trial) to `<output>.trials.csv`.
    #[serde(default)]
    pub dump_trials: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

fn default_format() -> OutputFormat {
    OutputFormat::Csv
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            path: None,
            format: default_format(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Sample size of the square Gaussian used for the Wishart S-transform
    /// check.
    pub wishart_size: usize,
    /// Antennas per level in the chained S-transform check.
    pub chain_antennas: usize,
    pub chain_hops: usize,
    /// Shape of the rectangular pair in the swap-relation check.
    pub swap_rows: usize,
    pub swap_cols: usize,
    /// Antennas and trials for the Monte Carlo power identity.
    pub power_antennas: usize,
    pub power_trials: usize,
    /// Exponential correlation parameter used by the checks.
    pub correlation: f64,
    /// Toeplitz sizes for the symbol-average convergence trend.
    pub szego_sizes: Vec<usize>,
    /// Fault injection: scales the aspect ratio fed to the swap-relation
    /// check. Anything but 1.0 must make that check fail.
    pub xi_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            wishart_size: 2000,
            chain_antennas: 200,
            chain_hops: 2,
            swap_rows: 4,
            swap_cols: 8,
            power_antennas: 8,
            power_trials: 10_000,
            correlation: 0.3,
            szego_sizes: vec![32, 128, 512],
            xi_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub network: NetworkConfig,
    pub sweep: SweepConfig,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn config_err(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn num_hops(&self) -> usize {
        self.network.hop_distances.len()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let net = &self.network;
        if net.antennas.len() < 2 {
            return Err(config_err(
                "network.antennas",
                "need at least k_0 and k_N (two levels)",
            ));
        }
        if net.antennas.contains(&0) {
            return Err(config_err("network.antennas", "antenna counts must be >= 1"));
        }
        let hops = net.antennas.len() - 1;
        if net.hop_distances.len() != hops {
            return Err(config_err(
                "network.hop_distances",
                format!("expected {hops} entries, got {}", net.hop_distances.len()),
            ));
        }
        if net.hop_distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(config_err("network.hop_distances", "must all be positive"));
        }
        if !(net.pathloss_exponent.is_finite() && net.pathloss_exponent >= 0.0) {
            return Err(config_err("network.pathloss_exponent", "must be >= 0"));
        }
        if net.powers.len() != hops {
            return Err(config_err(
                "network.powers",
                format!("expected {hops} entries, got {}", net.powers.len()),
            ));
        }
        if net.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(config_err("network.powers", "must all be positive"));
        }
        if !net.snr_db.is_finite() {
            return Err(config_err("network.snr_db", "must be finite"));
        }
        for (name, r) in [("r_transmit", &net.r_transmit), ("r_receive", &net.r_receive)] {
            if let Some(values) = r {
                if values.len() != hops {
                    return Err(config_err(
                        &format!("network.{name}"),
                        format!("expected {hops} entries, got {}", values.len()),
                    ));
                }
                if values.iter().any(|v| !(0.0..1.0).contains(v)) {
                    return Err(config_err(
                        &format!("network.{name}"),
                        "entries must lie in [0, 1)",
                    ));
                }
            }
        }
        if let Some(allocation) = &net.power_allocation {
            if self.scenario != Scenario::SingleHopCorrelated {
                return Err(config_err(
                    "network.power_allocation",
                    "only meaningful for scenario single_hop_correlated",
                ));
            }
            if self.sweep.variable == SweepVariable::Antennas {
                return Err(config_err(
                    "network.power_allocation",
                    "a per-antenna allocation cannot follow an antenna sweep; \
                     use the default equal allocation instead",
                ));
            }
            if allocation.len() != net.antennas[0] {
                return Err(config_err(
                    "network.power_allocation",
                    format!("expected {} entries (one per source antenna)", net.antennas[0]),
                ));
            }
            if allocation.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(config_err(
                    "network.power_allocation",
                    "entries must be non-negative",
                ));
            }
        }

        if self.sweep.grid.is_empty() {
            return Err(config_err("sweep.grid", "must not be empty"));
        }
        if self.sweep.grid.iter().any(|v| !v.is_finite()) {
            return Err(config_err("sweep.grid", "entries must be finite"));
        }
        if self.sweep.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err(
                "sweep.grid",
                "entries must be strictly increasing",
            ));
        }
        if self.sweep.variable == SweepVariable::Antennas
            && self
                .sweep
                .grid
                .iter()
                .any(|v| v.fract() != 0.0 || *v < 1.0)
            {
                return Err(config_err(
                    "sweep.grid",
                    "antenna sweeps need positive integer grid values",
                ));
            }

        if let Some(mc) = &self.monte_carlo {
            if mc.trials == 0 {
                return Err(config_err("monte_carlo.trials", "must be >= 1"));
            }
        }

        let v = &self.verify;
        if v.wishart_size < 8
            || v.chain_antennas < 8
            || v.swap_rows == 0
            || v.swap_cols == 0
            || v.power_antennas == 0
            || v.chain_hops == 0
        {
            return Err(config_err("verify", "sizes are too small to be meaningful"));
        }
        if v.power_trials < 2 {
            return Err(config_err("verify.power_trials", "must be >= 2"));
        }
        if !(0.0..1.0).contains(&v.correlation) {
            return Err(config_err("verify.correlation", "must lie in [0, 1)"));
        }
        if !(v.xi_scale.is_finite() && v.xi_scale > 0.0) {
            return Err(config_err("verify.xi_scale", "must be positive"));
        }
        if v.szego_sizes.len() < 2 {
            return Err(config_err("verify.szego_sizes", "need at least two sizes"));
        }

        // Scenario-structure compatibility.
        let r_tx_set = net
            .r_transmit
            .as_ref()
            .map(|v| v.iter().any(|r| *r > 0.0))
            .unwrap_or(false);
        let r_rx_set = net
            .r_receive
            .as_ref()
            .map(|v| v.iter().any(|r| *r > 0.0))
            .unwrap_or(false);
        match self.scenario {
            Scenario::SingleHopIid => {
                if hops != 1 {
                    return Err(config_err("scenario", "single_hop_iid needs exactly one hop"));
                }
                if r_tx_set || r_rx_set {
                    return Err(config_err(
                        "scenario",
                        "single_hop_iid is incompatible with correlation parameters",
                    ));
                }
            }
            Scenario::SingleHopCorrelated => {
                if hops != 1 {
                    return Err(config_err(
                        "scenario",
                        "single_hop_correlated needs exactly one hop",
                    ));
                }
            }
            Scenario::MultiHopUncorrelated => {
                if r_tx_set || r_rx_set {
                    return Err(config_err(
                        "scenario",
                        "multi_hop_uncorrelated is incompatible with correlation parameters",
                    ));
                }
            }
            Scenario::OneSidedExponential => {
                if r_rx_set {
                    return Err(config_err(
                        "scenario",
                        "one_sided_exponential requires r_receive to be zero",
                    ));
                }
            }
            Scenario::MultiHopExponential | Scenario::Generic => {}
        }
        Ok(())
    }

    /// Round-trips through TOML; the parse → serialize → parse composition
    /// is the identity on the parsed value.
    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn snr_db_to_eta(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
