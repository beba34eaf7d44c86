//! TOML experiment configuration for adaptive-estimation campaigns.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fluxmet_core::estimation::{AdaptiveConfig, Grid, Strategy, Task};

use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "FLUXMET_SEED";

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub resolution: Option<f64>,
}

/// Every field is optional; missing ones take the task's defaults.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AdaptFile {
    pub true_value: Option<f64>,
    pub initial_guess: Option<f64>,
    pub m: Option<usize>,
    pub rounds: Option<usize>,
    pub t: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub repetitions: Option<usize>,
    pub accumulate: Option<bool>,
    pub strategies: Option<Vec<String>>,
    pub grid: Option<GridFile>,
}

impl AdaptFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }
}

pub fn parse_strategy(name: &str) -> Result<Strategy> {
    match name {
        "qec" | "qec_corrected" => Ok(Strategy::QecCorrected),
        "unitary" | "unitary_controlled" => Ok(Strategy::UnitaryControlled),
        other => Err(CliError::Input(format!(
            "strategies: unknown strategy '{other}' (expected qec_corrected or unitary_controlled)"
        ))),
    }
}

pub fn parse_task(name: &str) -> Result<Task> {
    match name {
        "theta" => Ok(Task::Theta),
        "omega" => Ok(Task::Omega),
        other => Err(CliError::Input(format!(
            "unknown task '{other}' (expected theta or omega)"
        ))),
    }
}

/// Seed precedence: command line, config file, `FLUXMET_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub config: AdaptiveConfig,
    pub repetitions: usize,
    pub strategies: Vec<Strategy>,
}

impl Campaign {
    pub fn resolve(
        task: Task,
        file: &AdaptFile,
        seed: Option<u64>,
        reps: Option<usize>,
        strategy: Option<&str>,
    ) -> Result<Self> {
        let base = match task {
            Task::Theta => AdaptiveConfig::theta_default(),
            Task::Omega => AdaptiveConfig::omega_default(),
        };
        let g = file.grid.clone().unwrap_or_default();
        let config = AdaptiveConfig {
            true_value: file.true_value.unwrap_or(base.true_value),
            initial_guess: file.initial_guess.unwrap_or(base.initial_guess),
            m: file.m.unwrap_or(base.m),
            rounds: file.rounds.unwrap_or(base.rounds),
            t: file.t.unwrap_or(base.t),
            b: file.b.unwrap_or(base.b),
            gamma: file.gamma.unwrap_or(base.gamma),
            grid: Grid {
                lo: g.lo.unwrap_or(base.grid.lo),
                hi: g.hi.unwrap_or(base.grid.hi),
                resolution: g.resolution.unwrap_or(base.grid.resolution),
            },
            seed: resolve_seed(seed, file.seed)?,
            accumulate: file.accumulate.unwrap_or(base.accumulate),
            ..base
        };
        config.validate()?;
        let repetitions = reps.or(file.repetitions).unwrap_or(1000);
        if repetitions < 1 {
            return Err(CliError::Input("repetitions: must be at least 1".into()));
        }
        let strategies = match strategy {
            Some("both") => vec![Strategy::QecCorrected, Strategy::UnitaryControlled],
            Some(s) => vec![parse_strategy(s)?],
            None => match &file.strategies {
                Some(list) if list.is_empty() => {
                    return Err(CliError::Input("strategies: empty list".into()))
                }
                Some(list) => list
                    .iter()
                    .map(|s| parse_strategy(s))
                    .collect::<Result<_>>()?,
                None => vec![Strategy::QecCorrected, Strategy::UnitaryControlled],
            },
        };
        Ok(Self {
            config,
            repetitions,
            strategies,
        })
    }

    /// Short SHA-256 digest of the resolved configuration.
    pub fn hash(&self) -> String {
        config_hash(&format!(
            "{:?}|{}|{:?}",
            self.config, self.repetitions, self.strategies
        ))
    }
}

pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
