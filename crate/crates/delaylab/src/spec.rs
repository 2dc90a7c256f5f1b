//! Scenario-file schema, loading, and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use delaylab_core::appdelay::NodeSpec;
use delaylab_core::{MacParams, Regime, Scenario};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Parse errors carry the JSON path of the offending field.
    #[error("cannot parse {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("invalid experiment: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] delaylab_core::Error),
}

/// Which engines an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Dcf,
    RpsOracle,
}

/// Replication and budget controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunControls {
    pub replications: usize,
    /// Base seed; replication k uses seed + k. Falls back to the
    /// DELAYLAB_SEED environment variable, then to 1.
    pub seed: Option<u64>,
    pub horizon_s: Option<f64>,
    pub max_packets: Option<u64>,
    pub warmup_frac: f64,
}

impl Default for RunControls {
    fn default() -> Self {
        RunControls {
            replications: 30,
            seed: None,
            horizon_s: Some(300.0),
            max_packets: None,
            warmup_frac: 0.1,
        }
    }
}

fn default_engines() -> Vec<Engine> {
    vec![Engine::Analytic, Engine::Dcf, Engine::RpsOracle]
}

/// A fully described experiment: scenario, MAC constants, run controls,
/// engines, and optionally several arrival-rate rows.
///
/// Scenario fields live at the top level of the file (no nesting), which
/// also keeps parse diagnostics pointed at the exact field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub nodes: Vec<NodeSpec>,
    pub mtu_bytes: u32,
    pub capacity_pkts_per_s: f64,
    pub regime: Regime,
    #[serde(default)]
    pub mac: MacParams,
    #[serde(default)]
    pub run: RunControls,
    #[serde(default = "default_engines")]
    pub engines: Vec<Engine>,
    /// Extra arrival-rate vectors, one table row each. When absent the
    /// table has a single row using the nodes' own rates.
    #[serde(default)]
    pub rows: Option<Vec<Vec<f64>>>,
}

impl ExperimentSpec {
    /// The base scenario described by the file.
    pub fn scenario(&self) -> Scenario {
        Scenario {
            nodes: self.nodes.clone(),
            mtu_bytes: self.mtu_bytes,
            capacity_pkts_per_s: self.capacity_pkts_per_s,
            regime: self.regime,
        }
    }

    /// Semantic validation with field-level diagnostics. Every row must
    /// describe a stable, regime-consistent scenario.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.engines.is_empty() {
            return Err(HarnessError::Validation(
                "engines: select at least one of analytic, dcf, rps_oracle".into(),
            ));
        }
        if self.run.replications == 0 {
            return Err(HarnessError::Validation(
                "run.replications: must be at least 1".into(),
            ));
        }
        if self.run.horizon_s.is_none() && self.run.max_packets.is_none() {
            return Err(HarnessError::Validation(
                "run: needs horizon_s or max_packets".into(),
            ));
        }
        self.mac.validate()?;
        let scenario = self.scenario();
        scenario
            .validate()
            .map_err(|e| annotate_scenario_error(e, None))?;
        if let Some(rows) = &self.rows {
            for (r, lambdas) in rows.iter().enumerate() {
                if lambdas.len() != self.nodes.len() {
                    return Err(HarnessError::Validation(format!(
                        "rows[{r}]: expected {} rates, got {}",
                        self.nodes.len(),
                        lambdas.len()
                    )));
                }
                let row = scenario.with_lambdas(lambdas).map_err(HarnessError::Core)?;
                row.validate()
                    .map_err(|e| annotate_scenario_error(e, Some(r)))?;
            }
        }
        Ok(())
    }

    /// The arrival-rate rows this experiment covers.
    pub fn lambda_rows(&self) -> Vec<Vec<f64>> {
        match &self.rows {
            Some(rows) => rows.clone(),
            None => vec![self.nodes.iter().map(|n| n.lambda).collect()],
        }
    }

    pub fn seed(&self) -> u64 {
        self.run
            .seed
            .or_else(|| {
                std::env::var("DELAYLAB_SEED")
                    .ok()
                    .and_then(|s| s.parse().ok())
            })
            .unwrap_or(1)
    }
}

fn annotate_scenario_error(e: delaylab_core::Error, row: Option<usize>) -> HarnessError {
    let prefix = match row {
        Some(r) => format!("rows[{r}]: "),
        None => String::new(),
    };
    HarnessError::Validation(format!("{prefix}{e}"))
}

/// Loads and validates a scenario file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<ExperimentSpec, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let spec: ExperimentSpec =
        serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Parse {
            path: path.display().to_string(),
            detail: format!("{} (at {})", e.inner(), e.path()),
        })?;
    spec.validate()?;
    Ok(spec)
}
