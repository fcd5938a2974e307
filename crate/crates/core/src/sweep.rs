//! Cartesian parameter sweeps over (algorithm, E, R, TD, load) with
//! per-run seeds derived from a master seed.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{Algorithm, ConfigError, SimConfig, SizeDistribution, ValidatedConfig};
use crate::metrics::RunMetrics;
use crate::sim::{self, RunOptions, SimError};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("failed to parse sweep spec: {0}")]
    Parse(String),
    #[error("sweep spec not found: {0}")]
    NotFound(String),
    #[error("parallelism must be at least 1")]
    NoWorkers,
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

/// Sweep description: a base configuration plus the value set of each axis.
/// An empty axis makes the grid empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub base: SimConfig,
    pub algorithms: Vec<Algorithm>,
    pub epoch_ns: Vec<u64>,
    pub requests_per_node: Vec<u32>,
    pub distributions: Vec<SizeDistribution>,
    pub loads: Vec<f64>,
    /// Master seeds; each yields one run per grid point.
    pub seeds: Vec<u64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            base: SimConfig::default(),
            algorithms: Algorithm::ALL.to_vec(),
            epoch_ns: vec![120, 360, 600],
            requests_per_node: vec![2, 3, 6],
            distributions: SizeDistribution::ALL.to_vec(),
            loads: default_loads(),
            seeds: vec![1],
        }
    }
}

/// 0.1, 0.2, ..., 1.0
pub fn default_loads() -> Vec<f64> {
    (1..=10).map(|k| f64::from(k) / 10.0).collect()
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        toml::from_str(text).map_err(|e| SweepError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, SweepError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|_| SweepError::NotFound(path.display().to_string()))?;
        Self::from_toml_str(&text)
    }

    /// Expands the grid, validating every permutation.
    pub fn plan(&self) -> SweepPlan {
        let mut plan = SweepPlan::default();
        for &algorithm in &self.algorithms {
            for &epoch_ns in &self.epoch_ns {
                for &requests_per_node in &self.requests_per_node {
                    for &distribution in &self.distributions {
                        for &load in &self.loads {
                            let point = GridPoint { algorithm, epoch_ns, requests_per_node, distribution, load };
                            let mut config = self.base.clone();
                            config.scheduler.algorithm = algorithm;
                            config.network.epoch_ns = epoch_ns;
                            config.traffic.requests_per_node = requests_per_node;
                            config.traffic.distribution = distribution;
                            config.traffic.input_load = load;
                            config.traffic.seed = 0;
                            let canonical = config.to_toml_string();
                            if let Err(reason) = config.validate() {
                                plan.skipped.push(Skipped { point, reason });
                                continue;
                            }
                            for &master_seed in &self.seeds {
                                let mut config = config.clone();
                                config.traffic.seed = run_seed(master_seed, &canonical);
                                let config = config.validate().expect("validated above with another seed");
                                plan.runs.push(PlannedRun { point, master_seed, config });
                            }
                        }
                    }
                }
            }
        }
        plan
    }
}

/// One permutation of the swept axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub algorithm: Algorithm,
    pub epoch_ns: u64,
    pub requests_per_node: u32,
    pub distribution: SizeDistribution,
    pub load: f64,
}

impl GridPoint {
    fn cmp_key(&self, other: &Self) -> Ordering {
        (self.algorithm, self.epoch_ns, self.requests_per_node, self.distribution)
            .cmp(&(other.algorithm, other.epoch_ns, other.requests_per_node, other.distribution))
            .then(self.load.total_cmp(&other.load))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub point: GridPoint,
    pub reason: ConfigError,
}

#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub point: GridPoint,
    pub master_seed: u64,
    pub config: ValidatedConfig,
}

#[derive(Debug, Clone, Default)]
pub struct SweepPlan {
    pub runs: Vec<PlannedRun>,
    pub skipped: Vec<Skipped>,
}

/// run_seed = first 8 bytes of SHA-256(master seed ‖ canonical config).
pub fn run_seed(master_seed: u64, canonical_config: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(canonical_config.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug)]
pub struct RunFailure {
    pub point: GridPoint,
    pub master_seed: u64,
    pub error: SimError,
}

#[derive(Debug, Default)]
pub struct SweepReport {
    /// Completed runs sorted by (algorithm, E, R, TD, load, master seed).
    pub rows: Vec<RunMetrics>,
    pub skipped: Vec<Skipped>,
    pub failures: Vec<RunFailure>,
}

/// Executes a plan on `parallel` worker threads. Row order does not
/// depend on `parallel`.
pub fn execute(plan: SweepPlan, parallel: usize, options: &RunOptions) -> Result<SweepReport, SweepError> {
    if parallel == 0 {
        return Err(SweepError::NoWorkers);
    }
    let mut report = SweepReport { skipped: plan.skipped, ..Default::default() };
    if plan.runs.is_empty() {
        return Ok(report);
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(parallel).build().map_err(|e| SweepError::Pool(e.to_string()))?;
    let mut results: Vec<(GridPoint, u64, Result<RunMetrics, SimError>)> = pool.install(|| {
        plan.runs
            .into_par_iter()
            .map(|r| (r.point, r.master_seed, sim::run(&r.config, options).map(|out| out.metrics)))
            .collect()
    });
    results.sort_by(|a, b| a.0.cmp_key(&b.0).then(a.1.cmp(&b.1)));
    for (point, master_seed, result) in results {
        match result {
            Ok(m) => report.rows.push(m),
            Err(error) => report.failures.push(RunFailure { point, master_seed, error }),
        }
    }
    Ok(report)
}
