//! Wavelength/timeslot scheduling for optical circuit-switched star-coupler
//! sub-networks.
//!
//! The crate models one sub-network of `N` nodes sharing `W = N`
//! wavelengths, divided in time into epochs of `T` slots. Two hardware
//! schedulers are provided ([`Algorithm::EpochLevel`] and
//! [`Algorithm::SlotLevel`]) along with a Poisson traffic source, an
//! epoch-driven simulator, metric folding, parameter sweeps and the
//! energy/cost/scalability calculators.
//!
//! ```
//! use ocs_core::{SimConfig, Algorithm};
//!
//! let mut config = SimConfig::default();
//! config.network.n_nodes = 8;
//! config.network.n_wavelengths = 8;
//! config.scheduler.algorithm = Algorithm::SlotLevel;
//! config.traffic.n_epochs = 50;
//! config.traffic.input_load = 0.5;
//! let run = ocs_core::sim::run(&config.validate().unwrap(), &Default::default()).unwrap();
//! assert!(run.metrics.throughput > 0.0);
//! ```

pub mod arbiter;
pub mod config;
pub mod grid;
pub mod metrics;
pub mod models;
pub mod request;
pub mod scheduler;
pub mod sim;
pub mod sweep;
pub mod traffic;

pub use arbiter::{ArbiterError, RoundRobinArbiter};
pub use config::{
    compute_iterations, Algorithm, ClockPeriod, ConfigError, MeanSize, NetworkConfig, SchedulerConfig, SimConfig,
    SizeDistribution, TrafficConfig, ValidatedConfig,
};
pub use grid::{GridError, ResourceGrid, SlotMask};
pub use metrics::{Cdf, RunMetrics};
pub use request::{Grant, Request};
pub use scheduler::{EpochOutcome, SchedulerState};
pub use sim::{RunOptions, RunOutput};
pub use sweep::{SweepReport, SweepSpec};
pub use traffic::TrafficGenerator;
