//! Configuration records for the network, the scheduler and the traffic
//! model, plus the validation step that freezes them into a
//! [`ValidatedConfig`] with every derived quantity computed.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest epoch, in timeslots, the slot bitmaps can represent.
pub const MAX_SLOTS_PER_EPOCH: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config not found: {0}")]
    NotFound(String),
    #[error("failed to parse config: {0}")]
    Parse(String),
    #[error("epoch of {epoch_ns} ns is not a positive multiple of the {slot_ns} ns timeslot")]
    NonMultipleEpoch { epoch_ns: u64, slot_ns: u64 },
    #[error("{slots} timeslots per epoch exceeds the supported maximum of {MAX_SLOTS_PER_EPOCH}")]
    TooManySlots { slots: usize },
    #[error("network needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("wavelength count W={wavelengths} must equal node count N={nodes}")]
    WavelengthMismatch { nodes: usize, wavelengths: usize },
    #[error("requests per node must be at least 1")]
    NoRequests,
    #[error("S_avg = T/R = {slots}/{requests} is below 1")]
    MeanSizeBelowOne { slots: usize, requests: u32 },
    #[error("{distribution} requires S_avg ≥ {min}")]
    DistributionNeedsLargerMean { distribution: SizeDistribution, min: u32 },
    #[error("{distribution} with S_avg = {slots}/{requests} draws sizes larger than the epoch")]
    DistributionExceedsEpoch { distribution: SizeDistribution, slots: usize, requests: u32 },
    #[error("input load {0} is outside [0, 1]")]
    LoadOutOfRange(f64),
    #[error("clock period must be positive")]
    ZeroClock,
    #[error("iteration budget floor(E/clk) - b = {0} is below 1")]
    NoIterations(i64),
    #[error("buffer coefficient {0} is outside [1.6, 2.5]; set allow_any_buffer_coefficient to override")]
    BufferCoefficient(f64),
    #[error("{name} = {value} must lie in [0, 1]")]
    FractionOutOfRange { name: &'static str, value: f64 },
    #[error("epoch count must be at least 1")]
    NoEpochs,
}

/// Resource allocation strategy of the hardware scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Wavelengths are tuned once per epoch; a grant locks both endpoints.
    #[serde(rename = "epoch-level", alias = "epoch")]
    EpochLevel,
    /// Wavelengths may be retuned every timeslot.
    #[serde(rename = "slot-level", alias = "slot")]
    SlotLevel,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::SlotLevel, Algorithm::EpochLevel];

    /// Scheduler boot cycles before the first iteration.
    pub fn default_boot_cycles(self) -> u32 {
        match self {
            Algorithm::EpochLevel => 3,
            Algorithm::SlotLevel => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::EpochLevel => "epoch-level",
            Algorithm::SlotLevel => "slot-level",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "epoch-level" | "epoch" | "epochlevel" => Ok(Algorithm::EpochLevel),
            "slot-level" | "slot" | "slotlevel" => Ok(Algorithm::SlotLevel),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

/// Request-size distribution: 1, 3 or 5 equiprobable sizes centred on S_avg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SizeDistribution {
    #[serde(rename = "TD1")]
    Td1,
    #[serde(rename = "TD2")]
    Td2,
    #[serde(rename = "TD3")]
    Td3,
}

impl SizeDistribution {
    pub const ALL: [SizeDistribution; 3] = [SizeDistribution::Td1, SizeDistribution::Td2, SizeDistribution::Td3];

    /// Half-width of the size support around S_avg.
    pub fn spread(self) -> u32 {
        match self {
            SizeDistribution::Td1 => 0,
            SizeDistribution::Td2 => 1,
            SizeDistribution::Td3 => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeDistribution::Td1 => "TD1",
            SizeDistribution::Td2 => "TD2",
            SizeDistribution::Td3 => "TD3",
        }
    }
}

impl fmt::Display for SizeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SizeDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TD1" | "1" => Ok(SizeDistribution::Td1),
            "TD2" | "2" => Ok(SizeDistribution::Td2),
            "TD3" | "3" => Ok(SizeDistribution::Td3),
            other => Err(format!("unknown traffic distribution '{other}'")),
        }
    }
}

/// Scheduler clock period, stored in tenths of a nanosecond so the
/// iteration budget is computed with integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ClockPeriod {
    tenths_ns: u32,
}

impl ClockPeriod {
    pub const fn from_tenths_ns(tenths_ns: u32) -> Self {
        ClockPeriod { tenths_ns }
    }

    pub fn tenths_ns(self) -> u32 {
        self.tenths_ns
    }

    pub fn as_ns(self) -> f64 {
        f64::from(self.tenths_ns) / 10.0
    }
}

impl Default for ClockPeriod {
    fn default() -> Self {
        ClockPeriod::from_tenths_ns(23)
    }
}

impl TryFrom<f64> for ClockPeriod {
    type Error = String;

    fn try_from(ns: f64) -> Result<Self, Self::Error> {
        if !ns.is_finite() || ns < 0.0 {
            return Err(format!("invalid clock period {ns}"));
        }
        let tenths = (ns * 10.0).round();
        if (tenths / 10.0 - ns).abs() > 1e-9 {
            return Err(format!("clock period {ns} ns is not a multiple of 0.1 ns"));
        }
        Ok(ClockPeriod::from_tenths_ns(tenths as u32))
    }
}

impl From<ClockPeriod> for f64 {
    fn from(c: ClockPeriod) -> f64 {
        c.as_ns()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Nodes attached to one star coupler (N).
    pub n_nodes: usize,
    /// Wavelength channels (W).
    pub n_wavelengths: usize,
    /// Epoch length E in ns.
    pub epoch_ns: u64,
    /// Timeslot length in ns.
    pub slot_ns: u64,
    /// Transceiver line rate B in Gb/s.
    pub line_rate_gbps: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { n_nodes: 64, n_wavelengths: 64, epoch_ns: 360, slot_ns: 20, line_rate_gbps: 100.0 }
    }
}

impl NetworkConfig {
    /// T = E / slot, or `None` when E is not a positive multiple of the slot.
    pub fn slots_per_epoch(&self) -> Option<usize> {
        if self.slot_ns == 0 || self.epoch_ns == 0 || !self.epoch_ns.is_multiple_of(self.slot_ns) {
            None
        } else {
            Some((self.epoch_ns / self.slot_ns) as usize)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub algorithm: Algorithm,
    pub clk_ns: ClockPeriod,
    /// Boot cycles b; `None` picks 3 (epoch-level) or 4 (slot-level).
    pub boot_cycles: Option<u32>,
    /// R_p, scales the buffer share of the iteration budget.
    pub buffer_coefficient: f64,
    pub allow_any_buffer_coefficient: bool,
    /// Epoch-level: fraction of a buffer window that must be granted
    /// before the buffer pointer moves on.
    pub pointer_shift_threshold: f64,
    /// Largest fraction of the iteration budget spent on buffered requests.
    pub buffer_iteration_cap: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            algorithm: Algorithm::SlotLevel,
            clk_ns: ClockPeriod::default(),
            boot_cycles: None,
            buffer_coefficient: 2.0,
            allow_any_buffer_coefficient: false,
            pointer_shift_threshold: 0.5,
            buffer_iteration_cap: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    /// Maximum requests released per node per epoch (R).
    pub requests_per_node: u32,
    pub distribution: SizeDistribution,
    /// Fraction of the N×T slot capacity offered per epoch.
    pub input_load: f64,
    pub seed: u64,
    pub n_epochs: u64,
    /// Draw destinations over all N nodes (strict 1/N); self-addressed
    /// requests are then dropped at the source.
    pub include_self: bool,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            requests_per_node: 6,
            distribution: SizeDistribution::Td1,
            input_load: 1.0,
            seed: 1,
            n_epochs: 2000,
            include_self: false,
        }
    }
}

/// The three configuration records as they appear in a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    pub scheduler: SchedulerConfig,
    pub traffic: TrafficConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|_| ConfigError::NotFound(path.display().to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        validate(self)
    }
}

/// Average request size S_avg = T / R kept as an exact ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanSize {
    pub slots: u32,
    pub requests: u32,
}

impl MeanSize {
    pub fn new(slots: u32, requests: u32) -> Self {
        assert!(requests > 0, "mean size needs a positive divisor");
        MeanSize { slots, requests }
    }

    pub fn whole(value: u32) -> Self {
        MeanSize::new(value, 1)
    }

    pub fn floor(self) -> u32 {
        self.slots / self.requests
    }

    pub fn ceil(self) -> u32 {
        self.slots.div_ceil(self.requests)
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.slots) / f64::from(self.requests)
    }
}

/// A frozen configuration with T, S_avg and I derived.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidatedConfig {
    pub network: NetworkConfig,
    pub scheduler: SchedulerConfig,
    pub traffic: TrafficConfig,
    pub slots_per_epoch: usize,
    pub mean_size: MeanSize,
    pub boot_cycles: u32,
    pub iterations: u32,
}

impl ValidatedConfig {
    pub fn n_nodes(&self) -> usize {
        self.network.n_nodes
    }

    pub fn n_wavelengths(&self) -> usize {
        self.network.n_wavelengths
    }

    pub fn algorithm(&self) -> Algorithm {
        self.scheduler.algorithm
    }

    pub fn epoch_ns(&self) -> u64 {
        self.network.epoch_ns
    }

    pub fn slot_ns(&self) -> u64 {
        self.network.slot_ns
    }

    /// Number of leading slot-level iterations that use coarse allocation,
    /// ⌈T / S_avg⌉.
    pub fn coarse_iterations(&self) -> u32 {
        let t = self.slots_per_epoch as u64;
        let num = t * u64::from(self.mean_size.requests);
        num.div_ceil(u64::from(self.mean_size.slots)) as u32
    }

    /// Slot capacity of the sub-network per epoch, N × T.
    pub fn capacity_per_epoch(&self) -> u64 {
        (self.n_nodes() * self.slots_per_epoch) as u64
    }
}

/// Maximum scheduler iterations per epoch, ⌊E/clk⌋ − b.
pub fn compute_iterations(epoch_ns: u64, clk: ClockPeriod, boot_cycles: u32) -> Result<u32, ConfigError> {
    if clk.tenths_ns() == 0 {
        return Err(ConfigError::ZeroClock);
    }
    let cycles = (epoch_ns * 10) / u64::from(clk.tenths_ns());
    let iterations = cycles as i64 - i64::from(boot_cycles);
    if iterations < 1 {
        return Err(ConfigError::NoIterations(iterations));
    }
    Ok(iterations as u32)
}

fn check_fraction(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(ConfigError::FractionOutOfRange { name, value });
    }
    Ok(())
}

pub fn validate(config: &SimConfig) -> Result<ValidatedConfig, ConfigError> {
    let net = &config.network;
    let sched = &config.scheduler;
    let traffic = &config.traffic;

    if net.n_nodes < 2 {
        return Err(ConfigError::TooFewNodes(net.n_nodes));
    }
    if net.n_wavelengths != net.n_nodes {
        return Err(ConfigError::WavelengthMismatch { nodes: net.n_nodes, wavelengths: net.n_wavelengths });
    }
    let slots =
        net.slots_per_epoch().ok_or(ConfigError::NonMultipleEpoch { epoch_ns: net.epoch_ns, slot_ns: net.slot_ns })?;
    if slots > MAX_SLOTS_PER_EPOCH {
        return Err(ConfigError::TooManySlots { slots });
    }

    let requests = traffic.requests_per_node;
    if requests == 0 {
        return Err(ConfigError::NoRequests);
    }
    if slots < requests as usize {
        return Err(ConfigError::MeanSizeBelowOne { slots, requests });
    }
    let mean_size = MeanSize::new(slots as u32, requests);
    let spread = traffic.distribution.spread();
    if mean_size.floor() < spread + 1 {
        return Err(ConfigError::DistributionNeedsLargerMean { distribution: traffic.distribution, min: spread + 1 });
    }
    if (mean_size.ceil() + spread) as usize > slots {
        return Err(ConfigError::DistributionExceedsEpoch { distribution: traffic.distribution, slots, requests });
    }
    if !(0.0..=1.0).contains(&traffic.input_load) {
        return Err(ConfigError::LoadOutOfRange(traffic.input_load));
    }
    if traffic.n_epochs == 0 {
        return Err(ConfigError::NoEpochs);
    }

    if !sched.allow_any_buffer_coefficient && !(1.6..=2.5).contains(&sched.buffer_coefficient) {
        return Err(ConfigError::BufferCoefficient(sched.buffer_coefficient));
    }
    check_fraction("pointer_shift_threshold", sched.pointer_shift_threshold)?;
    check_fraction("buffer_iteration_cap", sched.buffer_iteration_cap)?;

    let boot_cycles = sched.boot_cycles.unwrap_or_else(|| sched.algorithm.default_boot_cycles());
    let iterations = compute_iterations(net.epoch_ns, sched.clk_ns, boot_cycles)?;

    Ok(ValidatedConfig {
        network: net.clone(),
        scheduler: sched.clone(),
        traffic: traffic.clone(),
        slots_per_epoch: slots,
        mean_size,
        boot_cycles,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(epoch_ns: u64, requests: u32, distribution: SizeDistribution) -> SimConfig {
        let mut c = SimConfig::default();
        c.network.epoch_ns = epoch_ns;
        c.traffic.requests_per_node = requests;
        c.traffic.distribution = distribution;
        c
    }

    #[test]
    fn slots_follow_epoch() {
        let v = config(120, 2, SizeDistribution::Td1).validate().unwrap();
        assert_eq!(v.slots_per_epoch, 6);
        assert_eq!(v.slots_per_epoch as u64 * v.slot_ns(), v.epoch_ns());
    }

    #[test]
    fn mean_size_is_t_over_r() {
        let v = config(360, 6, SizeDistribution::Td1).validate().unwrap();
        assert_eq!(v.slots_per_epoch, 18);
        assert_eq!(v.mean_size.as_f64(), 3.0);
        assert_eq!(v.coarse_iterations(), 6);
    }

    #[test]
    fn td3_needs_mean_three() {
        let err = config(120, 6, SizeDistribution::Td3).validate().unwrap_err();
        assert_eq!(err.to_string(), "TD3 requires S_avg ≥ 3");
        let err = config(120, 3, SizeDistribution::Td3).validate().unwrap_err();
        assert_eq!(err.to_string(), "TD3 requires S_avg ≥ 3");
        assert!(config(120, 2, SizeDistribution::Td3).validate().is_ok());
        assert!(config(120, 3, SizeDistribution::Td2).validate().is_ok());
    }

    #[test]
    fn rejects_bad_epochs() {
        assert!(matches!(config(130, 2, SizeDistribution::Td1).validate(), Err(ConfigError::NonMultipleEpoch { .. })));
        assert!(matches!(config(0, 2, SizeDistribution::Td1).validate(), Err(ConfigError::NonMultipleEpoch { .. })));
        assert!(matches!(config(60, 6, SizeDistribution::Td1).validate(), Err(ConfigError::MeanSizeBelowOne { .. })));
    }

    #[test]
    fn iteration_budget() {
        let clk = ClockPeriod::default();
        assert_eq!(compute_iterations(120, clk, 4), Ok(48));
        assert_eq!(compute_iterations(120, clk, 3), Ok(49));
        assert_eq!(compute_iterations(360, clk, 4), Ok(152));
        assert_eq!(compute_iterations(360, clk, 3), Ok(153));
        assert_eq!(compute_iterations(600, clk, 4), Ok(256));
        assert_eq!(compute_iterations(600, clk, 3), Ok(257));
        assert!(matches!(compute_iterations(6, clk, 3), Err(ConfigError::NoIterations(_))));
        assert_eq!(compute_iterations(120, ClockPeriod::from_tenths_ns(0), 3), Err(ConfigError::ZeroClock));
    }

    #[test]
    fn small_epoch_without_iterations_is_rejected() {
        // E=20 gives 8 cycles
        let mut c = config(20, 1, SizeDistribution::Td1);
        c.scheduler.boot_cycles = Some(8);
        assert!(matches!(c.validate(), Err(ConfigError::NoIterations(_))));
    }

    #[test]
    fn buffer_coefficient_range() {
        let mut c = SimConfig::default();
        c.scheduler.buffer_coefficient = 3.0;
        assert!(matches!(c.validate(), Err(ConfigError::BufferCoefficient(_))));
        c.scheduler.allow_any_buffer_coefficient = true;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn wavelengths_must_match_nodes() {
        let mut c = SimConfig::default();
        c.network.n_wavelengths = 32;
        assert!(matches!(c.validate(), Err(ConfigError::WavelengthMismatch { .. })));
    }

    #[test]
    fn toml_sections_round_trip() {
        let text = r#"
            [network]
            epoch_ns = 120

            [scheduler]
            algorithm = "epoch-level"
            clk_ns = 2.3

            [traffic]
            requests_per_node = 3
            distribution = "TD2"
            input_load = 0.5
        "#;
        let c = SimConfig::from_toml_str(text).unwrap();
        assert_eq!(c.network.epoch_ns, 120);
        assert_eq!(c.network.n_nodes, 64);
        assert_eq!(c.scheduler.algorithm, Algorithm::EpochLevel);
        assert_eq!(c.scheduler.clk_ns.tenths_ns(), 23);
        assert_eq!(c.traffic.distribution, SizeDistribution::Td2);
        let back = SimConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
        let v = c.validate().unwrap();
        assert_eq!(v.boot_cycles, 3);
        assert_eq!(v.iterations, 49);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(SimConfig::from_toml_str("[network]\nnodes = 3\n").is_err());
    }
}
