//! Epoch-driven simulation: traffic → scheduler → grant execution.
//!
//! Grants computed while epoch `k` runs are executed during epoch `k + 1`.
//! A request completes at the end of its last granted slot, and its latency
//! is measured from the moment it arrived at the source.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::config::ValidatedConfig;
use crate::grid::{GridError, ResourceGrid};
use crate::metrics::{grid_wavelength_usage, Cdf, RunMetrics, Tally};
use crate::scheduler::{EpochOutcome, SchedulerState};
use crate::traffic::TrafficGenerator;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("epoch {epoch}: {source}")]
    Grid {
        epoch: u64,
        #[source]
        source: GridError,
    },
    #[error("epoch {epoch}: {detail}")]
    Invariant { epoch: u64, detail: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    /// Leading epochs left out of every statistic.
    pub warmup_discard: u64,
    /// Record one row per completed request.
    pub event_log: bool,
    /// Audit the grid, slot conservation and buffer accounting each epoch.
    pub check_invariants: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { warmup_discard: 0, event_log: false, check_invariants: true }
    }
}

/// Lifecycle of one completed request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRow {
    pub request_id: u64,
    pub source: usize,
    pub dest: usize,
    pub size: u32,
    pub generated_ns: u64,
    /// Epoch in which the last slot was transmitted.
    pub granted_epoch: u64,
    pub completed_ns: u64,
}

pub fn write_event_log<W: Write>(out: W, events: &[EventRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

/// One scheduled epoch as seen by the caller of [`SimulationRun::step`].
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub outcome: EpochOutcome,
    pub grid: ResourceGrid,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub latencies: Cdf,
    pub events: Vec<EventRow>,
    /// Total source backlog in slots after each epoch.
    pub backlog: Vec<u64>,
}

pub struct SimulationRun {
    config: ValidatedConfig,
    options: RunOptions,
    generator: TrafficGenerator,
    state: SchedulerState,
    epoch_index: u64,
    granted_slots: Vec<u64>,
    tx_buffer: Vec<u64>,
    partial: HashMap<u64, u32>,
    tally: Tally,
    latencies: Vec<u64>,
    events: Vec<EventRow>,
    backlog: Vec<u64>,
}

impl SimulationRun {
    pub fn new(config: ValidatedConfig, options: RunOptions) -> Self {
        let n = config.n_nodes();
        SimulationRun {
            generator: TrafficGenerator::new(&config),
            state: SchedulerState::new(&config),
            config,
            options,
            epoch_index: 0,
            granted_slots: vec![0; n],
            tx_buffer: vec![0; n],
            partial: HashMap::new(),
            tally: Tally::default(),
            latencies: Vec::new(),
            events: Vec::new(),
            backlog: Vec::new(),
        }
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    /// Next epoch to be scheduled.
    pub fn epoch_index(&self) -> u64 {
        self.epoch_index
    }

    /// Slots waiting at each source: arrived but not yet granted.
    pub fn tx_buffer(&self) -> &[u64] {
        &self.tx_buffer
    }

    pub fn scheduler(&self) -> &SchedulerState {
        &self.state
    }

    /// Schedules one epoch and folds it into the statistics.
    pub fn step(&mut self) -> Result<EpochReport, SimError> {
        let epoch = self.epoch_index;
        let requests = self.generator.generate_epoch(epoch);
        let offered = requests.len() + self.state.buffer_len();
        let (outcome, grid) = self.state.schedule_epoch(epoch, requests, &self.config);
        self.epoch_index += 1;

        let mut finish: HashMap<u64, u64> = HashMap::new();
        for g in &outcome.grants {
            self.granted_slots[g.source] += u64::from(g.slot_count());
            let t = finish.entry(g.request_id).or_default();
            *t = (*t).max(g.completed_at_ns);
        }
        for (node, tx) in self.tx_buffer.iter_mut().enumerate() {
            *tx = self.generator.arrived_slots(node) - self.granted_slots[node];
        }

        if self.options.check_invariants {
            self.check(epoch, offered, &outcome, &grid, &finish)?;
        }

        let counted = epoch >= self.options.warmup_discard;
        for req in &outcome.completed {
            let done = finish[&req.id];
            if counted {
                self.latencies.push(done - req.generated_at_ns);
            }
            if self.options.event_log {
                self.events.push(EventRow {
                    request_id: req.id,
                    source: req.source,
                    dest: req.destination,
                    size: req.slots_requested,
                    generated_ns: req.generated_at_ns,
                    granted_epoch: epoch + 1,
                    completed_ns: done,
                });
            }
        }
        let backlog: u64 = self.tx_buffer.iter().sum();
        self.backlog.push(backlog);
        if counted {
            let t = &mut self.tally;
            t.epochs += 1;
            t.granted_slots += outcome.granted_slots();
            t.usage_sum += grid_wavelength_usage(&grid, self.config.algorithm());
            t.tx_buffer_slot_sum += backlog;
            t.sched_buffer_sum += self.state.buffer_len() as u64;
            t.iterations_sum += u64::from(outcome.iterations_used);
            t.invalidated += outcome.invalidated.len() as u64;
        }
        Ok(EpochReport { outcome, grid })
    }

    fn check(
        &mut self,
        epoch: u64,
        offered: usize,
        outcome: &EpochOutcome,
        grid: &ResourceGrid,
        finish: &HashMap<u64, u64>,
    ) -> Result<(), SimError> {
        let fail = |detail: String| Err(SimError::Invariant { epoch, detail });
        grid.audit().map_err(|source| SimError::Grid { epoch, source })?;

        let accounted = outcome.completed.len() + self.state.buffer_len();
        if accounted != offered {
            return fail(format!("{offered} requests offered but {accounted} accounted for"));
        }

        let exec_start = (epoch + 1) * self.config.epoch_ns();
        for g in &outcome.grants {
            if g.epoch != epoch + 1 || g.completed_at_ns <= exec_start {
                return fail(format!("grant for request {} placed outside the next epoch", g.request_id));
            }
            *self.partial.entry(g.request_id).or_default() += g.slot_count();
        }
        for req in &outcome.completed {
            let granted = self.partial.remove(&req.id).unwrap_or(0);
            if granted != req.slots_requested || req.remaining_slots != 0 {
                return fail(format!("request {} granted {granted} of {} slots", req.id, req.slots_requested));
            }
        }
        for req in outcome.buffered.iter().chain(&outcome.invalidated) {
            let granted = self.partial.get(&req.id).copied().unwrap_or(0);
            if req.remaining_slots == 0 || granted + req.remaining_slots != req.slots_requested {
                return fail(format!("request {} lost slots across a partial grant", req.id));
            }
        }

        let mut queued = vec![0u64; self.config.n_nodes()];
        for (node, q) in queued.iter_mut().enumerate() {
            *q = self.state.buffer_of(node).map(|r| u64::from(r.remaining_slots)).sum();
        }
        for (node, &tx) in self.tx_buffer.iter().enumerate() {
            let expect = self.generator.backlog_slots(node) + queued[node];
            if tx != expect {
                return fail(format!("node {node}: tx buffer {tx} slots, outstanding requests hold {expect}"));
            }
        }

        let floor = self.config.epoch_ns();
        for req in &outcome.completed {
            let done = finish[&req.id];
            if done < req.generated_at_ns + floor {
                return fail(format!(
                    "request {} finished {} ns after arrival, below one epoch",
                    req.id,
                    done - req.generated_at_ns
                ));
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> RunOutput {
        self.tally.saturated = backlog_growing(&self.backlog, self.config.capacity_per_epoch());
        let latencies = Cdf::new(std::mem::take(&mut self.latencies));
        RunOutput {
            metrics: RunMetrics::from_tally(&self.config, &self.tally, &latencies),
            latencies,
            events: self.events,
            backlog: self.backlog,
        }
    }
}

/// Backlog grew by more than one epoch of capacity between the third and
/// last quarter of the run.
fn backlog_growing(series: &[u64], capacity: u64) -> bool {
    if series.len() < 8 {
        return false;
    }
    let q = series.len() / 4;
    let mean = |s: &[u64]| s.iter().sum::<u64>() as f64 / s.len() as f64;
    mean(&series[series.len() - q..]) > mean(&series[series.len() - 2 * q..series.len() - q]) + capacity as f64
}

/// Runs `config.traffic.n_epochs` epochs.
pub fn run(config: &ValidatedConfig, options: &RunOptions) -> Result<RunOutput, SimError> {
    let mut sim = SimulationRun::new(config.clone(), options.clone());
    for _ in 0..config.traffic.n_epochs {
        sim.step()?;
    }
    Ok(sim.finish())
}

/// Fixed transceiver/serialisation latency at the calibration lengths.
const FIXED_OVERHEAD: [(f64, f64); 3] = [(3.0, 120.0), (20.0, 130.0), (100.0, 120.0)];
/// Fibre delay, counted twice (source to coupler, coupler to destination).
const FIBRE_NS_PER_M: f64 = 5.0;

/// Data-plane latency overhead for a link of `length_m` metres to the
/// coupler: `2 × L × 5 ns/m` plus a fixed term interpolated between the
/// calibration lengths (clamped outside them).
pub fn propagation_overhead(length_m: f64) -> f64 {
    let fixed = match FIXED_OVERHEAD.iter().position(|&(l, _)| length_m <= l) {
        Some(0) => FIXED_OVERHEAD[0].1,
        None => FIXED_OVERHEAD[FIXED_OVERHEAD.len() - 1].1,
        Some(i) => {
            let (l0, f0) = FIXED_OVERHEAD[i - 1];
            let (l1, f1) = FIXED_OVERHEAD[i];
            f0 + (f1 - f0) * (length_m - l0) / (l1 - l0)
        }
    };
    2.0 * length_m * FIBRE_NS_PER_M + fixed
}
