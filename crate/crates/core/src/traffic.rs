//! Synthetic per-epoch demand: Poisson arrivals per node, uniform
//! destinations and TD-shaped request sizes.
//!
//! Each node is an independent Poisson process with rate `load × R`
//! requests per epoch. Requests that have arrived by the start of an epoch
//! are queued at the node; at most `R` of them are released to the
//! scheduler per epoch and the rest wait for later epochs.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;

use crate::config::{MeanSize, SizeDistribution, ValidatedConfig};
use crate::request::Request;

/// Draws one request size. TD1 returns S_avg, TD2 and TD3 add a uniform
/// offset in ±1 or ±2. A fractional S_avg is realised as a two-point mix of
/// its floor and ceiling with the exact mean.
pub fn sample_size<R: Rng + ?Sized>(distribution: SizeDistribution, mean: MeanSize, rng: &mut R) -> u32 {
    let mut base = mean.floor();
    let frac = mean.slots % mean.requests;
    if frac != 0 && rng.random_range(0..mean.requests) < frac {
        base += 1;
    }
    let spread = distribution.spread() as i64;
    let offset = if spread == 0 { 0 } else { rng.random_range(-spread..=spread) };
    let size = i64::from(base) + offset;
    debug_assert!(size >= 1, "size {size} below 1; validation should have rejected this mean");
    size.max(1) as u32
}

/// One released request, as written to a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub epoch: u64,
    pub source: usize,
    pub dest: usize,
    pub size: u32,
    pub arrival_ns: u64,
}

#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    n_nodes: usize,
    epoch_ns: u64,
    release_cap: usize,
    distribution: SizeDistribution,
    mean_size: MeanSize,
    include_self: bool,
    inter_arrival: Option<Exp<f64>>,
    rng: ChaCha8Rng,
    next_arrival: Vec<f64>,
    carryover: Vec<VecDeque<Request>>,
    arrived_slots: Vec<u64>,
    backlog_slots: Vec<u64>,
    next_id: u64,
    last_epoch: Option<u64>,
    dropped_local: u64,
    trace: Option<Vec<TraceRow>>,
}

impl TrafficGenerator {
    pub fn new(config: &ValidatedConfig) -> Self {
        let traffic = &config.traffic;
        let n = config.n_nodes();
        let per_epoch = traffic.input_load * f64::from(traffic.requests_per_node);
        let inter_arrival =
            (per_epoch > 0.0).then(|| Exp::new(per_epoch / config.epoch_ns() as f64).expect("positive rate"));
        let mut rng = ChaCha8Rng::seed_from_u64(traffic.seed);
        let next_arrival = (0..n)
            .map(|_| match &inter_arrival {
                Some(exp) => exp.sample(&mut rng),
                None => f64::INFINITY,
            })
            .collect();
        TrafficGenerator {
            n_nodes: n,
            epoch_ns: config.epoch_ns(),
            release_cap: traffic.requests_per_node as usize,
            distribution: traffic.distribution,
            mean_size: config.mean_size,
            include_self: traffic.include_self,
            inter_arrival,
            rng,
            next_arrival,
            carryover: vec![VecDeque::new(); n],
            arrived_slots: vec![0; n],
            backlog_slots: vec![0; n],
            next_id: 0,
            last_epoch: None,
            dropped_local: 0,
            trace: None,
        }
    }

    /// Start recording every released request.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TraceRow]> {
        self.trace.as_deref()
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.trace.iter().flatten() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Requests available to the scheduler at the start of `epoch`: queued
    /// carryover first, then arrivals up to the epoch start, at most R per
    /// node. Epochs must be requested in non-decreasing order.
    pub fn generate_epoch(&mut self, epoch: u64) -> Vec<Request> {
        if let Some(last) = self.last_epoch {
            assert!(epoch > last, "epoch {epoch} requested after epoch {last}");
        }
        self.last_epoch = Some(epoch);
        let cutoff = (epoch * self.epoch_ns) as f64;

        let mut released = Vec::new();
        for node in 0..self.n_nodes {
            while self.next_arrival[node] <= cutoff {
                let at = self.next_arrival[node];
                self.arrive(node, at);
                let exp = self.inter_arrival.as_ref().expect("arrivals imply a rate");
                self.next_arrival[node] = at + exp.sample(&mut self.rng);
            }
            let take = self.carryover[node].len().min(self.release_cap);
            for mut req in self.carryover[node].drain(..take) {
                req.origin_epoch = epoch;
                self.backlog_slots[node] -= u64::from(req.slots_requested);
                if let Some(trace) = self.trace.as_mut() {
                    trace.push(TraceRow {
                        epoch,
                        source: req.source,
                        dest: req.destination,
                        size: req.slots_requested,
                        arrival_ns: req.generated_at_ns,
                    });
                }
                released.push(req);
            }
        }
        released
    }

    fn arrive(&mut self, node: usize, at: f64) {
        let destination = if self.include_self {
            self.rng.random_range(0..self.n_nodes)
        } else {
            let d = self.rng.random_range(0..self.n_nodes - 1);
            if d >= node {
                d + 1
            } else {
                d
            }
        };
        let size = sample_size(self.distribution, self.mean_size, &mut self.rng);
        if destination == node {
            self.dropped_local += 1;
            return;
        }
        let origin_epoch = (at / self.epoch_ns as f64).ceil() as u64;
        let req = Request::new(self.next_id, node, destination, size, origin_epoch, at.floor() as u64);
        self.next_id += 1;
        self.arrived_slots[node] += u64::from(size);
        self.backlog_slots[node] += u64::from(size);
        self.carryover[node].push_back(req);
    }

    /// Slots that have arrived at `node` so far.
    pub fn arrived_slots(&self, node: usize) -> u64 {
        self.arrived_slots[node]
    }

    /// Slots queued at `node` that have not yet been released.
    pub fn backlog_slots(&self, node: usize) -> u64 {
        self.backlog_slots[node]
    }

    pub fn carryover(&self, node: usize) -> impl Iterator<Item = &Request> {
        self.carryover[node].iter()
    }

    /// Requests generated so far (ids are dense from zero).
    pub fn generated(&self) -> u64 {
        self.next_id
    }

    /// Self-addressed arrivals discarded when `include_self` is set.
    pub fn dropped_local(&self) -> u64 {
        self.dropped_local
    }
}
