//! Run statistics: throughput, wavelength usage, latency distribution and
//! buffer occupancy, plus CSV/JSON emission.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::config::{Algorithm, ValidatedConfig};
use crate::grid::ResourceGrid;

/// Bytes carried by one timeslot.
pub const BYTES_PER_SLOT: u64 = 250;
/// Width of one request record in the scheduler buffer.
pub const REQUEST_BITS: u64 = 19;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("saturation point needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("load grid must be increasing")]
    UnsortedLoads,
}

/// Laser retuning dead time charged against capacity: 0.5 ns per slot for
/// slot-level, 0.5 ns per epoch for epoch-level.
pub fn tuning_factor(algorithm: Algorithm, epoch_ns: u64, slot_ns: u64) -> f64 {
    let period = match algorithm {
        Algorithm::SlotLevel => slot_ns,
        Algorithm::EpochLevel => epoch_ns,
    };
    1.0 - 0.5 / period as f64
}

/// Granted share of capacity after tuning overhead.
pub fn effective_throughput(
    granted_slots: u64,
    capacity_slots: u64,
    algorithm: Algorithm,
    epoch_ns: u64,
    slot_ns: u64,
) -> f64 {
    if granted_slots == 0 || capacity_slots == 0 {
        return 0.0;
    }
    granted_slots as f64 / capacity_slots as f64 * tuning_factor(algorithm, epoch_ns, slot_ns)
}

/// Usage of one epoch's grid. Epoch-level counts wavelengths locked by any
/// pair; slot-level counts occupied (wavelength, slot) cells.
pub fn grid_wavelength_usage(grid: &ResourceGrid, algorithm: Algorithm) -> f64 {
    match algorithm {
        Algorithm::EpochLevel => grid.wavelengths_in_use() as f64 / grid.n_wavelengths() as f64,
        Algorithm::SlotLevel => grid.occupied_cells() as f64 / (grid.n_wavelengths() * grid.n_slots()) as f64,
    }
}

/// Mean usage over epochs; zero for no grids.
pub fn wavelength_usage<'a>(grids: impl IntoIterator<Item = &'a ResourceGrid>, algorithm: Algorithm) -> f64 {
    let (sum, n) = grids.into_iter().fold((0.0, 0usize), |(s, n), g| (s + grid_wavelength_usage(g, algorithm), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (position `q × (n − 1)`), so the median of an even sample is
/// the midpoint of the two middle values.
pub fn quantile(sorted: &[u64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] as f64 + (sorted[hi] as f64 - sorted[lo] as f64) * frac)
}

/// Empirical CDF over latency samples in ns.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Cdf {
    sorted: Vec<u64>,
}

impl Cdf {
    pub fn new(mut samples: Vec<u64>) -> Self {
        samples.sort_unstable();
        Cdf { sorted: samples }
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn samples(&self) -> &[u64] {
        &self.sorted
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        quantile(&self.sorted, q)
    }

    pub fn median(&self) -> Option<f64> {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> Option<f64> {
        if self.sorted.is_empty() {
            return None;
        }
        Some(self.sorted.iter().map(|&v| v as f64).sum::<f64>() / self.sorted.len() as f64)
    }

    pub fn max(&self) -> Option<u64> {
        self.sorted.last().copied()
    }

    /// Step points `(value, fraction ≤ value)`, one per distinct value.
    pub fn points(&self) -> Vec<(u64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(u64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

/// CDF step points of `samples`; empty input gives an empty curve.
pub fn latency_cdf(samples: &[u64]) -> Vec<(u64, f64)> {
    Cdf::new(samples.to_vec()).points()
}

/// Smallest load whose throughput is within 1% of the curve's maximum.
pub fn saturation_point(curve: &[(f64, f64)]) -> Result<f64, MetricsError> {
    if curve.len() < 2 {
        return Err(MetricsError::TooFewPoints(curve.len()));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(MetricsError::UnsortedLoads);
    }
    let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (load, _) = curve.iter().find(|p| p.1 >= 0.99 * max - 1e-12).expect("the maximum itself qualifies");
    Ok(*load)
}

/// Summary of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub algorithm: Algorithm,
    pub epoch_ns: u64,
    pub requests_per_node: u32,
    pub distribution: String,
    pub load: f64,
    pub seed: u64,
    /// Epochs included in the statistics (after warm-up discard).
    pub epochs: u64,
    /// Granted slots over N×T×epochs, after tuning overhead.
    pub throughput: f64,
    /// Same, before tuning overhead.
    pub raw_throughput: f64,
    pub wavelength_usage: f64,
    pub completed_requests: u64,
    pub latency_mean_ns: f64,
    pub latency_median_ns: f64,
    pub latency_p99_ns: f64,
    pub latency_p999_ns: f64,
    pub latency_max_ns: f64,
    /// Per node, averaged over epochs.
    pub tx_buffer_mean_bytes: f64,
    /// Whole sub-network, averaged over epochs.
    pub sched_buffer_mean_requests: f64,
    pub sched_buffer_mean_bytes: f64,
    pub mean_iterations_used: f64,
    pub invalidated_requests: u64,
    /// Source backlog still growing at the end of the run.
    pub saturated: bool,
    /// Iteration budget I of the configuration.
    pub iterations: u32,
}

/// Column order of [`write_csv`].
pub const CSV_COLUMNS: [&str; 23] = [
    "algorithm",
    "epoch_ns",
    "requests_per_node",
    "distribution",
    "load",
    "seed",
    "epochs",
    "throughput",
    "raw_throughput",
    "wavelength_usage",
    "completed_requests",
    "latency_mean_ns",
    "latency_median_ns",
    "latency_p99_ns",
    "latency_p999_ns",
    "latency_max_ns",
    "tx_buffer_mean_bytes",
    "sched_buffer_mean_requests",
    "sched_buffer_mean_bytes",
    "mean_iterations_used",
    "invalidated_requests",
    "saturated",
    "iterations",
];

/// Raw tallies collected by the simulator, turned into [`RunMetrics`].
#[derive(Debug, Clone, Default)]
pub struct Tally {
    pub epochs: u64,
    pub granted_slots: u64,
    pub usage_sum: f64,
    pub tx_buffer_slot_sum: u64,
    pub sched_buffer_sum: u64,
    pub iterations_sum: u64,
    pub invalidated: u64,
    pub saturated: bool,
}

impl RunMetrics {
    pub fn from_tally(config: &ValidatedConfig, tally: &Tally, latencies: &Cdf) -> Self {
        let capacity = config.capacity_per_epoch() * tally.epochs;
        let per_epoch = |sum: f64| if tally.epochs == 0 { 0.0 } else { sum / tally.epochs as f64 };
        let n = config.n_nodes() as f64;
        let sched_requests = per_epoch(tally.sched_buffer_sum as f64);
        let q = |p: f64| latencies.quantile(p).unwrap_or(0.0);
        RunMetrics {
            algorithm: config.algorithm(),
            epoch_ns: config.epoch_ns(),
            requests_per_node: config.traffic.requests_per_node,
            distribution: config.traffic.distribution.to_string(),
            load: config.traffic.input_load,
            seed: config.traffic.seed,
            epochs: tally.epochs,
            throughput: effective_throughput(
                tally.granted_slots,
                capacity,
                config.algorithm(),
                config.epoch_ns(),
                config.slot_ns(),
            ),
            raw_throughput: if capacity == 0 { 0.0 } else { tally.granted_slots as f64 / capacity as f64 },
            wavelength_usage: per_epoch(tally.usage_sum),
            completed_requests: latencies.len() as u64,
            latency_mean_ns: latencies.mean().unwrap_or(0.0),
            latency_median_ns: q(0.5),
            latency_p99_ns: q(0.99),
            latency_p999_ns: q(0.999),
            latency_max_ns: latencies.max().unwrap_or(0) as f64,
            tx_buffer_mean_bytes: per_epoch(tally.tx_buffer_slot_sum as f64) / n * BYTES_PER_SLOT as f64,
            sched_buffer_mean_requests: sched_requests,
            sched_buffer_mean_bytes: sched_requests * REQUEST_BITS as f64 / 8.0,
            mean_iterations_used: per_epoch(tally.iterations_sum as f64),
            invalidated_requests: tally.invalidated,
            saturated: tally.saturated,
            iterations: config.iterations,
        }
    }

    /// The six figures summarised per configuration: throughput, median and
    /// tail latency, scheduler and transmitter buffer, wavelength usage.
    pub fn summary(&self) -> [(&'static str, f64); 6] {
        [
            ("throughput", self.throughput),
            ("latency_median_ns", self.latency_median_ns),
            ("latency_p999_ns", self.latency_p999_ns),
            ("sched_buffer_mean_bytes", self.sched_buffer_mean_bytes),
            ("tx_buffer_mean_bytes", self.tx_buffer_mean_bytes),
            ("wavelength_usage", self.wavelength_usage),
        ]
    }

    fn csv_record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.6}");
        vec![
            self.algorithm.to_string(),
            self.epoch_ns.to_string(),
            self.requests_per_node.to_string(),
            self.distribution.clone(),
            format!("{:.2}", self.load),
            self.seed.to_string(),
            self.epochs.to_string(),
            f(self.throughput),
            f(self.raw_throughput),
            f(self.wavelength_usage),
            self.completed_requests.to_string(),
            f(self.latency_mean_ns),
            f(self.latency_median_ns),
            f(self.latency_p99_ns),
            f(self.latency_p999_ns),
            f(self.latency_max_ns),
            f(self.tx_buffer_mean_bytes),
            f(self.sched_buffer_mean_requests),
            f(self.sched_buffer_mean_bytes),
            f(self.mean_iterations_used),
            self.invalidated_requests.to_string(),
            self.saturated.to_string(),
            self.iterations.to_string(),
        ]
    }
}

/// Writes rows under the [`CSV_COLUMNS`] header.
pub fn write_csv<'a, W: Write>(out: W, rows: impl IntoIterator<Item = &'a RunMetrics>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for m in rows {
        w.write_record(m.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// JSON document with the metrics and the full latency CDF.
pub fn to_json(metrics: &RunMetrics, latencies: &Cdf) -> serde_json::Value {
    serde_json::json!({
        "metrics": metrics,
        "latency_cdf": latencies
            .points()
            .into_iter()
            .map(|(ns, f)| serde_json::json!([ns, f]))
            .collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tuning_overhead() {
        assert_eq!(effective_throughput(100, 100, Algorithm::SlotLevel, 360, 20), 0.975);
        let e = effective_throughput(100, 100, Algorithm::EpochLevel, 120, 20);
        assert!((e - (1.0 - 0.5 / 120.0)).abs() < 1e-12);
        assert!((e - 0.995833).abs() < 1e-6);
        assert_eq!(effective_throughput(0, 100, Algorithm::SlotLevel, 360, 20), 0.0);
    }

    #[test]
    fn usage_of_empty_and_full_grids() {
        let g = ResourceGrid::new(4, 4, 3, false);
        assert_eq!(wavelength_usage([&g], Algorithm::SlotLevel), 0.0);
        assert_eq!(wavelength_usage([], Algorithm::EpochLevel), 0.0);

        let mut full = ResourceGrid::new(4, 4, 3, false);
        for slot in 0..3 {
            for w in 0..4 {
                full.assign(w, (w + slot + 1) % 4, w, 1 << slot).unwrap();
            }
        }
        assert_eq!(wavelength_usage([&full], Algorithm::SlotLevel), 1.0);
    }

    #[test]
    fn epoch_usage_counts_locked_wavelengths() {
        let mut g = ResourceGrid::new(64, 64, 18, true);
        for s in 0..32 {
            g.assign(s, s + 32, s * 2, 0b1).unwrap();
        }
        assert_eq!(grid_wavelength_usage(&g, Algorithm::EpochLevel), 0.5);
    }

    #[test]
    fn quantiles() {
        let c = Cdf::new(vec![120]);
        assert_eq!(c.median(), Some(120.0));
        let c = Cdf::new(vec![400, 100, 300, 200]);
        assert_eq!(c.median(), Some(250.0));
        assert_eq!(Cdf::new(vec![]).median(), None);
        assert!(latency_cdf(&[]).is_empty());
    }

    #[test]
    fn p99_of_uniform_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<u64> = (0..10_000).map(|_| rng.random_range(0..=1000)).collect();
        let p99 = Cdf::new(samples).quantile(0.99).unwrap();
        assert!((970.0..=1000.0).contains(&p99), "{p99}");
    }

    #[test]
    fn cdf_steps() {
        let pts = latency_cdf(&[5, 1, 5, 3]);
        assert_eq!(pts, vec![(1, 0.25), (3, 0.5), (5, 1.0)]);
    }

    #[test]
    fn saturation_rule() {
        let rising = [(0.2, 0.1), (0.4, 0.2), (0.6, 0.3)];
        assert_eq!(saturation_point(&rising), Ok(0.6));
        let plateau = [(0.25, 0.2), (0.5, 0.5), (0.75, 0.5), (1.0, 0.5)];
        assert_eq!(saturation_point(&plateau), Ok(0.5));
        let curve = [(0.2, 0.2), (0.4, 0.4), (0.6, 0.41), (0.8, 0.41)];
        assert_eq!(saturation_point(&curve), Ok(0.6));
        assert_eq!(saturation_point(&[(0.1, 0.1)]), Err(MetricsError::TooFewPoints(1)));
    }

    #[test]
    fn csv_header_matches_record_width() {
        let m = RunMetrics {
            algorithm: Algorithm::SlotLevel,
            epoch_ns: 120,
            requests_per_node: 6,
            distribution: "TD1".into(),
            load: 0.5,
            seed: 1,
            epochs: 1,
            throughput: 0.0,
            raw_throughput: 0.0,
            wavelength_usage: 0.0,
            completed_requests: 0,
            latency_mean_ns: 0.0,
            latency_median_ns: 0.0,
            latency_p99_ns: 0.0,
            latency_p999_ns: 0.0,
            latency_max_ns: 0.0,
            tx_buffer_mean_bytes: 0.0,
            sched_buffer_mean_requests: 0.0,
            sched_buffer_mean_bytes: 0.0,
            mean_iterations_used: 0.0,
            invalidated_requests: 0,
            saturated: false,
            iterations: 48,
        };
        assert_eq!(m.csv_record().len(), CSV_COLUMNS.len());
        let mut buf = Vec::new();
        write_csv(&mut buf, [&m]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("algorithm,epoch_ns,"));
    }
}
