//! Shared helpers for the integration tests.
#![allow(dead_code)]

use ocs_core::{Algorithm, Request, SimConfig, SizeDistribution, ValidatedConfig};

/// W = N, E = 20·T, R = min(2, T) so S_avg stays ≥ 1.
pub fn tiny_config(n: usize, slots: usize, algorithm: Algorithm) -> ValidatedConfig {
    let mut c = SimConfig::default();
    c.network.n_nodes = n;
    c.network.n_wavelengths = n;
    c.network.epoch_ns = 20 * slots as u64;
    c.scheduler.algorithm = algorithm;
    c.traffic.requests_per_node = slots.min(2) as u32;
    c.traffic.distribution = SizeDistribution::Td1;
    c.validate().expect("tiny config is valid")
}

/// Largest number of slots any conflict-free schedule can carry for
/// `requests` in an epoch of `slots` timeslots, found by exhaustive search.
///
/// With W = N each timeslot holds a partial matching of sources to
/// destinations and every matching fits on distinct wavelengths. A slot
/// count y per (source, destination) pair is realisable as `slots`
/// matchings exactly when no node is used more than `slots` times (a
/// bipartite multigraph of degree ≤ T splits into T matchings), so the
/// search runs over y with y ≤ demand of the pair and per-node degrees ≤ T.
pub fn brute_force_optimum(requests: &[Request], slots: usize) -> u64 {
    let n = requests.iter().map(|r| r.source.max(r.destination) + 1).max().unwrap_or(0);
    let mut demand = vec![0u32; n * n];
    for r in requests {
        demand[r.source * n + r.destination] += r.remaining_slots;
    }
    let t = slots as u32;
    let pairs: Vec<(usize, usize, u32)> =
        demand.iter().enumerate().filter(|&(_, &w)| w > 0).map(|(k, &w)| (k / n, k % n, w.min(t))).collect();
    // suffix sums of per-pair caps bound what the remaining pairs can add
    let mut bound = vec![0u64; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        bound[i] = bound[i + 1] + u64::from(pairs[i].2);
    }
    let mut search = Search { pairs: &pairs, bound: &bound, t, tx: vec![0; n], rx: vec![0; n], best: 0 };
    search.run(0, 0);
    search.best
}

struct Search<'a> {
    pairs: &'a [(usize, usize, u32)],
    bound: &'a [u64],
    t: u32,
    tx: Vec<u32>,
    rx: Vec<u32>,
    best: u64,
}

impl Search<'_> {
    fn run(&mut self, i: usize, acc: u64) {
        if acc + self.bound[i] <= self.best {
            return;
        }
        let Some(&(s, d, want)) = self.pairs.get(i) else {
            self.best = acc;
            return;
        };
        let most = want.min(self.t - self.tx[s]).min(self.t - self.rx[d]);
        for y in (0..=most).rev() {
            self.tx[s] += y;
            self.rx[d] += y;
            self.run(i + 1, acc + u64::from(y));
            self.tx[s] -= y;
            self.rx[d] -= y;
        }
    }
}

/// Every request a node can issue: (destination, size) with size ≤ T.
pub fn request_choices(n: usize, source: usize, slots: usize) -> Vec<(usize, u32)> {
    (0..n).filter(|&d| d != source).flat_map(|d| (1..=slots as u32).map(move |s| (d, s))).collect()
}

/// Multisets of at most two requests drawn from `choices`.
pub fn up_to_two(choices: &[(usize, u32)]) -> Vec<Vec<(usize, u32)>> {
    let mut sets = vec![vec![]];
    for (i, &a) in choices.iter().enumerate() {
        sets.push(vec![a]);
        for &b in &choices[i..] {
            sets.push(vec![a, b]);
        }
    }
    sets
}
