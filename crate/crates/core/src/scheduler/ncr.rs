//! Node contention resolution: reduce per-source candidate requests to a
//! set of node pairs in which every source and destination appears once.

use crate::arbiter::RoundRobinArbiter;
use crate::config::Algorithm;

/// A request offered by one source in the current iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    /// Index into the epoch's request table.
    pub request: usize,
    pub request_id: u64,
    pub destination: usize,
}

/// A contention-free source/destination pair carrying one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodePair {
    pub source: usize,
    pub destination: usize,
    pub request: usize,
}

/// Runs the NCR stage.
///
/// Epoch-level uses only the first candidate of each source. Slot-level
/// first drops candidates already fully granted this epoch (`granted_marks`,
/// indexed by [`Candidate::request`]), then lets the source arbiter pick
/// one destination per source. In both cases the
/// destination arbiters then pick one source per destination.
pub fn ncr(
    candidates: &[Vec<Candidate>],
    algorithm: Algorithm,
    source_arbiters: &mut [RoundRobinArbiter],
    dest_arbiters: &mut [RoundRobinArbiter],
    granted_marks: &[bool],
) -> Vec<NodePair> {
    let n = dest_arbiters.len();
    let granted = |c: &Candidate| granted_marks.get(c.request).copied().unwrap_or(false);
    let mut chosen: Vec<Option<Candidate>> = vec![None; candidates.len()];
    let mut dests = Vec::new();
    for (source, offered) in candidates.iter().enumerate() {
        chosen[source] = match algorithm {
            Algorithm::EpochLevel => offered.first().copied(),
            Algorithm::SlotLevel => {
                dests.clear();
                dests.extend(offered.iter().filter(|c| !granted(c)).map(|c| c.destination));
                source_arbiters[source]
                    .grant_among(&dests)
                    .and_then(|d| offered.iter().find(|c| c.destination == d && !granted(c)).copied())
            }
        };
    }

    // best (rank, source) per destination
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    for (source, c) in chosen.iter().enumerate() {
        let Some(c) = c else { continue };
        let rank = dest_arbiters[c.destination].rank(source);
        if best[c.destination].is_none_or(|(r, _)| rank < r) {
            best[c.destination] = Some((rank, source));
        }
    }
    let mut pairs = Vec::with_capacity(n);
    for (destination, b) in best.into_iter().enumerate() {
        if let Some((_, source)) = b {
            dest_arbiters[destination].commit(source);
            let c = chosen[source].expect("winner offered a candidate");
            pairs.push(NodePair { source, destination, request: c.request });
        }
    }
    pairs.sort_unstable_by_key(|p| p.source);
    pairs
}
