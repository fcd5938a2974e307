//! Wavelength contention resolution and timeslot allocation.

use crate::arbiter::RoundRobinArbiter;
use crate::grid::{lowest_slots, ResourceGrid, SlotMask};

use super::ncr::NodePair;
use super::wd::{Decision, WdOutcome};

/// How many slots a WCR winner may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocationPhase {
    /// Epoch-level: as many as requested and available; locks the pair.
    Epoch,
    /// Slot-level coarse: as many as requested and available.
    Coarse,
    /// Slot-level fine: a single slot.
    Fine,
}

/// Slots granted to one pair in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    pub pair: NodePair,
    pub wavelength: usize,
    pub slots: SlotMask,
}

/// Runs the WCR stage: one winner per wavelength, then TA-S/TA-D place
/// the winner's slots on the lowest free indices. `remaining` gives the
/// outstanding slot count of each request index. Losers are simply absent
/// from the result and retry next iteration.
pub fn wcr(
    decisions: &[Decision],
    grid: &mut ResourceGrid,
    wavelength_arbiters: &mut [RoundRobinArbiter],
    phase: AllocationPhase,
    remaining: impl Fn(usize) -> u32,
) -> Vec<Allocation> {
    // best (rank, decision index) per wavelength
    let mut best: Vec<Option<(usize, usize)>> = vec![None; wavelength_arbiters.len()];
    for (i, d) in decisions.iter().enumerate() {
        let WdOutcome::Wavelength(w) = d.outcome else { continue };
        let rank = wavelength_arbiters[w].rank(d.pair.source);
        if best[w].is_none_or(|(r, _)| rank < r) {
            best[w] = Some((rank, i));
        }
    }

    let mut allocations = Vec::new();
    for (wavelength, b) in best.into_iter().enumerate() {
        let Some((_, idx)) = b else { continue };
        let pair = decisions[idx].pair;
        wavelength_arbiters[wavelength].commit(pair.source);

        let free = grid.free_slots(pair.source, pair.destination, wavelength);
        let want = match phase {
            AllocationPhase::Epoch | AllocationPhase::Coarse => remaining(pair.request),
            AllocationPhase::Fine => remaining(pair.request).min(1),
        };
        let slots = lowest_slots(free, want);
        if slots == 0 {
            continue;
        }
        grid.assign(pair.source, pair.destination, wavelength, slots)
            .expect("WCR winners are conflict-free by construction");
        allocations.push(Allocation { pair, wavelength, slots });
    }
    allocations
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decision(s: usize, d: usize, req: usize, w: usize) -> Decision {
        Decision { pair: NodePair { source: s, destination: d, request: req }, outcome: WdOutcome::Wavelength(w) }
    }

    fn arbs(w: usize, n: usize) -> Vec<RoundRobinArbiter> {
        (0..w).map(|_| RoundRobinArbiter::new(n)).collect()
    }

    #[test]
    fn lower_source_wins_shared_wavelength() {
        let mut g = ResourceGrid::new(4, 4, 4, false);
        let ds = [decision(1, 2, 0, 2), decision(3, 0, 1, 2)];
        let out = wcr(&ds, &mut g, &mut arbs(4, 4), AllocationPhase::Coarse, |_| 2);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].pair.source, 1);
        assert_eq!(out[0].slots, 0b0011);
    }

    #[test]
    fn epoch_partial_grant() {
        let mut g = ResourceGrid::new(8, 8, 6, true);
        g.assign(4, 5, 1, 0b000111).unwrap();
        let ds = [decision(0, 1, 0, 1)];
        let out = wcr(&ds, &mut g, &mut arbs(8, 8), AllocationPhase::Epoch, |_| 5);
        assert_eq!(out[0].slots, 0b111000);
        assert_eq!(out[0].slots.count_ones(), 3);
        assert_eq!(g.source_lock(0), Some(1));
    }

    #[test]
    fn fine_phase_grants_one_slot() {
        let mut g = ResourceGrid::new(4, 4, 4, false);
        let out = wcr(&[decision(0, 1, 0, 3)], &mut g, &mut arbs(4, 4), AllocationPhase::Fine, |_| 3);
        assert_eq!(out[0].slots.count_ones(), 1);
    }

    #[test]
    fn non_wavelength_outcomes_are_ignored() {
        let mut g = ResourceGrid::new(4, 4, 4, false);
        let d = Decision { pair: NodePair { source: 0, destination: 1, request: 0 }, outcome: WdOutcome::NoSlots };
        assert!(wcr(&[d], &mut g, &mut arbs(4, 4), AllocationPhase::Coarse, |_| 1).is_empty());
    }
}
