//! Wavelength decision: pick a wavelength for each contention-free pair
//! from the endpoints' existing assignments or the wavelength ROM.

use crate::config::Algorithm;
use crate::grid::ResourceGrid;

use super::ncr::NodePair;
use super::rom::WavelengthRom;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WdOutcome {
    /// Proceed to WCR on this wavelength.
    Wavelength(usize),
    /// Endpoints hold different wavelengths; out for this epoch.
    Invalidate,
    /// No usable wavelength/timeslot for the pair; buffered.
    NoSlots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub pair: NodePair,
    pub outcome: WdOutcome,
}

/// Runs the WD stage against the grid as it stood at the start of the
/// iteration.
///
/// Epoch-level reads the per-epoch locks: two different locks invalidate
/// the request, one lock (or two equal ones) is followed, and with no lock
/// the ROM supplies the wavelength. Slot-level always uses the ROM. ROM
/// entries are read from the source's pointer onwards and the first one
/// with a timeslot free at both endpoints is taken. A pair whose wavelength
/// has no such slot is buffered.
pub fn wavelength_decision(
    pairs: &[NodePair],
    grid: &ResourceGrid,
    rom: &mut WavelengthRom,
    algorithm: Algorithm,
) -> Vec<Decision> {
    pairs
        .iter()
        .map(|&pair| {
            let outcome = decide(pair, grid, rom, algorithm);
            Decision { pair, outcome }
        })
        .collect()
}

fn decide(pair: NodePair, grid: &ResourceGrid, rom: &mut WavelengthRom, algorithm: Algorithm) -> WdOutcome {
    let NodePair { source, destination, .. } = pair;
    if grid.mutual_free(source, destination) == 0 {
        return WdOutcome::NoSlots;
    }
    let forced = match algorithm {
        Algorithm::EpochLevel => match (grid.source_lock(source), grid.dest_lock(destination)) {
            (Some(a), Some(b)) if a != b => return WdOutcome::Invalidate,
            (Some(a), _) | (None, Some(a)) => Some(a),
            (None, None) => None,
        },
        Algorithm::SlotLevel => None,
    };
    match forced {
        Some(w) if grid.free_slots(source, destination, w) != 0 => WdOutcome::Wavelength(w),
        Some(_) => WdOutcome::NoSlots,
        None => match rom.next_usable(source, |w| grid.free_slots(source, destination, w) != 0) {
            Some(w) => WdOutcome::Wavelength(w),
            None => WdOutcome::NoSlots,
        },
    }
}
