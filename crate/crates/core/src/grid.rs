//! Per-epoch wavelength × timeslot occupancy with source and destination
//! projections.
//!
//! Occupancy is stored twice: as explicit cell/view tables that the audit
//! walks, and as per-row slot bitmaps that the scheduler uses for its
//! availability checks. [`ResourceGrid::audit`] checks that both agree.

use serde::Serialize;
use thiserror::Error;

use crate::config::MAX_SLOTS_PER_EPOCH;

/// One bit per timeslot of an epoch.
pub type SlotMask = u128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("cell (wavelength {wavelength}, slot {slot}) already owned by {owner:?}")]
    CellTaken { wavelength: usize, slot: usize, owner: (usize, usize) },
    #[error("source {node} already transmits in slot {slot}")]
    SourceBusy { node: usize, slot: usize },
    #[error("destination {node} already receives in slot {slot}")]
    DestinationBusy { node: usize, slot: usize },
    #[error("{side} {node} is locked to wavelength {locked}, not {requested}")]
    LockViolation { side: &'static str, node: usize, locked: usize, requested: usize },
    #[error("slot mask {mask:#x} is empty or outside the epoch")]
    BadSlots { mask: SlotMask },
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("projection mismatch: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceGrid {
    n_nodes: usize,
    n_wavelengths: usize,
    n_slots: usize,
    epoch_locking: bool,
    cells: Vec<Option<(usize, usize)>>,
    source_view: Vec<Option<usize>>,
    dest_view: Vec<Option<usize>>,
    lock_source: Vec<Option<usize>>,
    lock_dest: Vec<Option<usize>>,
    #[serde(skip)]
    wavelength_busy: Vec<SlotMask>,
    #[serde(skip)]
    source_busy: Vec<SlotMask>,
    #[serde(skip)]
    dest_busy: Vec<SlotMask>,
}

/// Iterates the set bits of a slot mask in ascending order.
pub fn slots_of(mask: SlotMask) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let slot = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(slot)
        }
    })
}

/// The `count` lowest set bits of `mask`.
pub fn lowest_slots(mask: SlotMask, count: u32) -> SlotMask {
    let mut out = 0;
    let mut rest = mask;
    for _ in 0..count {
        if rest == 0 {
            break;
        }
        let low = rest & rest.wrapping_neg();
        out |= low;
        rest ^= low;
    }
    out
}

impl ResourceGrid {
    /// An empty grid. With `epoch_locking`, every node may use at most one
    /// wavelength per direction across the whole epoch.
    pub fn new(n_nodes: usize, n_wavelengths: usize, n_slots: usize, epoch_locking: bool) -> Self {
        assert!((1..=MAX_SLOTS_PER_EPOCH).contains(&n_slots), "slots per epoch must be in 1..={MAX_SLOTS_PER_EPOCH}");
        ResourceGrid {
            n_nodes,
            n_wavelengths,
            n_slots,
            epoch_locking,
            cells: vec![None; n_wavelengths * n_slots],
            source_view: vec![None; n_nodes * n_slots],
            dest_view: vec![None; n_nodes * n_slots],
            lock_source: vec![None; n_nodes],
            lock_dest: vec![None; n_nodes],
            wavelength_busy: vec![0; n_wavelengths],
            source_busy: vec![0; n_nodes],
            dest_busy: vec![0; n_nodes],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_wavelengths(&self) -> usize {
        self.n_wavelengths
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn epoch_locking(&self) -> bool {
        self.epoch_locking
    }

    pub fn full_mask(&self) -> SlotMask {
        if self.n_slots == 128 {
            SlotMask::MAX
        } else {
            (1 << self.n_slots) - 1
        }
    }

    pub fn cell(&self, wavelength: usize, slot: usize) -> Option<(usize, usize)> {
        self.cells[wavelength * self.n_slots + slot]
    }

    pub fn source_wavelength(&self, source: usize, slot: usize) -> Option<usize> {
        self.source_view[source * self.n_slots + slot]
    }

    pub fn dest_wavelength(&self, destination: usize, slot: usize) -> Option<usize> {
        self.dest_view[destination * self.n_slots + slot]
    }

    /// Wavelength the source transmitter is locked to (epoch locking only).
    pub fn source_lock(&self, source: usize) -> Option<usize> {
        self.lock_source[source]
    }

    pub fn dest_lock(&self, destination: usize) -> Option<usize> {
        self.lock_dest[destination]
    }

    pub fn source_busy(&self, source: usize) -> SlotMask {
        self.source_busy[source]
    }

    pub fn dest_busy(&self, destination: usize) -> SlotMask {
        self.dest_busy[destination]
    }

    pub fn wavelength_busy(&self, wavelength: usize) -> SlotMask {
        self.wavelength_busy[wavelength]
    }

    /// Slots in which neither endpoint is in use.
    pub fn mutual_free(&self, source: usize, destination: usize) -> SlotMask {
        self.full_mask() & !self.source_busy[source] & !self.dest_busy[destination]
    }

    /// Slots usable by `source → destination` on `wavelength`.
    pub fn free_slots(&self, source: usize, destination: usize, wavelength: usize) -> SlotMask {
        self.mutual_free(source, destination) & !self.wavelength_busy[wavelength]
    }

    /// Claims `slots` on `wavelength` for the pair, updating every view.
    pub fn assign(
        &mut self,
        source: usize,
        destination: usize,
        wavelength: usize,
        slots: SlotMask,
    ) -> Result<(), GridError> {
        if source >= self.n_nodes || destination >= self.n_nodes || wavelength >= self.n_wavelengths {
            return Err(GridError::OutOfRange(format!("pair {source}->{destination} on wavelength {wavelength}")));
        }
        if slots == 0 || slots & !self.full_mask() != 0 {
            return Err(GridError::BadSlots { mask: slots });
        }
        if self.epoch_locking {
            for (side, lock, node) in [
                ("source", self.lock_source[source], source),
                ("destination", self.lock_dest[destination], destination),
            ] {
                if let Some(locked) = lock {
                    if locked != wavelength {
                        return Err(GridError::LockViolation { side, node, locked, requested: wavelength });
                    }
                }
            }
        }
        if let Some(slot) = slots_of(slots & self.wavelength_busy[wavelength]).next() {
            let owner = self.cell(wavelength, slot).unwrap_or((usize::MAX, usize::MAX));
            return Err(GridError::CellTaken { wavelength, slot, owner });
        }
        if let Some(slot) = slots_of(slots & self.source_busy[source]).next() {
            return Err(GridError::SourceBusy { node: source, slot });
        }
        if let Some(slot) = slots_of(slots & self.dest_busy[destination]).next() {
            return Err(GridError::DestinationBusy { node: destination, slot });
        }

        for slot in slots_of(slots) {
            self.cells[wavelength * self.n_slots + slot] = Some((source, destination));
            self.source_view[source * self.n_slots + slot] = Some(wavelength);
            self.dest_view[destination * self.n_slots + slot] = Some(wavelength);
        }
        self.wavelength_busy[wavelength] |= slots;
        self.source_busy[source] |= slots;
        self.dest_busy[destination] |= slots;
        if self.epoch_locking {
            self.lock_source[source] = Some(wavelength);
            self.lock_dest[destination] = Some(wavelength);
        }
        Ok(())
    }

    pub fn occupied_cells(&self) -> usize {
        self.wavelength_busy.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Wavelengths carrying at least one slot this epoch.
    pub fn wavelengths_in_use(&self) -> usize {
        self.wavelength_busy.iter().filter(|m| **m != 0).count()
    }

    /// Full consistency check: one owner per cell, views that project the
    /// cell table exactly, bitmaps matching the tables, and (with epoch
    /// locking) a single wavelength per node and direction.
    pub fn audit(&self) -> Result<(), GridError> {
        let t = self.n_slots;
        let mut src_seen = vec![None; self.n_nodes * t];
        let mut dst_seen = vec![None; self.n_nodes * t];
        for w in 0..self.n_wavelengths {
            let mut mask = 0;
            for slot in 0..t {
                let Some((s, d)) = self.cells[w * t + slot] else { continue };
                mask |= 1 << slot;
                if s >= self.n_nodes || d >= self.n_nodes {
                    return Err(GridError::OutOfRange(format!("cell owner {s}->{d}")));
                }
                if src_seen[s * t + slot].replace(w).is_some() {
                    return Err(GridError::SourceBusy { node: s, slot });
                }
                if dst_seen[d * t + slot].replace(w).is_some() {
                    return Err(GridError::DestinationBusy { node: d, slot });
                }
            }
            if mask != self.wavelength_busy[w] {
                return Err(GridError::Inconsistent(format!("wavelength {w} bitmap")));
            }
        }
        if src_seen != self.source_view {
            return Err(GridError::Inconsistent("source view".into()));
        }
        if dst_seen != self.dest_view {
            return Err(GridError::Inconsistent("destination view".into()));
        }
        for node in 0..self.n_nodes {
            let view_mask = |view: &[Option<usize>]| {
                (0..t).filter(|&slot| view[node * t + slot].is_some()).fold(0, |m, slot| m | (1 << slot))
            };
            if view_mask(&self.source_view) != self.source_busy[node]
                || view_mask(&self.dest_view) != self.dest_busy[node]
            {
                return Err(GridError::Inconsistent(format!("node {node} bitmap")));
            }
            if self.epoch_locking {
                for (side, view, lock) in [
                    ("source", &self.source_view, self.lock_source[node]),
                    ("destination", &self.dest_view, self.lock_dest[node]),
                ] {
                    for slot in 0..t {
                        if let Some(w) = view[node * t + slot] {
                            if lock != Some(w) {
                                return Err(GridError::LockViolation {
                                    side,
                                    node,
                                    locked: lock.unwrap_or(usize::MAX),
                                    requested: w,
                                });
                            }
                        }
                    }
                }
            } else if self.lock_source[node].is_some() || self.lock_dest[node].is_some() {
                return Err(GridError::Inconsistent(format!("node {node} locked without epoch locking")));
            }
        }
        Ok(())
    }
}
