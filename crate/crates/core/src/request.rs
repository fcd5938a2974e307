//! Node-to-node demands and the grants issued for them.

use serde::{Deserialize, Serialize};

/// One node-to-node demand for a number of timeslots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    /// Unique within a run.
    pub id: u64,
    pub source: usize,
    pub destination: usize,
    pub slots_requested: u32,
    /// Slots still to be granted after partial grants.
    pub remaining_slots: u32,
    /// First epoch in which the scheduler may see this request.
    pub origin_epoch: u64,
    pub generated_at_ns: u64,
    /// Number of epochs this request has been carried in the scheduler buffer.
    pub retry_count: u32,
}

impl Request {
    pub fn new(
        id: u64,
        source: usize,
        destination: usize,
        slots: u32,
        origin_epoch: u64,
        generated_at_ns: u64,
    ) -> Self {
        Request {
            id,
            source,
            destination,
            slots_requested: slots,
            remaining_slots: slots,
            origin_epoch,
            generated_at_ns,
            retry_count: 0,
        }
    }

    pub fn granted_slots(&self) -> u32 {
        self.slots_requested - self.remaining_slots
    }

    /// Checks the record invariants against an epoch of `slots_per_epoch`.
    pub fn is_well_formed(&self, n_nodes: usize, slots_per_epoch: usize) -> bool {
        self.source < n_nodes
            && self.destination < n_nodes
            && self.source != self.destination
            && self.slots_requested >= 1
            && self.slots_requested as usize <= slots_per_epoch
            && self.remaining_slots <= self.slots_requested
    }

    /// FIFO key used to order the scheduler buffer.
    pub(crate) fn buffer_key(&self) -> (u64, usize, u64) {
        (self.origin_epoch, self.source, self.id)
    }
}

/// A wavelength/timeslot allocation handed to the data plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub request_id: u64,
    pub source: usize,
    pub destination: usize,
    pub wavelength: usize,
    /// Timeslot indices within the execution epoch, ascending.
    pub slots: Vec<usize>,
    /// Epoch in which the grant is executed.
    pub epoch: u64,
    /// End of the last granted slot.
    pub completed_at_ns: u64,
}

impl Grant {
    pub fn slot_count(&self) -> u32 {
        self.slots.len() as u32
    }
}
