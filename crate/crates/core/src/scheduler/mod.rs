//! Epoch-level and slot-level wavelength/timeslot schedulers.
//!
//! Each epoch runs up to `I` iterations. The first `i_buf` iterations serve
//! the retry buffer, the rest serve requests that arrived for this epoch.
//! Every iteration is one pass of NCR → WD → WCR over at most one request
//! per source. Whatever is not fully granted at the end of the epoch goes
//! back to the buffer.

mod ncr;
mod rom;
mod wcr;
mod wd;

use std::collections::VecDeque;

use serde::Serialize;

use crate::arbiter::RoundRobinArbiter;
use crate::config::{Algorithm, ValidatedConfig};
use crate::grid::{slots_of, ResourceGrid};
use crate::request::{Grant, Request};

pub use ncr::{ncr, Candidate, NodePair};
pub use rom::WavelengthRom;
pub use wcr::{wcr, Allocation, AllocationPhase};
pub use wd::{wavelength_decision, Decision, WdOutcome};

/// Iterations reserved for the buffer:
/// `min(⌈R_p × buffer / W⌉, ⌊cap × I⌋)`.
pub fn plan_buffer_iterations(
    buffer_size: usize,
    n_wavelengths: usize,
    buffer_coefficient: f64,
    iterations: u32,
    cap: f64,
) -> u32 {
    if buffer_size == 0 {
        return 0;
    }
    let wanted = (buffer_coefficient * buffer_size as f64 / n_wavelengths as f64 - 1e-9).ceil();
    let ceiling = (cap * f64::from(iterations) + 1e-9).floor();
    wanted.min(ceiling).max(0.0) as u32
}

/// What happened to the requests offered in one epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EpochOutcome {
    /// Epoch in which the schedule was computed; grants execute in the next.
    pub epoch: u64,
    pub grants: Vec<Grant>,
    /// Requests whose last slot was granted this epoch.
    pub completed: Vec<Request>,
    /// Requests dropped by WD for conflicting wavelengths, re-buffered.
    pub invalidated: Vec<Request>,
    /// Requests loaded this epoch that go back to the buffer: untried,
    /// partially granted or without a usable slot. Requests deeper in the
    /// buffer than an epoch can reach stay where they are and are not listed.
    pub buffered: Vec<Request>,
    /// Iterations that presented at least one request. The rest of the
    /// budget was idle.
    pub iterations_used: u32,
    pub buffer_iterations: u32,
    pub planned_buffer_iterations: u32,
    pub iteration_budget: u32,
}

impl EpochOutcome {
    pub fn granted_slots(&self) -> u64 {
        self.grants.iter().map(|g| u64::from(g.slot_count())).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EntryState {
    Pending,
    Completed,
    /// Epoch-level residue after a partial grant.
    Partial,
    Invalidated,
    /// No usable slot left for this pair this epoch.
    Blocked,
}

struct Entry {
    req: Request,
    state: EntryState,
    granted_now: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulerState {
    algorithm: Algorithm,
    dest_arbiters: Vec<RoundRobinArbiter>,
    source_arbiters: Vec<RoundRobinArbiter>,
    wavelength_arbiters: Vec<RoundRobinArbiter>,
    rom: WavelengthRom,
    /// Retry buffer, one FIFO per source ordered by (origin_epoch, id).
    buffer: Vec<VecDeque<Request>>,
    buffer_len: usize,
    buffer_pointer: usize,
    /// Per epoch, indexed by position in the epoch's request table.
    granted_marks: Vec<bool>,
}

impl SchedulerState {
    /// Fresh state with all arbiter pointers at zero and a ROM shuffled
    /// from the traffic seed.
    pub fn new(config: &ValidatedConfig) -> Self {
        let rom = WavelengthRom::random(config.n_nodes(), config.n_wavelengths(), config.traffic.seed);
        Self::with_rom(config, rom)
    }

    pub fn with_rom(config: &ValidatedConfig, rom: WavelengthRom) -> Self {
        let n = config.n_nodes();
        let w = config.n_wavelengths();
        let source_arbiters = match config.algorithm() {
            Algorithm::SlotLevel => (0..n).map(|_| RoundRobinArbiter::new(n)).collect(),
            Algorithm::EpochLevel => Vec::new(),
        };
        SchedulerState {
            algorithm: config.algorithm(),
            dest_arbiters: (0..n).map(|_| RoundRobinArbiter::new(n)).collect(),
            source_arbiters,
            wavelength_arbiters: (0..w).map(|_| RoundRobinArbiter::new(n)).collect(),
            rom,
            buffer: vec![VecDeque::new(); n],
            buffer_len: 0,
            buffer_pointer: 0,
            granted_marks: Vec::new(),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    /// Requests waiting for a retry.
    pub fn buffer_len(&self) -> usize {
        self.buffer_len
    }

    /// Buffered requests of one source, oldest first.
    pub fn buffer_of(&self, source: usize) -> impl Iterator<Item = &Request> {
        self.buffer[source].iter()
    }

    /// All buffered requests ordered by origin epoch, then source.
    pub fn buffered(&self) -> Vec<Request> {
        let mut all: Vec<Request> = self.buffer.iter().flatten().cloned().collect();
        all.sort_by_key(Request::buffer_key);
        all
    }

    /// Buffer window the epoch-level pointer stopped at in the last epoch.
    pub fn buffer_pointer(&self) -> usize {
        self.buffer_pointer
    }

    pub fn rom(&self) -> &WavelengthRom {
        &self.rom
    }

    /// Seeds the retry buffer directly (tests and replays).
    pub fn push_buffered(&mut self, req: Request) {
        let queue = &mut self.buffer[req.source];
        let at = queue.partition_point(|r| r.buffer_key() <= req.buffer_key());
        queue.insert(at, req);
        self.buffer_len += 1;
    }

    /// Computes the schedule for the epoch following `epoch`.
    pub fn schedule_epoch(
        &mut self,
        epoch: u64,
        new_requests: Vec<Request>,
        config: &ValidatedConfig,
    ) -> (EpochOutcome, ResourceGrid) {
        let algorithm = self.algorithm;
        assert_eq!(algorithm, config.algorithm(), "state built for another algorithm");
        let n = config.n_nodes();
        let budget = config.iterations;
        let window_depth = config.traffic.requests_per_node as usize;
        let coarse = config.coarse_iterations();
        let mut grid =
            ResourceGrid::new(n, config.n_wavelengths(), config.slots_per_epoch, algorithm == Algorithm::EpochLevel);

        let n_buf = self.buffer_len;
        // Each iteration changes the state of at most one request per source,
        // so nothing deeper than this in a source's queue can be reached.
        let reach = budget as usize + window_depth;
        let mut table: Vec<Entry> = Vec::new();
        let mut from_buffer: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut from_nodes: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (source, queue) in self.buffer.iter_mut().enumerate() {
            let take = queue.len().min(reach);
            for req in queue.drain(..take) {
                from_buffer[source].push(table.len());
                table.push(Entry { req, state: EntryState::Pending, granted_now: 0 });
            }
        }
        let n_loaded = table.len();
        for req in new_requests {
            from_nodes[req.source].push(table.len());
            table.push(Entry { req, state: EntryState::Pending, granted_now: 0 });
        }
        debug_assert!(table.iter().all(|e| e.req.remaining_slots > 0));
        self.granted_marks.clear();
        self.granted_marks.resize(table.len(), false);
        let deepest = from_buffer.iter().map(Vec::len).max().unwrap_or(0);

        let planned = plan_buffer_iterations(
            n_buf,
            config.n_wavelengths(),
            config.scheduler.buffer_coefficient,
            budget,
            config.scheduler.buffer_iteration_cap,
        );
        let mut outcome = EpochOutcome {
            epoch,
            planned_buffer_iterations: planned,
            iteration_budget: budget,
            ..EpochOutcome::default()
        };

        let mut buffer_open = planned > 0;
        let mut window = 0usize;
        let mut heads_buffer = vec![0usize; n];
        let mut heads_nodes = vec![0usize; n];
        let mut offered: Vec<Vec<Candidate>> = vec![Vec::new(); n];

        for iteration in 0..budget {
            if buffer_open && iteration >= planned {
                buffer_open = false;
            }
            let mut in_buffer = false;
            if buffer_open {
                in_buffer = match algorithm {
                    Algorithm::EpochLevel => {
                        // skip windows with nothing left to try
                        while window < deepest && !window_offer(&from_buffer, window, &table, &mut offered) {
                            window += 1;
                        }
                        window < deepest
                    }
                    Algorithm::SlotLevel => {
                        head_offer(&from_buffer, &mut heads_buffer, window_depth, &table, &mut offered)
                    }
                };
                buffer_open = in_buffer;
            }
            if !in_buffer {
                let depth = match algorithm {
                    Algorithm::EpochLevel => 1,
                    Algorithm::SlotLevel => window_depth,
                };
                if !head_offer(&from_nodes, &mut heads_nodes, depth, &table, &mut offered) {
                    break;
                }
            }
            outcome.iterations_used += 1;
            if in_buffer {
                outcome.buffer_iterations += 1;
            }

            let phase = match algorithm {
                Algorithm::EpochLevel => AllocationPhase::Epoch,
                Algorithm::SlotLevel if iteration < coarse => AllocationPhase::Coarse,
                Algorithm::SlotLevel => AllocationPhase::Fine,
            };
            let pairs =
                ncr(&offered, algorithm, &mut self.source_arbiters, &mut self.dest_arbiters, &self.granted_marks);
            let decisions = wavelength_decision(&pairs, &grid, &mut self.rom, algorithm);
            for d in &decisions {
                let entry = &mut table[d.pair.request];
                match d.outcome {
                    WdOutcome::Invalidate => entry.state = EntryState::Invalidated,
                    WdOutcome::NoSlots => entry.state = EntryState::Blocked,
                    WdOutcome::Wavelength(_) => {}
                }
            }
            let allocations =
                wcr(&decisions, &mut grid, &mut self.wavelength_arbiters, phase, |i| table[i].req.remaining_slots);
            for a in allocations {
                let entry = &mut table[a.pair.request];
                let count = a.slots.count_ones();
                entry.req.remaining_slots -= count;
                entry.granted_now += count;
                if entry.req.remaining_slots == 0 {
                    entry.state = EntryState::Completed;
                    self.granted_marks[a.pair.request] = true;
                } else if algorithm == Algorithm::EpochLevel {
                    entry.state = EntryState::Partial;
                }
                let slots: Vec<usize> = slots_of(a.slots).collect();
                let last = *slots.last().expect("allocation has slots") as u64;
                let exec_epoch = epoch + 1;
                outcome.grants.push(Grant {
                    request_id: entry.req.id,
                    source: a.pair.source,
                    destination: a.pair.destination,
                    wavelength: a.wavelength,
                    slots,
                    epoch: exec_epoch,
                    completed_at_ns: exec_epoch * config.epoch_ns() + (last + 1) * config.slot_ns(),
                });
            }

            if in_buffer && algorithm == Algorithm::EpochLevel {
                let (members, granted, pending) = window_progress(&from_buffer, window, &table);
                let threshold = config.scheduler.pointer_shift_threshold;
                if pending == 0 || granted as f64 >= threshold * members as f64 {
                    window += 1;
                }
            }
        }
        self.buffer_pointer = window;

        // Requests left deep in the queues were not looked at but still
        // spent another epoch waiting.
        for req in self.buffer.iter_mut().flatten() {
            req.retry_count += 1;
        }
        let mut returned: Vec<Vec<Request>> = vec![Vec::new(); n];
        for (i, entry) in table.into_iter().enumerate() {
            let mut req = entry.req;
            match entry.state {
                EntryState::Completed => outcome.completed.push(req),
                EntryState::Invalidated => {
                    req.retry_count += 1;
                    outcome.invalidated.push(req.clone());
                    returned[req.source].push(req);
                }
                EntryState::Pending | EntryState::Partial | EntryState::Blocked => {
                    req.retry_count += 1;
                    outcome.buffered.push(req.clone());
                    returned[req.source].push(req);
                }
            }
            if i + 1 == n_loaded {
                // loaded prefixes go back in front of the untouched rest
                for (queue, back) in self.buffer.iter_mut().zip(returned.iter_mut()) {
                    for req in back.drain(..).rev() {
                        queue.push_front(req);
                    }
                }
            }
        }
        for (queue, back) in self.buffer.iter_mut().zip(returned) {
            for req in back {
                let in_order = queue.back().is_none_or(|last| last.buffer_key() <= req.buffer_key());
                queue.push_back(req);
                if !in_order {
                    queue.make_contiguous().sort_by_key(Request::buffer_key);
                }
            }
        }
        self.buffer_len = self.buffer.iter().map(VecDeque::len).sum();
        (outcome, grid)
    }
}

/// Offers the `window`-th buffered request of every source that still has
/// it pending. Returns whether anything was offered.
fn window_offer(lists: &[Vec<usize>], window: usize, table: &[Entry], offered: &mut [Vec<Candidate>]) -> bool {
    let mut any = false;
    for (list, out) in lists.iter().zip(offered.iter_mut()) {
        out.clear();
        if let Some(&i) = list.get(window) {
            if table[i].state == EntryState::Pending {
                out.push(candidate(i, table));
                any = true;
            }
        }
    }
    any
}

/// (members, granted, still pending) of one epoch-level buffer window.
fn window_progress(lists: &[Vec<usize>], window: usize, table: &[Entry]) -> (usize, usize, usize) {
    let mut members = 0;
    let mut granted = 0;
    let mut pending = 0;
    for &i in lists.iter().filter_map(|l| l.get(window)) {
        members += 1;
        if table[i].granted_now > 0 {
            granted += 1;
        }
        if table[i].state == EntryState::Pending {
            pending += 1;
        }
    }
    (members, granted, pending)
}

/// Offers the first `depth` pending requests of every source.
fn head_offer(
    lists: &[Vec<usize>],
    heads: &mut [usize],
    depth: usize,
    table: &[Entry],
    offered: &mut [Vec<Candidate>],
) -> bool {
    let mut any = false;
    for ((list, head), out) in lists.iter().zip(heads.iter_mut()).zip(offered.iter_mut()) {
        out.clear();
        while *head < list.len() && table[list[*head]].state != EntryState::Pending {
            *head += 1;
        }
        for &i in &list[*head..] {
            if out.len() == depth {
                break;
            }
            if table[i].state == EntryState::Pending {
                out.push(candidate(i, table));
            }
        }
        any |= !out.is_empty();
    }
    any
}

fn candidate(i: usize, table: &[Entry]) -> Candidate {
    Candidate { request: i, request_id: table[i].req.id, destination: table[i].req.destination }
}
