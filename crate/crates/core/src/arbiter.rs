//! Programmable-priority round-robin arbiter.
//!
//! The pointer marks the highest-priority requester. A grant goes to the
//! first asserted request at or after the pointer (wrapping), and the
//! pointer then moves one past the winner. Without a grant the pointer
//! stays put.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArbiterError {
    #[error("request vector has {got} bits, arbiter width is {width}")]
    WidthMismatch { width: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRobinArbiter {
    width: usize,
    pointer: usize,
}

impl RoundRobinArbiter {
    pub fn new(width: usize) -> Self {
        Self::with_pointer(width, 0)
    }

    pub fn with_pointer(width: usize, pointer: usize) -> Self {
        assert!(width > 0, "arbiter needs at least one requester");
        assert!(pointer < width, "pointer {pointer} out of range for width {width}");
        RoundRobinArbiter { width, pointer }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pointer(&self) -> usize {
        self.pointer
    }

    /// Arbitrates one request vector, bit `i` set meaning requester `i`
    /// wants the resource.
    pub fn arbitrate(&mut self, requests: &[bool]) -> Result<Option<usize>, ArbiterError> {
        if requests.len() != self.width {
            return Err(ArbiterError::WidthMismatch { width: self.width, got: requests.len() });
        }
        let winner = (0..self.width).map(|offset| (self.pointer + offset) % self.width).find(|&i| requests[i]);
        if let Some(w) = winner {
            self.pointer = (w + 1) % self.width;
        }
        Ok(winner)
    }

    /// Same arbitration over a sparse list of requester indices. Duplicate
    /// indices are harmless.
    pub fn grant_among(&mut self, requesters: &[usize]) -> Option<usize> {
        let winner = requesters.iter().copied().min_by_key(|&r| self.rank(r))?;
        self.commit(winner);
        Some(winner)
    }

    /// Distance of `requester` from the pointer; the lowest rank wins.
    /// Lets callers that see requests one at a time pick the winner
    /// themselves and then [`commit`](Self::commit) it.
    pub fn rank(&self, requester: usize) -> usize {
        debug_assert!(requester < self.width, "requester {requester} outside width {}", self.width);
        (requester + self.width - self.pointer) % self.width
    }

    /// Moves the pointer past `winner`, as after a grant.
    pub fn commit(&mut self, winner: usize) {
        self.pointer = (winner + 1) % self.width;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(width: usize, value: u32) -> Vec<bool> {
        (0..width).map(|i| value >> i & 1 == 1).collect()
    }

    #[test]
    fn empty_vector_keeps_pointer() {
        let mut arb = RoundRobinArbiter::with_pointer(4, 2);
        assert_eq!(arb.arbitrate(&bits(4, 0b0000)), Ok(None));
        assert_eq!(arb.pointer(), 2);
    }

    #[test]
    fn wraps_past_pointer() {
        let mut arb = RoundRobinArbiter::with_pointer(4, 2);
        assert_eq!(arb.arbitrate(&bits(4, 0b1010)), Ok(Some(3)));
        assert_eq!(arb.pointer(), 0);
    }

    #[test]
    fn full_vector_cycles() {
        let mut arb = RoundRobinArbiter::new(4);
        let grants: Vec<_> = (0..4).map(|_| arb.arbitrate(&bits(4, 0b1111)).unwrap().unwrap()).collect();
        assert_eq!(grants, vec![0, 1, 2, 3]);
    }

    #[test]
    fn width_mismatch() {
        let mut arb = RoundRobinArbiter::new(4);
        assert_eq!(arb.arbitrate(&[true, false]), Err(ArbiterError::WidthMismatch { width: 4, got: 2 }));
    }

    #[test]
    fn sparse_form_matches() {
        let mut arb = RoundRobinArbiter::with_pointer(4, 2);
        assert_eq!(arb.grant_among(&[1, 3]), Some(3));
        assert_eq!(arb.pointer(), 0);
        assert_eq!(arb.grant_among(&[]), None);
        assert_eq!(arb.pointer(), 0);
    }

    proptest! {
        #[test]
        fn grant_is_a_requester_and_work_conserving(width in 1usize..40, pointer_seed in 0usize..1000, mask in any::<u64>()) {
            let pointer = pointer_seed % width;
            let req: Vec<bool> = (0..width).map(|i| mask >> i & 1 == 1).collect();
            let mut arb = RoundRobinArbiter::with_pointer(width, pointer);
            let got = arb.arbitrate(&req).unwrap();
            match got {
                Some(g) => {
                    prop_assert!(req[g]);
                    prop_assert_eq!(arb.pointer(), (g + 1) % width);
                    // nothing asserted strictly between pointer and winner
                    let mut i = pointer;
                    while i != g {
                        prop_assert!(!req[i]);
                        i = (i + 1) % width;
                    }
                }
                None => {
                    prop_assert!(req.iter().all(|b| !b));
                    prop_assert_eq!(arb.pointer(), pointer);
                }
            }
        }

        #[test]
        fn dense_and_sparse_agree(width in 1usize..40, pointer_seed in 0usize..1000, mask in any::<u64>()) {
            let pointer = pointer_seed % width;
            let req: Vec<bool> = (0..width).map(|i| mask >> i & 1 == 1).collect();
            let sparse: Vec<usize> = (0..width).filter(|&i| req[i]).rev().collect();
            let mut a = RoundRobinArbiter::with_pointer(width, pointer);
            let mut b = a.clone();
            prop_assert_eq!(a.arbitrate(&req).unwrap(), b.grant_among(&sparse));
            prop_assert_eq!(a, b);
        }

        #[test]
        fn persistent_requester_is_served_within_width(
            width in 2usize..16,
            target_seed in 0usize..100,
            stream in proptest::collection::vec(any::<u16>(), 64),
        ) {
            let target = target_seed % width;
            let mut arb = RoundRobinArbiter::new(width);
            let mut since_grant = 0;
            for word in stream {
                let mut req: Vec<bool> = (0..width).map(|i| word >> i & 1 == 1).collect();
                req[target] = true;
                let g = arb.arbitrate(&req).unwrap();
                since_grant += 1;
                if g == Some(target) {
                    since_grant = 0;
                }
                prop_assert!(since_grant < width);
            }
        }
    }
}
