//! Scheduler output against the brute-force optimum on small instances.

mod common;

use common::{brute_force_optimum, request_choices, tiny_config, up_to_two};
use ocs_core::{Algorithm, Request, SchedulerState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(per_node: &[Vec<(usize, u32)>]) -> Vec<Request> {
    let mut id = 0;
    let mut out = Vec::new();
    for (s, reqs) in per_node.iter().enumerate() {
        for &(d, size) in reqs {
            out.push(Request::new(id, s, d, size, 0, 0));
            id += 1;
        }
    }
    out
}

/// Grants of one epoch for each algorithm, checked against the optimum.
fn check(n: usize, slots: usize, requests: &[Request], totals: &mut [u64; 3]) {
    let optimum = brute_force_optimum(requests, slots);
    totals[2] += optimum;
    for (k, alg) in [Algorithm::SlotLevel, Algorithm::EpochLevel].into_iter().enumerate() {
        let cfg = tiny_config(n, slots, alg);
        let mut st = SchedulerState::new(&cfg);
        let (out, grid) = st.schedule_epoch(0, requests.to_vec(), &cfg);
        grid.audit().unwrap();
        let granted = out.granted_slots();
        assert!(granted <= optimum, "{alg} granted {granted} > optimum {optimum} for {requests:?}");
        totals[k] += granted;
    }
}

#[test]
fn optimum_of_known_instances() {
    let r = |s, d, size| Request::new(0, s, d, size, 0, 0);
    assert_eq!(brute_force_optimum(&[], 3), 0);
    // two sources into one destination over 3 slots
    assert_eq!(brute_force_optimum(&[r(0, 2, 3), r(1, 2, 3)], 3), 3);
    // a 3-cycle fits completely
    assert_eq!(brute_force_optimum(&[r(0, 1, 2), r(1, 2, 2), r(2, 0, 2)], 2), 6);
    // one source limited by its own T
    assert_eq!(brute_force_optimum(&[r(0, 1, 2), r(0, 2, 2)], 3), 3);
}

#[test]
fn exhaustive_up_to_three_nodes() {
    for n in 2..=3 {
        for slots in 1..=3 {
            let sets: Vec<_> = (0..n).map(|s| up_to_two(&request_choices(n, s, slots))).collect();
            let mut totals = [0u64; 3];
            let mut idx = vec![0usize; n];
            loop {
                let per_node: Vec<_> = (0..n).map(|s| sets[s][idx[s]].clone()).collect();
                check(n, slots, &build(&per_node), &mut totals);
                // odometer over the per-node choices
                let mut k = 0;
                while k < n {
                    idx[k] += 1;
                    if idx[k] < sets[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == n {
                    break;
                }
            }
            println!("n={n} T={slots}: slot-level {} epoch-level {} optimum {}", totals[0], totals[1], totals[2]);
            assert!(totals[0] >= totals[1], "n={n} T={slots}: slot-level {} < epoch-level {}", totals[0], totals[1]);
        }
    }
}

#[test]
fn randomized_four_nodes() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for slots in 1..=3 {
        let choices: Vec<_> = (0..n).map(|s| request_choices(n, s, slots)).collect();
        let mut totals = [0u64; 3];
        for _ in 0..20_000 {
            let per_node: Vec<Vec<(usize, u32)>> = (0..n)
                .map(|s| {
                    (0..rng.random_range(0..=2)).map(|_| choices[s][rng.random_range(0..choices[s].len())]).collect()
                })
                .collect();
            check(n, slots, &build(&per_node), &mut totals);
        }
        println!("n=4 T={slots}: slot-level {} epoch-level {} optimum {}", totals[0], totals[1], totals[2]);
        // with one slot there is nothing to retune and the two are equivalent
        if slots > 1 {
            assert!(totals[0] >= totals[1]);
        }
        assert!(totals[0] as f64 >= 0.8 * totals[2] as f64, "slot-level {totals:?}");
    }
}
