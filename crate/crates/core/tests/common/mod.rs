//! Checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use imitation_core::config::all_coop_windows;
use imitation_core::cycle::{
    barrier_threshold, decompose, step, step_in_order, CycleDynamics, RunKind,
};
use imitation_core::{classify, CounterRng, CycleState, GameParams, InitialSpec, Zone};

/// Per-step monotonicity: in A no defector becomes a cooperator, in F no
/// cooperator becomes a defector.
pub fn check_monotone(
    state: &CycleState,
    params: &GameParams,
    seed: u64,
    steps: usize,
) -> Result<(), String> {
    let zone = classify(params).zone;
    let rng = CounterRng::new(seed);
    let mut cur = state.clone();
    for _ in 0..steps {
        let next = step(&cur, params, &rng);
        for i in 0..cur.len() {
            let (before, after) = (cur.get(i), next.get(i));
            let bad = match zone {
                Zone::A => !before && after,
                Zone::F => before && !after,
                _ => return Err(format!("{zone} is not a monotone region")),
            };
            if bad {
                return Err(format!(
                    "vertex {i} switched {} -> {} in {zone} at generation {}: {}",
                    before as u8,
                    after as u8,
                    cur.generation(),
                    cur.to_bitstring()
                ));
            }
        }
        cur = next;
    }
    Ok(())
}

/// One-step barrier checks in B..E: a run at or above the barrier threshold
/// keeps all but its two end vertices, and a run of length >= 2 whose
/// flanking d-runs have length >= 2 keeps every vertex. In D and E (threshold
/// 2) no run of length >= 2 loses any vertex.
pub fn check_barrier_step(
    state: &CycleState,
    params: &GameParams,
    seed: u64,
) -> Result<(), String> {
    let zone = classify(params).zone;
    let Some(threshold) = barrier_threshold(zone) else {
        return Err(format!("{zone} has no barrier threshold"));
    };
    let n = state.len();
    let next = step(state, params, &CounterRng::new(seed));
    let runs = decompose(state).runs;
    if runs.len() < 2 {
        return Ok(());
    }
    for (k, run) in runs.iter().enumerate() {
        if run.kind != RunKind::Coop || run.len < 2 {
            continue;
        }
        let left = &runs[(k + runs.len() - 1) % runs.len()];
        let right = &runs[(k + 1) % runs.len()];
        let flanked = left.len >= 2 && right.len >= 2;
        let keep_all = flanked || threshold == 2;
        let (lo, hi) = if keep_all {
            (0, run.len)
        } else if run.len >= threshold {
            (1, run.len - 1)
        } else {
            continue;
        };
        for off in lo..hi {
            let v = (run.start + off) % n;
            if !next.get(v) {
                return Err(format!(
                    "{zone}: vertex {v} of c-run ({}, {}) defected: {} -> {}",
                    run.start,
                    run.len,
                    state.to_bitstring(),
                    next.to_bitstring()
                ));
            }
        }
    }
    Ok(())
}

/// The word-parallel step and a full scan in `order` agree.
pub fn check_sync(
    state: &CycleState,
    params: &GameParams,
    seed: u64,
    order: &[usize],
) -> Result<(), String> {
    let rng = CounterRng::new(seed);
    let fast = step(state, params, &rng);
    let scan = step_in_order(state, params, &rng, order);
    if fast.to_bitstring() != scan.to_bitstring() {
        return Err(format!(
            "order {order:?} gave {} but the packed step gave {} from {}",
            scan.to_bitstring(),
            fast.to_bitstring(),
            state.to_bitstring()
        ));
    }
    Ok(())
}

/// A steady state has no positive flip probability and is a fixed point.
pub fn check_steady_closure(
    state: &CycleState,
    params: &GameParams,
    seed: u64,
) -> Result<(), String> {
    let dynamics = CycleDynamics::new(params);
    if !dynamics.is_steady(state) {
        return Ok(());
    }
    if let Some(i) = (0..state.len()).find(|&i| dynamics.flip_prob(state, i) > 0.0) {
        return Err(format!(
            "steady state {} has vertex {i} able to flip",
            state.to_bitstring()
        ));
    }
    let next = step(state, params, &CounterRng::new(seed));
    if next.to_bitstring() != state.to_bitstring() {
        return Err(format!("steady state {} moved", state.to_bitstring()));
    }
    Ok(())
}

/// Sample mean of the all-cooperator window count `r_len`.
pub fn mean_window_count(n: usize, p_c: f64, len: usize, draws: usize, seed: u64) -> f64 {
    let total: usize = (0..draws)
        .map(|k| {
            let s = InitialSpec::new(n, p_c, seed.wrapping_add(k as u64))
                .unwrap()
                .sample_seeded();
            all_coop_windows(&s, len)
        })
        .sum();
    total as f64 / draws as f64
}

/// Fraction of sampled rings with no `k` consecutive cooperators, and the
/// bound `exp(-p^k floor(n/k))`.
pub fn barrier_absence(n: usize, p_c: f64, k: usize, draws: usize, seed: u64) -> (f64, f64) {
    let missing = (0..draws)
        .filter(|&d| {
            let s = InitialSpec::new(n, p_c, seed.wrapping_add(d as u64))
                .unwrap()
                .sample_seeded();
            all_coop_windows(&s, k) == 0
        })
        .count();
    let bound = (-p_c.powi(k as i32) * (n / k) as f64).exp();
    (missing as f64 / draws as f64, bound)
}

/// Zone representatives away from every border line.
pub fn interior_points() -> Vec<(Zone, f64, f64)> {
    vec![
        (Zone::A, -0.5, 1.2),
        (Zone::B, 0.2, 0.9),
        (Zone::C, 0.8, 1.2),
        (Zone::D, -0.2, 0.3),
        (Zone::E, 0.5, 0.7),
        (Zone::F, 0.5, 0.3),
    ]
}

/// One point on each border segment.
pub fn border_points() -> Vec<(Zone, f64, f64)> {
    vec![
        (Zone::BorderAB, 0.2, 1.2),
        (Zone::BorderBD, 0.2, 0.6),
        (Zone::BorderED, 0.2, 0.4),
        (Zone::BorderBC, 0.6, 1.2),
        (Zone::BorderFE, 0.5, 0.5),
    ]
}
