//! Exact cycle chains against their closed-form expectations and the simulator.

use imitation_core::cycle::run_to_absorption;
use imitation_core::oracle::{cycle_transition_row, solve_absorption};
use imitation_core::rng::derive_seed;
use imitation_core::{CounterRng, CycleState, GameParams, OracleError, Outcome};

fn mask(bits: &str) -> usize {
    CycleState::from_bitstring(bits).unwrap().mask() as usize
}

#[test]
fn region_a_start_dies_out() {
    let p = GameParams::new(-0.5, 1.8).unwrap();
    let chain = solve_absorption(8, &p).unwrap();
    let start = mask("00111000");
    assert!((chain.prob_into(start, 0) - 1.0).abs() < 1e-9);
    assert!(chain.expected_time[start].is_finite());
    assert!(chain.max_row_defect() < 1e-12);
}

#[test]
fn region_f_lone_cooperator_takes_over() {
    let p = GameParams::new(0.5, 0.3).unwrap();
    let chain = solve_absorption(6, &p).unwrap();
    assert!((chain.prob_into(mask("000001"), 63) - 1.0).abs() < 1e-9);
}

#[test]
fn region_a_successors_only_lose_cooperators() {
    let p = GameParams::new(-0.5, 1.8).unwrap();
    let s = CycleState::from_bitstring("0011").unwrap();
    let row = cycle_transition_row(&s, &p).unwrap();
    let allowed = ["0011", "0001", "0010", "0000"].map(mask);
    assert!(row.iter().all(|(to, _)| allowed.contains(to)), "{row:?}");
    assert!((row.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn border_ab_has_mixed_closed_states() {
    let p = GameParams::new(0.2, 1.2).unwrap();
    let chain = solve_absorption(8, &p).unwrap();
    let m = mask("11110000");
    let class = chain.absorbing_class_of(m).expect("11110000 is steady");
    assert_eq!(chain.closed_classes[class], vec![m]);
}

#[test]
fn oversized_rings_are_refused() {
    let p = GameParams::new(0.2, 0.9).unwrap();
    assert!(matches!(
        solve_absorption(21, &p),
        Err(OracleError::TooLarge { .. })
    ));
}

#[test]
fn simulator_frequencies_track_the_chain() {
    // Region B, n = 6: a mixed start that can go either way.
    let p = GameParams::new(0.2, 0.9).unwrap();
    let chain = solve_absorption(6, &p).unwrap();
    let start = mask("111100");
    let init = CycleState::from_mask(6, start as u64).unwrap();
    let runs = 20_000;
    let (mut allc, mut gens) = (0usize, 0.0);
    for r in 0..runs {
        let rep = run_to_absorption(&init, &p, 1_000_000, &CounterRng::new(derive_seed(&[7, r])));
        assert!(rep.outcome.absorbed());
        allc += (rep.outcome == Outcome::AllCooperate) as usize;
        gens += rep.generations as f64;
    }
    let pe = chain.prob_into(start, 63);
    let f = allc as f64 / runs as f64;
    let se = (pe * (1.0 - pe) / runs as f64).sqrt().max(1e-6);
    assert!((f - pe).abs() <= 4.0 * se, "freq {f} vs {pe}");
    let mean = gens / runs as f64;
    let sd = (chain.time_variance[start] / runs as f64).sqrt().max(1e-6);
    assert!(
        (mean - chain.expected_time[start]).abs() <= 4.0 * sd,
        "time {mean} vs {}",
        chain.expected_time[start]
    );
}
