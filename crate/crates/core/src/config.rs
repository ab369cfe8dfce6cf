//! Random initial configurations and the statistics bounded for them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cycle::{decompose, CycleState};
use crate::error::DomainError;

/// I.i.d. start: every vertex cooperates with probability `p_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialSpec {
    pub n: usize,
    pub p_c: f64,
    pub seed: u64,
}

impl InitialSpec {
    pub fn new(n: usize, p_c: f64, seed: u64) -> Result<Self, DomainError> {
        if n < 3 {
            return Err(DomainError::CycleTooSmall(n));
        }
        if !(0.0..=1.0).contains(&p_c) {
            return Err(DomainError::Probability(p_c));
        }
        Ok(Self { n, p_c, seed })
    }

    /// Draws the configuration from the stored seed.
    pub fn sample_seeded(&self) -> CycleState {
        sample(self, &mut ChaCha8Rng::seed_from_u64(self.seed))
    }
}

pub fn sample<R: Rng + ?Sized>(spec: &InitialSpec, rng: &mut R) -> CycleState {
    let bits: Vec<bool> = (0..spec.n).map(|_| rng.random_bool(spec.p_c)).collect();
    CycleState::from_bits(&bits).expect("n validated by InitialSpec")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigStats {
    pub longest_c_run: usize,
    pub longest_d_run: usize,
    pub longest_alternating: usize,
    pub longest_non_barrier: usize,
    /// `(ℓ, r_ℓ)`: number of (possibly overlapping) length-ℓ windows of the
    /// ring that are all cooperators.
    pub window_counts: Vec<(usize, usize)>,
}

pub fn config_stats(state: &CycleState, window_lengths: &[usize]) -> ConfigStats {
    let d = decompose(state);
    let window_counts = window_lengths
        .iter()
        .map(|&l| (l, all_coop_windows(state, l)))
        .collect();
    ConfigStats {
        longest_c_run: d.longest_c_run,
        longest_d_run: d.longest_d_run,
        longest_alternating: d.longest_alternating,
        longest_non_barrier: d.longest_non_barrier,
        window_counts,
    }
}

/// `r_ℓ`, counted over all `n` cyclic windows.
pub fn all_coop_windows(state: &CycleState, len: usize) -> usize {
    let n = state.len();
    if len == 0 {
        return n;
    }
    if len > n {
        return 0;
    }
    // Length of the cooperator streak ending at each index, unrolled twice
    // around the ring so that wrapping windows are seen.
    let mut streak = 0usize;
    let mut count = 0usize;
    for step in 0..n + len - 1 {
        if state.get(step % n) {
            streak += 1;
        } else {
            streak = 0;
        }
        if step >= len - 1 && streak >= len {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_probabilities() {
        let s = InitialSpec::new(50, 1.0, 3).unwrap().sample_seeded();
        assert_eq!(s.cooperators(), 50);
        let s = InitialSpec::new(50, 0.0, 3).unwrap().sample_seeded();
        assert_eq!(s.cooperators(), 0);
        assert!(InitialSpec::new(50, 1.5, 3).is_err());
        assert!(InitialSpec::new(2, 0.5, 3).is_err());
    }

    #[test]
    fn half_cooperators_concentrate() {
        let s = InitialSpec::new(100_000, 0.5, 42).unwrap().sample_seeded();
        assert!((s.coop_fraction() - 0.5).abs() < 0.01);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = InitialSpec::new(300, 0.3, 9).unwrap();
        assert_eq!(spec.sample_seeded(), spec.sample_seeded());
    }

    #[test]
    fn window_counts() {
        let s = CycleState::from_bitstring("1101110").unwrap();
        assert_eq!(all_coop_windows(&s, 1), 5);
        assert_eq!(all_coop_windows(&s, 2), 3);
        assert_eq!(all_coop_windows(&s, 3), 1);
        // wraps: 1 at the end and 11 at the start
        let s = CycleState::from_bitstring("1100001").unwrap();
        assert_eq!(all_coop_windows(&s, 3), 1);
        let s = CycleState::uniform(6, true).unwrap();
        assert_eq!(all_coop_windows(&s, 4), 6);
    }

    #[test]
    fn alternating_stats() {
        let s = CycleState::from_bitstring("1010101010").unwrap();
        let st = config_stats(&s, &[1, 2]);
        assert_eq!(st.longest_c_run, 1);
        assert_eq!(st.longest_alternating, 10);
        assert_eq!(st.window_counts, vec![(1, 5), (2, 0)]);
    }
}
