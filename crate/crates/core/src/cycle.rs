//! Synchronous proportional imitation on the n-cycle.
//!
//! States are bit-packed (`1` = cooperate). A generation only touches vertices
//! that disagree with at least one neighbour; draws come from a
//! [`CounterRng`] addressed by `(generation, vertex)`, so skipping the rest
//! does not change the trajectory.

use std::fmt;

use crate::error::DomainError;
use crate::game::{GameParams, NeighborhoodKernel, Zone};
use crate::rng::CounterRng;

/// Ring of `n >= 3` strategies plus the generation counter.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleState {
    n: usize,
    words: Vec<u64>,
    generation: u64,
}

impl CycleState {
    pub fn uniform(n: usize, cooperate: bool) -> Result<Self, DomainError> {
        let mut state = Self::zeros(n)?;
        if cooperate {
            for i in 0..n {
                state.set(i, true);
            }
        }
        Ok(state)
    }

    fn zeros(n: usize) -> Result<Self, DomainError> {
        if n < 3 {
            return Err(DomainError::CycleTooSmall(n));
        }
        Ok(Self {
            n,
            words: vec![0; n.div_ceil(64)],
            generation: 0,
        })
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self, DomainError> {
        let mut state = Self::zeros(bits.len())?;
        for (i, &b) in bits.iter().enumerate() {
            state.set(i, b);
        }
        Ok(state)
    }

    /// Parses `"0011..."`; index 0 is the first character.
    pub fn from_bitstring(s: &str) -> Result<Self, DomainError> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(DomainError::Bitstring(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_bits(&bits)
    }

    /// Low `n` bits of `mask`, bit `i` = vertex `i`. Requires `n <= 64`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self, DomainError> {
        if n > 64 {
            return Err(DomainError::Invalid(format!(
                "mask states need n <= 64, got {n}"
            )));
        }
        let mut state = Self::zeros(n)?;
        state.words[0] = if n == 64 {
            mask
        } else {
            mask & ((1u64 << n) - 1)
        };
        Ok(state)
    }

    /// Inverse of [`CycleState::from_mask`].
    pub fn mask(&self) -> u64 {
        self.words[0]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn set_generation(&mut self, generation: u64) {
        self.generation = generation;
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, v: bool) {
        let bit = 1u64 << (i & 63);
        if v {
            self.words[i >> 6] |= bit;
        } else {
            self.words[i >> 6] &= !bit;
        }
    }

    /// Strategy at `i` taken modulo `n` (accepts any signed offset).
    #[inline]
    pub fn at(&self, i: isize) -> bool {
        self.get(i.rem_euclid(self.n as isize) as usize)
    }

    pub fn cooperators(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn coop_fraction(&self) -> f64 {
        self.cooperators() as f64 / self.n as f64
    }

    pub fn is_uniform(&self) -> bool {
        let c = self.cooperators();
        c == 0 || c == self.n
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.n).map(|i| self.get(i))
    }

    pub fn to_bitstring(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Trace line: `generation bitstring`.
    pub fn snapshot(&self) -> String {
        format!("{} {}", self.generation, self.to_bitstring())
    }

    /// Bit `i` set iff vertex `i` disagrees with a neighbour.
    fn boundary_words(&self, out: &mut Vec<u64>) {
        let n = self.n;
        let nw = self.words.len();
        let tail = n & 63;
        let last_mask = if tail == 0 {
            u64::MAX
        } else {
            (1u64 << tail) - 1
        };
        let first = self.get(0) as u64;
        let last = self.get(n - 1) as u64;
        out.clear();
        out.reserve(nw);
        for k in 0..nw {
            let w = self.words[k];
            // bit i <- s[i-1]
            let carry_in = if k == 0 {
                last
            } else {
                self.words[k - 1] >> 63
            };
            let left = w << 1 | carry_in;
            // bit i <- s[i+1]
            let mut right = w >> 1;
            if k + 1 < nw {
                right |= self.words[k + 1] << 63;
            }
            if k + 1 == nw {
                let top = if tail == 0 { 63 } else { tail - 1 };
                right = (right & !(1u64 << top)) | first << top;
            }
            let mut active = (w ^ left) | (w ^ right);
            if k + 1 == nw {
                active &= last_mask;
            }
            out.push(active);
        }
    }
}

impl fmt::Display for CycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RunKind {
    Coop,
    Defect,
}

/// Maximal arc of equal strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub kind: RunKind,
    pub start: usize,
    pub len: usize,
}

/// Runs of a configuration, ordered by start index, plus the summary lengths
/// used by the initial-configuration bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunDecomposition {
    pub n: usize,
    pub runs: Vec<Run>,
    pub longest_c_run: usize,
    pub longest_d_run: usize,
    /// Longest arc whose consecutive vertices all differ.
    pub longest_alternating: usize,
    /// Longest arc of d-runs and singleton cooperators between two c-runs of
    /// length at least 2. Zero for uniform states; `n` when there is no such
    /// c-run at all.
    pub longest_non_barrier: usize,
}

impl RunDecomposition {
    pub fn c_runs(&self) -> impl Iterator<Item = &Run> {
        self.runs.iter().filter(|r| r.kind == RunKind::Coop)
    }

    pub fn d_runs(&self) -> impl Iterator<Item = &Run> {
        self.runs.iter().filter(|r| r.kind == RunKind::Defect)
    }
}

pub fn decompose(state: &CycleState) -> RunDecomposition {
    let n = state.n;
    let mut runs = Vec::new();
    let first_start = (0..n).find(|&i| state.at(i as isize) != state.at(i as isize - 1));
    match first_start {
        None => runs.push(Run {
            kind: kind_of(state.get(0)),
            start: 0,
            len: n,
        }),
        Some(s0) => {
            let mut start = s0;
            let mut len = 1;
            for step in 1..=n {
                let i = (s0 + step) % n;
                if step < n && state.get(i) == state.get(start) {
                    len += 1;
                } else {
                    runs.push(Run {
                        kind: kind_of(state.get(start)),
                        start,
                        len,
                    });
                    start = i;
                    len = 1;
                }
            }
        }
    }

    let longest = |k: RunKind| {
        runs.iter()
            .filter(|r| r.kind == k)
            .map(|r| r.len)
            .max()
            .unwrap_or(0)
    };
    let longest_c_run = longest(RunKind::Coop);
    let longest_d_run = longest(RunKind::Defect);
    let longest_alternating = longest_alternating(state);
    let longest_non_barrier = longest_non_barrier(&runs, n);

    RunDecomposition {
        n,
        runs,
        longest_c_run,
        longest_d_run,
        longest_alternating,
        longest_non_barrier,
    }
}

fn kind_of(b: bool) -> RunKind {
    if b {
        RunKind::Coop
    } else {
        RunKind::Defect
    }
}

fn longest_alternating(state: &CycleState) -> usize {
    let n = state.n;
    // Start right after a pair of equal neighbours; none means fully alternating.
    let Some(cut) = (0..n).find(|&i| state.get(i) == state.get((i + 1) % n)) else {
        return n;
    };
    let mut best = 1;
    let mut cur = 1;
    for step in 1..n {
        let i = (cut + 1 + step) % n;
        let prev = (cut + step) % n;
        if state.get(i) != state.get(prev) {
            cur += 1;
        } else {
            cur = 1;
        }
        best = best.max(cur);
    }
    best
}

fn longest_non_barrier(runs: &[Run], n: usize) -> usize {
    if runs.len() == 1 {
        return 0;
    }
    let barriers: Vec<usize> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.kind == RunKind::Coop && r.len >= 2)
        .map(|(i, _)| i)
        .collect();
    if barriers.is_empty() {
        return n;
    }
    let m = runs.len();
    let mut best = 0;
    for (k, &b) in barriers.iter().enumerate() {
        let next = barriers[(k + 1) % barriers.len()];
        let mut span = 0;
        let mut j = (b + 1) % m;
        while j != next {
            span += runs[j].len;
            j = (j + 1) % m;
        }
        best = best.max(span);
    }
    best
}

/// Smallest c-run that can never be deleted in the given zone.
pub fn barrier_threshold(zone: Zone) -> Option<usize> {
    match zone {
        Zone::B | Zone::C => Some(4),
        Zone::D | Zone::E => Some(2),
        _ => None,
    }
}

/// Precomputed switching table for one parameter point.
#[derive(Debug, Clone)]
pub struct CycleDynamics {
    table: [f64; 16],
    scratch: Vec<u64>,
}

#[inline]
fn nb_index(prev: bool, me: bool, chosen: bool, beyond: bool) -> usize {
    (prev as usize) << 3 | (me as usize) << 2 | (chosen as usize) << 1 | beyond as usize
}

impl CycleDynamics {
    pub fn new(params: &GameParams) -> Self {
        Self {
            table: NeighborhoodKernel::new(params).table(),
            scratch: Vec::new(),
        }
    }

    /// Switching probabilities of vertex `i` when it picks its left and its
    /// right neighbour.
    #[inline]
    pub fn side_probs(&self, state: &CycleState, i: usize) -> (f64, f64) {
        let i = i as isize;
        let (m2, m1, me, p1, p2) = (
            state.at(i - 2),
            state.at(i - 1),
            state.at(i),
            state.at(i + 1),
            state.at(i + 2),
        );
        (
            self.table[nb_index(p1, me, m1, m2)],
            self.table[nb_index(m1, me, p1, p2)],
        )
    }

    /// Per-vertex marginal flip probability.
    pub fn flip_prob(&self, state: &CycleState, i: usize) -> f64 {
        let (l, r) = self.side_probs(state, i);
        0.5 * (l + r)
    }

    /// Advances one generation in place. Returns `true` (and leaves the state
    /// untouched) when the state was already steady.
    pub fn advance(&mut self, state: &mut CycleState, rng: &CounterRng) -> bool {
        let mut boundary = std::mem::take(&mut self.scratch);
        state.boundary_words(&mut boundary);
        let generation = state.generation;
        let mut steady = true;
        #[allow(clippy::needless_range_loop)]
        for k in 0..boundary.len() {
            let mut active = boundary[k];
            let mut flips = 0u64;
            while active != 0 {
                let bit = active.trailing_zeros() as usize;
                active &= active - 1;
                let i = k << 6 | bit;
                let (pl, pr) = self.side_probs(state, i);
                if pl == 0.0 && pr == 0.0 {
                    continue;
                }
                steady = false;
                let p = if rng.picks_right(generation, i as u64) {
                    pr
                } else {
                    pl
                };
                if p > 0.0 && rng.coin(generation, i as u64) < p {
                    flips |= 1u64 << bit;
                }
            }
            // Reuse the slot for the flip mask; later words only read `state`.
            boundary[k] = flips;
        }
        if !steady {
            for (w, f) in state.words.iter_mut().zip(&boundary) {
                *w ^= f;
            }
            state.generation += 1;
        }
        self.scratch = boundary;
        steady
    }

    pub fn is_steady(&self, state: &CycleState) -> bool {
        (0..state.n).all(|i| {
            let (l, r) = self.side_probs(state, i);
            l == 0.0 && r == 0.0
        })
    }
}

/// One synchronous generation. All decisions read the generation-`t` state.
pub fn step(state: &CycleState, params: &GameParams, rng: &CounterRng) -> CycleState {
    let mut next = state.clone();
    if CycleDynamics::new(params).advance(&mut next, rng) {
        next.generation += 1;
    }
    next
}

/// Full-scan step that visits vertices in `order`; same draws as [`step`].
pub fn step_in_order(
    state: &CycleState,
    params: &GameParams,
    rng: &CounterRng,
    order: &[usize],
) -> CycleState {
    let dynamics = CycleDynamics::new(params);
    let mut next = state.clone();
    for &i in order {
        let (pl, pr) = dynamics.side_probs(state, i);
        let p = if rng.picks_right(state.generation, i as u64) {
            pr
        } else {
            pl
        };
        if p > 0.0 && rng.coin(state.generation, i as u64) < p {
            next.set(i, !state.get(i));
        }
    }
    next.generation = state.generation + 1;
    next
}

/// True iff no vertex can switch against either neighbour.
pub fn is_steady(state: &CycleState, params: &GameParams) -> bool {
    CycleDynamics::new(params).is_steady(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    AllCooperate,
    AllDefect,
    MixedSteady,
    TimedOut,
}

impl Outcome {
    pub fn absorbed(self) -> bool {
        self != Outcome::TimedOut
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionReport {
    pub outcome: Outcome,
    /// Generation at which the state was first steady, or the cap.
    pub generations: u64,
    pub final_coop_fraction: f64,
    pub final_state_summary: RunDecomposition,
}

/// Default cap for region experiments: `10 n ceil(log2 n)`.
pub fn default_max_generations(n: usize) -> u64 {
    let log = (usize::BITS - (n.max(2) - 1).leading_zeros()) as u64;
    10 * n as u64 * log
}

/// Steps until steady or until `max_generations` generations have elapsed.
pub fn run_to_absorption(
    initial: &CycleState,
    params: &GameParams,
    max_generations: u64,
    rng: &CounterRng,
) -> AbsorptionReport {
    run_to_absorption_traced(initial, params, max_generations, rng, |_| {})
}

/// As [`run_to_absorption`], calling `trace` on every visited state.
pub fn run_to_absorption_traced(
    initial: &CycleState,
    params: &GameParams,
    max_generations: u64,
    rng: &CounterRng,
    mut trace: impl FnMut(&CycleState),
) -> AbsorptionReport {
    let mut state = initial.clone();
    let start = state.generation;
    let mut dynamics = CycleDynamics::new(params);
    trace(&state);
    let mut steady = false;
    while state.generation - start < max_generations {
        if dynamics.advance(&mut state, rng) {
            steady = true;
            break;
        }
        trace(&state);
    }
    if !steady {
        steady = dynamics.is_steady(&state);
    }
    let coop = state.cooperators();
    let outcome = match (steady, coop) {
        (false, _) => Outcome::TimedOut,
        (true, 0) => Outcome::AllDefect,
        (true, c) if c == state.n => Outcome::AllCooperate,
        (true, _) => Outcome::MixedSteady,
    };
    AbsorptionReport {
        outcome,
        generations: state.generation - start,
        final_coop_fraction: coop as f64 / state.n as f64,
        final_state_summary: decompose(&state),
    }
}
