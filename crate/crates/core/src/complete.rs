//! Imitation on the complete graph `K_n`.
//!
//! All cooperators earn the same payoff and so do all defectors, so the
//! cooperator count is a sufficient statistic. In one generation at most one
//! side can switch, and the number of switchers is binomial.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp1, Geometric};

use crate::cycle::Outcome;
use crate::error::DomainError;
use crate::game::GameParams;

/// Payoff differences whose magnitude is below this count as ties.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CompleteState {
    n: usize,
    delta: usize,
    generation: u64,
}

impl CompleteState {
    pub fn new(n: usize, delta: usize) -> Result<Self, DomainError> {
        if n < 2 {
            return Err(DomainError::CompleteTooSmall(n));
        }
        if delta > n {
            return Err(DomainError::CountOutOfRange { delta, n });
        }
        Ok(Self {
            n,
            delta,
            generation: 0,
        })
    }

    /// Cooperator count `round(theta0 * n)`.
    pub fn from_fraction(n: usize, theta0: f64) -> Result<Self, DomainError> {
        if !(0.0..=1.0).contains(&theta0) {
            return Err(DomainError::Probability(theta0));
        }
        Self::new(n, (theta0 * n as f64).round() as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn coop_fraction(&self) -> f64 {
        self.delta as f64 / self.n as f64
    }
}

/// Accrued payoffs `(cooperator, defector)` with `delta` cooperators.
pub fn payoffs(delta: usize, n: usize, params: &GameParams) -> (f64, f64) {
    let (d, n) = (delta as f64, n as f64);
    (d - 1.0 + (n - d) * params.s(), d * params.t())
}

/// Defector-minus-cooperator payoff `delta (S + T - 1) - nS + 1`, snapped to
/// zero within [`TIE_TOL`].
pub fn defector_advantage(delta: usize, n: usize, params: &GameParams) -> f64 {
    let v = delta as f64 * (params.s() + params.t() - 1.0) - n as f64 * params.s() + 1.0;
    if v.abs() <= TIE_TOL {
        0.0
    } else {
        v
    }
}

/// Interior point where both strategies earn the same.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub delta_star: f64,
    pub is_integer: bool,
    pub theta_star: f64,
}

impl CriticalPoint {
    /// Whether `delta_star` lies strictly inside `(0, n)`.
    pub fn is_interior(&self, n: usize) -> bool {
        self.delta_star > 0.0 && self.delta_star < n as f64
    }

    /// Band `delta* ± n^(1/2 + eps)`.
    pub fn band(&self, n: usize, eps: f64) -> (f64, f64) {
        let w = (n as f64).powf(0.5 + eps);
        (self.delta_star - w, self.delta_star + w)
    }
}

/// Band half-width exponent used for reporting entry times.
pub const BAND_EPS: f64 = 0.1;

/// `delta* = (nS - 1) / (S + T - 1)`; `None` when `S + T = 1`.
pub fn critical_point(n: usize, params: &GameParams) -> Option<CriticalPoint> {
    let denom = params.s() + params.t() - 1.0;
    if denom.abs() <= crate::game::BORDER_TOL {
        return None;
    }
    let delta_star = (n as f64 * params.s() - 1.0) / denom;
    Some(CriticalPoint {
        delta_star,
        is_integer: (delta_star - delta_star.round()).abs() <= 1e-9,
        theta_star: delta_star / n as f64,
    })
}

/// Which side switches in the next generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    /// Each cooperator independently defects with this probability.
    Down(f64),
    /// Each defector independently cooperates with this probability.
    Up(f64),
    Frozen,
}

/// Per-player switching probability of the side that can move.
pub fn transition(delta: usize, n: usize, params: &GameParams) -> Transition {
    if delta == 0 || delta == n {
        return Transition::Frozen;
    }
    let adv = defector_advantage(delta, n, params);
    let m = (n - 1) as f64;
    let scale = m * params.alpha();
    let check = |p: f64| {
        assert!(
            (-1e-12..=1.0 + 1e-12).contains(&p),
            "switching probability {p} out of range at delta={delta}, n={n}"
        );
        p.clamp(0.0, 1.0)
    };
    if adv > 0.0 {
        Transition::Down(check((n - delta) as f64 / m * adv / scale))
    } else if adv < 0.0 {
        Transition::Up(check(delta as f64 / m * -adv / scale))
    } else {
        Transition::Frozen
    }
}

/// Expected cooperator count after one generation.
pub fn expected_next(delta: usize, n: usize, params: &GameParams) -> f64 {
    match transition(delta, n, params) {
        Transition::Down(p) => delta as f64 * (1.0 - p),
        Transition::Up(r) => delta as f64 + (n - delta) as f64 * r,
        Transition::Frozen => delta as f64,
    }
}

fn binomial<R: Rng + ?Sized>(trials: usize, p: f64, rng: &mut R) -> usize {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials as u64, p)
        .expect("p checked to lie in (0, 1)")
        .sample(rng) as usize
}

/// One generation via the binomial aggregate.
pub fn step_aggregate<R: Rng + ?Sized>(
    state: &CompleteState,
    params: &GameParams,
    rng: &mut R,
) -> CompleteState {
    let mut next = *state;
    next.generation += 1;
    match transition(state.delta, state.n, params) {
        Transition::Down(p) => next.delta -= binomial(state.delta, p, rng),
        Transition::Up(r) => next.delta += binomial(state.n - state.delta, r, rng),
        Transition::Frozen => {}
    }
    next
}

/// Jumps to the next generation in which the count changes, or `limit`
/// generations ahead if nothing moves before then. The law of the visited
/// states and their generations is that of repeated [`step_aggregate`]: the
/// idle stretch is geometric, and the moving generation's binomial is drawn
/// conditioned on being non-zero via the index of its first success.
pub fn step_to_next_move<R: Rng + ?Sized>(
    state: &CompleteState,
    params: &GameParams,
    limit: u64,
    rng: &mut R,
) -> CompleteState {
    let mut next = *state;
    let (trials, p, down) = match transition(state.delta, state.n, params) {
        Transition::Down(p) => (state.delta, p, true),
        Transition::Up(r) => (state.n - state.delta, r, false),
        Transition::Frozen => (0, 0.0, false),
    };
    if trials == 0 || p <= 0.0 || limit == 0 {
        next.generation += limit;
        return next;
    }
    let log_stay = (-p).ln_1p();
    // P(at least one of `trials` players switches in a generation).
    let move_prob = if p >= 1.0 {
        1.0
    } else {
        -(trials as f64 * log_stay).exp_m1()
    };
    let idle = if move_prob >= 1.0 {
        0
    } else {
        Geometric::new(move_prob)
            .expect("move probability in (0, 1)")
            .sample(rng)
    };
    if idle >= limit {
        next.generation += limit;
        return next;
    }
    next.generation += idle + 1;
    let first = if p >= 1.0 {
        1
    } else {
        let u: f64 = rng.random();
        (((-u * move_prob).ln_1p() / log_stay).ceil() as usize).clamp(1, trials)
    };
    let moved = 1 + binomial(trials - first, p, rng);
    if down {
        next.delta -= moved;
    } else {
        next.delta += moved;
    }
    next
}

/// Largest number of movers for which [`SkipSampler`] tabulates the law.
const TABLE_LIMIT: usize = 4096;

/// Law of the next move out of one count: idle-time tail and the number of
/// switchers given that at least one switches.
#[derive(Debug, Clone)]
struct MoveLaw {
    down: bool,
    /// `ln P(no switch in a generation)`.
    log_idle: f64,
    /// `cdf[k - 1] = P(K <= k | K >= 1)`.
    cdf: Vec<f64>,
}

impl MoveLaw {
    fn new(trials: usize, p: f64, down: bool) -> Self {
        let log_stay = (-p).ln_1p();
        let log_idle = trials as f64 * log_stay;
        let mut cdf = Vec::with_capacity(trials);
        if p >= 1.0 {
            cdf.resize(trials, 0.0);
            cdf[trials - 1] = 1.0;
        } else {
            let move_prob = -log_idle.exp_m1();
            let ratio = p / (1.0 - p);
            let mut pmf = log_idle.exp();
            let mut acc = 0.0;
            for k in 0..trials {
                pmf *= (trials - k) as f64 / (k + 1) as f64 * ratio;
                acc += pmf;
                cdf.push((acc / move_prob).min(1.0));
            }
            cdf[trials - 1] = 1.0;
        }
        Self {
            down,
            log_idle,
            cdf,
        }
    }
}

#[derive(Debug, Clone)]
enum Cached {
    Frozen,
    Law(MoveLaw),
    /// Too many movers to tabulate; use the stateless step.
    Direct,
}

/// Per-run cache for [`step_to_next_move`] with the same law; move laws are
/// tabulated for each count the first time it is visited.
#[derive(Debug, Clone)]
pub struct SkipSampler {
    n: usize,
    params: GameParams,
    laws: Vec<Option<Cached>>,
}

impl SkipSampler {
    pub fn new(n: usize, params: &GameParams) -> Self {
        Self {
            n,
            params: *params,
            laws: vec![None; n + 1],
        }
    }

    fn law(&mut self, delta: usize) -> &Cached {
        let (n, params) = (self.n, self.params);
        self.laws[delta].get_or_insert_with(|| match transition(delta, n, &params) {
            Transition::Frozen => Cached::Frozen,
            Transition::Down(p) if delta <= TABLE_LIMIT => {
                Cached::Law(MoveLaw::new(delta, p, true))
            }
            Transition::Up(r) if n - delta <= TABLE_LIMIT => {
                Cached::Law(MoveLaw::new(n - delta, r, false))
            }
            _ => Cached::Direct,
        })
    }

    /// Same answer as `transition(delta, n, params) == Transition::Frozen`.
    pub fn is_frozen(&mut self, delta: usize) -> bool {
        matches!(self.law(delta), Cached::Frozen)
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        state: &CompleteState,
        limit: u64,
        rng: &mut R,
    ) -> CompleteState {
        let params = self.params;
        let law = match self.law(state.delta) {
            Cached::Law(law) => law,
            _ => return step_to_next_move(state, &params, limit, rng),
        };
        let mut next = *state;
        let idle = if law.log_idle == f64::NEG_INFINITY {
            0
        } else {
            // Failures before the first success: floor(E / -ln q) with E ~ Exp(1).
            let e: f64 = Exp1.sample(rng);
            let g = e / -law.log_idle;
            // Truncation is the floor for non-negative values.
            if g >= limit as f64 {
                u64::MAX
            } else {
                g as u64
            }
        };
        if idle >= limit {
            next.generation += limit;
            return next;
        }
        next.generation += idle + 1;
        let u: f64 = rng.random();
        let moved = 1 + law.cdf.partition_point(|&c| c <= u).min(law.cdf.len() - 1);
        if law.down {
            next.delta -= moved;
        } else {
            next.delta += moved;
        }
        next
    }
}

/// One generation simulated player by player: each picks a uniformly random
/// other vertex and copies it with `max{0, Δ/((n-1)α)}`. Vertices
/// `0..delta` are the cooperators.
pub fn step_per_vertex<R: Rng + ?Sized>(
    state: &CompleteState,
    params: &GameParams,
    rng: &mut R,
) -> CompleteState {
    let (n, delta) = (state.n, state.delta);
    let (pc, pd) = payoffs(delta, n, params);
    let scale = (n - 1) as f64 * params.alpha();
    let tie = |x: f64| if x.abs() <= TIE_TOL { 0.0 } else { x };
    let p_coop_copies = (tie(pd - pc) / scale).clamp(0.0, 1.0);
    let p_defect_copies = (tie(pc - pd) / scale).clamp(0.0, 1.0);

    let mut next = *state;
    next.generation += 1;
    let mut new_delta = delta;
    for v in 0..n {
        let mut other = rng.random_range(0..n - 1);
        if other >= v {
            other += 1;
        }
        let me_coop = v < delta;
        let other_coop = other < delta;
        if me_coop == other_coop {
            continue;
        }
        let p = if me_coop {
            p_coop_copies
        } else {
            p_defect_copies
        };
        if p > 0.0 && rng.random::<f64>() < p {
            if me_coop {
                new_delta -= 1;
            } else {
                new_delta += 1;
            }
        }
    }
    next.delta = new_delta;
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompleteReport {
    pub outcome: Outcome,
    pub generations: u64,
    pub final_delta: usize,
    pub final_coop_fraction: f64,
    /// First generation inside `delta* ± n^(1/2+eps)`, when requested and
    /// an interior critical point exists.
    pub band_entry: Option<u64>,
}

/// Options for [`run_complete`].
#[derive(Debug, Clone, Copy)]
pub struct CompleteRun {
    pub max_generations: u64,
    /// Band exponent for entry-time reporting; `None` disables it.
    pub band_eps: Option<f64>,
    /// Jump over generations with no switch (see [`step_to_next_move`]).
    /// The trace then only sees states that differ from their predecessor.
    pub skip_idle: bool,
}

/// Iterates [`step_aggregate`] until the count is frozen or the cap.
pub fn run_complete<R: Rng + ?Sized>(
    initial: &CompleteState,
    params: &GameParams,
    opts: CompleteRun,
    rng: &mut R,
) -> CompleteReport {
    run_complete_traced(initial, params, opts, rng, |_| {})
}

pub fn run_complete_traced<R: Rng + ?Sized>(
    initial: &CompleteState,
    params: &GameParams,
    opts: CompleteRun,
    rng: &mut R,
    mut trace: impl FnMut(&CompleteState),
) -> CompleteReport {
    let n = initial.n;
    let band = opts.band_eps.and_then(|eps| {
        critical_point(n, params)
            .filter(|c| c.is_interior(n))
            .map(|c| c.band(n, eps))
    });
    let in_band = |d: usize| band.is_some_and(|(lo, hi)| (lo..=hi).contains(&(d as f64)));

    let mut state = *initial;
    let start = state.generation;
    let mut band_entry = in_band(state.delta).then_some(0);
    trace(&state);
    let mut frozen = false;
    let mut sampler = opts.skip_idle.then(|| SkipSampler::new(n, params));
    let is_frozen = |d: usize, sampler: &mut Option<SkipSampler>| match sampler {
        Some(s) => s.is_frozen(d),
        None => transition(d, n, params) == Transition::Frozen,
    };
    while state.generation - start < opts.max_generations {
        if is_frozen(state.delta, &mut sampler) {
            frozen = true;
            break;
        }
        state = if let Some(sampler) = sampler.as_mut() {
            let left = opts.max_generations - (state.generation - start);
            sampler.step(&state, left, rng)
        } else {
            step_aggregate(&state, params, rng)
        };
        trace(&state);
        if band_entry.is_none() && in_band(state.delta) {
            band_entry = Some(state.generation - start);
        }
    }
    if !frozen {
        frozen = is_frozen(state.delta, &mut sampler);
    }
    let outcome = match (frozen, state.delta) {
        (false, _) => Outcome::TimedOut,
        (true, 0) => Outcome::AllDefect,
        (true, d) if d == n => Outcome::AllCooperate,
        (true, _) => Outcome::MixedSteady,
    };
    CompleteReport {
        outcome,
        generations: state.generation - start,
        final_delta: state.delta,
        final_coop_fraction: state.coop_fraction(),
        band_entry,
    }
}
