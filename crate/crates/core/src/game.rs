//! Payoff parameterization, region classification and the cycle switching kernel.
//!
//! Every game is a symmetric 2×2 game normalized to `R = 1`, `P = 0`, so a
//! point is fully described by the sucker payoff `S ∈ [-1, 1]` and the
//! temptation `T ∈ [0, 2]`.

use std::fmt;

use crate::error::DomainError;

/// Distance from a border line below which a point counts as lying on it.
pub const BORDER_TOL: f64 = 1e-12;

/// A point of the normalized `(S, T)` square together with its scaling factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    s: f64,
    t: f64,
    alpha: f64,
}

impl GameParams {
    /// Builds the parameters, rejecting points outside `[-1,1] × [0,2]`.
    pub fn new(s: f64, t: f64) -> Result<Self, DomainError> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(DomainError::SuckerOutOfRange(s));
        }
        if !(0.0..=2.0).contains(&t) {
            return Err(DomainError::TemptationOutOfRange(t));
        }
        let alpha = t.max(1.0) - s.min(0.0);
        Ok(Self { s, t, alpha })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `max{T, 1} - min{S, 0}`; at least 1 on the whole square.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Payoff of a player using `me` against a single opponent using `other`.
    #[inline]
    pub fn pair_payoff(&self, me: bool, other: bool) -> f64 {
        match (me, other) {
            (true, true) => 1.0,
            (true, false) => self.s,
            (false, true) => self.t,
            (false, false) => 0.0,
        }
    }
}

/// Same as [`GameParams::new`].
pub fn make_params(s: f64, t: f64) -> Result<GameParams, DomainError> {
    GameParams::new(s, t)
}

/// Dynamical zone of the `(S, T)` square on the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zone {
    A,
    B,
    C,
    D,
    E,
    F,
    /// `T = S + 1`
    BorderAB,
    /// `T = (S + 1) / 2`
    BorderBD,
    /// `T = 2S` below `T = (S + 1) / 2`
    BorderED,
    /// `T = 2S` above `T = (S + 1) / 2`
    BorderBC,
    /// `T = S`
    BorderFE,
    /// Two border lines meet, or the quadrant corner `(0, 1)`.
    Corner,
}

impl Zone {
    pub fn is_border(self) -> bool {
        !matches!(
            self,
            Zone::A | Zone::B | Zone::C | Zone::D | Zone::E | Zone::F
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            Zone::A => "A",
            Zone::B => "B",
            Zone::C => "C",
            Zone::D => "D",
            Zone::E => "E",
            Zone::F => "F",
            Zone::BorderAB => "border_AB",
            Zone::BorderBD => "border_BD",
            Zone::BorderED => "border_ED",
            Zone::BorderBC => "border_BC",
            Zone::BorderFE => "border_FE",
            Zone::Corner => "corner",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classical game quadrant of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrant {
    /// Prisoner's Dilemma, `T > 1`, `S < 0`.
    PD,
    /// Stag Hunt, `T < 1`, `S < 0`.
    SH,
    /// Snowdrift, `T > 1`, `S > 0`.
    SG,
    /// Harmony, `T < 1`, `S > 0`.
    HG,
    /// `S = 0` or `T = 1`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub zone: Zone,
    pub quadrant: Quadrant,
}

/// Classifies a point into one zone (or border/corner) and one quadrant.
pub fn classify(params: &GameParams) -> Region {
    let (s, t) = (params.s, params.t);
    let on = |line: f64| (t - line).abs() <= BORDER_TOL;

    let on_ab = on(s + 1.0);
    let on_bd = on((s + 1.0) / 2.0);
    let on_2s = on(2.0 * s);
    let on_fe = on(s);
    let quadrant_corner = s.abs() <= BORDER_TOL && (t - 1.0).abs() <= BORDER_TOL;

    let hits = [on_ab, on_bd, on_2s, on_fe].iter().filter(|&&h| h).count();
    let zone = if hits >= 2 || quadrant_corner {
        Zone::Corner
    } else if on_ab {
        Zone::BorderAB
    } else if on_bd {
        Zone::BorderBD
    } else if on_2s {
        if t < (s + 1.0) / 2.0 {
            Zone::BorderED
        } else {
            Zone::BorderBC
        }
    } else if on_fe {
        Zone::BorderFE
    } else if t > s + 1.0 {
        Zone::A
    } else if t > (s + 1.0) / 2.0 {
        if t > 2.0 * s {
            Zone::B
        } else {
            Zone::C
        }
    } else if t > 2.0 * s {
        Zone::D
    } else if t > s {
        Zone::E
    } else {
        Zone::F
    };

    let quadrant = if s.abs() <= BORDER_TOL || (t - 1.0).abs() <= BORDER_TOL {
        Quadrant::Boundary
    } else {
        match (s < 0.0, t > 1.0) {
            (true, true) => Quadrant::PD,
            (true, false) => Quadrant::SH,
            (false, true) => Quadrant::SG,
            (false, false) => Quadrant::HG,
        }
    };

    Region { zone, quadrant }
}

/// Accrued payoff of a cycle vertex from its two games.
#[inline]
pub fn cycle_payoff(left: bool, me: bool, right: bool, params: &GameParams) -> f64 {
    params.pair_payoff(me, left) + params.pair_payoff(me, right)
}

/// The eight neighbourhood switching probabilities of a cycle vertex.
///
/// Raw values are the signed payoff differences over `2α`; a value whose
/// border line passes within [`BORDER_TOL`] of the point is snapped to zero so
/// that border points have exact ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodKernel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    pub c_bar: f64,
    pub d_bar: f64,
}

impl NeighborhoodKernel {
    /// Signed (pre-clip) values.
    pub fn raw(params: &GameParams) -> Self {
        let (s, t) = (params.s, params.t);
        let snap = |dist: f64, scale: f64| {
            if dist.abs() <= BORDER_TOL {
                0.0
            } else {
                scale * dist
            }
        };
        let two_alpha = 2.0 * params.alpha;
        // Each entry is a multiple of the signed distance from one border line.
        let a = snap(2.0 * s - t, 1.0) / two_alpha;
        let b = snap(s + 1.0 - t, 1.0) / two_alpha;
        let c = snap(s - t, 2.0) / two_alpha;
        let d = snap((s + 1.0) / 2.0 - t, 2.0) / two_alpha;
        Self {
            a,
            b,
            c,
            d,
            a_bar: -a,
            b_bar: -b,
            c_bar: -c,
            d_bar: -d,
        }
    }

    /// Probabilities clipped to `[0, 1]`.
    pub fn new(params: &GameParams) -> Self {
        let r = Self::raw(params);
        let clip = |x: f64| x.clamp(0.0, 1.0);
        Self {
            a: clip(r.a),
            b: clip(r.b),
            c: clip(r.c),
            d: clip(r.d),
            a_bar: clip(r.a_bar),
            b_bar: clip(r.b_bar),
            c_bar: clip(r.c_bar),
            d_bar: clip(r.d_bar),
        }
    }

    /// Probability for neighbourhood `prev [me] chosen beyond`.
    #[inline]
    pub fn lookup(&self, prev: bool, me: bool, chosen: bool, beyond: bool) -> f64 {
        match (me, chosen, prev, beyond) {
            (false, true, false, false) => self.a,
            (false, true, false, true) => self.b,
            (false, true, true, false) => self.c,
            (false, true, true, true) => self.d,
            (true, false, false, false) => self.a_bar,
            (true, false, false, true) => self.c_bar,
            (true, false, true, false) => self.b_bar,
            (true, false, true, true) => self.d_bar,
            _ => 0.0,
        }
    }

    /// All 16 neighbourhoods packed as `prev<<3 | me<<2 | chosen<<1 | beyond`.
    pub fn table(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (idx, slot) in out.iter_mut().enumerate() {
            *slot = self.lookup(idx & 8 != 0, idx & 4 != 0, idx & 2 != 0, idx & 1 != 0);
        }
        out
    }
}

/// Probability that `me` copies `chosen`, given the non-chosen neighbour
/// `prev` and the chosen vertex's other neighbour `beyond`.
pub fn switch_prob_cycle(
    prev: bool,
    me: bool,
    chosen: bool,
    beyond: bool,
    params: &GameParams,
) -> f64 {
    NeighborhoodKernel::new(params).lookup(prev, me, chosen, beyond)
}
