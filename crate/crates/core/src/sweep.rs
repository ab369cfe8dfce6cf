//! Parameter sweeps over the (S, T) square, scaling studies and table output.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::complete::{run_complete, CompleteRun, CompleteState};
use crate::config::{sample, InitialSpec};
use crate::cycle::{run_to_absorption, CycleState, Outcome};
use crate::error::{DomainError, SweepError};
use crate::game::{GameParams, BORDER_TOL};
use crate::rng::{derive_seed, CounterRng};
use crate::stats::{bootstrap_median_ci, mean, median, std_dev};

pub const CSV_HEADER: [&str; 9] = [
    "S",
    "T",
    "mean_frac",
    "std",
    "n_allc",
    "n_alld",
    "n_mixed",
    "n_timeout",
    "mean_absorb_gen",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Cycle,
    Complete,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// I.i.d. cooperators on the cycle.
    CoopProb(f64),
    /// Initial cooperator fraction on `K_n`, rounded to a count.
    Fraction(f64),
    /// Explicit cycle configuration.
    Bits(String),
    /// One run of `len` cooperators in a ring of defectors.
    PlantedRun(usize),
}

impl Initial {
    fn validate(&self, topology: Topology, n: usize) -> Result<(), DomainError> {
        match (self, topology) {
            (Initial::CoopProb(p), Topology::Cycle)
            | (Initial::Fraction(p), Topology::Complete) => {
                if (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(DomainError::Probability(*p))
                }
            }
            (Initial::Bits(b), Topology::Cycle) => {
                let s = CycleState::from_bitstring(b)?;
                if s.len() != n {
                    return Err(DomainError::Invalid(format!(
                        "initial bitstring has length {}, expected {n}",
                        s.len()
                    )));
                }
                Ok(())
            }
            (Initial::PlantedRun(len), Topology::Cycle) if *len <= n => Ok(()),
            (Initial::PlantedRun(len), Topology::Cycle) => Err(DomainError::Invalid(format!(
                "planted run of {len} longer than n = {n}"
            ))),
            (init, topo) => Err(DomainError::Invalid(format!(
                "initial condition {init:?} does not apply to {topo:?}"
            ))),
        }
    }

    fn cycle_state(&self, n: usize, seed: u64) -> CycleState {
        match self {
            Initial::CoopProb(p) => {
                let spec = InitialSpec { n, p_c: *p, seed };
                sample(&spec, &mut ChaCha8Rng::seed_from_u64(seed))
            }
            Initial::Bits(b) => CycleState::from_bitstring(b).expect("validated"),
            Initial::PlantedRun(len) => planted_run(n, *len),
            Initial::Fraction(_) => unreachable!("validated against topology"),
        }
    }
}

/// Ring of defectors with cooperators on vertices `0..len`.
pub fn planted_run(n: usize, len: usize) -> CycleState {
    let bits: Vec<bool> = (0..n).map(|i| i < len).collect();
    CycleState::from_bits(&bits).expect("n >= 3")
}

/// `steps` cells of equal width over `[lo, hi]`, sampled at their centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.steps as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub topology: Topology,
    pub n: usize,
    pub initial: Initial,
    pub s_axis: Axis,
    pub t_axis: Axis,
    pub max_generations: u64,
    pub reps: usize,
    pub seed: u64,
    /// Snap, in every S column, the nearest T sample onto each border line.
    pub include_borders: bool,
}

impl SweepSpec {
    /// Square grid over the full normalized domain.
    pub fn square(topology: Topology, n: usize, initial: Initial, steps: usize) -> Self {
        Self {
            topology,
            n,
            initial,
            s_axis: Axis::new(-1.0, 1.0, steps),
            t_axis: Axis::new(0.0, 2.0, steps),
            max_generations: 10_000,
            reps: 100,
            seed: 0,
            include_borders: false,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if self.s_axis.steps == 0 || self.t_axis.steps == 0 {
            return Err(DomainError::Invalid(
                "grid needs at least one step per axis".into(),
            ));
        }
        if self.reps == 0 {
            return Err(DomainError::Invalid(
                "repetitions must be at least 1".into(),
            ));
        }
        let in_range = |a: &Axis, lo: f64, hi: f64| lo <= a.lo && a.lo <= a.hi && a.hi <= hi;
        if !in_range(&self.s_axis, -1.0, 1.0) {
            return Err(DomainError::Invalid(format!(
                "S range [{}, {}] outside [-1, 1]",
                self.s_axis.lo, self.s_axis.hi
            )));
        }
        if !in_range(&self.t_axis, 0.0, 2.0) {
            return Err(DomainError::Invalid(format!(
                "T range [{}, {}] outside [0, 2]",
                self.t_axis.lo, self.t_axis.hi
            )));
        }
        match self.topology {
            Topology::Cycle if self.n < 3 => return Err(DomainError::CycleTooSmall(self.n)),
            Topology::Complete if self.n < 2 => return Err(DomainError::CompleteTooSmall(self.n)),
            _ => {}
        }
        self.initial.validate(self.topology, self.n)
    }

    /// T samples of column `i_s`, ascending.
    pub fn t_values(&self, i_s: usize) -> Vec<f64> {
        let mut ts: Vec<f64> = (0..self.t_axis.steps)
            .map(|k| self.t_axis.center(k))
            .collect();
        if self.include_borders {
            let s = self.s_axis.center(i_s);
            for line in [s + 1.0, (s + 1.0) / 2.0, 2.0 * s, s] {
                if line < self.t_axis.lo || line > self.t_axis.hi {
                    continue;
                }
                let k = ((line - self.t_axis.lo) / self.t_axis.width()).floor() as usize;
                let last = ts.len() - 1;
                ts[k.min(last)] = line;
            }
        }
        ts
    }

    pub fn params_at(&self, i_s: usize, i_t: usize) -> Result<GameParams, DomainError> {
        GameParams::new(self.s_axis.center(i_s), self.t_values(i_s)[i_t])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub i_s: usize,
    pub i_t: usize,
    pub s: f64,
    pub t: f64,
    pub mean_frac: f64,
    pub std: f64,
    pub n_allc: usize,
    pub n_alld: usize,
    pub n_mixed: usize,
    pub n_timeout: usize,
    /// Mean generations over runs that reached a steady state; NaN if none.
    pub mean_absorb_gen: f64,
}

impl SweepCell {
    pub fn reps(&self) -> usize {
        self.n_allc + self.n_alld + self.n_mixed + self.n_timeout
    }

    pub fn n_absorbed(&self) -> usize {
        self.n_allc + self.n_alld + self.n_mixed
    }
}

/// Cells ordered by `i_t`, then `i_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub s_steps: usize,
    pub t_steps: usize,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn cell(&self, i_s: usize, i_t: usize) -> &SweepCell {
        &self.cells[i_t * self.s_steps + i_s]
    }
}

/// Seed of replicate `rep` in cell `(i_s, i_t)`.
pub fn rep_seed(master: u64, i_s: usize, i_t: usize, rep: usize) -> u64 {
    derive_seed(&[master, i_s as u64, i_t as u64, rep as u64])
}

/// Outcome, final cooperator fraction and generations of one replicate.
pub fn run_replicate(spec: &SweepSpec, params: &GameParams, seed: u64) -> (Outcome, f64, u64) {
    match spec.topology {
        Topology::Cycle => {
            let init = spec.initial.cycle_state(spec.n, derive_seed(&[seed, 0]));
            let rng = CounterRng::new(derive_seed(&[seed, 1]));
            let r = run_to_absorption(&init, params, spec.max_generations, &rng);
            (r.outcome, r.final_coop_fraction, r.generations)
        }
        Topology::Complete => {
            let Initial::Fraction(theta0) = spec.initial else {
                unreachable!("validated against topology")
            };
            let init = CompleteState::from_fraction(spec.n, theta0).expect("validated");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let opts = CompleteRun {
                max_generations: spec.max_generations,
                band_eps: None,
                skip_idle: false,
            };
            let r = run_complete(&init, params, opts, &mut rng);
            (r.outcome, r.final_coop_fraction, r.generations)
        }
    }
}

/// One cell, computed standalone.
pub fn run_cell(spec: &SweepSpec, i_s: usize, i_t: usize) -> Result<SweepCell, DomainError> {
    let params = spec.params_at(i_s, i_t)?;
    let mut fracs = Vec::with_capacity(spec.reps);
    let mut absorb_gens = Vec::new();
    let (mut n_allc, mut n_alld, mut n_mixed, mut n_timeout) = (0, 0, 0, 0);
    for rep in 0..spec.reps {
        let (outcome, frac, gens) =
            run_replicate(spec, &params, rep_seed(spec.seed, i_s, i_t, rep));
        fracs.push(frac);
        match outcome {
            Outcome::AllCooperate => n_allc += 1,
            Outcome::AllDefect => n_alld += 1,
            Outcome::MixedSteady => n_mixed += 1,
            Outcome::TimedOut => n_timeout += 1,
        }
        if outcome.absorbed() {
            absorb_gens.push(gens as f64);
        }
    }
    Ok(SweepCell {
        i_s,
        i_t,
        s: params.s(),
        t: params.t(),
        mean_frac: mean(&fracs),
        std: std_dev(&fracs),
        n_allc,
        n_alld,
        n_mixed,
        n_timeout,
        mean_absorb_gen: mean(&absorb_gens),
    })
}

/// All cells, in parallel; output order does not depend on the pool size.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    spec.validate()?;
    let (ns, nt) = (spec.s_axis.steps, spec.t_axis.steps);
    let cells = (0..ns * nt)
        .into_par_iter()
        .map(|k| run_cell(spec, k % ns, k / ns))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable {
        s_steps: ns,
        t_steps: nt,
        cells,
    })
}

/// Generations per run of a scaling study.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub median: f64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_timeout: usize,
    pub reps: usize,
}

impl ScalingRow {
    /// More than 5% of runs hit the cap.
    pub fn flagged(&self) -> bool {
        self.n_timeout * 20 > self.reps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSpec {
    pub topology: Topology,
    pub s: f64,
    pub t: f64,
    pub initial: Initial,
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Per-size cap; `None` uses `10 n ceil(log2 n)`.
    pub max_generations: Option<u64>,
}

/// Median and mean absorption generations per size. Timed-out runs enter
/// the statistics at the cap.
pub fn run_scaling(spec: &ScalingSpec) -> Result<Vec<ScalingRow>, SweepError> {
    let params = GameParams::new(spec.s, spec.t)?;
    if crate::game::classify(&params).zone.is_border() {
        return Err(DomainError::Invalid(format!(
            "(S, T) = ({}, {}) lies on a coexistence border within {BORDER_TOL:e}",
            spec.s, spec.t
        ))
        .into());
    }
    if spec.reps == 0 || spec.sizes.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    spec.sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let sweep = SweepSpec {
                topology: spec.topology,
                n,
                initial: spec.initial.clone(),
                s_axis: Axis::new(spec.s, spec.s, 1),
                t_axis: Axis::new(spec.t, spec.t, 1),
                max_generations: spec
                    .max_generations
                    .unwrap_or_else(|| crate::cycle::default_max_generations(n)),
                reps: spec.reps,
                seed: spec.seed,
                include_borders: false,
            };
            sweep.initial.validate(sweep.topology, n)?;
            let runs: Vec<(Outcome, f64, u64)> = (0..spec.reps)
                .into_par_iter()
                .map(|rep| run_replicate(&sweep, &params, rep_seed(spec.seed, k, n, rep)))
                .collect();
            let gens: Vec<f64> = runs.iter().map(|r| r.2 as f64).collect();
            let (ci_low, ci_high) =
                bootstrap_median_ci(&gens, 1000, 0.95, derive_seed(&[spec.seed, n as u64]));
            Ok(ScalingRow {
                n,
                median: median(&gens),
                mean: mean(&gens),
                ci_low,
                ci_high,
                n_timeout: runs.iter().filter(|r| r.0 == Outcome::TimedOut).count(),
                reps: spec.reps,
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(table: &SweepTable, out: W) -> Result<(), SweepError> {
    if table.cells.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in &table.cells {
        w.write_record([
            c.s.to_string(),
            c.t.to_string(),
            c.mean_frac.to_string(),
            c.std.to_string(),
            c.n_allc.to_string(),
            c.n_alld.to_string(),
            c.n_mixed.to_string(),
            c.n_timeout.to_string(),
            c.mean_absorb_gen.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses rows written by [`write_csv`]; grid indices are recovered from the
/// row order given the number of S steps.
pub fn read_csv<R: Read>(input: R, s_steps: usize) -> Result<SweepTable, SweepError> {
    let mut rdr = csv::Reader::from_reader(input);
    let bad =
        |what: &str| SweepError::Domain(DomainError::Invalid(format!("bad CSV field {what}")));
    let mut cells = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let f = |i: usize| {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| bad(CSV_HEADER[i]))
        };
        let u = |i: usize| {
            rec.get(i)
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| bad(CSV_HEADER[i]))
        };
        cells.push(SweepCell {
            i_s: k % s_steps,
            i_t: k / s_steps,
            s: f(0)?,
            t: f(1)?,
            mean_frac: f(2)?,
            std: f(3)?,
            n_allc: u(4)?,
            n_alld: u(5)?,
            n_mixed: u(6)?,
            n_timeout: u(7)?,
            mean_absorb_gen: f(8)?,
        });
    }
    if cells.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    let t_steps = cells.len().div_ceil(s_steps);
    Ok(SweepTable {
        s_steps,
        t_steps,
        cells,
    })
}

/// Binary PGM: top row is the largest T, pixel `round(255 * mean_frac)`.
pub fn write_pgm<W: Write>(table: &SweepTable, mut out: W) -> Result<(), SweepError> {
    if table.cells.is_empty() {
        return Err(SweepError::EmptyTable);
    }
    write!(out, "P5\n{} {}\n255\n", table.s_steps, table.t_steps)?;
    out.write_all(&pgm_pixels(table))?;
    out.flush()?;
    Ok(())
}

pub fn pgm_pixels(table: &SweepTable) -> Vec<u8> {
    let mut px = Vec::with_capacity(table.cells.len());
    for i_t in (0..table.t_steps).rev() {
        for i_s in 0..table.s_steps {
            let f = table.cell(i_s, i_t).mean_frac;
            px.push((255.0 * f).round().clamp(0.0, 255.0) as u8);
        }
    }
    px
}

pub fn write_scaling_csv<W: Write>(rows: &[ScalingRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "median",
        "mean",
        "ci_low",
        "ci_high",
        "n_timeout",
        "reps",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.median.to_string(),
            r.mean.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.n_timeout.to_string(),
            r.reps.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
