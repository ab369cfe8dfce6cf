//! Exact Markov-chain counterparts of the simulators.
//!
//! [`ChainSolve`] takes any finite row-stochastic chain, finds its closed
//! classes from the support graph and solves the absorbing-chain systems for
//! hitting probabilities and the first two moments of the hitting time.

use std::io::Write;

use nalgebra::{DMatrix, Matrix3, Vector3};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use statrs::distribution::{Binomial, Discrete};

use crate::complete::{transition, Transition};
use crate::cycle::{CycleDynamics, CycleState};
use crate::error::{DomainError, OracleError};
use crate::game::GameParams;

/// Transition probabilities below this are not edges of the support graph.
pub const EDGE_EPS: f64 = 1e-15;
/// Largest transient block solved by dense LU.
pub const DENSE_LIMIT: usize = 2048;
/// Residual target of the iterative fallback.
pub const ITER_TOL: f64 = 1e-10;
/// Largest cycle handled by [`cycle_chain`].
pub const MAX_CYCLE_N: usize = 20;

pub type Row = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct ChainSolve {
    pub rows: Vec<Row>,
    /// Closed communicating classes, each sorted; ordered by smallest member.
    pub closed_classes: Vec<Vec<usize>>,
    pub class_of: Vec<Option<usize>>,
    /// `absorb_probs[state][class]`.
    pub absorb_probs: Vec<Vec<f64>>,
    /// Expected generations until a single-state closed class is hit;
    /// infinite when a larger closed class can be reached.
    pub expected_time: Vec<f64>,
    /// Variance of that hitting time (infinite alongside the mean).
    pub time_variance: Vec<f64>,
}

impl ChainSolve {
    pub fn from_rows(rows: Vec<Row>) -> Result<Self, OracleError> {
        let n = rows.len();
        let closed_classes = closed_classes(&rows);
        let mut class_of = vec![None; n];
        for (k, class) in closed_classes.iter().enumerate() {
            for &s in class {
                class_of[s] = Some(k);
            }
        }
        let transient: Vec<usize> = (0..n).filter(|&s| class_of[s].is_none()).collect();
        let mut local = vec![usize::MAX; n];
        for (i, &s) in transient.iter().enumerate() {
            local[s] = i;
        }
        let m = transient.len();
        let k = closed_classes.len();

        // Right-hand sides: one column per closed class, then the time column.
        let mut rhs = vec![vec![0.0; m]; k + 1];
        for (i, &s) in transient.iter().enumerate() {
            for &(j, p) in &rows[s] {
                if let Some(c) = class_of[j] {
                    rhs[c][i] += p;
                }
            }
            rhs[k][i] = 1.0;
        }
        let q_rows: Vec<Row> = transient
            .iter()
            .map(|&s| {
                rows[s]
                    .iter()
                    .filter(|&&(j, _)| class_of[j].is_none())
                    .map(|&(j, p)| (local[j], p))
                    .collect()
            })
            .collect();

        // Diagonal of I - Q as the outflow sum, not 1 - P_ii, which cancels
        // badly for slow chains.
        let outflow: Vec<f64> = transient
            .iter()
            .map(|&s| {
                rows[s]
                    .iter()
                    .filter(|&&(j, _)| j != s)
                    .map(|&(_, p)| p)
                    .sum()
            })
            .collect();
        let solver = LinearSolver::new(&q_rows, &outflow)?;
        let mut sols = Vec::with_capacity(k + 2);
        for b in &rhs {
            sols.push(solver.solve(b)?);
        }
        let tau = sols[k].clone();
        // Second moment: (I - Q) m2 = 1 + 2 Q tau.
        let b2: Vec<f64> = q_rows
            .iter()
            .map(|row| 1.0 + 2.0 * row.iter().map(|&(j, p)| p * tau[j]).sum::<f64>())
            .collect();
        let m2 = solver.solve(&b2)?;

        let mut absorb_probs = vec![vec![0.0; k]; n];
        let mut expected_time = vec![0.0; n];
        let mut time_variance = vec![0.0; n];
        let recurrent_mass = |probs: &[f64]| -> f64 {
            closed_classes
                .iter()
                .zip(probs)
                .filter(|(c, _)| c.len() > 1)
                .map(|(_, &p)| p)
                .sum()
        };
        for s in 0..n {
            match class_of[s] {
                Some(c) => {
                    absorb_probs[s][c] = 1.0;
                    if closed_classes[c].len() > 1 {
                        expected_time[s] = f64::INFINITY;
                        time_variance[s] = f64::INFINITY;
                    }
                }
                None => {
                    let i = local[s];
                    for c in 0..k {
                        absorb_probs[s][c] = sols[c][i];
                    }
                    if recurrent_mass(&absorb_probs[s]) > 1e-12 {
                        expected_time[s] = f64::INFINITY;
                        time_variance[s] = f64::INFINITY;
                    } else {
                        expected_time[s] = tau[i];
                        time_variance[s] = (m2[i] - tau[i] * tau[i]).max(0.0);
                    }
                }
            }
        }

        Ok(Self {
            rows,
            closed_classes,
            class_of,
            absorb_probs,
            expected_time,
            time_variance,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Largest `|row sum - 1|`.
    pub fn max_row_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Class index containing `state` if it is a single absorbing state.
    pub fn absorbing_class_of(&self, state: usize) -> Option<usize> {
        self.closed_classes
            .iter()
            .position(|c| c.len() == 1 && c[0] == state)
    }

    /// Probability of ending in the absorbing state `target` from `start`.
    pub fn prob_into(&self, start: usize, target: usize) -> f64 {
        self.absorbing_class_of(target)
            .map_or(0.0, |c| self.absorb_probs[start][c])
    }

    /// Writes `state,class,p[<rep>]...,expected_time`, one row per state.
    pub fn write_csv<W: Write>(
        &self,
        out: W,
        label: impl Fn(usize) -> String,
    ) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["state".to_string(), "class".to_string()];
        for c in &self.closed_classes {
            header.push(format!("p[{}]", label(c[0])));
        }
        header.push("expected_time".to_string());
        w.write_record(&header)?;
        for s in 0..self.n_states() {
            let mut rec = vec![
                label(s),
                self.class_of[s].map_or("transient".to_string(), |c| {
                    label(self.closed_classes[c][0])
                }),
            ];
            rec.extend(self.absorb_probs[s].iter().map(|p| p.to_string()));
            rec.push(self.expected_time[s].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn closed_classes(rows: &[Row]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(rows.len(), 0);
    let nodes: Vec<_> = (0..rows.len()).map(|_| g.add_node(())).collect();
    for (s, row) in rows.iter().enumerate() {
        for &(j, p) in row {
            if p > EDGE_EPS && j != s {
                g.add_edge(nodes[s], nodes[j], ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; rows.len()];
    for (k, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp[v.index()] = k;
        }
    }
    let mut closed: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(k, scc)| {
            scc.iter().all(|v| {
                rows[v.index()]
                    .iter()
                    .all(|&(j, p)| p <= EDGE_EPS || comp[j] == *k)
            })
        })
        .map(|(_, scc)| {
            let mut c: Vec<usize> = scc.iter().map(|v| v.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    closed.sort_by_key(|c| c[0]);
    closed
}

/// Solver for `(I - Q) x = b` on the transient block.
enum LinearSolver<'a> {
    Empty,
    Dense(
        DMatrix<f64>,
        nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    ),
    Iterative(&'a [Row], &'a [f64]),
}

impl<'a> LinearSolver<'a> {
    fn new(q: &'a [Row], outflow: &'a [f64]) -> Result<Self, OracleError> {
        let m = q.len();
        if m == 0 {
            return Ok(Self::Empty);
        }
        if m > DENSE_LIMIT {
            return Ok(Self::Iterative(q, outflow));
        }
        let mut a = DMatrix::<f64>::zeros(m, m);
        for (i, row) in q.iter().enumerate() {
            a[(i, i)] = outflow[i];
            for &(j, p) in row {
                if j != i {
                    a[(i, j)] -= p;
                }
            }
        }
        let lu = a.clone().lu();
        Ok(Self::Dense(a, lu))
    }

    fn solve(&self, b: &[f64]) -> Result<Vec<f64>, OracleError> {
        match self {
            Self::Empty => Ok(Vec::new()),
            Self::Dense(a, lu) => {
                let singular = || OracleError::Singular("transient block".into());
                let rhs = nalgebra::DVector::from_column_slice(b);
                let mut x = lu.solve(&rhs).ok_or_else(singular)?;
                // Near-identity blocks (slow chains) lose digits in one pass.
                for _ in 0..2 {
                    let r = &rhs - a * &x;
                    x += lu.solve(&r).ok_or_else(singular)?;
                }
                Ok(x.iter().copied().collect())
            }
            Self::Iterative(q, outflow) => gauss_seidel(q, outflow, b),
        }
    }
}

fn gauss_seidel(q: &[Row], outflow: &[f64], b: &[f64]) -> Result<Vec<f64>, OracleError> {
    const MAX_SWEEPS: usize = 200_000;
    let m = q.len();
    let mut x = vec![0.0; m];
    let off = |i: usize, x: &[f64]| -> f64 {
        q[i].iter()
            .filter(|&&(j, _)| j != i)
            .map(|&(j, p)| p * x[j])
            .sum()
    };
    for _ in 0..MAX_SWEEPS {
        for i in 0..m {
            x[i] = (b[i] + off(i, &x)) / outflow[i];
        }
        let resid = (0..m)
            .map(|i| (outflow[i] * x[i] - off(i, &x) - b[i]).abs())
            .fold(0.0, f64::max);
        if resid < ITER_TOL {
            return Ok(x);
        }
    }
    Err(OracleError::NoConvergence {
        tol: ITER_TOL,
        iters: MAX_SWEEPS,
    })
}

/// Successor distribution of a cycle configuration (bit `i` of the mask is
/// vertex `i`). Vertices flip independently given the current state, so the
/// row is a product of per-vertex Bernoulli factors.
pub fn cycle_transition_row(state: &CycleState, params: &GameParams) -> Result<Row, OracleError> {
    let n = state.len();
    if n > MAX_CYCLE_N {
        return Err(OracleError::TooLarge {
            n,
            cap: MAX_CYCLE_N,
        });
    }
    Ok(cycle_row(&CycleDynamics::new(params), state))
}

fn cycle_row(dynamics: &CycleDynamics, state: &CycleState) -> Row {
    let base = state.mask();
    let mut forced = 0u64;
    let mut random: Vec<(usize, f64)> = Vec::new();
    for i in 0..state.len() {
        let q = dynamics.flip_prob(state, i);
        if q >= 1.0 {
            forced |= 1 << i;
        } else if q > 0.0 {
            random.push((i, q));
        }
    }
    let mut row = Vec::with_capacity(1 << random.len());
    for subset in 0u64..(1u64 << random.len()) {
        let mut p = 1.0;
        let mut flips = forced;
        for (k, &(i, q)) in random.iter().enumerate() {
            if subset >> k & 1 == 1 {
                p *= q;
                flips |= 1 << i;
            } else {
                p *= 1.0 - q;
            }
        }
        row.push(((base ^ flips) as usize, p));
    }
    row
}

/// Full chain over all `2^n` configurations of the `n`-cycle.
pub fn solve_absorption(n: usize, params: &GameParams) -> Result<ChainSolve, OracleError> {
    if n > MAX_CYCLE_N {
        return Err(OracleError::TooLarge {
            n,
            cap: MAX_CYCLE_N,
        });
    }
    if n < 3 {
        return Err(DomainError::CycleTooSmall(n).into());
    }
    let dynamics = CycleDynamics::new(params);
    let rows = (0..1u64 << n)
        .map(|mask| {
            let s = CycleState::from_mask(n, mask).expect("n <= 20");
            cycle_row(&dynamics, &s)
        })
        .collect();
    ChainSolve::from_rows(rows)
}

/// Chain on the cooperator count of `K_n`, with binomial rows.
pub fn complete_chain(n: usize, params: &GameParams) -> Result<ChainSolve, OracleError> {
    if n < 2 {
        return Err(DomainError::CompleteTooSmall(n).into());
    }
    if n > 200 {
        return Err(
            DomainError::Invalid(format!("complete chain supports n <= 200, got {n}")).into(),
        );
    }
    let pmf_row = |trials: usize, p: f64, to: &dyn Fn(usize) -> usize| -> Row {
        let dist = Binomial::new(p, trials as u64).expect("p in [0, 1]");
        (0..=trials)
            .map(|k| (to(k), dist.pmf(k as u64)))
            .filter(|&(_, p)| p > 0.0)
            .collect()
    };
    let rows = (0..=n)
        .map(|delta| match transition(delta, n, params) {
            Transition::Frozen => vec![(delta, 1.0)],
            Transition::Down(p) => pmf_row(delta, p, &|k| delta - k),
            Transition::Up(r) => pmf_row(n - delta, r, &|k| delta + k),
        })
        .collect();
    ChainSolve::from_rows(rows)
}

/// Transition matrix of the two-barrier merging chain, states ordered
/// `M1, M2, M3, M0` (index = number of defectors between the barriers, with
/// `M0` last).
pub fn merging_matrix(b: f64, d_bar: f64) -> [[f64; 4]; 4] {
    let (hb, hd) = (1.0 - b / 2.0, 1.0 - d_bar / 2.0);
    [
        [hd * hd, d_bar * hd, d_bar * d_bar / 4.0, 0.0],
        [b * hb, hb * hb, 0.0, b * b / 4.0],
        [b * b / 4.0, b * hb, hb * hb, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn check_open_unit(x: f64) -> Result<(), DomainError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(DomainError::Probability(x))
    }
}

/// Closed-form expected merging times `(τ1, τ2, τ3)` from `M1, M2, M3`.
pub fn merging_times(b: f64, d_bar: f64) -> Result<(f64, f64, f64), DomainError> {
    check_open_unit(b)?;
    check_open_unit(d_bar)?;
    let d = d_bar;
    let den = d * b * b * (4.0 - b - d);
    let t1 = (16.0 * b - 8.0 * b * b + b.powi(3) + 16.0 * d - 4.0 * b * d - b * d * d) / den;
    let t2 = 2.0 * (8.0 * b - 6.0 * b * b + b.powi(3) + 8.0 * d - 2.0 * b * d - b * d * d) / den;
    let t3 = (16.0 * b - 12.0 * b * b + 3.0 * b.powi(3) + 16.0 * d - 3.0 * b * d * d) / den;
    debug_assert!({
        let (s1, s2, s3) = merging_times_by_solve(b, d_bar);
        let tol = 1e-9 * t1.max(t2).max(t3);
        (s1 - t1).abs() < tol && (s2 - t2).abs() < tol && (s3 - t3).abs() < tol
    });
    Ok((t1, t2, t3))
}

/// `(I - Q)^{-1} 1` on the 3×3 transient block of [`merging_matrix`].
pub fn merging_times_by_solve(b: f64, d_bar: f64) -> (f64, f64, f64) {
    let p = merging_matrix(b, d_bar);
    let q = Matrix3::from_fn(|i, j| p[i][j]);
    let tau = (Matrix3::identity() - q)
        .lu()
        .solve(&Vector3::repeat(1.0))
        .expect("transient block of an absorbing chain is invertible");
    (tau[0], tau[1], tau[2])
}

/// Threshold below which `r` and `q` are treated as equal.
pub const RUIN_EQ_TOL: f64 = 1e-12;

/// Expected duration of the ruin walk on `{0..4}` started at `start`, moving
/// up with probability `r`, down with `q` and staying put otherwise.
pub fn gamblers_ruin_duration(r: f64, q: f64, start: usize) -> Result<f64, DomainError> {
    if !(r > 0.0 && q > 0.0 && r + q <= 1.0 + 1e-15) {
        return Err(DomainError::Invalid(format!(
            "ruin walk needs r, q > 0 and r + q <= 1, got r={r}, q={q}"
        )));
    }
    if start > 4 {
        return Err(DomainError::Invalid(format!("start {start} outside 0..=4")));
    }
    let l = start as f64;
    if (r - q).abs() < RUIN_EQ_TOL {
        // Symmetric walk slowed down by the self-loop.
        return Ok(l * (4.0 - l) / (r + q));
    }
    // Homogeneous of degree -1 in (r, q), which absorbs the lazy scaling.
    let ratio = q / r;
    Ok(l / (q - r) - 4.0 / (q - r) * (1.0 - ratio.powf(l)) / (1.0 - ratio.powi(4)))
}
