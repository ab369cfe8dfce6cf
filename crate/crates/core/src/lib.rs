//! Synchronous proportional imitation on cycles and complete graphs.
//!
//! Payoffs are normalized to `R = 1`, `P = 0` with `S` in `[-1, 1]` and `T`
//! in `[0, 2]`. Every vertex picks a neighbour uniformly and copies it with
//! probability proportional to the positive payoff difference.

pub mod complete;
pub mod config;
pub mod cycle;
pub mod error;
pub mod game;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use complete::{CompleteReport, CompleteRun, CompleteState, CriticalPoint, Transition};
pub use config::{ConfigStats, InitialSpec};
pub use cycle::{AbsorptionReport, CycleState, Outcome, Run, RunDecomposition, RunKind};
pub use error::{DomainError, OracleError, SweepError};
pub use game::{classify, make_params, GameParams, Quadrant, Region, Zone};
pub use oracle::ChainSolve;
pub use rng::CounterRng;
pub use sweep::{
    Axis, Initial, ScalingRow, ScalingSpec, SweepCell, SweepSpec, SweepTable, Topology,
};
