//! The statement calculus and the two verifiers: an exact game solver under
//! round semantics and a Monte Carlo estimator under deadline semantics.

mod calculus;
mod game;
mod monte_carlo;
pub mod stats;

pub use calculus::{
    chain, compose, recurrence_from_chain, solve_recurrence, union_lift, Branch, CalculusError,
    ChainLink, ChainResult, Outcome, RecurrenceSpec, TimeBoundStatement,
};
pub use game::{
    verify_exact, Conditioning, GameError, GameOptions, GameQuery, GameResult, GameSolver,
    Objective,
};
pub use monte_carlo::{
    mean_time_to, simulate, simulate_recurrence, verify_monte_carlo, verify_with_mean_time, MeanTimeEstimate,
    MeanTimeReport, MonteCarloReport, StartEstimate, Trial, CONFIDENCE,
};
