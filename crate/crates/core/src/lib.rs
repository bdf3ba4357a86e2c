//! Elo-style rating of multi-player ranked contests.
//!
//! Each division is scored as an elimination tournament: finishing `r`-th of
//! `n` is worth `log2(n / r)` wins, and a player's performance is the gap in
//! bits between the rank they achieved and the rank their rating predicted.
//! Rating changes follow that performance, damped by experience and by how
//! much the expected rank can move, and capped by a sigmoid.
//!
//! - [`rating`]: the per-division math kernel
//! - [`engine`]: player registry, round update and new-player inflation
//! - [`store`]: round files, rating timelines and snapshots
//! - [`evaluation`] and [`correlation`]: accuracy metrics and reports
//! - [`sweep`]: parameter tuning by replay
//! - [`simulator`]: synthetic histories from latent skills
//!
//! The per-entry loop of a division and the points of a sweep run on rayon
//! when the `parallel` feature (default) is enabled; results are identical
//! either way.

pub mod correlation;
pub mod engine;
pub mod evaluation;
pub mod exec;
pub mod rating;
pub mod replay;
pub mod simulator;
pub mod store;
pub mod sweep;

pub use engine::{
    DivisionResult, EngineError, EngineState, Entry, PlayerState, RoundInput, RoundOutcome,
};
pub use exec::Execution;
pub use rating::{PerformanceBreakdown, RatingError, RatingParams, K0};
