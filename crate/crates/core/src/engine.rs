//! Persistent engine state and the round-level update.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::rating::{self, PerformanceBreakdown, RatingParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerState {
    pub rating: f64,
    /// Rated rounds completed so far.
    pub num_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub player: String,
    pub score: f64,
}

/// Scores of one independently rated division; higher is better.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DivisionResult {
    pub division: u32,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RoundInput {
    pub round_id: String,
    pub divisions: Vec<DivisionResult>,
}

impl RoundInput {
    pub fn participants(&self) -> usize {
        self.divisions.iter().map(|d| d.entries.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("round {round}: player {player} appears more than once")]
    DuplicatePlayer { round: String, player: String },
}

/// Breakdowns of one rated round, grouped by division in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub round_id: String,
    pub divisions: Vec<Vec<PerformanceBreakdown>>,
}

impl RoundOutcome {
    pub fn breakdowns(&self) -> impl Iterator<Item = &PerformanceBreakdown> {
        self.divisions.iter().flatten()
    }
}

/// Player registry plus the inflation-adjusted initial rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    pub players: BTreeMap<String, PlayerState>,
    pub r1: f64,
    pub rounds_processed: u64,
}

impl EngineState {
    pub fn new(params: &RatingParams) -> Self {
        EngineState {
            players: BTreeMap::new(),
            r1: params.r0,
            rounds_processed: 0,
        }
    }

    /// Initial rating implied by the round count: `R0 + N/100 * rounds`.
    pub fn initial_rating_after(params: &RatingParams, rounds: u64) -> f64 {
        params.r0 + params.inflation_per_round() * rounds as f64
    }

    pub fn player(&self, id: &str) -> Option<&PlayerState> {
        self.players.get(id)
    }

    /// Rates every division of `round` from pre-round ratings, then applies
    /// all deltas, bumps each participant's round count and advances `r1`.
    pub fn rate_round(
        &mut self,
        round: &RoundInput,
        params: &RatingParams,
    ) -> Result<RoundOutcome, EngineError> {
        self.rate_round_with(round, params, Execution::default())
    }

    pub fn rate_round_with(
        &mut self,
        round: &RoundInput,
        params: &RatingParams,
        exec: Execution,
    ) -> Result<RoundOutcome, EngineError> {
        let mut seen = HashSet::with_capacity(round.participants());
        for entry in round.divisions.iter().flat_map(|d| &d.entries) {
            if !seen.insert(entry.player.as_str()) {
                return Err(EngineError::DuplicatePlayer {
                    round: round.round_id.clone(),
                    player: entry.player.clone(),
                });
            }
        }

        let r1 = self.r1;
        for entry in round.divisions.iter().flat_map(|d| &d.entries) {
            crate::store::get_or_create_player(&mut self.players, &entry.player, r1);
        }

        let divisions: Vec<Vec<PerformanceBreakdown>> = round
            .divisions
            .iter()
            .map(|division| {
                let states: Vec<PlayerState> = division
                    .entries
                    .iter()
                    .map(|e| self.players[&e.player])
                    .collect();
                rating::rate_division_with(division, &states, params, exec)
            })
            .collect();

        for b in divisions.iter().flatten() {
            let state = self
                .players
                .get_mut(&b.player)
                .expect("participant registered above");
            state.rating += b.delta_r;
            state.num_rounds += 1;
        }
        self.rounds_processed += 1;
        self.r1 = Self::initial_rating_after(params, self.rounds_processed);

        Ok(RoundOutcome {
            round_id: round.round_id.clone(),
            divisions,
        })
    }
}
