//! Log-rank performance model and the per-division rating update.
//!
//! A division is treated as an elimination tournament: the performance of a
//! player ranked `r` among `n` is `log2(n / r)` wins. A player's relative
//! performance is the difference between the rank performance they achieved
//! and the one their pre-round rating predicted, `log2(expected / actual)`.
//! Rating changes are proportional to that difference, damped by experience
//! (`W = NR^alpha`) and by how informative the expected rank is (`V`), with
//! the magnitude softly capped by a sigmoid at `M` bits.

use std::f64::consts::{LN_10, LN_2, LOG2_E};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{DivisionResult, PlayerState};
use crate::exec::{self, Execution};

/// Rating units per bit of performance: a 400 point gap is 10:1 odds, one bit
/// is 2:1, so `K0 = 400 * ln 2 / ln 10`.
pub const K0: f64 = 400.0 * LN_2 / LN_10;

const ELO_SCALE: f64 = LN_10 / 400.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RatingError {
    #[error("rating must be finite, got {0}")]
    NonFiniteRating(f64),
    #[error("rank {rank} is outside [1, {players}]")]
    RankOutOfRange { players: usize, rank: f64 },
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
}

/// Constants of a rating profile.
///
/// `b` is expressed in rating units and converted to bits through [`K0`];
/// `n` is the increase of the initial rating per 100 rounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingParams {
    pub k: f64,
    pub c: f64,
    pub m: f64,
    pub b: f64,
    pub n: f64,
    pub r0: f64,
    pub alpha: f64,
}

impl RatingParams {
    /// The base profile: `K = 600, C = 4, M = 6.75`, no bonus, no inflation.
    pub const fn elo() -> Self {
        RatingParams {
            k: 600.0,
            c: 4.0,
            m: 6.75,
            b: 0.0,
            n: 0.0,
            r0: 1200.0,
            alpha: 0.5,
        }
    }

    /// The stability profile: [`RatingParams::elo`] plus a performance bonus
    /// `B = 27` and new-player inflation `N = 63`.
    pub const fn elo2() -> Self {
        RatingParams {
            b: 27.0,
            n: 63.0,
            ..Self::elo()
        }
    }

    pub fn validate(&self) -> Result<(), RatingError> {
        let check = |name, value: f64, ok: bool, reason| {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(RatingError::InvalidParam {
                    name,
                    value,
                    reason,
                })
            }
        };
        check("K", self.k, self.k > 0.0, "must be positive")?;
        check("C", self.c, self.c >= 0.0, "must be non-negative")?;
        check("M", self.m, self.m > 0.0, "must be positive")?;
        check("B", self.b, self.b >= 0.0, "must be non-negative")?;
        check("N", self.n, self.n >= 0.0, "must be non-negative")?;
        check("R0", self.r0, true, "must be finite")?;
        check(
            "alpha",
            self.alpha,
            (0.0..=1.0).contains(&self.alpha),
            "must lie in [0, 1]",
        )
    }

    /// Performance bonus in bits per unit of sensitivity.
    pub fn bonus_bits(&self) -> f64 {
        self.b / K0
    }

    /// Initial rating increase applied after each round.
    pub fn inflation_per_round(&self) -> f64 {
        self.n / 100.0
    }
}

impl Default for RatingParams {
    fn default() -> Self {
        Self::elo()
    }
}

/// Every intermediate value of one player's rating update in one division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceBreakdown {
    pub player: String,
    pub division: u32,
    pub score: f64,
    /// Players in the division.
    pub players: usize,
    pub rating_before: f64,
    /// Round number for this player, 1 during their first rated round.
    pub round_number: u32,
    pub actual_rank: f64,
    pub expected_rank: f64,
    /// Relative performance `P` in bits, without bonus.
    pub perf: f64,
    /// `P'`, the derivative of expected performance per rating unit, in bits per `K0`.
    pub sensitivity: f64,
    /// `P` plus the performance bonus; the input of the sigmoid.
    pub bonus_perf: f64,
    pub adjusted_perf: f64,
    pub weight: f64,
    pub variance_factor: f64,
    pub delta_r: f64,
    pub mu: f64,
    pub var: f64,
}

impl PerformanceBreakdown {
    pub fn rating_after(&self) -> f64 {
        self.rating_before + self.delta_r
    }

    /// Top half of the division: `actual_rank <= n / 2`. A rank exactly at
    /// the median position `(n + 1) / 2` belongs to the bottom half.
    pub fn is_top_half(&self) -> bool {
        self.actual_rank <= self.players as f64 / 2.0
    }
}

/// Actual and expected rank of one entry plus the moment sums `mu`, `var`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankExpectation {
    pub actual: f64,
    pub expected: f64,
    pub mu: f64,
    pub var: f64,
}

#[inline]
fn win_prob(r_i: f64, r_j: f64) -> f64 {
    1.0 / (1.0 + ((r_j - r_i) * ELO_SCALE).exp())
}

/// Probability that a player rated `r_i` outperforms one rated `r_j`.
pub fn win_probability(r_i: f64, r_j: f64) -> Result<f64, RatingError> {
    for r in [r_i, r_j] {
        if !r.is_finite() {
            return Err(RatingError::NonFiniteRating(r));
        }
    }
    Ok(win_prob(r_i, r_j))
}

/// Wins achieved by rank `rank` in an elimination tournament of `players`.
pub fn rank_performance(players: usize, rank: f64) -> Result<f64, RatingError> {
    if players == 0 || !(rank >= 1.0 && rank <= players as f64) {
        return Err(RatingError::RankOutOfRange { players, rank });
    }
    Ok((players as f64 / rank).ln() * LOG2_E)
}

/// Rank and expected rank of entry `index`, ties split one half each way.
///
/// `mu` and `var` accumulate over every opponent, tied or not.
///
/// # Panics
///
/// If `ratings` and `scores` differ in length or `index` is out of bounds.
pub fn rank_and_expected_rank(index: usize, scores: &[f64], ratings: &[f64]) -> RankExpectation {
    assert_eq!(
        scores.len(),
        ratings.len(),
        "ratings must align with entries"
    );
    let s_i = scores[index];
    let r_i = ratings[index];
    let mut actual = 1.0;
    let mut expected = 1.0;
    let mut mu = 1.0;
    let mut var = 1.0;
    for (j, (&s_j, &r_j)) in scores.iter().zip(ratings).enumerate() {
        if j == index {
            continue;
        }
        let w = win_prob(r_j, r_i);
        mu += w;
        var += w * (1.0 - w);
        if s_i == s_j {
            expected += 0.5;
            actual += 0.5;
        } else {
            expected += w;
            if s_i < s_j {
                actual += 1.0;
            }
        }
    }
    RankExpectation {
        actual,
        expected,
        mu,
        var,
    }
}

/// `P = log2(expected / actual)`.
#[inline]
pub fn relative_performance(expected_rank: f64, actual_rank: f64) -> f64 {
    (expected_rank / actual_rank).ln() * LOG2_E
}

/// `P' = var / mu`, in `[1/n, 1]`.
#[inline]
pub fn sensitivity(mu: f64, var: f64) -> f64 {
    var / mu
}

#[inline]
pub fn bonus_adjusted_performance(perf: f64, sensitivity: f64, params: &RatingParams) -> f64 {
    perf + params.bonus_bits() * sensitivity
}

/// Sigmoid limiting `|perf|` below `max`, linear with unit slope at zero.
#[inline]
pub fn clamp_performance(perf: f64, max: f64) -> f64 {
    perf * max / (max + perf.abs())
}

/// `K * PA / (V * W)` with `V = 1 + C P'` and `W = NR^alpha`.
pub fn rating_delta(
    adjusted_perf: f64,
    sensitivity: f64,
    round_number: u32,
    params: &RatingParams,
) -> f64 {
    debug_assert!(round_number >= 1);
    let weight = experience_weight(round_number, params);
    let variance_factor = 1.0 + params.c * sensitivity;
    params.k * adjusted_perf / (weight * variance_factor)
}

#[inline]
fn experience_weight(round_number: u32, params: &RatingParams) -> f64 {
    if params.alpha == 0.5 {
        f64::from(round_number).sqrt()
    } else {
        f64::from(round_number).powf(params.alpha)
    }
}

fn breakdown_for(
    index: usize,
    division: &DivisionResult,
    scores: &[f64],
    ratings: &[f64],
    states: &[PlayerState],
    params: &RatingParams,
) -> PerformanceBreakdown {
    let ranks = rank_and_expected_rank(index, scores, ratings);
    let perf = relative_performance(ranks.expected, ranks.actual);
    let sens = sensitivity(ranks.mu, ranks.var);
    let bonus_perf = bonus_adjusted_performance(perf, sens, params);
    let adjusted_perf = clamp_performance(bonus_perf, params.m);
    let round_number = states[index].num_rounds + 1;
    let weight = experience_weight(round_number, params);
    let variance_factor = 1.0 + params.c * sens;
    let delta_r = params.k * adjusted_perf / (weight * variance_factor);
    let entry = &division.entries[index];
    PerformanceBreakdown {
        player: entry.player.clone(),
        division: division.division,
        score: entry.score,
        players: scores.len(),
        rating_before: ratings[index],
        round_number,
        actual_rank: ranks.actual,
        expected_rank: ranks.expected,
        perf,
        sensitivity: sens,
        bonus_perf,
        adjusted_perf,
        weight,
        variance_factor,
        delta_r,
        mu: ranks.mu,
        var: ranks.var,
    }
}

/// Rates one division from pre-round states aligned with its entries.
///
/// Nothing is mutated; applying the deltas is the caller's job.
pub fn rate_division(
    division: &DivisionResult,
    states: &[PlayerState],
    params: &RatingParams,
) -> Vec<PerformanceBreakdown> {
    rate_division_with(division, states, params, Execution::default())
}

/// [`rate_division`] with an explicit execution strategy. Output is
/// identical for every strategy.
///
/// # Panics
///
/// If `states` is not aligned with the division's entries.
pub fn rate_division_with(
    division: &DivisionResult,
    states: &[PlayerState],
    params: &RatingParams,
    exec: Execution,
) -> Vec<PerformanceBreakdown> {
    assert_eq!(
        division.entries.len(),
        states.len(),
        "one player state per entry"
    );
    let scores: Vec<f64> = division.entries.iter().map(|e| e.score).collect();
    let ratings: Vec<f64> = states.iter().map(|s| s.rating).collect();
    exec::map_indices(scores.len(), exec, 32, |i| {
        breakdown_for(i, division, &scores, &ratings, states, params)
    })
}
