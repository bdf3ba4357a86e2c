//! Synthetic contest histories from latent player skills.
//!
//! Each round every participating player scores `skill + noise`, optionally
//! rounded to a multiple of `tie_step` so that equal scores occur. Skills can
//! drift between rounds and new players can arrive.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`) seeded with
//! `seed_from_u64`. Uniforms are `(next_u64 >> 11) * 2^-53`, normals use the
//! cosine branch of Box-Muller on `(1 - u1, u2)`, and arrival counts use
//! Knuth's product-of-uniforms Poisson sampler. Draw order per round:
//! drift for every known player, arrival count then new skills,
//! participation for every player, then noise for every participant, players
//! always visited in creation order. A draw is skipped entirely when its
//! parameter disables it (zero stddev, probability one, zero rate).

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::engine::{DivisionResult, Entry, RoundInput};
use crate::evaluation::EvalError;
use crate::rating::win_probability;
use crate::store::RatingTimeline;

/// Per-round performance noise (rating units) under which the Gaussian
/// difference of two performances approximates the logistic win curve:
/// `Phi(x) ~ logistic(1.702 x)` gives `sigma = 1.702 * 400 / (ln 10 * sqrt 2)`.
pub fn logistic_matched_noise_sd() -> f64 {
    1.702 * 400.0 / (std::f64::consts::LN_10 * std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub players: usize,
    pub rounds: usize,
    pub skill_mean: f64,
    pub skill_sd: f64,
    /// Explicit initial skills; overrides `players`, `skill_mean` and `skill_sd`.
    pub initial_skills: Option<Vec<f64>>,
    pub noise_sd: f64,
    pub participation: f64,
    pub drift_sd: f64,
    /// Mean number of new players per round.
    pub arrival_rate: f64,
    /// Fraction of each round's participants, by latent skill, put in
    /// division 1; the rest form division 2.
    pub div1_fraction: f64,
    /// Score quantization step; zero keeps raw scores.
    pub tie_step: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            players: 200,
            rounds: 300,
            skill_mean: 1200.0,
            skill_sd: 350.0,
            initial_skills: None,
            noise_sd: logistic_matched_noise_sd(),
            participation: 1.0,
            drift_sd: 0.0,
            arrival_rate: 0.0,
            div1_fraction: 1.0,
            tie_step: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(&'static str),
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !finite_nonneg(self.skill_sd)
            || !finite_nonneg(self.noise_sd)
            || !finite_nonneg(self.drift_sd)
        {
            return Err(SimError::Config(
                "standard deviations must be finite and >= 0",
            ));
        }
        if !prob(self.participation) || !prob(self.div1_fraction) {
            return Err(SimError::Config("probabilities must lie in [0, 1]"));
        }
        if !finite_nonneg(self.arrival_rate) || !finite_nonneg(self.tie_step) {
            return Err(SimError::Config(
                "arrival rate and tie step must be finite and >= 0",
            ));
        }
        if !self.skill_mean.is_finite()
            || self
                .initial_skills
                .as_ref()
                .is_some_and(|s| s.iter().any(|v| !v.is_finite()))
        {
            return Err(SimError::Config("skills must be finite"));
        }
        Ok(())
    }
}

/// Generated rounds plus the latent skill of every participant at each round.
#[derive(Debug, Clone, PartialEq)]
pub struct SimHistory {
    pub rounds: Vec<RoundInput>,
    pub latent: RatingTimeline,
    /// Skill of every player after the last round, in creation order.
    pub final_skills: Vec<(String, f64)>,
}

struct Source(ChaCha20Rng);

impl Source {
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn poisson(&mut self, rate: f64) -> usize {
        let limit = (-rate).exp();
        let mut k = 0;
        let mut p = self.uniform();
        while p > limit {
            k += 1;
            p *= self.uniform();
        }
        k
    }
}

pub fn player_id(index: usize) -> String {
    format!("p{index:05}")
}

pub fn round_id(index: usize) -> String {
    format!("r{:04}", index + 1)
}

/// Deterministic given the config. Rounds without participants are omitted.
pub fn generate_history(config: &SimConfig) -> Result<SimHistory, SimError> {
    config.validate()?;
    let mut rng = Source(ChaCha20Rng::seed_from_u64(config.seed));
    let mut skills: Vec<f64> = match &config.initial_skills {
        Some(s) => s.clone(),
        None => (0..config.players)
            .map(|_| rng.normal(config.skill_mean, config.skill_sd))
            .collect(),
    };
    let mut rounds = Vec::new();
    let mut latent = RatingTimeline::default();

    for index in 0..config.rounds {
        if config.drift_sd > 0.0 {
            for s in skills.iter_mut() {
                *s += rng.normal(0.0, config.drift_sd);
            }
        }
        if config.arrival_rate > 0.0 {
            for _ in 0..rng.poisson(config.arrival_rate) {
                skills.push(rng.normal(config.skill_mean, config.skill_sd));
            }
        }
        let participants: Vec<usize> = if config.participation < 1.0 {
            (0..skills.len())
                .filter(|_| rng.uniform() < config.participation)
                .collect()
        } else {
            (0..skills.len()).collect()
        };
        if participants.is_empty() {
            continue;
        }
        let scores: Vec<f64> = participants
            .iter()
            .map(|&p| {
                let raw = skills[p]
                    + if config.noise_sd > 0.0 {
                        rng.normal(0.0, config.noise_sd)
                    } else {
                        0.0
                    };
                if config.tie_step > 0.0 {
                    (raw / config.tie_step).round() * config.tie_step
                } else {
                    raw
                }
            })
            .collect();

        let mut by_skill: Vec<usize> = (0..participants.len()).collect();
        by_skill.sort_by(|&a, &b| {
            skills[participants[b]]
                .total_cmp(&skills[participants[a]])
                .then(a.cmp(&b))
        });
        let top = (config.div1_fraction * participants.len() as f64).ceil() as usize;
        let mut in_div1 = vec![false; participants.len()];
        for &k in &by_skill[..top.min(participants.len())] {
            in_div1[k] = true;
        }

        let id = round_id(index);
        let mut div1 = DivisionResult {
            division: 1,
            entries: Vec::new(),
        };
        let mut div2 = DivisionResult {
            division: 2,
            entries: Vec::new(),
        };
        for (k, &p) in participants.iter().enumerate() {
            let player = player_id(p);
            latent.insert(&id, &player, skills[p]);
            let entry = Entry {
                player,
                score: scores[k],
            };
            if in_div1[k] {
                div1.entries.push(entry);
            } else {
                div2.entries.push(entry);
            }
        }
        let divisions = [div1, div2]
            .into_iter()
            .filter(|d| !d.entries.is_empty())
            .collect();
        rounds.push(RoundInput {
            round_id: id,
            divisions,
        });
    }

    let final_skills = skills
        .iter()
        .enumerate()
        .map(|(i, &s)| (player_id(i), s))
        .collect();
    Ok(SimHistory {
        rounds,
        latent,
        final_skills,
    })
}

/// Deviation above which a calibration bin is flagged.
pub const CALIBRATION_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub pairs: u64,
    pub mean_predicted: f64,
    /// Fraction of pairs won, ties counting one half.
    pub empirical: f64,
}

impl CalibrationBin {
    pub fn deviation(&self) -> f64 {
        (self.empirical - self.mean_predicted).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub max_deviation: f64,
    pub flagged: bool,
}

/// Bins every ordered pair of every division by predicted win probability
/// (deciles) and compares with the observed outcome.
pub fn calibration_check(
    rounds: &[RoundInput],
    ratings: &RatingTimeline,
) -> Result<CalibrationReport, EvalError> {
    let mut sums = [(0u64, 0.0f64, 0.0f64); 10];
    for round in rounds {
        for division in &round.divisions {
            let rated = division
                .entries
                .iter()
                .map(|e| {
                    ratings
                        .get(&round.round_id, &e.player)
                        .map(|r| (r, e.score))
                        .ok_or_else(|| EvalError::MissingRating {
                            round: round.round_id.clone(),
                            player: e.player.clone(),
                        })
                })
                .collect::<Result<Vec<_>, _>>()?;
            for (i, &(ri, si)) in rated.iter().enumerate() {
                for (j, &(rj, sj)) in rated.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let p = win_probability(ri, rj).expect("timeline ratings are finite");
                    let outcome = if si > sj {
                        1.0
                    } else if si == sj {
                        0.5
                    } else {
                        0.0
                    };
                    let bin = ((p * 10.0) as usize).min(9);
                    sums[bin].0 += 1;
                    sums[bin].1 += p;
                    sums[bin].2 += outcome;
                }
            }
        }
    }
    let bins: Vec<CalibrationBin> = sums
        .iter()
        .enumerate()
        .map(|(k, &(pairs, p, won))| {
            let n = pairs.max(1) as f64;
            CalibrationBin {
                lo: k as f64 / 10.0,
                hi: (k + 1) as f64 / 10.0,
                pairs,
                mean_predicted: p / n,
                empirical: won / n,
            }
        })
        .collect();
    let max_deviation = bins
        .iter()
        .filter(|b| b.pairs > 0)
        .map(CalibrationBin::deviation)
        .fold(0.0, f64::max);
    Ok(CalibrationReport {
        bins,
        max_deviation,
        flagged: max_deviation > CALIBRATION_TOLERANCE,
    })
}
