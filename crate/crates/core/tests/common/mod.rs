//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's rating or correlation code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use elorank_core::{DivisionResult, Entry, RatingParams, RoundInput};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

/// Random division: `n` players, ratings in [0, 3500], scores on a small
/// integer grid so ties are frequent.
pub fn random_division(rng: &mut Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<u32>) {
    let levels = 1 + rng.below(n.max(2));
    let scores = (0..n).map(|_| rng.below(levels) as f64 * 25.0).collect();
    let ratings = (0..n).map(|_| rng.range(0.0, 3500.0)).collect();
    let rounds = (0..n).map(|_| rng.below(300) as u32).collect();
    (scores, ratings, rounds)
}

pub fn division_of(scores: &[f64]) -> DivisionResult {
    DivisionResult {
        division: 1,
        entries: scores
            .iter()
            .enumerate()
            .map(|(i, &score)| Entry {
                player: format!("p{i}"),
                score,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleRow {
    pub actual: f64,
    pub expected: f64,
    pub mu: f64,
    pub var: f64,
    pub perf: f64,
    pub sens: f64,
    pub bonus_perf: f64,
    pub adjusted: f64,
    pub weight: f64,
    pub variance: f64,
    pub delta: f64,
}

/// Probability that rating `a` beats rating `b`, written with the power of ten.
pub fn wp(a: f64, b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((b - a) / 400.0))
}

/// Straight evaluation of the formulas for one division.
pub fn oracle_division(
    scores: &[f64],
    ratings: &[f64],
    completed: &[u32],
    p: &RatingParams,
) -> Vec<OracleRow> {
    let n = scores.len();
    let k0 = 400.0 / 10f64.log2();
    (0..n)
        .map(|i| {
            let better = (0..n).filter(|&j| scores[j] > scores[i]).count() as f64;
            let tied = (0..n).filter(|&j| j != i && scores[j] == scores[i]).count() as f64;
            let actual = 1.0 + better + tied / 2.0;
            let expected = 1.0
                + (0..n)
                    .filter(|&j| scores[j] != scores[i])
                    .map(|j| wp(ratings[j], ratings[i]))
                    .sum::<f64>()
                + tied / 2.0;
            let ws: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| wp(ratings[j], ratings[i]))
                .collect();
            let mu = 1.0 + ws.iter().sum::<f64>();
            let var = 1.0 + ws.iter().map(|w| w * (1.0 - w)).sum::<f64>();
            let perf = expected.log2() - actual.log2();
            let sens = var / mu;
            let bonus_perf = perf + p.b / k0 * sens;
            let adjusted = bonus_perf / (1.0 + bonus_perf.abs() / p.m);
            let weight = (completed[i] as f64 + 1.0).powf(p.alpha);
            let variance = 1.0 + p.c * sens;
            let delta = p.k / variance * adjusted / weight;
            OracleRow {
                actual,
                expected,
                mu,
                var,
                perf,
                sens,
                bonus_perf,
                adjusted,
                weight,
                variance,
                delta,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePlayer {
    pub rating: f64,
    pub rounds: u32,
}

/// Round-level replay in the order of the reference listing: group by
/// division, rate each from the frozen ratings, then apply every delta and
/// bump the initial rating once.
pub struct OracleEngine {
    pub players: BTreeMap<String, OraclePlayer>,
    pub r1: f64,
    pub rounds: u64,
    pub params: RatingParams,
}

impl OracleEngine {
    pub fn new(params: RatingParams) -> Self {
        OracleEngine {
            players: BTreeMap::new(),
            r1: params.r0,
            rounds: 0,
            params,
        }
    }

    /// Returns (player, delta) in division order.
    pub fn rate_round(&mut self, round: &RoundInput) -> Vec<(String, f64)> {
        let mut results: Vec<(u32, String, f64)> = Vec::new();
        for d in &round.divisions {
            for e in &d.entries {
                results.push((d.division, e.player.clone(), e.score));
            }
        }
        results.sort_by_key(|r| r.0);
        for (_, id, _) in &results {
            let r1 = self.r1;
            self.players.entry(id.clone()).or_insert(OraclePlayer {
                rating: r1,
                rounds: 0,
            });
        }
        let mut deltas = Vec::new();
        let mut start = 0;
        while start < results.len() {
            let mut end = start;
            while end < results.len() && results[end].0 == results[start].0 {
                end += 1;
            }
            let slice = &results[start..end];
            let scores: Vec<f64> = slice.iter().map(|r| r.2).collect();
            let ratings: Vec<f64> = slice.iter().map(|r| self.players[&r.1].rating).collect();
            let done: Vec<u32> = slice.iter().map(|r| self.players[&r.1].rounds).collect();
            for (row, r) in oracle_division(&scores, &ratings, &done, &self.params)
                .iter()
                .zip(slice)
            {
                deltas.push((r.1.clone(), row.delta));
            }
            start = end;
        }
        for (id, d) in &deltas {
            let p = self.players.get_mut(id).unwrap();
            p.rating += d;
            p.rounds += 1;
        }
        self.rounds += 1;
        self.r1 = self.params.r0 + self.params.n / 100.0 * self.rounds as f64;
        deltas
    }
}

/// Kendall tau-b by direct pair enumeration.
pub fn kendall_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut conc, mut disc, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                continue;
            } else if dx == 0.0 {
                tx += 1;
            } else if dy == 0.0 {
                ty += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let a = (conc + disc + tx) as f64;
    let b = (conc + disc + ty) as f64;
    if n < 2 || a == 0.0 || b == 0.0 {
        return None;
    }
    Some((conc - disc) as f64 / (a * b).sqrt())
}

/// Average rank of each value by counting smaller and equal values.
pub fn mid_rank_oracle(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let less = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation of mid-ranks, computed from raw sums.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    let (rx, ry) = (mid_rank_oracle(x), mid_rank_oracle(y));
    let n = x.len() as f64;
    let sx: f64 = rx.iter().sum();
    let sy: f64 = ry.iter().sum();
    let sxx: f64 = rx.iter().map(|a| a * a).sum();
    let syy: f64 = ry.iter().map(|a| a * a).sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    let cov = n * sxy - sx * sy;
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if x.len() < 2 || vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx.sqrt() * vy.sqrt()))
}

/// A tied random ranking: `n` values drawn from `levels` distinct scores.
pub fn tied_ranking(rng: &mut Rng, n: usize, levels: usize) -> Vec<f64> {
    (0..n).map(|_| rng.below(levels) as f64).collect()
}
