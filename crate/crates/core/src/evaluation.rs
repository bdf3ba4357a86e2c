//! Accuracy metrics and the aggregate reports built from replays.
//!
//! The primary metric is the prediction error `|log2 expected - log2 actual|`
//! averaged over every participant of every rated division. Per-division
//! Kendall tau-b and Spearman rho between pre-round ratings and scores give
//! system-independent views of the same predictions.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::correlation::{kendall_tau, spearman_rho};
use crate::engine::{EngineState, RoundInput};
use crate::rating::{rank_and_expected_rank, relative_performance, PerformanceBreakdown};
use crate::store::RatingTimeline;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("round {round}: no rating for player {player}")]
    MissingRating { round: String, player: String },
    #[error("round sets differ: {0}")]
    MismatchedRounds(String),
}

/// `|log2(expected / actual)|`.
#[inline]
pub fn prediction_error(expected_rank: f64, actual_rank: f64) -> f64 {
    relative_performance(expected_rank, actual_rank).abs()
}

/// Accuracy of one system's predictions on one division of one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round_id: String,
    pub division: u32,
    pub players: usize,
    pub mean_error: f64,
    pub kendall_tau: Option<f64>,
    pub spearman_rho: Option<f64>,
}

impl RoundMetrics {
    fn from_parts(
        round_id: &str,
        division: u32,
        errors: f64,
        ratings: &[f64],
        scores: &[f64],
    ) -> Self {
        let n = scores.len();
        RoundMetrics {
            round_id: round_id.to_owned(),
            division,
            players: n,
            mean_error: if n == 0 { 0.0 } else { errors / n as f64 },
            kendall_tau: kendall_tau(ratings, scores).ok(),
            spearman_rho: spearman_rho(ratings, scores).ok(),
        }
    }

    /// Metrics of one rated division, predicted ranking = pre-round ratings.
    pub fn from_breakdowns(
        round_id: &str,
        division: u32,
        breakdowns: &[PerformanceBreakdown],
    ) -> Self {
        let errors: f64 = breakdowns
            .iter()
            .map(|b| prediction_error(b.expected_rank, b.actual_rank))
            .sum();
        let ratings: Vec<f64> = breakdowns.iter().map(|b| b.rating_before).collect();
        let scores: Vec<f64> = breakdowns.iter().map(|b| b.score).collect();
        Self::from_parts(round_id, division, errors, &ratings, &scores)
    }
}

/// Per-division metrics of a foreign rating system given its pre-round ratings.
pub fn metrics_from_timeline(
    rounds: &[RoundInput],
    timeline: &RatingTimeline,
) -> Result<Vec<RoundMetrics>, EvalError> {
    let mut out = Vec::new();
    for round in rounds {
        for division in &round.divisions {
            let scores: Vec<f64> = division.entries.iter().map(|e| e.score).collect();
            let ratings = division
                .entries
                .iter()
                .map(|e| {
                    timeline.get(&round.round_id, &e.player).ok_or_else(|| {
                        EvalError::MissingRating {
                            round: round.round_id.clone(),
                            player: e.player.clone(),
                        }
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let errors: f64 = (0..scores.len())
                .map(|i| {
                    let r = rank_and_expected_rank(i, &scores, &ratings);
                    prediction_error(r.expected, r.actual)
                })
                .sum();
            out.push(RoundMetrics::from_parts(
                &round.round_id,
                division.division,
                errors,
                &ratings,
                &scores,
            ));
        }
    }
    Ok(out)
}

/// Running sums behind one report row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowStats {
    pub count: u64,
    pub sum_delta_r: f64,
    pub sum_perf: f64,
    pub sum_error: f64,
}

impl RowStats {
    fn add(&mut self, b: &PerformanceBreakdown) {
        self.count += 1;
        self.sum_delta_r += b.delta_r;
        self.sum_perf += b.perf;
        self.sum_error += prediction_error(b.expected_rank, b.actual_rank);
    }

    fn merge(&mut self, other: &RowStats) {
        self.count += other.count;
        self.sum_delta_r += other.sum_delta_r;
        self.sum_perf += other.sum_perf;
        self.sum_error += other.sum_error;
    }

    fn mean(&self, sum: f64) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            sum / self.count as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub label: String,
    pub count: u64,
    pub mean_delta_r: f64,
    pub mean_perf: f64,
    pub mean_error: f64,
}

/// Player-level report; rows are "All", the experience buckets, "Existing",
/// then per division the existing players and their top and bottom halves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketedReport {
    pub rows: Vec<ReportRow>,
}

impl BucketedReport {
    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// The primary metric.
    pub fn all(&self) -> Option<&ReportRow> {
        self.row("All")
    }
}

/// Lower edges of the experience buckets (round number, starting at 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketScheme {
    pub experience_edges: Vec<u32>,
}

impl Default for BucketScheme {
    fn default() -> Self {
        BucketScheme {
            experience_edges: vec![1, 2, 8, 25, 75, 200],
        }
    }
}

impl BucketScheme {
    fn bucket(&self, round_number: u32) -> Option<usize> {
        self.experience_edges
            .iter()
            .rposition(|&edge| round_number >= edge)
    }

    fn label(&self, i: usize) -> String {
        let lo = self.experience_edges[i];
        match self.experience_edges.get(i + 1) {
            Some(2) if lo == 1 => "First round".into(),
            Some(&next) if next == lo + 1 => format!("Round {lo}"),
            Some(&next) => format!("{lo}-{} rounds", next - 1),
            None => format!("{lo}+ rounds"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct DivisionStats {
    existing: RowStats,
    top: RowStats,
    bottom: RowStats,
}

/// Mergeable accumulator behind [`BucketedReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorAggregator {
    scheme: BucketScheme,
    all: RowStats,
    experience: Vec<RowStats>,
    existing: RowStats,
    divisions: BTreeMap<u32, DivisionStats>,
}

impl Default for ErrorAggregator {
    fn default() -> Self {
        Self::new(BucketScheme::default())
    }
}

impl ErrorAggregator {
    pub fn new(scheme: BucketScheme) -> Self {
        let buckets = scheme.experience_edges.len();
        ErrorAggregator {
            scheme,
            all: RowStats::default(),
            experience: vec![RowStats::default(); buckets],
            existing: RowStats::default(),
            divisions: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, b: &PerformanceBreakdown) {
        self.all.add(b);
        if let Some(i) = self.scheme.bucket(b.round_number) {
            self.experience[i].add(b);
        }
        if b.round_number > 1 {
            self.existing.add(b);
            let d = self.divisions.entry(b.division).or_default();
            d.existing.add(b);
            if b.is_top_half() {
                d.top.add(b);
            } else {
                d.bottom.add(b);
            }
        }
    }

    pub fn extend<'a>(&mut self, breakdowns: impl IntoIterator<Item = &'a PerformanceBreakdown>) {
        for b in breakdowns {
            self.add(b);
        }
    }

    /// # Panics
    ///
    /// If the two aggregators use different bucket schemes.
    pub fn merge(&mut self, other: &ErrorAggregator) {
        assert_eq!(self.scheme, other.scheme, "bucket schemes differ");
        self.all.merge(&other.all);
        for (a, b) in self.experience.iter_mut().zip(&other.experience) {
            a.merge(b);
        }
        self.existing.merge(&other.existing);
        for (id, d) in &other.divisions {
            let mine = self.divisions.entry(*id).or_default();
            mine.existing.merge(&d.existing);
            mine.top.merge(&d.top);
            mine.bottom.merge(&d.bottom);
        }
    }

    pub fn count(&self) -> u64 {
        self.all.count
    }

    /// Mean prediction error over everything added so far.
    pub fn mean_error(&self) -> f64 {
        self.all.mean(self.all.sum_error)
    }

    pub fn report(&self) -> BucketedReport {
        if self.all.count == 0 {
            return BucketedReport { rows: Vec::new() };
        }
        let row = |label: String, s: &RowStats| ReportRow {
            label,
            count: s.count,
            mean_delta_r: s.mean(s.sum_delta_r),
            mean_perf: s.mean(s.sum_perf),
            mean_error: s.mean(s.sum_error),
        };
        let mut rows = vec![row("All".into(), &self.all)];
        for (i, s) in self.experience.iter().enumerate() {
            rows.push(row(self.scheme.label(i), s));
        }
        rows.push(row("Existing".into(), &self.existing));
        for (id, d) in &self.divisions {
            rows.push(row(format!("Division {id}"), &d.existing));
        }
        for (id, d) in &self.divisions {
            rows.push(row(format!("D{id} H1"), &d.top));
            rows.push(row(format!("D{id} H2"), &d.bottom));
        }
        BucketedReport { rows }
    }
}

/// Report over a stream of breakdowns.
pub fn aggregate_error<'a>(
    breakdowns: impl IntoIterator<Item = &'a PerformanceBreakdown>,
    scheme: BucketScheme,
) -> BucketedReport {
    let mut agg = ErrorAggregator::new(scheme);
    agg.extend(breakdowns);
    agg.report()
}

/// Row of a head-to-head comparison. `tau`, `rho`, `err` are the fractions
/// of rounds where system A predicted better, ties counting one half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub rounds: u64,
    pub tau: f64,
    pub rho: f64,
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, label: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

const SIZE_BUCKETS: [(usize, Option<usize>); 7] = [
    (2, Some(16)),
    (17, Some(99)),
    (100, Some(199)),
    (200, Some(399)),
    (400, Some(599)),
    (600, Some(799)),
    (800, None),
];

fn size_label((lo, hi): (usize, Option<usize>)) -> String {
    match hi {
        Some(hi) => format!("{lo}-{hi} players"),
        None => format!("{lo}+ players"),
    }
}

/// 1 if `a` is better, 0.5 on a tie or when either side is undefined.
fn score(a: Option<f64>, b: Option<f64>, higher_better: bool) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) if a == b => 0.5,
        (Some(a), Some(b)) => {
            if (a > b) == higher_better {
                1.0
            } else {
                0.0
            }
        }
        _ => 0.5,
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    rounds: u64,
    tau: f64,
    rho: f64,
    err: f64,
}

impl Tally {
    fn row(&self, label: String) -> ComparisonRow {
        let n = self.rounds.max(1) as f64;
        ComparisonRow {
            label,
            rounds: self.rounds,
            tau: self.tau / n,
            rho: self.rho / n,
            err: self.err / n,
        }
    }
}

/// Fraction of rounds where system A beats system B on each metric, overall,
/// per division and per player-count bucket.
pub fn compare_systems(
    a: &[RoundMetrics],
    b: &[RoundMetrics],
) -> Result<ComparisonReport, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::MismatchedRounds(format!(
            "{} divisions vs {}",
            a.len(),
            b.len()
        )));
    }
    let index: HashMap<(&str, u32), &RoundMetrics> = b
        .iter()
        .map(|m| ((m.round_id.as_str(), m.division), m))
        .collect();
    if index.len() != b.len() {
        return Err(EvalError::MismatchedRounds(
            "duplicate division in B".into(),
        ));
    }

    let mut all = Tally::default();
    let mut by_division: BTreeMap<u32, Tally> = BTreeMap::new();
    let mut by_size: BTreeMap<usize, Tally> = BTreeMap::new();
    for ma in a {
        let mb = index
            .get(&(ma.round_id.as_str(), ma.division))
            .ok_or_else(|| {
                EvalError::MismatchedRounds(format!(
                    "round {} division {} missing from B",
                    ma.round_id, ma.division
                ))
            })?;
        if mb.players != ma.players {
            return Err(EvalError::MismatchedRounds(format!(
                "round {} division {}: {} players vs {}",
                ma.round_id, ma.division, ma.players, mb.players
            )));
        }
        let tau = score(ma.kendall_tau, mb.kendall_tau, true);
        let rho = score(ma.spearman_rho, mb.spearman_rho, true);
        let err = score(Some(ma.mean_error), Some(mb.mean_error), false);
        let mut targets = vec![&mut all];
        targets.push(by_division.entry(ma.division).or_default());
        if let Some(i) = SIZE_BUCKETS
            .iter()
            .position(|&(lo, hi)| ma.players >= lo && hi.is_none_or(|hi| ma.players <= hi))
        {
            targets.push(by_size.entry(i).or_default());
        }
        for t in targets {
            t.rounds += 1;
            t.tau += tau;
            t.rho += rho;
            t.err += err;
        }
    }

    let mut rows = vec![all.row("All".into())];
    for (id, t) in &by_division {
        rows.push(t.row(format!("Division {id}")));
    }
    for (i, t) in &by_size {
        rows.push(t.row(size_label(SIZE_BUCKETS[*i])));
    }
    Ok(ComparisonReport { rows })
}

/// Summary of a replay: rating changes and the final rating distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingStats {
    pub mean_error: Option<f64>,
    pub delta_mean: Option<f64>,
    /// Population standard deviation.
    pub delta_sd: Option<f64>,
    pub delta_max: Option<f64>,
    /// Initial rating for new players at the end of the history.
    pub init: f64,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

/// One-pass accumulator of rating changes (Welford).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DeltaStats {
    count: u64,
    mean: f64,
    m2: f64,
    max: f64,
    sum_error: f64,
}

impl DeltaStats {
    pub fn add(&mut self, b: &PerformanceBreakdown) {
        self.push(b.delta_r, prediction_error(b.expected_rank, b.actual_rank));
    }

    fn push(&mut self, delta: f64, error: f64) {
        self.count += 1;
        let d = delta - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (delta - self.mean);
        self.max = if self.count == 1 {
            delta
        } else {
            self.max.max(delta)
        };
        self.sum_error += error;
    }

    pub fn finish(&self, state: &EngineState) -> RatingStats {
        let mut ratings: Vec<f64> = state.players.values().map(|p| p.rating).collect();
        ratings.sort_by(f64::total_cmp);
        let median = match ratings.len() {
            0 => None,
            n if n % 2 == 1 => Some(ratings[n / 2]),
            n => Some((ratings[n / 2 - 1] + ratings[n / 2]) / 2.0),
        };
        let some = |v: f64| (self.count > 0).then_some(v);
        RatingStats {
            mean_error: some(self.sum_error / self.count.max(1) as f64),
            delta_mean: some(self.mean),
            delta_sd: some((self.m2 / self.count.max(1) as f64).sqrt()),
            delta_max: some(self.max),
            init: state.r1,
            median,
            max: ratings.last().copied(),
        }
    }
}

/// Table-5 style summary of a full replay.
pub fn rating_stats<'a>(
    breakdowns: impl IntoIterator<Item = &'a PerformanceBreakdown>,
    final_state: &EngineState,
) -> RatingStats {
    let mut acc = DeltaStats::default();
    for b in breakdowns {
        acc.add(b);
    }
    acc.finish(final_state)
}
