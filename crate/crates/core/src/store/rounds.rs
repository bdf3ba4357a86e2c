use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::engine::{DivisionResult, Entry, RoundInput};

pub const ROUNDS_HEADER: [&str; 4] = ["round_id", "division", "player_id", "score"];
pub const TIMELINE_HEADER: [&str; 3] = ["round_id", "player_id", "rating_before"];

/// One row of a round-result file.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round_id: String,
    pub division: u32,
    pub player_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("empty {0}")]
    EmptyField(&'static str),
    #[error("malformed {field} `{value}`")]
    Malformed { field: &'static str, value: String },
    #[error("player {player} listed twice in round {round}")]
    DuplicatePlayer { round: String, player: String },
    #[error("records of round {0} are not contiguous")]
    NonContiguousRound(String),
    #[error("{0}")]
    Csv(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: u64,
    pub kind: ParseErrorKind,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

/// Plain decimal: optional sign, digits, optional fraction. No exponent,
/// no `inf`/`nan`.
fn parse_decimal(field: &'static str, text: &str) -> Result<f64, ParseErrorKind> {
    let malformed = || ParseErrorKind::Malformed {
        field,
        value: text.to_owned(),
    };
    let digits = text.strip_prefix(['+', '-']).unwrap_or(text);
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.len() + frac.len() == 0 || !all_digits(int) || !all_digits(frac) {
        return Err(malformed());
    }
    let value: f64 = text.parse().map_err(|_| malformed())?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(malformed())
    }
}

struct Records<R: Read> {
    inner: csv::Reader<R>,
    header: &'static [&'static str],
}

impl<R: Read> Records<R> {
    fn new(input: R, header: &'static [&'static str]) -> Self {
        Records {
            inner: reader(input),
            header,
        }
    }

    /// Yields `(line, fields)` for every data row after validating the header.
    fn rows(&mut self) -> impl Iterator<Item = Result<(u64, csv::StringRecord), ParseError>> + '_ {
        let header = self.header;
        let mut first = true;
        self.inner.records().filter_map(move |rec| {
            let rec = match rec {
                Ok(rec) => rec,
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    return Some(Err(ParseError {
                        line,
                        kind: ParseErrorKind::Csv(e.to_string()),
                    }));
                }
            };
            let line = rec.position().map_or(0, |p| p.line());
            if first {
                first = false;
                if rec.iter().ne(header.iter().copied()) {
                    return Some(Err(ParseError {
                        line,
                        kind: ParseErrorKind::Header {
                            expected: header.join(","),
                            found: rec.iter().collect::<Vec<_>>().join(","),
                        },
                    }));
                }
                return None;
            }
            if rec.len() != header.len() {
                return Some(Err(ParseError {
                    line,
                    kind: ParseErrorKind::FieldCount {
                        expected: header.len(),
                        found: rec.len(),
                    },
                }));
            }
            Some(Ok((line, rec)))
        })
    }
}

fn non_empty<'a>(name: &'static str, value: &'a str) -> Result<&'a str, ParseErrorKind> {
    if value.is_empty() {
        Err(ParseErrorKind::EmptyField(name))
    } else {
        Ok(value)
    }
}

fn parse_record(rec: &csv::StringRecord) -> Result<RoundRecord, ParseErrorKind> {
    let round_id = non_empty("round_id", &rec[0])?.to_owned();
    let division = non_empty("division", &rec[1])?;
    let division = division
        .parse::<u32>()
        .map_err(|_| ParseErrorKind::Malformed {
            field: "division",
            value: division.to_owned(),
        })?;
    let player_id = non_empty("player_id", &rec[2])?.to_owned();
    let score = parse_decimal("score", non_empty("score", &rec[3])?)?;
    Ok(RoundRecord {
        round_id,
        division,
        player_id,
        score,
    })
}

/// Parses a `round_id,division,player_id,score` file into rounds in file
/// order. Divisions keep the order of their first record within the round.
pub fn parse_rounds<R: Read>(input: R) -> Result<Vec<RoundInput>, ParseError> {
    let mut rounds: Vec<RoundInput> = Vec::new();
    let mut finished: HashSet<String> = HashSet::new();
    let mut players: HashSet<String> = HashSet::new();
    let mut records = Records::new(input, &ROUNDS_HEADER);

    for row in records.rows() {
        let (line, rec) = row?;
        let at = |kind| ParseError { line, kind };
        let record = parse_record(&rec).map_err(at)?;

        let same_round = rounds.last().is_some_and(|r| r.round_id == record.round_id);
        if !same_round {
            if let Some(prev) = rounds.last() {
                finished.insert(prev.round_id.clone());
            }
            if finished.contains(&record.round_id) {
                return Err(at(ParseErrorKind::NonContiguousRound(record.round_id)));
            }
            players.clear();
            rounds.push(RoundInput {
                round_id: record.round_id.clone(),
                divisions: Vec::new(),
            });
        }
        if !players.insert(record.player_id.clone()) {
            return Err(at(ParseErrorKind::DuplicatePlayer {
                round: record.round_id,
                player: record.player_id,
            }));
        }
        let round = rounds.last_mut().expect("pushed above");
        let division = match round
            .divisions
            .iter()
            .position(|d| d.division == record.division)
        {
            Some(i) => &mut round.divisions[i],
            None => {
                round.divisions.push(DivisionResult {
                    division: record.division,
                    entries: Vec::new(),
                });
                round.divisions.last_mut().expect("pushed above")
            }
        };
        division.entries.push(Entry {
            player: record.player_id,
            score: record.score,
        });
    }
    Ok(rounds)
}

/// Writes rounds in the format read by [`parse_rounds`]. Scores use the
/// shortest decimal that parses back to the same value.
pub fn write_rounds<W: Write>(output: W, rounds: &[RoundInput]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(output);
    w.write_record(ROUNDS_HEADER)?;
    for round in rounds {
        for division in &round.divisions {
            let div = division.division.to_string();
            for entry in &division.entries {
                let score = entry.score.to_string();
                w.write_record([&round.round_id, &div, &entry.player, &score])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `round_id,player_id,rating_before` rows in the given order, the
/// format read by [`parse_rating_timeline`].
pub fn write_rating_timeline<'a, W, I>(output: W, rows: I) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a str, &'a str, f64)>,
{
    let mut w = csv::Writer::from_writer(output);
    w.write_record(TIMELINE_HEADER)?;
    for (round, player, rating) in rows {
        w.write_record([round, player, &rating.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Ratings of a foreign system before each round, keyed by round then player.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingTimeline {
    by_round: HashMap<String, HashMap<String, f64>>,
}

impl RatingTimeline {
    pub fn insert(&mut self, round_id: &str, player_id: &str, rating: f64) -> Option<f64> {
        self.by_round
            .entry(round_id.to_owned())
            .or_default()
            .insert(player_id.to_owned(), rating)
    }

    pub fn get(&self, round_id: &str, player_id: &str) -> Option<f64> {
        self.by_round.get(round_id)?.get(player_id).copied()
    }

    pub fn len(&self) -> usize {
        self.by_round.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Parses a `round_id,player_id,rating_before` file.
pub fn parse_rating_timeline<R: Read>(input: R) -> Result<RatingTimeline, ParseError> {
    let mut timeline = RatingTimeline::default();
    let mut records = Records::new(input, &TIMELINE_HEADER);
    for row in records.rows() {
        let (line, rec) = row?;
        let at = |kind| ParseError { line, kind };
        let round = non_empty("round_id", &rec[0]).map_err(at)?;
        let player = non_empty("player_id", &rec[1]).map_err(at)?;
        let rating = non_empty("rating_before", &rec[2])
            .and_then(|v| parse_decimal("rating_before", v))
            .map_err(at)?;
        if timeline.insert(round, player, rating).is_some() {
            return Err(at(ParseErrorKind::DuplicatePlayer {
                round: round.to_owned(),
                player: player.to_owned(),
            }));
        }
    }
    Ok(timeline)
}
