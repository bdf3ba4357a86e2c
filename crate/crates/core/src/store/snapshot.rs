//! Binary engine snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    "ELRS"
//! version  u8
//! length   u64            payload bytes
//! payload  rounds_processed u64, r1 f64, players u64,
//!          then per player: id_len u32, id (UTF-8), rating f64, num_rounds u32
//! checksum u64            first 8 bytes of SHA-256 over everything above
//! ```
//!
//! Floats are stored as raw IEEE-754 bits so reloading is bit-exact.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{EngineState, PlayerState};

pub const SNAPSHOT_VERSION: u8 = 1;
const MAGIC: &[u8; 4] = b"ELRS";
const HEADER_LEN: usize = 4 + 1 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a snapshot file")]
    BadMagic,
    #[error("snapshot too short")]
    Truncated,
    #[error("snapshot checksum mismatch")]
    Checksum,
    #[error("unsupported snapshot version {found}, expected {SNAPSHOT_VERSION}")]
    Version { found: u8 },
    #[error("corrupt snapshot: {0}")]
    Corrupt(&'static str),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 is 32 bytes"))
}

pub fn encode_snapshot(state: &EngineState) -> Vec<u8> {
    let mut payload = Vec::with_capacity(24 + state.players.len() * 32);
    payload.extend_from_slice(&state.rounds_processed.to_le_bytes());
    payload.extend_from_slice(&state.r1.to_bits().to_le_bytes());
    payload.extend_from_slice(&(state.players.len() as u64).to_le_bytes());
    for (id, p) in &state.players {
        payload.extend_from_slice(&(id.len() as u32).to_le_bytes());
        payload.extend_from_slice(id.as_bytes());
        payload.extend_from_slice(&p.rating.to_bits().to_le_bytes());
        payload.extend_from_slice(&p.num_rounds.to_le_bytes());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len() + 8);
    out.extend_from_slice(MAGIC);
    out.push(SNAPSHOT_VERSION);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    let sum = checksum(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.0.len() < n {
            return Err(SnapshotError::Corrupt("payload ends early"));
        }
        let (head, rest) = self.0.split_at(n);
        self.0 = rest;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SnapshotError> {
        self.u64().map(f64::from_bits)
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<EngineState, SnapshotError> {
    if bytes.len() >= 4 && &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + 8 {
        return Err(SnapshotError::Truncated);
    }
    let (body, sum) = bytes.split_at(bytes.len() - 8);
    if checksum(body) != u64::from_le_bytes(sum.try_into().unwrap()) {
        return Err(SnapshotError::Checksum);
    }
    let version = body[4];
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version { found: version });
    }
    let declared = u64::from_le_bytes(body[5..HEADER_LEN].try_into().unwrap());
    let payload = &body[HEADER_LEN..];
    if declared != payload.len() as u64 {
        return Err(SnapshotError::Corrupt("payload length mismatch"));
    }

    let mut cur = Cursor(payload);
    let rounds_processed = cur.u64()?;
    let r1 = cur.f64()?;
    let count = cur.u64()?;
    let mut players = BTreeMap::new();
    for _ in 0..count {
        let len = cur.u32()? as usize;
        let id = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| SnapshotError::Corrupt("player id is not UTF-8"))?
            .to_owned();
        let rating = cur.f64()?;
        let num_rounds = cur.u32()?;
        if players
            .insert(id, PlayerState { rating, num_rounds })
            .is_some()
        {
            return Err(SnapshotError::Corrupt("duplicate player id"));
        }
    }
    if !cur.0.is_empty() {
        return Err(SnapshotError::Corrupt("trailing payload bytes"));
    }
    Ok(EngineState {
        players,
        r1,
        rounds_processed,
    })
}

pub fn save_snapshot(state: &EngineState, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    fs::write(path, encode_snapshot(state))?;
    Ok(())
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<EngineState, SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}

#[derive(Serialize, Deserialize)]
struct JsonPlayer {
    player_id: String,
    rating: f64,
    num_rounds: u32,
}

#[derive(Serialize, Deserialize)]
struct JsonSnapshot {
    version: u8,
    rounds_processed: u64,
    r1: f64,
    players: Vec<JsonPlayer>,
}

/// Human-readable form of a snapshot.
pub fn export_json(state: &EngineState) -> String {
    let doc = JsonSnapshot {
        version: SNAPSHOT_VERSION,
        rounds_processed: state.rounds_processed,
        r1: state.r1,
        players: state
            .players
            .iter()
            .map(|(id, p)| JsonPlayer {
                player_id: id.clone(),
                rating: p.rating,
                num_rounds: p.num_rounds,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("snapshot serializes")
}

pub fn import_json(text: &str) -> Result<EngineState, SnapshotError> {
    let doc: JsonSnapshot = serde_json::from_str(text)?;
    if doc.version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version { found: doc.version });
    }
    let mut players = BTreeMap::new();
    for p in doc.players {
        let state = PlayerState {
            rating: p.rating,
            num_rounds: p.num_rounds,
        };
        if players.insert(p.player_id, state).is_some() {
            return Err(SnapshotError::Corrupt("duplicate player id"));
        }
    }
    Ok(EngineState {
        players,
        r1: doc.r1,
        rounds_processed: doc.rounds_processed,
    })
}
