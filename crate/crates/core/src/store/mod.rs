//! Round-result files, foreign rating timelines, the player registry and
//! engine snapshots.

mod rounds;
mod snapshot;

use std::collections::BTreeMap;

pub use rounds::{
    parse_rating_timeline, parse_rounds, write_rating_timeline, write_rounds, ParseError,
    ParseErrorKind, RatingTimeline, RoundRecord, ROUNDS_HEADER, TIMELINE_HEADER,
};
pub use snapshot::{
    decode_snapshot, encode_snapshot, export_json, import_json, load_snapshot, save_snapshot,
    SnapshotError, SNAPSHOT_VERSION,
};

use crate::engine::PlayerState;

/// Returns the player's state, registering them at `r1` with no rated rounds
/// if they are unknown.
pub fn get_or_create_player<'a>(
    registry: &'a mut BTreeMap<String, PlayerState>,
    player_id: &str,
    r1: f64,
) -> &'a mut PlayerState {
    if !registry.contains_key(player_id) {
        registry.insert(
            player_id.to_owned(),
            PlayerState {
                rating: r1,
                num_rounds: 0,
            },
        );
    }
    registry.get_mut(player_id).expect("inserted above")
}
