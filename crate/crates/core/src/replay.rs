//! Sequential replay of a round history through the engine.

use crate::engine::{EngineError, EngineState, RoundInput, RoundOutcome};
use crate::evaluation::ErrorAggregator;
use crate::exec::Execution;
use crate::rating::RatingParams;

/// Rates `rounds` in order on top of `state`, handing each outcome to
/// `on_round` before the next round starts.
pub fn replay<F>(
    rounds: &[RoundInput],
    state: &mut EngineState,
    params: &RatingParams,
    exec: Execution,
    mut on_round: F,
) -> Result<(), EngineError>
where
    F: FnMut(&RoundOutcome),
{
    for round in rounds {
        let outcome = state.rate_round_with(round, params, exec)?;
        on_round(&outcome);
    }
    Ok(())
}

/// Mean prediction error of a full replay from an empty registry.
pub fn mean_error(
    rounds: &[RoundInput],
    params: &RatingParams,
    exec: Execution,
) -> Result<f64, EngineError> {
    let mut state = EngineState::new(params);
    let mut agg = ErrorAggregator::default();
    replay(rounds, &mut state, params, exec, |out| {
        agg.extend(out.breakdowns())
    })?;
    Ok(agg.mean_error())
}
