use elorank_core::RatingParams;

use crate::args::{ParamKey, ParamOverride, Profile};
use crate::CliError;

fn set(params: &mut RatingParams, key: ParamKey, value: f64) {
    match key {
        ParamKey::K => params.k = value,
        ParamKey::C => params.c = value,
        ParamKey::M => params.m = value,
        ParamKey::B => params.b = value,
        ParamKey::N => params.n = value,
        ParamKey::R0 => params.r0 = value,
        ParamKey::Alpha => params.alpha = value,
    }
}

/// Applies overrides in order (the last one for a key wins). `custom`
/// starts from nothing, so every key must be given.
pub fn resolve(profile: Profile, overrides: &[ParamOverride]) -> Result<RatingParams, CliError> {
    let mut params = match profile {
        Profile::Elo | Profile::Custom => RatingParams::elo(),
        Profile::Elo2 => RatingParams::elo2(),
    };
    if profile == Profile::Custom {
        let missing: Vec<&str> = ParamKey::ALL
            .into_iter()
            .filter(|k| !overrides.iter().any(|o| o.key == *k))
            .map(ParamKey::name)
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Input(format!(
                "profile custom needs --param for {}",
                missing.join(", ")
            )));
        }
    }
    for o in overrides {
        set(&mut params, o.key, o.value);
    }
    params.validate()?;
    Ok(params)
}
