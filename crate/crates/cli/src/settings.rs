//! Flat `section.key = value` settings with layered sources.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Every recognised key with its default.
const DEFAULTS: &[(&str, &str)] = &[
    ("seed", "0"),
    ("walk.p0", "1"),
    ("walk.sigma", "0.02"),
    ("walk.p_up", "0.5"),
    ("walk.steps", "1000"),
    ("walk.runs", "1"),
    ("gbm.p0", "1"),
    ("gbm.mu", "0"),
    ("gbm.sigma", "0.001"),
    ("gbm.steps", "1000"),
    ("gbm.runs", "1"),
    ("gbm.increment", "binary"),
    ("hit.p0", "1"),
    ("hit.sigma", "0.02"),
    ("hit.p_up", "0.5"),
    ("hit.mode", "symmetric"),
    ("hit.fixed", "0.4"),
    ("hit.grid_min", "0.1"),
    ("hit.grid_max", "1"),
    ("hit.grid_points", "8"),
    ("hit.max_steps", "1000000"),
    ("hit.runs", "10000"),
    ("pool.x_a", "15000"),
    ("pool.x_b", "15000"),
    ("arb.alpha", "1.02"),
    ("arb.fee", "0.005"),
    ("arb.f_fl", "0"),
    ("arb.txn", "0"),
    ("arb.strategy", "optimal"),
    ("arb.trace_steps", "0"),
    ("arb.trace_sigma", "0.01"),
    ("sweep.fees", ""),
    ("sweep.fee_min", "0.001"),
    ("sweep.fee_max", "0.01"),
    ("sweep.fee_points", "10"),
    ("sweep.spacing", "linear"),
    ("sweep.runs", "1000"),
    ("sweep.strategy", "optimal"),
    ("sweep.f_fl", "0"),
    ("sweep.txn", "0"),
    ("policy.kind", "directional_adaptive"),
    ("policy.fee", "0.003"),
    ("policy.f_b_to_a", "0.003"),
    ("policy.f_a_to_b", "0.003"),
    ("policy.base_fee", "0.003"),
    ("policy.drift_gain", "10"),
    ("policy.halflife", "50"),
    ("policy.min_fee", "0.0005"),
    ("policy.max_fee", "0.02"),
    ("policy.runs", "1000"),
    ("policy.strategy", "optimal"),
];

pub const SEED_ENV: &str = "ARBSIM_SEED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingsError(pub String);

impl fmt::Display for SettingsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SettingsError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<&'static str, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            values: DEFAULTS.iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }
}

impl Settings {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SettingsError> {
        let Some((&known, _)) = self.values.get_key_value(key) else {
            return Err(SettingsError(format!("unknown configuration key `{key}`")));
        };
        self.values.insert(known, value.trim().to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), SettingsError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| SettingsError(format!("expected key=value, got `{assignment}`")))?;
        self.set(key.trim(), value)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), SettingsError> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)
                .map_err(|e| SettingsError(format!("{origin}:{}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), SettingsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SettingsError(format!("cannot read config `{}`: {e}", path.display())))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("no such configuration key `{key}`"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, SettingsError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| SettingsError(format!("invalid value `{raw}` for `{key}`: {e}")))
    }

    /// Comma-separated list; empty yields an empty list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, SettingsError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| SettingsError(format!("invalid entry `{s}` in `{key}`: {e}")))
            })
            .collect()
    }

    /// `key=value` pairs of the given sections, plus the seed, in key order.
    pub fn describe(&self, sections: &[&str]) -> Vec<(&'static str, &str)> {
        self.values
            .iter()
            .filter(|(k, _)| {
                **k == "seed"
                    || sections
                        .iter()
                        .any(|s| k.split_once('.').is_some_and(|(p, _)| p == *s))
            })
            .map(|(k, v)| (*k, v.as_str()))
            .collect()
    }
}

/// Builds settings from defaults, the seed environment fallback, an optional
/// file and command-line assignments, later sources winning.
pub fn layered(
    env_seed: Option<&str>,
    file: Option<&Path>,
    assignments: &[(String, String)],
) -> Result<Settings, SettingsError> {
    let mut s = Settings::default();
    if let Some(seed) = env_seed {
        s.set("seed", seed)?;
    }
    if let Some(path) = file {
        s.apply_file(path)?;
    }
    for (k, v) in assignments {
        s.set(k, v)?;
    }
    Ok(s)
}
