//! Scenario configuration files: flat TOML, one unit-suffixed key per setting.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

/// Parses and validates a configuration. Missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Every key with its value, defaults included, so a file fully describes a run.
pub fn render_config(cfg: &ScenarioConfig) -> String {
    toml::to_string(cfg).expect("scenario config always serializes")
}
