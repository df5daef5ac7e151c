//! Key=value run configuration. Every key is optional; command-line flags
//! take precedence over file values.

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub warmup: Option<usize>,
    pub draws: Option<usize>,
    pub out: Option<String>,
}

/// Parse `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<FileConfig, CliError> {
    let mut cfg = FileConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::validation(format!("config line {}: expected key=value, got {raw:?}", i + 1))
        })?;
        let key = key.trim();
        let value = value.trim().trim_matches('"');
        let num = |field: &str| -> Result<u64, CliError> {
            value.parse().map_err(|_| {
                CliError::validation(format!(
                    "config line {}: {field} must be a nonnegative integer, got {value:?}",
                    i + 1
                ))
            })
        };
        match key {
            "seed" => cfg.seed = Some(num("seed")?),
            "chains" => cfg.chains = Some(num("chains")? as usize),
            "warmup" => cfg.warmup = Some(num("warmup")? as usize),
            "draws" => cfg.draws = Some(num("draws")? as usize),
            "out" => cfg.out = Some(value.to_string()),
            _ => {
                return Err(CliError::validation(format!(
                    "config line {}: unknown key {key:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(cfg)
}
