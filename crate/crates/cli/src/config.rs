//! `--config` file support: `key = value` lines with `#` comments. Flags
//! override config values, which override built-in defaults.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Default)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut values = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(format!(
                    "config {} line {}: expected key = value",
                    path.display(),
                    idx + 1
                ));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    /// Flag wins, then the config file, then the default.
    pub fn resolve<T: FromStr + Clone>(
        &self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.values.get(key) {
            return raw
                .parse::<T>()
                .map_err(|_| format!("config key {key}: cannot parse `{raw}`"));
        }
        default.ok_or_else(|| format!("missing required option --{key}"))
    }

    /// Optional value: flag, then config, then `None`.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, String> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse `{raw}`")),
            None => Ok(None),
        }
    }
}
