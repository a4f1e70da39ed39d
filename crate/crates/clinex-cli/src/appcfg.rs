//! Resolved run settings: defaults, overridden by a flat key=value config
//! file, overridden by command-line flags (flags > file > defaults).

use std::path::Path;

use serde::Serialize;

use clinex::gateway::{
    ChatBackend, HttpBackend, ScriptedBackend, DEFAULT_MAX_IN_FLIGHT, DEFAULT_MAX_NEW_TOKENS,
    DEFAULT_TEMPERATURE,
};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct AppConfig {
    pub endpoint: Option<String>,
    pub model_id: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub max_in_flight: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            endpoint: None,
            model_id: String::new(),
            temperature: DEFAULT_TEMPERATURE,
            max_new_tokens: DEFAULT_MAX_NEW_TOKENS,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

impl AppConfig {
    /// Parse a flat `key = value` document ('#' starts a comment).
    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Format(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| {
                CliError::Format(format!("{}:{}: {key}: {e}", path.display(), lineno + 1))
            };
            match key {
                "endpoint" => self.endpoint = Some(value.to_string()),
                "model_id" => self.model_id = value.to_string(),
                "temperature" => {
                    self.temperature = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?
                }
                "max_new_tokens" => {
                    self.max_new_tokens = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "max_in_flight" => {
                    self.max_in_flight = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                other => {
                    return Err(CliError::Format(format!(
                        "{}:{}: unknown config key {other:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Resolve `--backend http:<url>|scripted:<path>` (falling back to the
/// config-file endpoint) into a live backend. `http://…` and `https://…`
/// are accepted as-is; `http:<url>` tags an explicit URL.
pub fn make_backend(spec: Option<&str>, config: &AppConfig) -> CliResult<Box<dyn ChatBackend>> {
    let http = |url: String| -> Box<dyn ChatBackend> {
        Box::new(HttpBackend::with_options(url, Default::default(), config.max_in_flight))
    };
    match spec {
        Some(s) if s.starts_with("scripted:") => Ok(Box::new(ScriptedBackend::from_file(
            Path::new(&s["scripted:".len()..]),
        )?)),
        Some(s) if s.starts_with("http://") || s.starts_with("https://") => Ok(http(s.to_string())),
        Some(s) if s.starts_with("http:") => Ok(http(s["http:".len()..].to_string())),
        Some(s) => Err(CliError::Usage(format!(
            "backend {s:?} must be http:<url> or scripted:<path>"
        ))),
        None => match &config.endpoint {
            Some(url) => Ok(http(url.clone())),
            None => Err(CliError::Usage(
                "no backend: pass --backend http:<url>|scripted:<path> or set endpoint in the config file"
                    .into(),
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "model_id = file-model\nmax_new_tokens = 4000 # hosted cap\n").unwrap();
        let mut config = AppConfig::default();
        config.apply_file(&path).unwrap();
        assert_eq!(config.model_id, "file-model");
        assert_eq!(config.max_new_tokens, 4000);
        assert_eq!(config.temperature, 0.0);
    }

    #[test]
    fn unknown_key_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "mystery = 1\n").unwrap();
        let mut config = AppConfig::default();
        let err = config.apply_file(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn backend_spec_parsing() {
        let config = AppConfig::default();
        assert!(make_backend(Some("nonsense"), &config).is_err());
        assert!(make_backend(None, &config).is_err());
        let direct = make_backend(Some("http://localhost:1/v1"), &config).unwrap();
        assert_eq!(direct.identity(), "http:http://localhost:1/v1");
        let tagged = make_backend(Some("http:https://api.example/v1"), &config).unwrap();
        assert_eq!(tagged.identity(), "http:https://api.example/v1");
    }
}
