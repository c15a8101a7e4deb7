//! Flat `key = value` configuration parsing.
//!
//! One directive per line, `#` starts a comment, blank lines are
//! skipped. Used by the run configuration, field maps and anything else
//! that needs a tiny declarative file.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: u64,
    pub message: String,
}

/// Parses `key = value` lines, preserving order and repeated keys.
pub fn parse_kv(text: &str) -> Result<Vec<(u64, String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError {
                line: line_no,
                message: "empty key".to_string(),
            });
        }
        pairs.push((line_no, key.to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}
