//! Deterministic CSV tables and `key=value` summary lines.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// Fixed-width scientific notation, so identical runs give identical bytes.
pub fn num(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let rows = columns.first().map_or(0, |c| c.len());
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| num(c[i])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// One line of space-separated `key=value` pairs.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    line: String,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        let mut s = Summary::default();
        s.text("command", command);
        s
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        if !self.line.is_empty() {
            self.line.push(' ');
        }
        let value = value.to_string().replace(char::is_whitespace, "_");
        let _ = write!(self.line, "{key}={value}");
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, num(value))
    }

    pub fn nums(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(|&v| num(v)).collect();
        self.text(key, joined.join(","))
    }

    pub fn line(&self) -> &str {
        &self.line
    }

    /// Value stored under `key`, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.line
            .split(' ')
            .find_map(|kv| kv.strip_prefix(key).and_then(|rest| rest.strip_prefix('=')))
    }
}
