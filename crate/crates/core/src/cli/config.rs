//! Run settings from `key=value` files and command-line flags.
//!
//! Keys are the flag names without the leading dashes. A later layer
//! (flags over file) replaces earlier values field by field; `tau` and
//! `no-stop` replace each other.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::RunError;

pub const KEYS: [&str; 10] =
    ["fn", "nodes", "alpha", "tau", "no-stop", "max-iter", "grid", "out", "freeze-augmented", "seed"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub function: Option<String>,
    pub nodes: Option<String>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub no_stop: Option<bool>,
    pub max_iter: Option<usize>,
    pub grid: Option<usize>,
    pub out: Option<PathBuf>,
    pub freeze_augmented: Option<bool>,
    pub seed: Option<u64>,
}

fn field<T: FromStr>(origin: &str, key: &str, raw: &str) -> Result<T, RunError>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| RunError::input(format!("{origin}: field '{key}': cannot parse '{raw}': {e}")))
}

impl Settings {
    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> Result<Self, RunError> {
        let mut s = Settings::default();
        for (n, line) in text.lines().enumerate() {
            let origin = format!("{source}:{}", n + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| RunError::input(format!("{origin}: expected key=value, got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let mut layer = Settings::default();
            match key {
                "fn" => layer.function = Some(value.to_string()),
                "nodes" => layer.nodes = Some(value.to_string()),
                "alpha" => layer.alpha = Some(field(&origin, key, value)?),
                "tau" => layer.tau = Some(field(&origin, key, value)?),
                "no-stop" => layer.no_stop = Some(field(&origin, key, value)?),
                "max-iter" => layer.max_iter = Some(field(&origin, key, value)?),
                "grid" => layer.grid = Some(field(&origin, key, value)?),
                "out" => layer.out = Some(PathBuf::from(value)),
                "freeze-augmented" => layer.freeze_augmented = Some(field(&origin, key, value)?),
                "seed" => layer.seed = Some(field(&origin, key, value)?),
                other => {
                    return Err(RunError::input(format!(
                        "{origin}: unknown field '{other}' (expected one of {})",
                        KEYS.join(", ")
                    )))
                }
            }
            s = s.overlay(layer);
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// `top` wins wherever it sets a field.
    pub fn overlay(self, top: Settings) -> Settings {
        let stop_override = top.tau.is_some() || top.no_stop.is_some();
        Settings {
            function: top.function.or(self.function),
            nodes: top.nodes.or(self.nodes),
            alpha: top.alpha.or(self.alpha),
            tau: if stop_override { top.tau } else { self.tau },
            no_stop: if stop_override { top.no_stop } else { self.no_stop },
            max_iter: top.max_iter.or(self.max_iter),
            grid: top.grid.or(self.grid),
            out: top.out.or(self.out),
            freeze_augmented: top.freeze_augmented.or(self.freeze_augmented),
            seed: top.seed.or(self.seed),
        }
    }
}
