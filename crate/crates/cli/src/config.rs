//! Experiment files: flat `key = value` lines under `[section]` headers.
//!
//! ```text
//! [experiment]
//! seed = 7
//!
//! [run single_mode]
//! kind = subdiffusion
//! alpha = 0.3, 0.5     # comma lists expand into a parameter grid
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{CliError, Result};

/// Keys whose comma lists are a single value rather than a sweep axis.
pub const LIST_VALUED_KEYS: &[&str] = &["z", "poly", "u0"];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub tolerance_profile: Option<String>,
    pub runs: Vec<RunConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    /// Cartesian product over list-valued keys; single runs keep their name,
    /// grid points are suffixed `_000`, `_001`, ...
    pub fn expand(&self) -> Vec<RunConfig> {
        let mut grid: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
        for (k, v) in &self.entries {
            let key = k.replace('-', "_");
            let values: Vec<String> = if LIST_VALUED_KEYS.contains(&key.as_str()) || !v.contains(',') {
                vec![v.clone()]
            } else {
                v.split(',').map(|s| s.trim().to_string()).collect()
            };
            grid = grid
                .into_iter()
                .flat_map(|base| {
                    values.iter().map(move |val| {
                        let mut m = base.clone();
                        m.insert(k.clone(), val.clone());
                        m
                    })
                })
                .collect();
        }
        if grid.len() == 1 {
            return vec![RunConfig { name: self.name.clone(), entries: grid.pop().unwrap() }];
        }
        grid.into_iter()
            .enumerate()
            .map(|(i, entries)| RunConfig { name: format!("{}_{i:03}", self.name), entries })
            .collect()
    }
}

pub fn parse(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut section: Option<Option<usize>> = None; // Some(None) = [experiment]
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| CliError::config(format!("line {}", lineno + 1), msg);
        if let Some(head) = line.strip_prefix('[') {
            let head = head.strip_suffix(']').ok_or_else(|| at(format!("unterminated section header '{line}'")))?;
            let mut words = head.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("experiment"), None, None) => section = Some(None),
                (Some("run" | "scenario"), Some(name), None) => {
                    if cfg.runs.iter().any(|r| r.name == name) {
                        return Err(at(format!("duplicate run name '{name}'")));
                    }
                    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                        return Err(at(format!("run name '{name}' must be alphanumeric")));
                    }
                    cfg.runs.push(RunConfig { name: name.to_string(), entries: BTreeMap::new() });
                    section = Some(Some(cfg.runs.len() - 1));
                }
                _ => return Err(at(format!("unknown section '[{head}]'"))),
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim().replace('-', "_"), value.trim().to_string());
        match section {
            None => return Err(at("key outside any section".into())),
            Some(None) => match key.as_str() {
                "out" => cfg.out = Some(PathBuf::from(value)),
                "seed" => {
                    cfg.seed = Some(value.parse().map_err(|_| CliError::config("seed", format!("'{value}' is not a u64")))?)
                }
                "jobs" => {
                    cfg.jobs = Some(value.parse().map_err(|_| CliError::config("jobs", format!("'{value}' is not a count")))?)
                }
                "tolerance_profile" => cfg.tolerance_profile = Some(value),
                _ => return Err(CliError::config(key, "unknown key in [experiment]")),
            },
            Some(Some(i)) => {
                if cfg.runs[i].entries.insert(key.clone(), value).is_some() {
                    return Err(CliError::config(key, format!("repeated in run '{}'", cfg.runs[i].name)));
                }
            }
        }
    }
    Ok(cfg)
}
