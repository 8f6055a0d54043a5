//! String-keyed parameters shared by the subcommands and experiment files.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{CliError, Result};

/// Raw `key = value` pairs; every lookup marks its key as consumed so
/// [`Params::finish`] can reject the keys nobody asked for.
#[derive(Debug, Clone, Default)]
pub struct Params {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl Params {
    pub fn new(entries: BTreeMap<String, String>) -> Self {
        let entries = entries.into_iter().map(|(k, v)| (normalize(&k), v)).collect();
        Self { entries, used: RefCell::default() }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(normalize(key), value.to_string());
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|s| s.trim())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn opt_num(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| parse_num(key, v)).transpose()
    }

    pub fn num(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_num(key)?.unwrap_or(default))
    }

    pub fn req_num(&self, key: &str) -> Result<f64> {
        self.opt_num(key)?.ok_or_else(|| CliError::config(key, "required parameter is missing"))
    }

    pub fn count(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse::<usize>().map_err(|_| CliError::config(key, format!("'{v}' is not a count"))),
        }
    }

    pub fn text(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn opt_text(&self, key: &str) -> Option<String> {
        self.raw(key).map(str::to_string)
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(|v| v.split(',').map(|x| parse_num(key, x.trim())).collect()).transpose()
    }

    pub fn flag(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::config(key, format!("'{v}' is not a boolean"))),
        }
    }

    /// Fails on the first key that was never looked up.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(CliError::config(k.clone(), "unknown key")),
            None => Ok(()),
        }
    }
}

/// `u0-preset` and `u0_preset` name the same key.
fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    let x = match v {
        "pi" => std::f64::consts::PI,
        _ => v.parse::<f64>().map_err(|_| CliError::config(key, format!("'{v}' is not a number")))?,
    };
    if !x.is_finite() {
        return Err(CliError::config(key, format!("'{v}' is not finite")));
    }
    Ok(x)
}
