//! `key = value` parameters from a config file and `--param` flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use kgfa_core::model::{rbs_for_gamma, IcMode, Scheme, Selection, SystemConfig};

use crate::CliError;

/// Keys every system configuration accepts.
pub const SYSTEM_KEYS: [&str; 11] = [
    "r",
    "n",
    "k",
    "q",
    "gamma",
    "alpha",
    "beta",
    "m",
    "scheme",
    "ic",
    "selection",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

impl Params {
    /// Parses a flat `key = value` file; `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut params = Params::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return usage(format!("config line {}: expected key = value", i + 1));
            };
            params.set(k, v);
        }
        Ok(params)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values
            .insert(key.trim().to_ascii_lowercase(), value.trim().to_string());
    }

    /// Applies a `key=value` override.
    pub fn apply(&mut self, assignment: &str) -> Result<(), CliError> {
        match assignment.split_once('=') {
            Some((k, v)) => {
                self.set(k, v);
                Ok(())
            }
            None => usage(format!("'{assignment}' is not key=value")),
        }
    }

    /// Rejects keys the command does not know.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        for key in self.values.keys() {
            if !allowed.contains(&key.as_str()) {
                let mut known = allowed.to_vec();
                known.sort_unstable();
                return usage(format!(
                    "'{command}' does not take '{key}' (accepted: {})",
                    if known.is_empty() {
                        "none".into()
                    } else {
                        known.join(", ")
                    }
                ));
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| CliError::Usage(format!("{key} = {v}: {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?
            .ok_or_else(|| CliError::Usage(format!("missing parameter '{key}'")))
    }

    /// Builds the system configuration; `R` may be given directly or via
    /// `gamma` (rounded down).
    pub fn system(&self) -> Result<SystemConfig, CliError> {
        let n: u32 = self.require("n")?;
        let rbs = match (self.get::<u32>("r")?, self.get::<f64>("gamma")?) {
            (Some(_), Some(_)) => return usage("give either R or gamma, not both"),
            (Some(r), None) => r,
            (None, Some(g)) => rbs_for_gamma(n, g)?,
            (None, None) => return usage("missing parameter 'R' (or 'gamma')"),
        };
        let k = self.require("k")?;
        let q = self.require("q")?;
        let mut cfg = SystemConfig::new(rbs, n, k, q);
        cfg = cfg.with_iic(
            self.get("alpha")?.unwrap_or(cfg.iterations),
            self.get("beta")?.unwrap_or(cfg.mai_width),
        );
        if let Some(m) = self.get("m")? {
            cfg = cfg.with_message(m);
        }
        if let Some(s) = self.get::<Scheme>("scheme")? {
            cfg = cfg.with_scheme(s);
        }
        if let Some(ic) = self.get::<IcMode>("ic")? {
            cfg = cfg.with_ic(ic);
        }
        if let Some(sel) = self.get::<Selection>("selection")? {
            cfg = cfg.with_selection(sel);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Expands list (`1,2,4`) and inclusive range (`1..7`) values into the
    /// cartesian product of single-valued parameter sets, first key varying
    /// slowest.
    pub fn expand(&self) -> Result<Vec<Params>, CliError> {
        let mut out = vec![Params::default()];
        for (key, value) in &self.values {
            let choices = expand_value(key, value)?;
            let mut next = Vec::with_capacity(out.len() * choices.len());
            for base in &out {
                for c in &choices {
                    let mut p = base.clone();
                    p.values.insert(key.clone(), c.clone());
                    next.push(p);
                }
            }
            out = next;
        }
        Ok(out)
    }
}

fn expand_value(key: &str, value: &str) -> Result<Vec<String>, CliError> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            let parse = |s: &str| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("{key}: range '{part}' needs integer bounds")))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo > hi {
                return usage(format!("{key}: empty range '{part}'"));
            }
            out.extend((lo..=hi).map(|v| v.to_string()));
        } else if !part.is_empty() {
            out.push(part.to_string());
        }
    }
    if out.is_empty() {
        return usage(format!("{key} has no value"));
    }
    Ok(out)
}
