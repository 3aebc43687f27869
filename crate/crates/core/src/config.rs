//! Flat `key = value` configuration files.
//!
//! One entry per line; blank lines and lines starting with `#` are skipped;
//! values may be wrapped in double quotes. Duplicate keys are an error.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scaling::{ControllerConfig, ControllerKind};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, (u64, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = (i + 1) as u64;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, found `{trimmed}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty key".into(),
                });
            }
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            if entries.insert(key.to_owned(), (line, value.to_owned())).is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Parses the value under `key`, if present.
    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }

    /// Fails on the first key outside `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line: *line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }
}

pub const CONTROLLER_KEYS: [&str; 7] = ["kind", "eta", "beta", "t0", "conv_tol", "max_steps", "balance_tol"];

impl ControllerConfig {
    /// Reads a controller file; missing keys keep their defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.reject_unknown(&CONTROLLER_KEYS)?;
        let mut c = Self::default();
        if let Some(kind) = kv.parsed::<ControllerKind>("kind").ok().flatten() {
            c.kind = kind;
        } else if let Some(kind) = kv.get("kind") {
            return Err(Error::InvalidSpec(format!("unknown controller kind `{kind}`")));
        }
        if let Some(v) = kv.parsed("eta")? {
            c.eta = v;
        }
        if let Some(v) = kv.parsed("beta")? {
            c.beta = v;
        }
        if let Some(v) = kv.parsed("t0")? {
            c.t0 = v;
        }
        if let Some(v) = kv.parsed("conv_tol")? {
            c.conv_tol = v;
        }
        if let Some(v) = kv.parsed("max_steps")? {
            c.max_steps = v;
        }
        if let Some(v) = kv.parsed("balance_tol")? {
            c.balance_tol = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text)?)
    }
}
