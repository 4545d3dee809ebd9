// SPDX-License-Identifier: Apache-2.0

//! Shared helpers for the small `key=value` text formats used by design,
//! workload, calibration and gate-model files.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One non-comment line, with its 1-based line number.
pub(crate) struct Line<'a> {
    pub number: usize,
    pub text: &'a str,
}

/// Iterate over meaningful lines: trimmed, with blank lines and `#` comments removed.
pub(crate) fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let text = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        (!text.is_empty()).then_some(Line { number: i + 1, text })
    })
}

pub(crate) fn split_pair(line: &Line<'_>) -> Option<(String, String)> {
    line.text.split_once('=').map(|(k, v)| {
        (
            k.trim().to_ascii_lowercase().replace('-', "_"),
            v.trim().to_string(),
        )
    })
}

/// Parsed `key=value` pairs plus the line each key came from.
#[derive(Debug, Default)]
pub(crate) struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for line in lines(text) {
            let (key, value) = split_pair(&line)
                .ok_or_else(|| Error::parse(line.number, format!("expected key=value, got `{}`", line.text)))?;
            kv.insert(line.number, key, value)?;
        }
        Ok(kv)
    }

    pub fn insert(&mut self, line: usize, key: String, value: String) -> Result<()> {
        if self.entries.contains_key(&key) {
            return Err(Error::parse(line, format!("duplicate key `{key}`")));
        }
        self.entries.insert(key, (line, value));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(*line, format!("invalid value `{value}` for `{key}`"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Reject keys outside `known` so that typos do not pass silently.
    pub fn check_known(&self, known: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !known.contains(&key.as_str()) {
                return Err(Error::parse(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }
}
