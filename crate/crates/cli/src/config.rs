//! `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

const KEYS: &[&str] = &[
    "variant",
    "to_stage",
    "checkpoint_dir",
    "threads",
    "prp_rechecks",
    "precision",
    "parents",
];

/// Values from a config file; command-line flags take precedence.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key {key:?}",
                    i + 1
                )));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: bad value {v:?}"))),
        }
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, CliError> {
        match self.values.get(key).map(String::as_str) {
            None => Ok(None),
            Some("true" | "yes" | "1" | "on") => Ok(Some(true)),
            Some("false" | "no" | "0" | "off") => Ok(Some(false)),
            Some(v) => Err(CliError::Usage(format!(
                "config key {key}: bad boolean {v:?}"
            ))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c =
            FileConfig::parse("# run\nvariant = round\nto-stage=30\nprp_rechecks = yes\n").unwrap();
        assert_eq!(
            c.get::<String>("variant").unwrap().as_deref(),
            Some("round")
        );
        assert_eq!(c.get::<usize>("to_stage").unwrap(), Some(30));
        assert_eq!(c.flag("prp_rechecks").unwrap(), Some(true));
        assert_eq!(c.get::<usize>("threads").unwrap(), None);
        assert!(FileConfig::parse("colour = red").is_err());
        assert!(FileConfig::parse("threads").is_err());
        assert!(FileConfig::parse("threads = x")
            .unwrap()
            .get::<usize>("threads")
            .is_err());
    }
}
