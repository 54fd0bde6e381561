//! Line-oriented `section.key = value` configuration files with includes.
//!
//! Grammar per line: blank lines and `#` comments are ignored; everything
//! else must be `key = value` where the key is a dot-separated path.  A line
//! `include = <path>` splices another file in place (relative paths resolve
//! against the including file).  Later assignments override earlier ones.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// A parsed configuration: a flat, ordered key → value map.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses a file, following `include` lines (depth-limited).
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Config::default();
        cfg.load(path, 0)?;
        Ok(cfg)
    }

    /// Parses configuration text without include support anchoring; includes
    /// resolve against the current directory.
    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        cfg.absorb(text, Path::new("."), 0)?;
        Ok(cfg)
    }

    fn load(&mut self, path: &Path, depth: usize) -> Result<()> {
        if depth > 16 {
            bail!("include chain deeper than 16 files at {}", path.display());
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let dir = path.parent().map(PathBuf::from).unwrap_or_else(|| ".".into());
        self.absorb(&text, &dir, depth)
            .with_context(|| format!("in config file {}", path.display()))
    }

    fn absorb(&mut self, text: &str, dir: &Path, depth: usize) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                bail!("line {}: empty key", lineno + 1);
            }
            if key == "include" {
                self.load(&dir.join(value), depth + 1)?;
            } else {
                self.values.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    /// Raw value lookup.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parsed value with a default.
    pub fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow::anyhow!("config key `{key}`: cannot parse `{v}`")),
        }
    }

    /// Parsed optional value.
    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| anyhow::anyhow!("config key `{key}`: cannot parse `{v}`")),
        }
    }

    /// Whitespace-separated list of floats.
    pub fn get_floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| anyhow::anyhow!("config key `{key}`: cannot parse `{t}`"))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    /// Boolean with a default; accepts true/false/yes/no/1/0.
    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("yes") | Some("1") => Ok(true),
            Some("false") | Some("no") | Some("0") => Ok(false),
            Some(v) => bail!("config key `{key}`: expected a boolean, got `{v}`"),
        }
    }

    /// Keys with the given prefix, with the prefix stripped.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> {
        self.values.iter().filter_map(move |(k, v)| {
            k.strip_prefix(prefix).map(|rest| (rest, v.as_str()))
        })
    }

    /// Re-emits all keys under `prefix` as `key = value` text (prefix
    /// stripped), e.g. to feed the model-definition parser.
    pub fn section_text(&self, prefix: &str) -> String {
        self.with_prefix(prefix)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Whether any key starts with the prefix.
    pub fn has_section(&self, prefix: &str) -> bool {
        self.values.keys().any(|k| k.starts_with(prefix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_overrides() {
        let cfg = Config::from_str(
            "# comment\n\nmesh.nx = 8\nmesh.ny = 4\nmesh.nx = 16\nsolver.r = 2.5\n",
        )
        .unwrap();
        assert_eq!(cfg.get("mesh.nx"), Some("16"));
        assert_eq!(cfg.get_or("solver.r", 1.0).unwrap(), 2.5);
        assert_eq!(cfg.get_or("solver.rho", 1.0).unwrap(), 1.0);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Config::from_str("mesh.nx 8\n").is_err());
        assert!(Config::from_str("= 3\n").is_err());
    }

    #[test]
    fn includes_splice_files() {
        let dir = std::env::temp_dir().join("erflow-config-test");
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("base.conf"), "solver.r = 7\nmesh.nx = 2\n").unwrap();
        std::fs::write(dir.join("main.conf"), "include = base.conf\nmesh.nx = 4\n").unwrap();
        let cfg = Config::from_file(&dir.join("main.conf")).unwrap();
        assert_eq!(cfg.get("solver.r"), Some("7"));
        assert_eq!(cfg.get("mesh.nx"), Some("4"));
    }

    #[test]
    fn section_text_round_trips() {
        let cfg = Config::from_str("model.variant = REGULAR\nmodel.a1 = 1\nmesh.nx = 2\n").unwrap();
        let text = cfg.section_text("model.");
        assert!(text.contains("variant = REGULAR"));
        assert!(!text.contains("nx"));
    }
}
