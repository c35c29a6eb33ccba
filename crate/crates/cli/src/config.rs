//! `key = value` configuration files, seed lists, and parameter resolution
//! (command line over config file over per-command defaults).

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Generate,
    Adversary,
    Embed,
    Pack,
    Verify,
    Bench,
    Sheet,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Adversary => "adversary",
            Command::Embed => "embed",
            Command::Pack => "pack",
            Command::Verify => "verify",
            Command::Bench => "bench",
            Command::Sheet => "sheet",
        }
    }
}

/// Every recognised key with its default. Commands override some of these.
pub const KEYS: &[(&str, &str)] = &[
    ("n", "2000"),
    ("p", "0.5"),
    ("r", "2"),
    ("gamma", "0.1"),
    ("delta", "2"),
    ("beta", "0.002"),
    ("xi", "0.05"),
    ("xi0", "0.05"),
    ("eps", "0.2"),
    ("eps_bad", ""),
    ("d", "0.1"),
    ("alpha", "0.1"),
    ("c", ""),
    ("big_c", "1"),
    ("k", ""),
    ("seeds", "1..10"),
    ("h", "c4-path"),
    ("h0", "C4"),
    ("adversary", "prune"),
    ("path_len", "40"),
    ("vertex", "0"),
    ("trials", "100000"),
    ("lambda", "15"),
    ("deg", "3"),
    ("budget", "2000"),
    ("buffer", "3"),
    ("cleanup", "true"),
    ("beta_denominator", "0.01"),
    ("block_factor", "1"),
    ("write_graphs", "false"),
];

fn command_defaults(command: Command, check: Option<&str>) -> Vec<(&'static str, &'static str)> {
    match (command, check) {
        (Command::Generate, _) => vec![("write_graphs", "true")],
        (Command::Embed, _) => vec![("p", "0.6")],
        (Command::Pack, _) => vec![("p", "0.6")],
        (Command::Verify, Some("chernoff")) => vec![("n", "100"), ("seeds", "1")],
        (Command::Verify, Some("mixing")) => vec![("n", "10"), ("trials", "10000")],
        (Command::Verify, Some("turan")) => vec![("n", "500"), ("h0", "K3"), ("seeds", "1..20")],
        (Command::Bench, _) => vec![("n", "300"), ("seeds", "1")],
        _ => vec![],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Default,
    Config,
    Cli,
    Derived,
}

/// Parse `1..10` (inclusive), `3`, or comma-separated mixtures of both.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("seeds: cannot parse `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| bad())?;
                let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
                if b < a {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parse a line-oriented `key = value` file; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", idx + 1)))?;
        let key = k.trim().to_string();
        if !KEYS.iter().any(|(name, _)| *name == key) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", idx + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub check: Option<String>,
    pub values: BTreeMap<String, String>,
    pub provenance: BTreeMap<String, Provenance>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    /// Merge the three layers and validate ranges.
    pub fn resolve(
        command: Command,
        check: Option<String>,
        cli: &BTreeMap<String, String>,
        file: &BTreeMap<String, String>,
        out_dir: PathBuf,
        jobs: Option<usize>,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut provenance = BTreeMap::new();
        let overrides = command_defaults(command, check.as_deref());
        for &(key, default) in KEYS {
            let (value, source) = if let Some(v) = cli.get(key) {
                (v.clone(), Provenance::Cli)
            } else if let Some(v) = file.get(key) {
                (v.clone(), Provenance::Config)
            } else {
                let d = overrides.iter().find(|(k, _)| *k == key).map_or(default, |(_, v)| v);
                (d.to_string(), Provenance::Default)
            };
            values.insert(key.to_string(), value);
            provenance.insert(key.to_string(), source);
        }
        for key in cli.keys().chain(file.keys()) {
            if !values.contains_key(key) {
                return Err(CliError::Usage(format!("unknown key `{key}`")));
            }
        }
        let seeds = parse_seeds(&values["seeds"])?;
        let cfg = ExperimentConfig { command, check, values, provenance, seeds, out_dir, jobs };
        cfg.validate()?;
        Ok(cfg)
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.raw(key).parse().map_err(|_| CliError::Usage(format!("`{key}` must be a number, got `{}`", self.raw(key))))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        self.raw(key).parse().map_err(|_| CliError::Usage(format!("`{key}` must be a non-negative integer, got `{}`", self.raw(key))))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        self.raw(key).parse().map_err(|_| CliError::Usage(format!("`{key}` must be a non-negative integer, got `{}`", self.raw(key))))
    }

    pub fn bool(&self, key: &str) -> Result<bool, CliError> {
        self.raw(key).parse().map_err(|_| CliError::Usage(format!("`{key}` must be true or false, got `{}`", self.raw(key))))
    }

    pub fn text(&self, key: &str) -> &str {
        self.raw(key)
    }

    /// Optional numeric key: empty means unset.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.usize(key).map(Some)
        }
    }

    pub fn is_user_set(&self, key: &str) -> bool {
        matches!(self.provenance.get(key), Some(Provenance::Cli | Provenance::Config))
    }

    fn validate(&self) -> Result<(), CliError> {
        let p = self.f64("p")?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(CliError::Usage(format!("`p` must lie in (0, 1], got {p}")));
        }
        if self.usize("n")? == 0 {
            return Err(CliError::Usage("`n` must be positive".into()));
        }
        if self.usize("r")? == 0 {
            return Err(CliError::Usage("`r` must be positive".into()));
        }
        for key in ["gamma", "eps", "d", "alpha", "xi", "xi0", "beta", "big_c", "buffer", "beta_denominator", "block_factor"] {
            let v = self.f64(key)?;
            if v.is_nan() || v <= 0.0 {
                return Err(CliError::Usage(format!("`{key}` must be positive, got {v}")));
            }
        }
        for key in ["eps_bad", "c"] {
            self.opt_f64(key)?;
        }
        self.opt_usize("k")?;
        for key in ["delta", "path_len", "vertex", "deg", "budget"] {
            self.usize(key)?;
        }
        self.u64("trials")?;
        self.f64("lambda")?;
        self.bool("cleanup")?;
        self.bool("write_graphs")?;
        if self.command == Command::Verify {
            match self.check.as_deref() {
                Some("lemma61" | "chernoff" | "mixing" | "turan") => {}
                other => return Err(CliError::Usage(format!("unknown check `{}`", other.unwrap_or("")))),
            }
        }
        Ok(())
    }
}
