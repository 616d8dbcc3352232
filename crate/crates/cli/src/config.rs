//! Flat `key = value` run configuration.
//!
//! One key per line, `#` starts a comment. `n`, `tau` and `m` take comma
//! separated lists for `scan`; every other command wants a single value.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use qemcheck_core::identities::{catalog, lookup, CheckKind, Tolerances};
use qemcheck_core::models::{ChartKind, Family};
use qemcheck_core::qem::Coupling;
use serde::Serialize;
use thiserror::Error;

pub const KEYS: [&str; 15] = [
    "family",
    "n",
    "r",
    "chart",
    "tau",
    "m",
    "v_axis",
    "suite",
    "points",
    "seed",
    "grid",
    "tol.order2",
    "tol.order3",
    "tol.order4",
    "tol.integral",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?} (known keys: {})", KEYS.join(", "))]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} is set twice")]
    Duplicate { line: usize, key: String },
    #[error("key {key:?}: {reason}")]
    Value { key: String, reason: String },
    #[error("missing required key {0:?}")]
    Missing(&'static str),
}

fn bad(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

/// Checks a run selects, as written in the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct Suite(Vec<String>);

impl From<Suite> for String {
    fn from(s: Suite) -> String {
        s.0.join(",")
    }
}

impl Suite {
    fn parse(value: &str) -> Result<Suite, ConfigError> {
        let tokens = split_list(value);
        if tokens.is_empty() {
            return Err(bad("suite", "empty selection"));
        }
        for t in &tokens {
            if !matches!(t.as_str(), "all" | "pointwise" | "sample" | "integral") && lookup(t).is_none() {
                return Err(bad("suite", format!("unknown identity {t:?}")));
            }
        }
        Ok(Suite(tokens))
    }

    /// Catalog ids in catalog order. `all` means every entry of the kinds in
    /// `all_kinds`.
    pub fn ids(&self, all_kinds: &[CheckKind]) -> Vec<&'static str> {
        catalog()
            .iter()
            .filter(|e| {
                self.0.iter().any(|t| match t.as_str() {
                    "all" => all_kinds.contains(&e.kind),
                    "pointwise" => e.kind == CheckKind::Pointwise,
                    "sample" => e.kind == CheckKind::Sample,
                    "integral" => e.kind == CheckKind::Integral,
                    id => id == e.id,
                })
            })
            .map(|e| e.id)
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub family: Family,
    pub n: Vec<usize>,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartKind>,
    /// `None` lets `scan` use three valid defaults per dimension.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    pub m: Vec<Coupling>,
    pub v_axis: usize,
    pub suite: Suite,
    pub points: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    pub tolerances: Tolerances,
    pub tol_scale: f64,
}

fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| bad(key, format!("cannot parse {value:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let items = split_list(value);
    if items.is_empty() {
        return Err(bad(key, "empty list"));
    }
    items.iter().map(|v| parse_one(key, v)).collect()
}

fn positive(key: &str, value: f64) -> Result<f64, ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(bad(key, format!("must be positive and finite, got {value}")))
    }
}

fn parse_grid(value: &str) -> Result<Vec<usize>, ConfigError> {
    let sizes: Vec<usize> = value
        .split(['x', 'X', '×'])
        .map(|t| parse_one::<usize>("grid", t))
        .collect::<Result<_, _>>()?;
    if sizes.contains(&0) {
        return Err(bad("grid", "every axis needs at least one node"));
    }
    Ok(sizes)
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.parse()
    }

    /// Rejects lists outside `scan`.
    pub fn require_single(&self) -> Result<(), ConfigError> {
        let single = |key: &str, len: usize| {
            if len == 1 {
                Ok(())
            } else {
                Err(bad(key, "lists are only accepted by scan"))
            }
        };
        single("n", self.n.len())?;
        single("m", self.m.len())?;
        match &self.tau {
            Some(t) => single("tau", t.len()),
            None => Err(ConfigError::Missing("tau")),
        }
    }

    pub fn apply_overrides(&mut self, seed: Option<u64>, tol_scale: Option<f64>) -> Result<(), ConfigError> {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let Some(scale) = tol_scale {
            self.tol_scale = positive("--tol-scale", scale)?;
            self.tolerances = self.tolerances.scaled(scale);
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<RunConfig, ConfigError> {
        let mut seen: Vec<&str> = Vec::new();
        let mut family = None;
        let mut n = None;
        let mut r = 1.0;
        let mut chart = None;
        let mut tau = None;
        let mut m = None;
        let mut v_axis = 0;
        let mut suite = Suite(vec!["all".into()]);
        let mut points = 100;
        let mut seed = 0;
        let mut grid = None;
        let mut tolerances = Tolerances::default();

        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            if seen.contains(known) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            seen.push(known);
            match key {
                "family" => family = Some(parse_one::<Family>(key, value)?),
                "n" => n = Some(parse_list::<usize>(key, value)?),
                "r" => r = positive(key, parse_one(key, value)?)?,
                "chart" => chart = Some(parse_one::<ChartKind>(key, value)?),
                "tau" => {
                    let list = parse_list::<f64>(key, value)?;
                    if list.iter().any(|t| !t.is_finite()) {
                        return Err(bad(key, "values must be finite"));
                    }
                    tau = Some(list);
                }
                "m" => m = Some(parse_list::<Coupling>(key, value)?),
                "v_axis" => v_axis = parse_one(key, value)?,
                "suite" => suite = Suite::parse(value)?,
                "points" => {
                    points = parse_one(key, value)?;
                    if points == 0 {
                        return Err(bad(key, "need at least one sample point"));
                    }
                }
                "seed" => seed = parse_one(key, value)?,
                "grid" => grid = Some(parse_grid(value)?),
                "tol.order2" => tolerances.order2 = positive(key, parse_one(key, value)?)?,
                "tol.order3" => tolerances.order3 = positive(key, parse_one(key, value)?)?,
                "tol.order4" => tolerances.order4 = positive(key, parse_one(key, value)?)?,
                "tol.integral" => tolerances.integral = positive(key, parse_one(key, value)?)?,
                _ => unreachable!("key checked against KEYS"),
            }
        }

        Ok(RunConfig {
            family: family.ok_or(ConfigError::Missing("family"))?,
            n: n.ok_or(ConfigError::Missing("n"))?,
            r,
            chart,
            tau,
            m: m.ok_or(ConfigError::Missing("m"))?,
            v_axis,
            suite,
            points,
            seed,
            grid,
            tolerances,
            tol_scale: 1.0,
        })
    }
}
