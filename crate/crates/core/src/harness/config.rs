//! Flat `key = value` run configuration.
//!
//! Resolution order: scenario defaults for the chosen size, then file
//! entries, then command-line entries. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use super::scenario::Scenario;
use crate::bgk::BgkConfig;
use crate::error::{AptError, Result};

/// Everything a single run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub bgk: BgkConfig,
    /// Step a dense reference alongside and record the relative error.
    pub compare_oracle: bool,
}

/// One `key = value` entry with the line it came from (0 for flags).
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Entry {
    pub fn flag(key: &str, value: impl ToString) -> Self {
        Self {
            key: key.to_string(),
            value: value.to_string(),
            line: 0,
        }
    }
}

pub const KEYS: [&str; 16] = [
    "scenario",
    "dim",
    "m",
    "dt",
    "t_star",
    "kn",
    "bo",
    "k_coll",
    "mu",
    "eps_b",
    "eps_d",
    "eps_diss",
    "transport",
    "collisions",
    "compare_oracle",
    "dissipation",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| AptError::Parse(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(AptError::Parse(format!("line {}: empty key or value", i + 1)));
        }
        if !KEYS.contains(&k) {
            return Err(AptError::Parse(format!("line {}: unknown key `{k}`", i + 1)));
        }
        out.push(Entry {
            key: k.to_string(),
            value: v.to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

pub fn read_entries(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path)?;
    parse_entries(&text)
}

fn parse_value<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value.parse::<T>().map_err(|_| {
        let place = if e.line > 0 {
            format!("line {}", e.line)
        } else {
            "command line".to_string()
        };
        AptError::Config {
            field: e.key.clone(),
            message: format!("cannot parse `{}` ({place})", e.value),
        }
    })
}

/// Resolves file entries and flag entries (flags win) into a validated config.
pub fn resolve(file: &[Entry], flags: &[Entry]) -> Result<RunConfig> {
    for e in flags {
        if !KEYS.contains(&e.key.as_str()) {
            return Err(AptError::Config {
                field: e.key.clone(),
                message: "unknown key".into(),
            });
        }
    }
    let all: Vec<&Entry> = file.iter().chain(flags).collect();
    let last = |key: &str| all.iter().rev().find(|e| e.key == key).copied();
    let scenario = match last("scenario") {
        Some(e) => e.value.parse::<Scenario>()?,
        None => Scenario::Trig,
    };
    let dim = last("dim").map(parse_value::<usize>).transpose()?.unwrap_or(2);
    let m = last("m").map(parse_value::<usize>).transpose()?.unwrap_or(16);
    let mut bgk = scenario.default_config(dim, m);
    let mut compare_oracle = false;
    for e in &all {
        match e.key.as_str() {
            "scenario" | "dim" | "m" => {}
            "dt" => bgk.dt = parse_value(e)?,
            "t_star" => bgk.t_star = parse_value(e)?,
            "kn" => bgk.kn = parse_value(e)?,
            "bo" => bgk.bo = parse_value(e)?,
            "k_coll" => bgk.k_coll = parse_value(e)?,
            "mu" => bgk.mu = parse_value(e)?,
            "eps_b" => bgk.eps_b = parse_value(e)?,
            "eps_d" => bgk.eps_d = parse_value(e)?,
            "eps_diss" | "dissipation" => bgk.eps_diss = parse_value(e)?,
            "transport" => bgk.transport = parse_value(e)?,
            "collisions" => bgk.collisions = parse_value(e)?,
            "compare_oracle" => compare_oracle = parse_value(e)?,
            other => unreachable!("key `{other}` passed validation"),
        }
    }
    bgk.validate()?;
    Ok(RunConfig {
        scenario,
        bgk,
        compare_oracle,
    })
}

/// Writes every resolved value so that [`resolve`] of the output reproduces it.
pub fn render(cfg: &RunConfig) -> String {
    let b = &cfg.bgk;
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", cfg.scenario);
    let _ = writeln!(s, "dim = {}", b.dim);
    let _ = writeln!(s, "m = {}", b.m);
    for (k, v) in [
        ("dt", b.dt),
        ("t_star", b.t_star),
        ("kn", b.kn),
        ("bo", b.bo),
        ("k_coll", b.k_coll),
        ("mu", b.mu),
        ("eps_b", b.eps_b),
        ("eps_d", b.eps_d),
        ("eps_diss", b.eps_diss),
    ] {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "transport = {}", b.transport);
    let _ = writeln!(s, "collisions = {}", b.collisions);
    let _ = writeln!(s, "compare_oracle = {}", cfg.compare_oracle);
    s
}
