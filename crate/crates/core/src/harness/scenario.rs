use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::adversary::{self, Strategy};
use crate::protocol::{Provers, RoundSetup, Scheme};
use crate::spacetime::{Geometry, GeometryError};

const KEYS: [&str; 10] = [
    "x_v1",
    "x_v2",
    "delta",
    "scheme",
    "strategy",
    "epr_budget",
    "rounds",
    "seed",
    "epsilon",
    "teleport_time_offset",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` is set more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {key}: {message}")]
    BadValue { line: usize, key: &'static str, message: String },
    #[error("{key}: {message}")]
    Invalid { key: &'static str, message: String },
}

/// A complete, validated run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub geometry: Geometry,
    pub scheme: Scheme,
    /// `None` means honest provers.
    pub strategy: Option<Strategy>,
    pub epr_budget: u32,
    pub rounds: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub teleport_time_offset: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        let geometry = Geometry::default();
        Scenario {
            geometry,
            scheme: Scheme::TeleportMeasure,
            strategy: None,
            epr_budget: 1,
            rounds: 1000,
            seed: 42,
            epsilon: geometry.delta() / 2.0,
            teleport_time_offset: 0.0,
        }
    }
}

impl Scenario {
    pub fn honest(geometry: Geometry, scheme: Scheme) -> Self {
        Scenario { geometry, scheme, epsilon: geometry.delta() / 2.0, ..Scenario::default() }
    }

    pub fn attack(geometry: Geometry, scheme: Scheme, strategy: Strategy) -> Self {
        Scenario { strategy: Some(strategy), epr_budget: strategy.default_budget(), ..Scenario::honest(geometry, scheme) }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let delta = self.geometry.delta();
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < delta) {
            return Err(invalid("epsilon", format!("must satisfy 0 < epsilon < delta = {delta} (got {})", self.epsilon)));
        }
        let offset = self.teleport_time_offset;
        if !(offset > -delta && offset <= 0.0) {
            return Err(invalid(
                "teleport_time_offset",
                format!("must lie in (-delta, 0] = ({}, 0] (got {offset})", -delta),
            ));
        }
        if let Some(s) = self.strategy {
            adversary::validate(s, self.scheme, self.epr_budget).map_err(|e| {
                let key = if matches!(e, adversary::AdversaryError::Budget { .. }) { "epr_budget" } else { "strategy" };
                invalid(key, e.to_string())
            })?;
        }
        Ok(())
    }

    /// Round setup with honest provers, or with the configured strategy.
    pub fn setup(&self, dishonest: bool) -> RoundSetup {
        let provers = match (dishonest, self.strategy) {
            (true, Some(strategy)) => Provers::Dishonest { strategy, epr_budget: self.epr_budget },
            _ => Provers::Honest,
        };
        RoundSetup {
            geometry: self.geometry,
            scheme: self.scheme,
            provers,
            teleport_time_offset: self.teleport_time_offset,
            seed: self.seed,
        }
    }

    /// `(key, value)` pairs in canonical order; parsing them back yields `self`.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let g = &self.geometry;
        vec![
            ("x_v1", g.x_v1().to_string()),
            ("x_v2", g.x_v2().to_string()),
            ("delta", g.delta().to_string()),
            ("scheme", self.scheme.to_string()),
            ("strategy", self.strategy.map_or_else(|| "honest".to_string(), |s| s.to_string())),
            ("epr_budget", self.epr_budget.to_string()),
            ("rounds", self.rounds.to_string()),
            ("seed", self.seed.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("teleport_time_offset", self.teleport_time_offset.to_string()),
        ]
    }

    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn invalid(key: &'static str, message: String) -> ConfigError {
    ConfigError::Invalid { key, message }
}

fn value<T: std::str::FromStr>(
    raw: &BTreeMap<&'static str, (usize, String)>,
    key: &'static str,
) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.get(key)
        .map(|(line, v)| v.parse::<T>().map_err(|e| ConfigError::BadValue { line: *line, key, message: e.to_string() }))
        .transpose()
}

fn finite(
    raw: &BTreeMap<&'static str, (usize, String)>,
    key: &'static str,
    default: f64,
) -> Result<f64, ConfigError> {
    let v = value::<f64>(raw, key)?.unwrap_or(default);
    if v.is_finite() {
        Ok(v)
    } else {
        let line = raw.get(key).map_or(0, |(l, _)| *l);
        Err(ConfigError::BadValue { line, key, message: "must be finite".into() })
    }
}

/// Parses line-based `key = value` text. `#` starts a comment; blank lines
/// are ignored; every key may appear at most once.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut raw: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (i, full) in text.lines().enumerate() {
        let line = i + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        let key = *KEYS.iter().find(|key| **key == k).ok_or_else(|| ConfigError::UnknownKey { line, key: k.into() })?;
        if raw.insert(key, (line, v.to_string())).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: k.into() });
        }
    }

    let d = Scenario::default();
    let x_v1 = finite(&raw, "x_v1", d.geometry.x_v1())?;
    let x_v2 = finite(&raw, "x_v2", d.geometry.x_v2())?;
    let delta = finite(&raw, "delta", d.geometry.delta())?;
    let geometry = Geometry::new(x_v1, x_v2, delta).map_err(|e| {
        let key = match e {
            GeometryError::VerifierOrder { .. } => "x_v2",
            _ => "delta",
        };
        invalid(key, e.to_string())
    })?;
    let scheme = value::<Scheme>(&raw, "scheme")?.unwrap_or(d.scheme);
    let strategy = match raw.get("strategy") {
        None => None,
        Some((_, v)) if v.eq_ignore_ascii_case("honest") => None,
        Some(_) => value::<Strategy>(&raw, "strategy")?,
    };
    let epr_budget = value::<u32>(&raw, "epr_budget")?
        .unwrap_or_else(|| strategy.map_or(d.epr_budget, Strategy::default_budget));
    let scenario = Scenario {
        geometry,
        scheme,
        strategy,
        epr_budget,
        rounds: value::<u64>(&raw, "rounds")?.unwrap_or(d.rounds),
        seed: value::<u64>(&raw, "seed")?.unwrap_or(d.seed),
        epsilon: finite(&raw, "epsilon", delta / 2.0)?,
        teleport_time_offset: finite(&raw, "teleport_time_offset", 0.0)?,
    };
    scenario.validate()?;
    Ok(scenario)
}
