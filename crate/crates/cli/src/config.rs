//! Effective run configuration: defaults, then a flat TOML file, then
//! `--set key=value` pairs, then dedicated flags.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chordframe::decoding::{GammaControl, Strategy};
use chordframe::model::ModelConfig;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Greedy,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub gamma: f64,
    pub strategy: StrategyKind,
    pub temperature: f64,
    pub train_fraction: f64,
    /// Model and training settings; `model.seed` seeds every random choice.
    pub model: ModelConfig,
}

/// Values given through dedicated command-line flags.
#[derive(Clone, Debug, Default)]
pub struct FlagOverrides {
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub strategy: Option<StrategyKind>,
    pub temperature: Option<f64>,
}

const RUN_KEYS: [&str; 4] = ["gamma", "strategy", "temperature", "train_fraction"];

fn defaults() -> Table {
    let mut t = Table::try_from(ModelConfig::default()).expect("model config is a table");
    t.insert("gamma".into(), Value::Float(0.5));
    t.insert("strategy".into(), Value::String("greedy".into()));
    t.insert("temperature".into(), Value::Float(1.0));
    t.insert("train_fraction".into(), Value::Float(0.9));
    t
}

fn overlay(base: &mut Table, layer: Table, origin: &str) -> Result<()> {
    for (k, v) in layer {
        let Some(current) = base.get(&k) else {
            bail!("{origin}: unknown key `{k}`");
        };
        // integers are accepted where a float is expected
        let v = match (current, v) {
            (Value::Float(_), Value::Integer(i)) => Value::Float(i as f64),
            (_, v) => v,
        };
        if std::mem::discriminant(current) != std::mem::discriminant(&v) {
            bail!("{origin}: key `{k}` expects a {}, got `{v}`", current.type_str());
        }
        base.insert(k, v);
    }
    Ok(())
}

fn parse_set(pair: &str) -> Result<Table> {
    let (k, v) = pair
        .split_once('=')
        .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got `{pair}`"))?;
    let (k, v) = (k.trim(), v.trim());
    toml::from_str::<Table>(&format!("{k} = {v}"))
        .or_else(|_| {
            let mut t = Table::new();
            t.insert(k.to_string(), Value::String(v.to_string()));
            Ok::<_, toml::de::Error>(t)
        })
        .map_err(|e| anyhow!("--set {pair}: {e}"))
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, sets: &[String], flags: &FlagOverrides) -> Result<RunConfig> {
        let mut table = defaults();
        if let Some(path) = file {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            let layer: Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
            overlay(&mut table, layer, &path.display().to_string())?;
        }
        for pair in sets {
            overlay(&mut table, parse_set(pair)?, "--set")?;
        }
        let mut run = Table::new();
        for key in RUN_KEYS {
            run.insert(key.into(), table.remove(key).expect("default present"));
        }
        let model: ModelConfig = Value::Table(table).try_into().context("model settings")?;
        let float = |k: &str| run[k].as_float().expect("checked type");
        let strategy = StrategyKind::from_str(run["strategy"].as_str().expect("checked type"), true)
            .map_err(|_| anyhow!("strategy must be `greedy` or `sample`"))?;
        let mut cfg = RunConfig {
            gamma: float("gamma"),
            strategy,
            temperature: float("temperature"),
            train_fraction: float("train_fraction"),
            model,
        };
        if let Some(s) = flags.seed {
            cfg.model.seed = s;
        }
        if let Some(g) = flags.gamma {
            cfg.gamma = g;
        }
        if let Some(s) = flags.strategy {
            cfg.strategy = s;
        }
        if let Some(t) = flags.temperature {
            cfg.temperature = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        GammaControl::new(self.gamma)?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            bail!("temperature must be positive and finite, got {}", self.temperature);
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1), got {}", self.train_fraction);
        }
        self.model.validate()?;
        Ok(())
    }

    pub fn gamma_control(&self) -> GammaControl {
        GammaControl::new(self.gamma).expect("validated")
    }

    pub fn strategy(&self) -> Strategy {
        match self.strategy {
            StrategyKind::Greedy => Strategy::Greedy,
            StrategyKind::Sample => Strategy::Sample {
                temperature: self.temperature,
                seed: self.model.seed,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
