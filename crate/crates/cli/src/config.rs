use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use intmaps::Family;
use serde::Serialize;

/// Every knob a run can take, after merging the config file and flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub map: String,
    pub kmax: usize,
    pub depth: usize,
    pub trials: usize,
    pub pairs: usize,
    pub ensemble: usize,
    pub nmax: usize,
    pub cap: u64,
    pub epsilon: f64,
    pub grid: usize,
    pub sweeps: usize,
    pub frontier: usize,
    pub seeds: usize,
    pub jbar: usize,
    pub tol: f64,
    pub set: String,
    pub lift: String,
    pub word: Option<String>,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            map: "pm:s=1".into(),
            kmax: 10_000,
            depth: 20,
            trials: 1000,
            pairs: 200,
            ensemble: 10_000,
            nmax: 1000,
            cap: 1_000_000,
            epsilon: 0.1,
            grid: 4096,
            sweeps: 100_000,
            frontier: 100_000,
            seeds: 1000,
            jbar: 1,
            tol: 1e-12,
            set: "[[0.6,0.61]]".into(),
            lift: "default".into(),
            word: None,
            seed: 1,
            out: PathBuf::from("out"),
        }
    }
}

pub const KEYS: &[&str] = &[
    "map", "kmax", "depth", "trials", "pairs", "ensemble", "nmax", "cap", "epsilon", "grid", "sweeps",
    "frontier", "seeds", "jbar", "tol", "set", "lift", "word", "seed", "out",
];

fn number<T: std::str::FromStr>(key: &str, value: &str) -> anyhow::Result<T> {
    value.trim().parse().map_err(|_| anyhow!("`{key}` expects a number, got `{value}`"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let value = value.trim();
        match key {
            "map" => {
                value.parse::<Family>().map_err(|e| anyhow!("`map`: {e}"))?;
                self.map = value.to_string();
            }
            "kmax" => self.kmax = number(key, value)?,
            "depth" => self.depth = number(key, value)?,
            "trials" => self.trials = number(key, value)?,
            "pairs" => self.pairs = number(key, value)?,
            "ensemble" => self.ensemble = number(key, value)?,
            "nmax" => self.nmax = number(key, value)?,
            "cap" => self.cap = number(key, value)?,
            "epsilon" => self.epsilon = number(key, value)?,
            "grid" => self.grid = number(key, value)?,
            "sweeps" => self.sweeps = number(key, value)?,
            "frontier" => self.frontier = number(key, value)?,
            "seeds" => self.seeds = number(key, value)?,
            "jbar" => self.jbar = number(key, value)?,
            "tol" => self.tol = number(key, value)?,
            "set" => self.set = value.to_string(),
            "lift" => self.lift = value.to_string(),
            "word" => self.word = Some(value.to_string()),
            "seed" => self.seed = number(key, value)?,
            "out" => self.out = PathBuf::from(value),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn load_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), n + 1))?;
            self.set(key.trim(), value).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn family(&self) -> anyhow::Result<Family> {
        self.map.parse::<Family>().map_err(|e| anyhow!("`map`: {e}"))
    }

    /// `key = value` lines in [`KEYS`] order.
    pub fn echo(&self) -> Vec<(String, String)> {
        let word = self.word.clone().unwrap_or_default();
        let values = [
            self.map.clone(),
            self.kmax.to_string(),
            self.depth.to_string(),
            self.trials.to_string(),
            self.pairs.to_string(),
            self.ensemble.to_string(),
            self.nmax.to_string(),
            self.cap.to_string(),
            self.epsilon.to_string(),
            self.grid.to_string(),
            self.sweeps.to_string(),
            self.frontier.to_string(),
            self.seeds.to_string(),
            self.jbar.to_string(),
            self.tol.to_string(),
            self.set.clone(),
            self.lift.clone(),
            word,
            self.seed.to_string(),
            self.out.display().to_string(),
        ];
        KEYS.iter().map(|k| k.to_string()).zip(values).collect()
    }
}
