//! Run configuration: a flat `key = value` file, optionally overridden by
//! `SATNET_<KEY>` environment variables, validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::train::{ChainMode, EvalMode};

pub const ENV_PREFIX: &str = "SATNET_";

/// Bundled presets, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("parity", include_str!("../configs/parity.conf")),
    ("sudoku4", include_str!("../configs/sudoku4.conf")),
    ("sudoku4_permuted", include_str!("../configs/sudoku4_permuted.conf")),
    ("sudoku9", include_str!("../configs/sudoku9.conf")),
    ("sudoku9_smoke", include_str!("../configs/sudoku9_smoke.conf")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Raw key/value pairs; later assignments win.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigMap(pub BTreeMap<String, String>);

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: n + 1, msg: format!("expected `key = value`, got `{line}`") })?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    /// Applies `SATNET_FOO_BAR=x` as `foo_bar = x`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) {
        for (k, v) in vars {
            if let Some(key) = k.strip_prefix(ENV_PREFIX) {
                self.set(&key.to_ascii_lowercase(), v);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Parity { length: usize },
    Sudoku { size: usize, permutation_seed: Option<u64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: TaskKind,
    pub n_aux: usize,
    pub m: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Layer initialization and shuffling.
    pub seed: u64,
    pub tol: f64,
    pub max_sweeps: usize,
    pub chain_mode: ChainMode,
    pub eval_mode: EvalMode,
    /// Dataset files; when absent the data is generated from `data_seed`.
    pub train_data: Option<PathBuf>,
    pub test_data: Option<PathBuf>,
    pub train_count: usize,
    pub test_count: usize,
    pub data_seed: u64,
    pub out_dir: PathBuf,
    pub resume: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "task",
    "length",
    "size",
    "permutation_seed",
    "n_aux",
    "m",
    "lr",
    "epochs",
    "batch_size",
    "seed",
    "tol",
    "max_sweeps",
    "chain_mode",
    "eval_mode",
    "train_data",
    "test_data",
    "train_count",
    "test_count",
    "data_seed",
    "out_dir",
    "resume",
];

struct Fields<'a> {
    map: &'a ConfigMap,
    problems: Vec<String>,
}

impl Fields<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn opt<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{key}: cannot parse `{raw}`: {e}"));
                None
            }
        }
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        self.opt(key).unwrap_or(default)
    }

    fn require<T: FromStr + Default>(&mut self, key: &str) -> T
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_none() {
            self.problems.push(format!("{key}: required"));
        }
        self.opt(key).unwrap_or_default()
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    /// Validates every key, reporting all problems at once.
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut f = Fields { map, problems: Vec::new() };
        for key in map.0.keys() {
            if !KEYS.contains(&key.as_str()) {
                f.problems.push(format!("{key}: unknown key"));
            }
        }

        let task_name: String = f.require("task");
        let task = match task_name.as_str() {
            "parity" => {
                let length = f.get("length", 20);
                if length < 2 {
                    f.problems.push(format!("length: must be at least 2, got {length}"));
                }
                TaskKind::Parity { length }
            }
            "sudoku" => {
                let size = f.get("size", 9);
                if size != 4 && size != 9 {
                    f.problems.push(format!("size: must be 4 or 9, got {size}"));
                }
                TaskKind::Sudoku { size, permutation_seed: f.opt("permutation_seed") }
            }
            "" => TaskKind::Parity { length: 0 },
            other => {
                f.problems.push(format!("task: expected parity or sudoku, got `{other}`"));
                TaskKind::Parity { length: 0 }
            }
        };
        let (aux_default, m_default) = match task {
            TaskKind::Parity { .. } => (4, 8),
            TaskKind::Sudoku { .. } => (0, 0),
        };
        let n_aux = f.get("n_aux", aux_default);
        let m = f.get("m", m_default);
        if m == 0 {
            f.problems.push("m: must be at least 1".into());
        }
        let lr = f.require::<f64>("lr");
        if !(lr >= 0.0 && lr.is_finite()) {
            f.problems.push(format!("lr: must be finite and non-negative, got {lr}"));
        }
        let batch_size = f.get("batch_size", 40);
        if batch_size == 0 {
            f.problems.push("batch_size: must be at least 1".into());
        }
        let tol: f64 = f.get("tol", 1e-4);
        if !(tol >= 0.0 && tol.is_finite()) {
            f.problems.push(format!("tol: must be finite and non-negative, got {tol}"));
        }
        let chain_mode = match f.raw("chain_mode").unwrap_or("soft") {
            "soft" => ChainMode::Soft,
            "hard" => ChainMode::Hard,
            other => {
                f.problems.push(format!("chain_mode: expected soft or hard, got `{other}`"));
                ChainMode::Soft
            }
        };
        let eval_mode = f.get("eval_mode", EvalMode::Threshold);
        let train_data: Option<PathBuf> = f.opt("train_data");
        let test_data: Option<PathBuf> = f.opt("test_data");
        let train_count = f.get("train_count", 9000);
        let test_count = f.get("test_count", 1000);
        if train_data.is_none() && train_count == 0 {
            f.problems.push("train_count: must be positive when train_data is not given".into());
        }

        let cfg = RunConfig {
            task,
            n_aux,
            m,
            lr,
            epochs: f.require("epochs"),
            batch_size,
            seed: f.get("seed", 0),
            tol,
            max_sweeps: f.get("max_sweeps", 40),
            chain_mode,
            eval_mode,
            train_data,
            test_data,
            train_count,
            test_count,
            data_seed: f.get("data_seed", 0),
            out_dir: f.get("out_dir", PathBuf::from("runs/default")),
            resume: f.opt("resume"),
        };
        if f.problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(f.problems))
        }
    }

    /// Number of real variables of the layer this config trains.
    pub fn n_real(&self) -> usize {
        match self.task {
            TaskKind::Parity { .. } => 3,
            TaskKind::Sudoku { size, .. } => size * size * size,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for (name, text) in PRESETS {
            RunConfig::from_text(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let cfg = RunConfig::from_text(preset("sudoku9").unwrap()).unwrap();
        assert_eq!((cfg.n_aux, cfg.m, cfg.lr), (300, 600, 2e-3));
        let cfg = RunConfig::from_text(preset("parity").unwrap()).unwrap();
        assert_eq!(cfg.lr, 0.1);
        assert_eq!(cfg.task, TaskKind::Parity { length: 20 });
    }

    #[test]
    fn env_overrides_file() {
        let mut map = ConfigMap::parse("task = parity\nlr = 0.1\nepochs = 3 # short\n").unwrap();
        map.apply_env([("SATNET_EPOCHS".to_string(), "7".to_string()), ("HOME".to_string(), "/".to_string())]);
        let cfg = RunConfig::from_map(&map).unwrap();
        assert_eq!(cfg.epochs, 7);
    }

    #[test]
    fn itemizes_every_problem() {
        let Err(Error::Config(problems)) = RunConfig::from_text("task = sudoku\nsize = 5\nlr = fast\nbogus = 1\n") else {
            panic!("expected a config error");
        };
        let joined = problems.join("\n");
        for needle in ["bogus: unknown key", "size: must be 4 or 9", "lr: cannot parse", "epochs: required", "m: must be"] {
            assert!(joined.contains(needle), "missing `{needle}` in\n{joined}");
        }
    }
}
