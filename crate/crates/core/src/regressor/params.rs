use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    RandomForest,
    SvrLinear,
    LinearRegression,
    GradientBoostedTrees,
    KNearestNeighbors,
}

impl RegressorKind {
    pub const ALL: [RegressorKind; 5] = [
        RegressorKind::RandomForest,
        RegressorKind::SvrLinear,
        RegressorKind::LinearRegression,
        RegressorKind::GradientBoostedTrees,
        RegressorKind::KNearestNeighbors,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::RandomForest => "random_forest",
            RegressorKind::SvrLinear => "svr_linear",
            RegressorKind::LinearRegression => "linear_regression",
            RegressorKind::GradientBoostedTrees => "gradient_boosted_trees",
            RegressorKind::KNearestNeighbors => "k_nearest_neighbors",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            RegressorKind::RandomForest => "Random Forest",
            RegressorKind::SvrLinear => "Support Vector Machines",
            RegressorKind::LinearRegression => "Linear Regression",
            RegressorKind::GradientBoostedTrees => "Gradient Boosted Trees",
            RegressorKind::KNearestNeighbors => "K-Nearest Neighbors",
        }
    }

    /// Whether inputs are standardized before fitting.
    pub fn standardizes(self) -> bool {
        matches!(
            self,
            RegressorKind::SvrLinear
                | RegressorKind::LinearRegression
                | RegressorKind::KNearestNeighbors
        )
    }
}

impl fmt::Display for RegressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown regressor kind {s:?}")))
    }
}

/// Regressor family plus overrides of its default hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub kind: RegressorKind,
    #[serde(default)]
    pub hyperparams: BTreeMap<String, Value>,
    #[serde(default)]
    pub seed: u64,
}

impl RegressorSpec {
    pub fn new(kind: RegressorKind) -> Self {
        Self {
            kind,
            hyperparams: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.hyperparams.insert(key.to_string(), value.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// One spec per kind with default hyperparameters.
    pub fn defaults(seed: u64) -> Vec<Self> {
        RegressorKind::ALL
            .into_iter()
            .map(|k| Self::new(k).with_seed(seed))
            .collect()
    }

    /// Defaults merged with overrides; unknown keys and bad values are errors.
    pub fn params(&self) -> Result<Params> {
        let mut p = Params::defaults(self.kind);
        for (key, value) in &self.hyperparams {
            p.set(key, value)?;
        }
        p.validate()?;
        Ok(p)
    }

    /// Short digest of the resolved hyperparameters.
    pub fn hyperparams_digest(&self) -> Result<String> {
        let resolved = serde_json::to_vec(&self.params()?)?;
        let digest = Sha256::digest(&resolved);
        Ok(hex::encode(&digest[..8]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// Relative ridge term added only for numerical stability.
    pub jitter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each node.
    pub max_features: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Params {
    RandomForest(ForestParams),
    SvrLinear(SvrParams),
    LinearRegression(LinearParams),
    GradientBoostedTrees(BoostParams),
    KNearestNeighbors(KnnParams),
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::InvalidConfig(format!("hyperparameter {key} must be a number")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::InvalidConfig(format!("hyperparameter {key} must be a non-negative integer")))
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| Error::InvalidConfig(format!("hyperparameter {key} must be a boolean")))
}

fn set_tree(t: &mut TreeParams, key: &str, v: &Value) -> Result<bool> {
    match key {
        "max_depth" => t.max_depth = if v.is_null() { None } else { Some(as_usize(key, v)?) },
        "min_samples_split" => t.min_samples_split = as_usize(key, v)?,
        "min_samples_leaf" => t.min_samples_leaf = as_usize(key, v)?,
        "max_features" => t.max_features = as_f64(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl Params {
    pub fn defaults(kind: RegressorKind) -> Self {
        match kind {
            RegressorKind::RandomForest => Params::RandomForest(ForestParams {
                n_trees: 100,
                bootstrap: true,
                tree: TreeParams {
                    max_depth: None,
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    max_features: 1.0 / 3.0,
                },
            }),
            RegressorKind::SvrLinear => Params::SvrLinear(SvrParams {
                c: 1.0,
                epsilon: 0.1,
                tol: 1e-3,
                max_iter: 1000,
            }),
            RegressorKind::LinearRegression => Params::LinearRegression(LinearParams { jitter: 1e-10 }),
            RegressorKind::GradientBoostedTrees => Params::GradientBoostedTrees(BoostParams {
                n_rounds: 100,
                learning_rate: 0.1,
                tree: TreeParams {
                    max_depth: Some(6),
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    max_features: 1.0,
                },
            }),
            RegressorKind::KNearestNeighbors => Params::KNearestNeighbors(KnnParams { k: 5 }),
        }
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let known = match self {
            Params::RandomForest(p) => match key {
                "n_trees" => {
                    p.n_trees = as_usize(key, v)?;
                    true
                }
                "bootstrap" => {
                    p.bootstrap = as_bool(key, v)?;
                    true
                }
                _ => set_tree(&mut p.tree, key, v)?,
            },
            Params::SvrLinear(p) => {
                match key {
                    "c" | "C" => p.c = as_f64(key, v)?,
                    "epsilon" => p.epsilon = as_f64(key, v)?,
                    "tol" => p.tol = as_f64(key, v)?,
                    "max_iter" => p.max_iter = as_usize(key, v)?,
                    _ => return Err(unknown(key)),
                }
                true
            }
            Params::LinearRegression(p) => {
                match key {
                    "jitter" => p.jitter = as_f64(key, v)?,
                    _ => return Err(unknown(key)),
                }
                true
            }
            Params::GradientBoostedTrees(p) => match key {
                "n_rounds" => {
                    p.n_rounds = as_usize(key, v)?;
                    true
                }
                "learning_rate" => {
                    p.learning_rate = as_f64(key, v)?;
                    true
                }
                _ => set_tree(&mut p.tree, key, v)?,
            },
            Params::KNearestNeighbors(p) => {
                match key {
                    "k" => p.k = as_usize(key, v)?,
                    _ => return Err(unknown(key)),
                }
                true
            }
        };
        if known {
            Ok(())
        } else {
            Err(unknown(key))
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let tree_ok = |t: &TreeParams| {
            t.min_samples_leaf >= 1
                && t.min_samples_split >= 2
                && t.max_features > 0.0
                && t.max_features <= 1.0
                && t.max_depth != Some(0)
        };
        match self {
            Params::RandomForest(p) if p.n_trees == 0 || !tree_ok(&p.tree) => bad("invalid random_forest hyperparameters"),
            Params::SvrLinear(p) if !(p.c > 0.0) || !(p.epsilon >= 0.0) || !(p.tol > 0.0) || p.max_iter == 0 => {
                bad("invalid svr_linear hyperparameters")
            }
            Params::LinearRegression(p) if !(p.jitter >= 0.0) => bad("invalid linear_regression jitter"),
            Params::GradientBoostedTrees(p)
                if p.n_rounds == 0 || !(p.learning_rate > 0.0) || !tree_ok(&p.tree) =>
            {
                bad("invalid gradient_boosted_trees hyperparameters")
            }
            Params::KNearestNeighbors(p) if p.k == 0 => bad("k_nearest_neighbors needs k >= 1"),
            _ => Ok(()),
        }
    }
}

fn unknown(key: &str) -> Error {
    Error::InvalidConfig(format!("unknown hyperparameter {key:?}"))
}
