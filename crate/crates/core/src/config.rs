//! Declarative experiment configuration (TOML or JSON). Unknown keys are
//! rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::Mixture;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mixture: Mixture,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub positive: PositiveBlock,
    #[serde(default)]
    pub landscape: LandscapeBlock,
    #[serde(default)]
    pub bounds: BoundsBlock,
    #[serde(default)]
    pub langevin: LangevinBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub cells: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            cells: 1000,
            tol: 1e-9,
            max_iters: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PositiveBlock {
    pub betas: Vec<f64>,
    pub cells: usize,
}

impl Default for PositiveBlock {
    fn default() -> Self {
        Self {
            betas: vec![4.0, 8.0, 16.0, 32.0],
            cells: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeBlock {
    pub n: usize,
    pub instances: usize,
    pub restarts: usize,
    pub tol_grad: f64,
    pub max_steps: usize,
    pub tol_eig: f64,
    pub k_frac: f64,
    pub k0: usize,
    /// Defaults to the achieved energy gap plus 0.01.
    pub delta: Option<f64>,
    pub cluster_threshold: f64,
    /// ε values for the pinned pair and triple searches; empty skips them.
    pub search_eps: Vec<f64>,
    pub search_restarts: usize,
}

impl Default for LandscapeBlock {
    fn default() -> Self {
        Self {
            n: 100,
            instances: 2,
            restarts: 10,
            tol_grad: 1e-7,
            max_steps: 20_000,
            tol_eig: 1e-3,
            k_frac: 0.005,
            k0: 1,
            delta: None,
            cluster_threshold: 0.4,
            search_eps: Vec::new(),
            search_restarts: 3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsBlock {
    pub eps: Vec<f64>,
    pub points: usize,
}

impl Default for BoundsBlock {
    fn default() -> Self {
        Self {
            eps: vec![0.01, 0.005, 0.0025],
            points: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LangevinStart {
    /// Deepest of a few ascent records.
    Ascent,
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LangevinBlock {
    pub n: usize,
    pub beta: f64,
    /// Defaults to 1e−3·min(1, 1/β).
    pub dt: Option<f64>,
    pub horizon: f64,
    pub paths: usize,
    pub records: usize,
    pub start: LangevinStart,
    pub start_restarts: usize,
}

impl Default for LangevinBlock {
    fn default() -> Self {
        Self {
            n: 50,
            beta: 2.0,
            dt: None,
            horizon: 5.0,
            paths: 20,
            records: 20,
            start: LangevinStart::Ascent,
            start_restarts: 5,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// A minimal configuration for a mixture.
    pub fn for_mixture(mixture: Mixture) -> Self {
        Self {
            mixture,
            seed: 0,
            out: None,
            solver: SolverBlock::default(),
            positive: PositiveBlock::default(),
            landscape: LandscapeBlock::default(),
            bounds: BoundsBlock::default(),
            langevin: LangevinBlock::default(),
        }
    }
}
