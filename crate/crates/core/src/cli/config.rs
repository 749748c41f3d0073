use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bumps;
use crate::error::{Error, Result};
use crate::functional::Params;
use crate::minimax::MinimaxOptions;
use crate::torus::TorusGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Run configuration, read from a flat `key = value` file.
///
/// ```text
/// # reference run
/// lambda1 = 30.0
/// lambda2 = 5.0
/// grid_n = 128
/// eps_list = [0.125, 0.0625, 0.03125, 0.015625, 0.0078125]
/// ```
///
/// Missing keys take their defaults; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid_n: usize,
    /// Grid for `expansions`; the smallest default scale needs `n ≥ 512`.
    pub expansion_grid_n: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub r0: f64,
    pub eps_list: Vec<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    pub max_iters: usize,
    pub step0: f64,
    pub grad_tol: f64,
    pub band: f64,
    pub seeds: Vec<f64>,
    pub reparam_every: usize,
    pub tol_residual: f64,
    pub ball_radius: f64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = MinimaxOptions::default();
        RunConfig {
            grid_n: 128,
            expansion_grid_n: 512,
            lambda1: 30.0,
            lambda2: 5.0,
            r0: bumps::DEFAULT_R0,
            eps_list: bumps::default_eps_list(),
            k: m.nodes,
            max_iters: m.max_iters,
            step0: m.step0,
            grad_tol: m.grad_tol,
            band: m.band,
            seeds: m.seeds,
            reparam_every: m.reparam_every,
            tol_residual: 1e-8,
            ball_radius: crate::diagnostics::DEFAULT_BALL_RADIUS,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            seed: crate::sampling::DEFAULT_SEED,
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> Result<Params> {
        Params::new(self.lambda1, self.lambda2)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.grid_n)
    }

    pub fn expansion_grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.expansion_grid_n)
    }

    pub fn minimax_options(&self) -> MinimaxOptions {
        MinimaxOptions {
            nodes: self.k,
            max_iters: self.max_iters,
            step0: self.step0,
            grad_tol: self.grad_tol,
            band: self.band,
            seeds: self.seeds.clone(),
            reparam_every: self.reparam_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.expansion_grid()?;
        self.params()?;
        self.minimax_options().validate()?;
        if !(self.r0 > 0.0 && self.r0 < 0.5) {
            return Err(Error::InvalidBump(format!("r0 = {} must lie in (0, 0.5)", self.r0)));
        }
        if self.eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidEpsList("scales must be positive".into()));
        }
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "tol_residual = {} must be positive",
                self.tol_residual
            )));
        }
        if !(self.ball_radius > 0.0 && self.ball_radius <= 0.25) {
            return Err(Error::InvalidOptions(format!(
                "ball_radius = {} must lie in (0, 0.25]",
                self.ball_radius
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidOptions("threads must be at least 1".into()));
        }
        Ok(())
    }
}
