//! Flat JSON configuration. Command-line flags override file values; the
//! resolved configuration is echoed in every report and can be fed back
//! with `--config`.

use std::path::{Path, PathBuf};

use clap::Args;
use ratchet::{BindingWindow, EngineKind};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Binding rate γ.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Simulated time per replica.
    #[arg(long = "t-max")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    /// Time step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// thinning or graphical.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<EngineKind>,
    /// Directory for CSV output.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// Number of draws (invariant, pore-binding jump positions).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Observation time (scaling).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Chain length (chain).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Exact chain steps used by the speed command.
    #[arg(long = "chain-steps")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_steps: Option<usize>,
    /// Starting gap of the chain.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    /// Rates compared by the clt command, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<Vec<f64>>,
    /// Brownian start (coupling).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2: Option<f64>,
    /// Variant: delta, dissociation or drift.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<VariantChoice>,
    #[arg(long = "dissociation-rate")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dissociation_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift: Option<f64>,
    /// Binding window of the dissociation variant: full or above_boundary.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowChoice>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantChoice {
    Delta,
    Dissociation,
    Drift,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowChoice {
    Full,
    AboveBoundary,
}

impl From<WindowChoice> for BindingWindow {
    fn from(w: WindowChoice) -> Self {
        match w {
            WindowChoice::Full => BindingWindow::Full,
            WindowChoice::AboveBoundary => BindingWindow::AboveBoundary,
        }
    }
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(mut self, flags: &Config) -> Self {
        overlay!(self, flags; gamma, t_max, dt, replicas, seed, engine, out, threads, samples, t,
            steps, chain_steps, y0, gammas, x, s1, s2, kind, dissociation_rate, drift, window);
        self
    }
}

/// Fill in defaults while recording them, so the echo is complete.
pub struct Resolver<'a> {
    pub cfg: &'a mut Config,
}

macro_rules! getter {
    ($name:ident, $t:ty) => {
        pub fn $name(&mut self, default: $t) -> $t {
            *self.cfg.$name.get_or_insert(default)
        }
    };
}

impl Resolver<'_> {
    getter!(t_max, f64);
    getter!(dt, f64);
    getter!(replicas, usize);
    getter!(seed, u64);
    getter!(engine, EngineKind);
    getter!(samples, usize);
    getter!(t, f64);
    getter!(steps, usize);
    getter!(chain_steps, usize);
    getter!(y0, f64);
    getter!(x, f64);
    getter!(s1, f64);
    getter!(s2, f64);
    getter!(dissociation_rate, f64);
    getter!(drift, f64);
    getter!(window, WindowChoice);

    pub fn gamma(&mut self, default: f64) -> f64 {
        *self.cfg.gamma.get_or_insert(default)
    }

    pub fn gamma_required(&mut self) -> Result<f64, String> {
        self.cfg.gamma.ok_or_else(|| "missing required parameter `gamma` (use --gamma)".to_string())
    }

    pub fn gammas(&mut self, default: &[f64]) -> Vec<f64> {
        self.cfg.gammas.get_or_insert_with(|| default.to_vec()).clone()
    }
}
