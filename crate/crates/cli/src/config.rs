//! Run configuration. Every section is optional; missing fields take the
//! defaults listed on each struct. States are numbered from 1.
//!
//! ```toml
//! [economy]
//! preset = "example1"            # or "three-state"; fields below override it
//! shares = [0.5, 0.7]
//! probs = [0.5, 0.5]
//! beta = 0.9867551618071957
//! delta = 0.9867551618071957
//! initial_state = 1
//! # initial_target = -0.6
//!
//! [solver]
//! gp = 200
//! tol = 1e-6
//!
//! [ergodic]
//! bins = 1000
//! tol = 1e-8
//! horizon = 10000
//! seed = 1
//!
//! [pricing]
//! k_max = 10
//! support = "auto"               # auto | ladder | enumerate | bins
//! growth = { factors = [0.8, 1.28], probs = [0.5, 0.5] }
//!
//! [shooting]
//! horizon = 20
//! tol = 1e-10
//!
//! [shock]
//! epsilon = 0.01
//! horizon = 25
//! enumerate_upto = 12
//! paths = 20000
//! seed = 1
//!
//! [output]
//! dir = "out"
//! format = "csv"                 # csv | json
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use intergen::econ::{EconomyParams, EndowmentProcess, GrowthProcess, Preferences};
use intergen::planner::SolverConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ConfigError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub economy: EconomySection,
    pub solver: SolverConfig,
    pub ergodic: ErgodicSection,
    pub pricing: PricingSection,
    pub shooting: ShootingSection,
    pub shock: ShockSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Example1,
    ThreeState,
}

impl Preset {
    pub fn params(self) -> EconomyParams {
        match self {
            Preset::Example1 => EconomyParams::example1(),
            Preset::ThreeState => EconomyParams::three_state(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::ThreeState => "three-state",
        }
    }
}

/// Economy primitives. Unset fields come from `preset` (default example1).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconomySection {
    pub preset: Option<Preset>,
    pub shares: Option<Vec<f64>>,
    pub probs: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    /// 1-based.
    pub initial_state: Option<usize>,
    pub initial_target: Option<f64>,
    pub growth: Option<GrowthProcess>,
}

impl EconomySection {
    pub fn resolve(&self) -> anyhow::Result<EconomyParams> {
        let mut p = self.preset.unwrap_or(Preset::Example1).params();
        if self.shares.is_some() || self.probs.is_some() {
            p.endowments = EndowmentProcess {
                shares: self.shares.clone().unwrap_or(p.endowments.shares),
                probs: self.probs.clone().unwrap_or(p.endowments.probs),
            };
        }
        p.prefs = Preferences {
            beta: self.beta.unwrap_or(p.prefs.beta),
            delta: self.delta.unwrap_or(p.prefs.delta),
        };
        if let Some(s) = self.initial_state {
            if s == 0 || s > p.endowments.shares.len() {
                return Err(ConfigError(format!("initial_state {s} out of range")).into());
            }
            p.initial_state = s - 1;
        }
        p.initial_target = self.initial_target.or(p.initial_target);
        if let Some(g) = &self.growth {
            p.growth = g.clone();
        }
        Ok(p.checked()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicSection {
    pub bins: usize,
    pub tol: f64,
    /// Length of simulated paths.
    pub horizon: usize,
    pub seed: u64,
}

impl Default for ErgodicSection {
    fn default() -> Self {
        Self {
            bins: intergen::ergodic::DEFAULT_BINS,
            tol: 1e-8,
            horizon: 10_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportKind {
    /// Ladder for two states, enumeration otherwise.
    Auto,
    Ladder,
    Enumerate,
    Bins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingSection {
    pub k_max: usize,
    pub support: SupportKind,
    /// Cap on enumerated support points.
    pub max_points: usize,
    /// Rungs on the two-state ladder support.
    pub ladder_len: usize,
    pub growth: GrowthProcess,
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            k_max: 10,
            support: SupportKind::Auto,
            max_points: intergen::pricing::DEFAULT_SUPPORT_POINTS,
            ladder_len: intergen::pricing::LADDER_LEN,
            growth: GrowthProcess::two_point(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShootingSection {
    pub horizon: usize,
    pub tol: f64,
}

impl Default for ShootingSection {
    fn default() -> Self {
        Self {
            horizon: 20,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockSection {
    pub epsilon: f64,
    pub horizon: usize,
    /// Exact enumeration up to this period; the path count roughly doubles
    /// each period with three or more states.
    pub enumerate_upto: usize,
    /// Monte Carlo paths; 0 disables the check.
    pub paths: usize,
    pub seed: u64,
}

impl Default for ShockSection {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            horizon: intergen::welfare::DEFAULT_SHOCK_HORIZON,
            enumerate_upto: intergen::welfare::ENUMERATION_HORIZON,
            paths: 20_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()).into())
    }

    /// Applies a seed override to every seeded stage.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.ergodic.seed = s;
            self.shock.seed = s;
        }
        self
    }

    pub fn check(&self) -> anyhow::Result<()> {
        if self.ergodic.bins < 2 {
            bail!(ConfigError("ergodic.bins must be at least 2".into()));
        }
        if !(self.ergodic.tol > 0.0) || !(self.shooting.tol > 0.0) {
            bail!(ConfigError("tolerances must be positive".into()));
        }
        if self.pricing.k_max == 0 {
            bail!(ConfigError("pricing.k_max must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// SHA-256 of the resolved configuration in TOML form.
    pub fn hash(&self) -> anyhow::Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }
}
