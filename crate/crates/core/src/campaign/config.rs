use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action_space::{ScalingConfig, ACTION_DIM, ACTION_DIM_NO_GRASP};
use crate::cma::{default_population_size, CmaConfig};
use crate::error::{Error, Result};
use crate::perception::FilterConfig;
use crate::reward::RewardConfig;
use crate::simulator::{EvaluationSetup, ObjectModel, SimConfig};

/// The four ablation modes, in table row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Evaluate the hand-designed initial action, no optimization.
    InitOnly,
    /// Optimize servo deltas and delay with the grasp fixed at the center.
    NoGrasp,
    /// Evaluate best params stored by a campaign on another object.
    Transfer,
    /// Optimize all eight parameters.
    Full,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::InitOnly, Mode::NoGrasp, Mode::Transfer, Mode::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::InitOnly => "init-only",
            Mode::NoGrasp => "no-grasp",
            Mode::Transfer => "transfer",
            Mode::Full => "full",
        }
    }

    pub fn optimizes(self) -> bool {
        matches!(self, Mode::NoGrasp | Mode::Full)
    }

    /// Dimension of the search space; non-optimizing modes report the full
    /// action size.
    pub fn dimension(self) -> usize {
        match self {
            Mode::NoGrasp => ACTION_DIM_NO_GRASP,
            _ => ACTION_DIM,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown mode `{s}` (expected init-only, no-grasp, transfer or full)"
            ))
        })
    }
}

/// A preset name or a full inline object description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObjectSpec {
    Preset(String),
    Inline(ObjectModel),
}

impl ObjectSpec {
    pub fn resolve(&self) -> Result<ObjectModel> {
        match self {
            ObjectSpec::Preset(name) => ObjectModel::preset(name),
            ObjectSpec::Inline(model) => {
                model.validate()?;
                Ok(model.clone())
            }
        }
    }
}

impl From<&str> for ObjectSpec {
    fn from(name: &str) -> Self {
        ObjectSpec::Preset(name.to_owned())
    }
}

fn default_mode() -> Mode {
    Mode::Full
}

fn default_trials() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub object: ObjectSpec,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub cmaes: CmaConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub reward: RewardConfig,
    /// Episodes per candidate; the fitness is their mean reward.
    #[serde(default = "default_trials")]
    pub trials_per_eval: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Best-params file used by `transfer` mode.
    #[serde(default)]
    pub transfer_from: Option<PathBuf>,
    /// Evaluation threads; `None` uses all cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl CampaignConfig {
    pub fn new(object: impl Into<ObjectSpec>, mode: Mode) -> Self {
        Self {
            object: object.into(),
            mode,
            cmaes: CmaConfig::default(),
            scaling: ScalingConfig::default(),
            sim: SimConfig::default(),
            filter: FilterConfig::default(),
            reward: RewardConfig::default(),
            trials_per_eval: default_trials(),
            out_dir: default_out_dir(),
            transfer_from: None,
            workers: None,
        }
    }

    /// Parses TOML; `origin` only labels error messages.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(origin, line, e.message())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn population_size(&self) -> usize {
        self.cmaes
            .population_size
            .unwrap_or_else(|| default_population_size(self.mode.dimension()))
    }

    pub fn validate(&self) -> Result<()> {
        self.object.resolve()?;
        self.scaling.validate()?;
        self.sim.validate()?;
        self.filter.validate()?;
        self.reward.validate()?;
        let c = &self.cmaes;
        if !(c.sigma0.is_finite() && c.sigma0 > 0.0) {
            return Err(Error::Config(format!(
                "cmaes.sigma0 must be positive, got {}",
                c.sigma0
            )));
        }
        if c.generations == 0 {
            return Err(Error::Config("cmaes.generations must be at least 1".into()));
        }
        if matches!(c.population_size, Some(n) if n < 2) {
            return Err(Error::Config("cmaes.population_size must be at least 2".into()));
        }
        if self.trials_per_eval == 0 {
            return Err(Error::Config("trials_per_eval must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.mode == Mode::Transfer && self.transfer_from.is_none() {
            return Err(Error::Config("transfer mode needs `transfer_from`".into()));
        }
        Ok(())
    }

    pub fn evaluation_setup(&self) -> Result<EvaluationSetup> {
        Ok(EvaluationSetup {
            object: self.object.resolve()?,
            scaling: self.scaling,
            sim: self.sim.clone(),
            filter: self.filter,
            reward: self.reward,
        })
    }
}
