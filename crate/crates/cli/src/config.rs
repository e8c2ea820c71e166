//! The run configuration: one JSON document, with command-line flags
//! overriding individual fields.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mixpois_core::limit_lab::{ExperimentConfig, MultivariateConfig, DEFAULT_SAMPLE_SIZE};
use mixpois_core::{JointMixing, MixedPoissonModel, MixingDistribution, MultiMixedPoissonModel};
use serde::{Deserialize, Serialize};

/// Master seed used when neither the config nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 0x5EED_2024;

/// Default `max_count` for `pmf` tables.
pub const DEFAULT_MAX_COUNT: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pmf,
    Moments,
    CenteredPoly,
    Simulate,
    Clt,
    Scaling,
    WrongCentering,
    PointMass,
    Multivariate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pmf => "pmf",
            Command::Moments => "moments",
            Command::CenteredPoly => "centered-poly",
            Command::Simulate => "simulate",
            Command::Clt => "clt",
            Command::Scaling => "scaling",
            Command::WrongCentering => "wrong-centering",
            Command::PointMass => "point-mass",
            Command::Multivariate => "multivariate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Every field is optional in the file; which ones a command needs is
/// checked when the command runs. Unknown fields are rejected.
///
/// ```json
/// {
///   "command": "clt",
///   "mixing": {"kind": "gamma", "shape": 2.0, "rate": 1.0},
///   "rho_schedule": [10.0, 100.0, 1000.0],
///   "sample_size": 200000,
///   "seed": 1
/// }
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing: Option<MixingDistribution>,
    /// Single scale, for `pmf`, `moments` and `wrong-centering`; elsewhere
    /// shorthand for a one-entry `rho_schedule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_mixing: Option<JointMixing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhos: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `clt` only: number of consecutive master seeds; above 1 the KS
    /// distances are averaged and checked for a nonincreasing trend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_moment_order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_count: Option<u64>,
    /// `centered-poly` order `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Strict parse; errors name the offending field path.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("field `{path}`: {}", e.into_inner())
        })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn command(&self) -> anyhow::Result<Command> {
        self.command
            .context("field `command`: missing (give it in the config or on the command line)")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn mixing(&self) -> anyhow::Result<&MixingDistribution> {
        self.mixing.as_ref().with_context(|| self.missing("mixing"))
    }

    pub fn rho(&self) -> anyhow::Result<f64> {
        self.rho.with_context(|| self.missing("rho"))
    }

    pub fn model(&self) -> anyhow::Result<MixedPoissonModel> {
        MixedPoissonModel::new(self.mixing()?.clone(), self.rho()?).context("field `rho`")
    }

    fn missing(&self, field: &str) -> String {
        let cmd = self.command.map_or("this command", Command::name);
        format!("field `{field}`: required by {cmd}")
    }

    fn rho_schedule(&self) -> anyhow::Result<Vec<f64>> {
        match (&self.rho_schedule, self.rho) {
            (Some(_), Some(_)) => bail!("fields `rho` and `rho_schedule`: give one, not both"),
            (Some(s), None) => Ok(s.clone()),
            (None, Some(r)) => Ok(vec![r]),
            (None, None) => bail!(self.missing("rho_schedule")),
        }
    }

    pub fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(
            self.mixing()?.clone(),
            self.rho_schedule()?,
            self.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE),
            self.seed(),
        );
        if let Some(t) = &self.thresholds {
            cfg.thresholds = t.clone();
        }
        if let Some(s) = self.max_moment_order {
            cfg.max_moment_order = s;
        }
        cfg.workers = self.workers.unwrap_or(0);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn multivariate(&self) -> anyhow::Result<MultivariateConfig> {
        let joint = self
            .joint_mixing
            .clone()
            .with_context(|| self.missing("joint_mixing"))?;
        let rhos = self.rhos.clone().with_context(|| self.missing("rhos"))?;
        let model = MultiMixedPoissonModel::new(joint, rhos).context("field `rhos`")?;
        Ok(MultivariateConfig {
            model,
            sample_size: self.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE),
            master_seed: self.seed(),
            workers: self.workers.unwrap_or(0),
        })
    }
}
