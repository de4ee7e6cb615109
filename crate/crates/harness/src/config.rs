use std::path::{Path, PathBuf};

use aixi_core::env_core::{make_env, make_env_class, EnvClassSpec, EnvSpec};
use aixi_core::planner::PlanningParams;
use aixi_core::self_aixi::{
    make_policy_class, PolicyClass, PolicyClassSpec, RegularizationParams, DEFAULT_KAPPA,
    DEFAULT_LAMBDA,
};
use aixi_core::{EnvironmentClass, EnvironmentModel};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanningConfig {
    pub horizon: usize,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizationConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}

impl Default for RegularizationConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            kappa: DEFAULT_KAPPA,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmpowermentConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Weight of the intrinsic empowerment bonus; 0 disables it.
    #[serde(default)]
    pub beta: f64,
}

fn default_k() -> usize {
    1
}

impl Default for EmpowermentConfig {
    fn default() -> Self {
        Self { k: 1, beta: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub steps: usize,
    pub seeds: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub bits: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            bits: false,
        }
    }
}

/// One JSON document describing an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The true environment.
    pub environment: EnvSpec,
    pub env_class: EnvClassSpec,
    pub policy_class: PolicyClassSpec,
    pub planning: PlanningConfig,
    #[serde(default)]
    pub regularization: RegularizationConfig,
    #[serde(default)]
    pub empowerment: EmpowermentConfig,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text)
            .map_err(|e| HarnessError::Config(format!("malformed config: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            HarnessError::Config(format!("cannot read config `{}`: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }

    /// Builds every model and checks the numeric ranges.
    pub fn resolve(&self) -> Result<Resolved, HarnessError> {
        let env = make_env(&self.environment).map_err(HarnessError::from_config)?;
        let class = make_env_class(&self.env_class).map_err(HarnessError::from_config)?;
        if env.num_actions() != class.num_actions() || env.percepts() != class.percepts() {
            return Err(HarnessError::Config(
                "`environment` and `env_class` use different action or percept alphabets".into(),
            ));
        }
        let policies = make_policy_class(&self.policy_class, class.num_actions())
            .map_err(HarnessError::from_config)?;
        let params = PlanningParams::new(self.planning.horizon, self.planning.gamma)
            .map_err(HarnessError::from_config)?;
        let reg = RegularizationParams::new(
            self.regularization.lambda,
            self.regularization.kappa,
            class.num_actions(),
        )
        .map_err(HarnessError::from_config)?;
        if self.empowerment.k == 0 {
            return Err(HarnessError::Config(
                "`empowerment.k` must be at least 1".into(),
            ));
        }
        if !(self.empowerment.beta >= 0.0 && self.empowerment.beta.is_finite()) {
            return Err(HarnessError::Config(
                "`empowerment.beta` must be a finite number >= 0".into(),
            ));
        }
        if self.run.steps == 0 {
            return Err(HarnessError::Config(
                "`run.steps` must be at least 1".into(),
            ));
        }
        if self.run.seeds.is_empty() {
            return Err(HarnessError::Config("`run.seeds` is empty".into()));
        }
        Ok(Resolved {
            env,
            class,
            policies,
            params,
            reg,
            k: self.empowerment.k,
            beta: self.empowerment.beta,
            steps: self.run.steps,
        })
    }
}

/// A validated configuration with its models built.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub env: EnvironmentModel,
    pub class: EnvironmentClass,
    pub policies: PolicyClass,
    pub params: PlanningParams,
    pub reg: RegularizationParams,
    pub k: usize,
    pub beta: f64,
    pub steps: usize,
}
