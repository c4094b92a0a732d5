//! Run configuration: one JSON document plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gearsim::sim::{ChainModel, SchedulerConfig};
use gearsim::sysid::{ExcitationConfig, IdentifyConfig, ParamSpace, ReidentifyConfig};
use gearsim::task::{CemConfig, RewardTable, TaskConfig};
use gearsim::truth::{GroundTruth, TruthConfig, TruthMode};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub truth: TruthConfig,
    /// Episodes per reward distribution (K).
    pub episodes: usize,
    /// Ranges replacing the searched ones during the first identification
    /// only; empty means the first identification searches the full space.
    pub first_prior: BTreeMap<String, [f64; 2]>,
    pub space: ParamSpace,
    pub scheduler: SchedulerConfig,
    pub excitation: ExcitationConfig,
    pub task: TaskConfig,
    pub rewards: RewardTable,
    pub identify: IdentifyConfig,
    pub reidentify: ReidentifyConfig,
    pub cem: CemConfig,
    /// Concurrent rollouts. Results do not depend on it.
    pub jobs: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            truth: TruthConfig::default(),
            episodes: 10,
            first_prior: BTreeMap::new(),
            space: ParamSpace::default(),
            scheduler: SchedulerConfig::default(),
            excitation: ExcitationConfig::default(),
            task: TaskConfig::default(),
            rewards: RewardTable::default(),
            identify: IdentifyConfig::default(),
            reidentify: ReidentifyConfig::default(),
            cem: CemConfig::default(),
            jobs: 1,
            out: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub budget_first: Option<usize>,
    pub budget_re: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub gt_mode: Option<TruthMode>,
    pub out: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(b) = o.budget_first {
            self.identify.budget = b;
        }
        if let Some(b) = o.budget_re {
            self.reidentify.budget = b;
        }
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
        if let Some(m) = o.gt_mode {
            self.truth.mode = m;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.identify.budget == 0 || self.reidentify.budget == 0 {
            return Err(config_err("budgets must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(config_err("at least one evaluation episode is needed"));
        }
        if self.jobs == 0 {
            return Err(config_err("jobs must be at least 1"));
        }
        if self.identify.batch == 0 {
            return Err(config_err("identification batch must be at least 1"));
        }
        self.space.validate().map_err(config_err)?;
        self.first_space().map_err(config_err)?;
        self.scheduler.validate().map_err(config_err)?;
        self.excitation.validate().map_err(config_err)?;
        self.task.validate().map_err(config_err)?;
        self.cem.validate().map_err(config_err)?;
        self.reidentify.nsga.validate().map_err(config_err)?;
        for c in [self.rewards.balancing, self.rewards.walking, self.rewards.eval] {
            c.validate().map_err(config_err)?;
        }
        let template = ChainModel::leg_on_board();
        if self.task.nominal.len() != template.dof() {
            return Err(config_err(format!("nominal posture needs {} joints", template.dof())));
        }
        GroundTruth::new(&self.truth, &self.space, &template).map_err(config_err)?;
        Ok(())
    }

    /// Model family fitted against the robot.
    pub fn fitted_space(&self) -> ParamSpace {
        self.truth.mode.fitted_space(&self.space)
    }

    /// Space searched by the first identification.
    pub fn first_space(&self) -> Result<ParamSpace, gearsim::sysid::SysidError> {
        self.fitted_space().with_bounds(&self.first_prior)
    }

    /// SHA-256 over the canonical JSON of everything that affects results;
    /// the worker count and output location are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.jobs = 1;
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
