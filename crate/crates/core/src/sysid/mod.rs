//! System identification: excitation-motion fitting with TPE or CMA-ES,
//! and bi-objective re-identification with NSGA-II over (L_exc, W).

pub mod cmaes;
pub mod excitation;
pub mod identify;
pub mod nsga2;
pub mod pareto;
pub mod space;
pub mod tpe;
pub mod wasserstein;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::SimError;

pub use cmaes::{cmaes_suggest, CmaEs};
pub use excitation::{excitation_motion, l_exc, ExcitationConfig, ExcitationMotion};
pub use identify::{
    best_so_far, identify_first, reidentify, IdentifyConfig, Identification, Optimizer, ReidentifyConfig,
    Reidentification, RewardEvaluator,
};
pub use nsga2::{nsga2_evolve, Individual, Nsga2Config};
pub use pareto::{select_operating_point, FrontMember, ParetoFront};
pub use space::{ParamSpace, ParamSpec, SimParams};
pub use tpe::{tpe_suggest, TpeConfig};
pub use wasserstein::wasserstein_1d;

#[derive(Debug, Error)]
pub enum SysidError {
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory mismatch: {0}")]
    Mismatch(String),
    #[error("empty reward distribution")]
    EmptyDistribution,
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("Pareto front is empty")]
    EmptyFront,
    #[error("identification failed: all {0} trials produced non-finite losses")]
    AllTrialsFailed(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub params: SimParams,
    /// `[L_exc]` for the first identification, `[L_exc, W]` afterwards.
    pub objectives: Vec<f64>,
    pub failed: bool,
    pub seed: u64,
    /// Seconds spent evaluating the trial.
    pub wall_time: f64,
}

impl TrialRecord {
    /// First objective, with failures mapped to +∞.
    pub fn primary(&self) -> f64 {
        match self.objectives.first() {
            Some(&v) if !self.failed && v.is_finite() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Non-finite objectives are serialized as `null`.
pub fn trials_to_jsonl(trials: &[TrialRecord]) -> String {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(t).expect("trial record serializes"));
        out.push('\n');
    }
    out
}
